#include <gtest/gtest.h>
#include <png.h>
#include <unistd.h>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>

#include "mammoeval/io.hpp"

using namespace mammoeval;
namespace fs = std::filesystem;

namespace {

class TempDir {
public:
    TempDir() {
        static int counter = 0;
        path_ = fs::temp_directory_path() /
                ("mammoeval_io_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::remove_all(path_);
        fs::create_directories(path_);
    }
    ~TempDir() { fs::remove_all(path_); }
    const fs::path& path() const { return path_; }
    fs::path operator/(const std::string& s) const { return path_ / s; }

private:
    fs::path path_;
};

void write_bytes(const fs::path& p, const std::string& bytes) {
    std::ofstream out(p, std::ios::binary);
    out << bytes;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

ClassMap four_classes() {
    return ClassMap({{0, "background", {0, 0, 0}},
                     {1, "a", {255, 0, 0}},
                     {2, "b", {0, 255, 0}},
                     {3, "c", {0, 0, 255}}});
}

void write_palette_png(const fs::path& p, std::size_t w, std::size_t h, const std::vector<std::uint8_t>& idx,
                       const std::vector<Rgb>& palette) {
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(w);
    image.height = static_cast<png_uint_32>(h);
    image.format = PNG_FORMAT_RGB_COLORMAP;
    image.colormap_entries = static_cast<png_uint_32>(palette.size());
    std::vector<std::uint8_t> cmap;
    for (const auto& c : palette) cmap.insert(cmap.end(), {c.r, c.g, c.b});
    ASSERT_TRUE(png_image_write_to_file(&image, p.c_str(), 0, idx.data(), 0, cmap.data())) << image.message;
}

std::string pgm(std::size_t w, std::size_t h, const std::string& payload, int maxval = 255) {
    return "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n" + std::to_string(maxval) + "\n" + payload;
}

std::string error_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const InputError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST(Sha256, KnownDigests) {
    EXPECT_EQ(io::sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    EXPECT_EQ(io::sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(ClassMapJson, ParseAndRoundTrip) {
    const auto cm = io::parse_class_map(R"({"classes":[{"index":1,"name":"mass","color":[0,200,0]},
                                                      {"index":0,"name":"background"}]})");
    ASSERT_EQ(cm.omega(), 2u);
    EXPECT_EQ(cm.name(1), "mass");
    EXPECT_EQ(cm.color(1), (Rgb{0, 200, 0}));
    const auto again = io::parse_class_map(io::class_map_json(cm));
    EXPECT_EQ(io::class_map_json(again), io::class_map_json(cm));
}

TEST(ClassMapJson, Errors) {
    EXPECT_THROW(io::parse_class_map("{"), InputError);
    EXPECT_THROW(io::parse_class_map(R"({"classes":[{"index":1,"name":"x"}]})"), InputError);
    EXPECT_THROW(io::parse_class_map(R"({"classes":[{"index":0,"name":"x","color":[1,2]}]})"), InputError);
    EXPECT_THROW(io::parse_class_map(R"({"classes":[{"index":0,"name":"x"},{"index":1,"name":"x"}]})"), InputError);
}

TEST(Masks, PgmBytes) {
    TempDir d;
    write_bytes(d / "m.pgm", pgm(2, 2, std::string("\x00\x01\x02\x03", 4)));
    const auto m = io::load_mask(d / "m.pgm", four_classes());
    ASSERT_EQ(m.width(), 2u);
    ASSERT_EQ(m.height(), 2u);
    EXPECT_EQ(m.at(0, 0), 0);
    EXPECT_EQ(m.at(1, 0), 1);
    EXPECT_EQ(m.at(0, 1), 2);
    EXPECT_EQ(m.at(1, 1), 3);
}

TEST(Masks, PgmHeaderComment) {
    TempDir d;
    write_bytes(d / "m.pgm", std::string("P5\n# note\n3 1\n255\n") + std::string("\x01\x00\x01", 3));
    const auto m = io::load_mask(d / "m.pgm", four_classes());
    EXPECT_EQ(m.at(0, 0), 1);
    EXPECT_EQ(m.at(2, 0), 1);
}

TEST(Masks, UnmappedValueNamesCoordinate) {
    TempDir d;
    write_bytes(d / "m.pgm", pgm(3, 2, std::string("\x00\x00\x00\x00\x09\x00", 6)));
    const auto msg = error_of([&] { io::load_mask(d / "m.pgm", four_classes()); });
    EXPECT_NE(msg.find("(1,1)"), std::string::npos) << msg;
    EXPECT_NE(msg.find("9"), std::string::npos) << msg;
}

TEST(Masks, RejectsBadFiles) {
    TempDir d;
    write_bytes(d / "wide.pgm", pgm(1, 1, std::string("\x00\x01", 2), 65535));
    EXPECT_NE(error_of([&] { io::load_mask(d / "wide.pgm", four_classes()); }).find("16-bit"), std::string::npos);
    write_bytes(d / "short.pgm", pgm(4, 4, "ab"));
    EXPECT_THROW(io::load_mask(d / "short.pgm", four_classes()), InputError);
    write_bytes(d / "text.txt", "hello");
    EXPECT_THROW(io::load_mask(d / "text.txt", four_classes()), InputError);
    EXPECT_THROW(io::load_mask(d / "missing.png", four_classes()), InputError);

    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    image.width = 2;
    image.height = 1;
    image.format = PNG_FORMAT_RGB;
    const std::uint8_t rgb[6] = {0, 0, 0, 255, 0, 0};
    ASSERT_TRUE(png_image_write_to_file(&image, (d / "rgb.png").c_str(), 0, rgb, 0, nullptr));
    EXPECT_THROW(io::load_mask(d / "rgb.png", four_classes()), InputError);
}

TEST(Masks, SaveLoadRoundTrip) {
    TempDir d;
    std::mt19937_64 eng(1);
    LabelMask m(7, 5);
    for (std::size_t i = 0; i < m.size(); ++i) m[i] = static_cast<ClassIndex>(eng() % 4);
    for (const char* name : {"m.png", "m.pgm"}) {
        io::save_mask(d / name, m);
        const auto back = io::load_mask(d / name, four_classes());
        EXPECT_EQ(back, m) << name;
        io::save_mask(d / (std::string("again_") + name), back);
        EXPECT_EQ(slurp(d / name), slurp(d / (std::string("again_") + name)));
    }
}

TEST(Masks, PalettePng) {
    TempDir d;
    // Palette order differs from class order, so the lookup goes through colors.
    write_palette_png(d / "p.png", 3, 1, {0, 1, 2}, {{0, 0, 255}, {0, 0, 0}, {255, 0, 0}});
    const auto m = io::load_mask(d / "p.png", four_classes());
    EXPECT_EQ(m.at(0, 0), 3);
    EXPECT_EQ(m.at(1, 0), 0);
    EXPECT_EQ(m.at(2, 0), 1);

    write_palette_png(d / "bad.png", 2, 1, {0, 1}, {{0, 0, 0}, {9, 9, 9}});
    const auto msg = error_of([&] { io::load_mask(d / "bad.png", four_classes()); });
    EXPECT_NE(msg.find("(1,0)"), std::string::npos) << msg;
}

TEST(Masks, ListingIsSorted) {
    TempDir d;
    const LabelMask m(2, 2);
    for (const char* name : {"b.png", "a.pgm", "c.png"}) io::save_mask(d / name, m);
    write_bytes(d / "notes.txt", "x");
    const auto files = io::list_masks(d.path());
    ASSERT_EQ(files.size(), 3u);
    EXPECT_EQ(files[0].filename(), "a.pgm");
    EXPECT_EQ(files[2].filename(), "c.png");
}

TEST(Csv, QuotedFields) {
    const auto t = io::parse_csv("a,b\n\"x,1\",\"say \"\"hi\"\"\"\n\"multi\nline\",2\n", "t");
    ASSERT_EQ(t.header, (std::vector<std::string>{"a", "b"}));
    ASSERT_EQ(t.rows.size(), 2u);
    EXPECT_EQ(t.rows[0][0], "x,1");
    EXPECT_EQ(t.rows[0][1], "say \"hi\"");
    EXPECT_EQ(t.rows[1][0], "multi\nline");
    EXPECT_EQ(io::csv_escape("a,b"), "\"a,b\"");
    EXPECT_EQ(io::csv_escape("plain"), "plain");
}

TEST(Tabular, NamesAndIndices) {
    const auto schema = TabularSchema::mammography();
    std::string header = "image_id";
    for (const auto& f : schema.features()) header += "," + f.key;
    std::string row1 = "img1,Yes,Spiculated,Isodense,Irregular,No,No,Yes,Cluster,Highly Dense,4";
    std::string row2 = "img2,0,0,0,0,0,0,0,0,0,0";
    const auto recs = io::parse_tabular(io::parse_csv(header + "\n" + row1 + "\n" + row2 + "\n", "t"), schema, "t");
    ASSERT_EQ(recs.size(), 2u);
    EXPECT_EQ(recs[0].image_id, "img1");
    EXPECT_EQ(recs[0].features.at("mass_presence"), 1);
    EXPECT_EQ(recs[0].features.at("mass_definition"), 3);
    EXPECT_EQ(recs[0].features.at("acr_breast_density"), 3);
    EXPECT_EQ(recs[0].features.at("birads"), 3);  // named category "4"
    EXPECT_EQ(recs[1].features.at("birads"), 0);
}

TEST(Tabular, Errors) {
    const TabularSchema schema({{"mass", "Mass", {"No", "Yes"}}});
    auto parse = [&](const std::string& text) { io::parse_tabular(io::parse_csv(text, "t"), schema, "t"); };
    EXPECT_NE(error_of([&] { parse("image_id,mass\nx,Yes\nx,No\n"); }).find("'x'"), std::string::npos);
    EXPECT_NE(error_of([&] { parse("image_id,mass,other\nx,Yes,1\n"); }).find("other"), std::string::npos);
    EXPECT_NE(error_of([&] { parse("image_id\nx\n"); }).find("mass"), std::string::npos);
    EXPECT_NE(error_of([&] { parse("mass\nYes\n"); }).find("image_id"), std::string::npos);
    EXPECT_NE(error_of([&] { parse("image_id,mass\nx,Maybe\n"); }).find("Maybe"), std::string::npos);
    EXPECT_NE(error_of([&] { parse("image_id,mass\nx,2\n"); }).find("cardinality"), std::string::npos);
    EXPECT_TRUE(io::parse_tabular(io::parse_csv("image_id,mass\n", "t"), schema, "t").empty());
}

TEST(Tabular, SchemaFile) {
    TempDir d;
    write_bytes(d / "s.json", R"({"features":[{"key":"k","categories":["lo","hi"]}]})");
    write_bytes(d / "t.csv", "k,image_id\nhi,a\n");
    const auto schema = io::load_schema(d / "s.json");
    EXPECT_EQ(schema.at("k").display, "k");
    const auto recs = io::load_tabular(d / "t.csv", schema);
    ASSERT_EQ(recs.size(), 1u);
    EXPECT_EQ(recs[0].features.at("k"), 1);
}

TEST(Tensors, BinaryRoundTrip) {
    TempDir d;
    const Tensor t({2, 3}, {1.5, -2, 0.25, 1e-3, 7, -0.125});
    io::save_tensor(d / "t.bin", t);
    const auto bytes = slurp(d / "t.bin");
    EXPECT_EQ(bytes.substr(0, bytes.find('\n') + 1), "f32le 2 2 3\n");
    EXPECT_EQ(bytes.size(), 12u + 24u);
    const auto back = io::load_tensor(d / "t.bin");
    ASSERT_EQ(back.shape(), t.shape());
    for (std::size_t i = 0; i < t.size(); ++i) EXPECT_EQ(back[i], static_cast<double>(static_cast<float>(t[i])));
    // 1.5f little-endian = 00 00 c0 3f
    EXPECT_EQ(bytes.substr(12, 4), std::string("\x00\x00\xc0\x3f", 4));
}

TEST(Tensors, BinaryErrors) {
    EXPECT_THROW(io::decode_tensor("f32le 1 2\nabc", "t"), InputError);
    EXPECT_THROW(io::decode_tensor("f64 1 1\n12345678", "t"), InputError);
    EXPECT_THROW(io::decode_tensor("f32le 2 1\n1234", "t"), InputError);
    EXPECT_THROW(io::decode_tensor("no newline", "t"), InputError);
}

TEST(Tensors, Csv) {
    const auto t = io::parse_tensor_csv("shape,2,2\n1, 2\n3\n\n4\n", "t");
    EXPECT_EQ(t, Tensor({2, 2}, {1, 2, 3, 4}));
    EXPECT_THROW(io::parse_tensor_csv("shape,3\n1,2\n", "t"), InputError);
    EXPECT_THROW(io::parse_tensor_csv("shape,1\nx\n", "t"), InputError);
    EXPECT_THROW(io::parse_tensor_csv("dims,1\n1\n", "t"), InputError);
    TempDir d;
    write_bytes(d / "w.csv", "shape,3\n0.5,0.25,-1\n");
    EXPECT_EQ(io::load_tensor(d / "w.csv"), Tensor({3}, {0.5, 0.25, -1}));
}

namespace {

io::ReportDocument sample_doc() {
    io::ReportDocument doc;
    doc.tool_version = "test 0";
    doc.inputs.push_back({"a/b.png", std::string(64, 'f')});
    auto& t = doc.section("alpha", {"name", "value", "count", "flag", "missing"});
    t.add({std::string("x,\"y\""), 0.1, std::int64_t{3}, true, std::monostate{}});
    t.add({std::string("z"), std::numeric_limits<double>::infinity(), std::int64_t{-1}, false, 2.5});
    doc.section("empty", {"c"});
    return doc;
}

}  // namespace

TEST(Reports, JsonDeterministicAndParses) {
    const auto doc = sample_doc();
    const auto a = io::report_to_json(doc), b = io::report_to_json(doc);
    EXPECT_EQ(a, b);
    const auto j = nlohmann::json::parse(a);
    EXPECT_EQ(j["tool_version"], "test 0");
    EXPECT_EQ(j["sections"][0]["rows"][0][1].get<double>(), 0.1);
    EXPECT_TRUE(j["sections"][0]["rows"][0][4].is_null());
    EXPECT_EQ(j["sections"][0]["rows"][1][1], "inf");
    EXPECT_TRUE(j["sections"][1]["rows"].empty());
}

TEST(Reports, JsonRoundTripIsFixedPoint) {
    const auto text = io::report_to_json(sample_doc());
    const auto back = io::parse_report_json(text);
    EXPECT_EQ(io::report_to_json(back), text);
    ASSERT_NE(back.find("alpha"), nullptr);
    EXPECT_EQ(std::get<std::string>(back.find("alpha")->rows[0][0]), "x,\"y\"");
    EXPECT_EQ(back.find("nope"), nullptr);
    EXPECT_THROW(io::parse_report_json("{\"tool_version\": 1}"), InputError);
}

TEST(Reports, NumberFormat) {
    EXPECT_EQ(io::format_number(0.1), "0.1");
    EXPECT_EQ(io::format_number(1.0 / 3.0), "0.333333333");
    EXPECT_EQ(io::format_number(-2.0), "-2");
    EXPECT_EQ(io::format_number(std::nan("")), "nan");
}

TEST(Reports, CsvDirectory) {
    TempDir d;
    const auto files = io::write_report(sample_doc(), d / "out", io::ReportFormat::Csv);
    ASSERT_EQ(files.size(), 3u);
    EXPECT_EQ(slurp(d / "out" / "alpha.csv"),
              "name,value,count,flag,missing\n\"x,\"\"y\"\"\",0.1,3,true,\nz,inf,-1,false,2.5\n");
    EXPECT_EQ(slurp(d / "out" / "empty.csv"), "c\n");
    const auto manifest = nlohmann::json::parse(slurp(d / "out" / "manifest.json"));
    EXPECT_EQ(manifest["tables"][0]["file"], "alpha.csv");
    EXPECT_EQ(manifest["tables"][0]["rows"], 2);
    const auto first = slurp(d / "out" / "manifest.json");
    io::write_report(sample_doc(), d / "out", io::ReportFormat::Csv);
    EXPECT_EQ(slurp(d / "out" / "manifest.json"), first);
}

TEST(Reports, JsonFileAndFormats) {
    TempDir d;
    io::write_report(sample_doc(), d / "r.json", io::ReportFormat::Json);
    EXPECT_EQ(slurp(d / "r.json"), io::report_to_json(sample_doc()));
    EXPECT_EQ(io::parse_format("csv"), io::ReportFormat::Csv);
    EXPECT_THROW(io::parse_format("xml"), InputError);
    EXPECT_EQ(io::section_file_name("a b/c"), "a_b_c.csv");
}

TEST(Reports, TableRowWidthChecked) {
    io::ReportDocument doc;
    auto& t = doc.section("s", {"a", "b"});
    EXPECT_THROW(t.add({1.0}), std::logic_error);
    auto& u = doc.section("u", {"a"});
    u.add({1.0});
    t.add({1.0, 2.0});  // reference still valid after another section was added
    EXPECT_EQ(doc.find("s")->rows.size(), 1u);
}
