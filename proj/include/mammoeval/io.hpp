#pragma once
// Readers and writers: label masks (8-bit PGM/PNG), class-map sidecars,
// clinical CSV tables, tensor fixtures and result reports.
//
// Every loader either returns a fully validated structure or throws
// InputError naming the file, the row or coordinate, and the constraint.

#include <png.h>
#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cerrno>
#include <csetjmp>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <deque>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "mammoeval/core.hpp"

namespace mammoeval::io {

namespace fs = std::filesystem;

inline std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError(path.string() + ": cannot open for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const fs::path& path, std::string_view bytes) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error(path.string() + ": write failed");
}

inline std::string sha256_hex(std::string_view bytes) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1)
        throw std::runtime_error("sha256: digest failed");
    std::ostringstream ss;
    for (unsigned int i = 0; i < len; ++i) ss << std::hex << std::setw(2) << std::setfill('0') << int(md[i]);
    return ss.str();
}

inline std::string sha256_file(const fs::path& path) { return sha256_hex(read_file(path)); }

// ---- class maps -------------------------------------------------------------

// {"classes": [{"index": 0, "name": "background", "color": [0,0,0]}, ...]}
inline ClassMap parse_class_map(const std::string& text, const std::string& origin = "class map") {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw InputError(origin + ": invalid JSON (" + e.what() + ")");
    }
    if (!j.contains("classes") || !j["classes"].is_array()) throw InputError(origin + ": missing 'classes' array");
    std::vector<ClassEntry> entries;
    for (std::size_t i = 0; i < j["classes"].size(); ++i) {
        const auto& c = j["classes"][i];
        const std::string where = origin + ": classes[" + std::to_string(i) + "]";
        if (!c.contains("index") || !c["index"].is_number_integer()) throw InputError(where + ": missing integer 'index'");
        if (!c.contains("name") || !c["name"].is_string()) throw InputError(where + ": missing string 'name'");
        const auto idx = c["index"].get<long>();
        if (idx < 0 || idx > 255) throw InputError(where + ": index outside [0,255]");
        Rgb color;
        if (c.contains("color")) {
            const auto& col = c["color"];
            if (!col.is_array() || col.size() != 3) throw InputError(where + ": color must be [r,g,b]");
            for (const auto& v : col)
                if (!v.is_number_integer() || v.get<int>() < 0 || v.get<int>() > 255)
                    throw InputError(where + ": color components must be integers in [0,255]");
            color = {static_cast<std::uint8_t>(col[0].get<int>()), static_cast<std::uint8_t>(col[1].get<int>()),
                     static_cast<std::uint8_t>(col[2].get<int>())};
        }
        entries.push_back({static_cast<ClassIndex>(idx), c["name"].get<std::string>(), color});
    }
    try {
        return ClassMap(std::move(entries));
    } catch (const InputError& e) {
        throw InputError(origin + ": " + e.what());
    }
}

inline ClassMap load_class_map(const fs::path& path) { return parse_class_map(read_file(path), path.string()); }

inline std::string class_map_json(const ClassMap& cmap) {
    nlohmann::ordered_json j;
    j["classes"] = nlohmann::ordered_json::array();
    for (const auto& e : cmap.entries()) {
        nlohmann::ordered_json c;
        c["index"] = e.index;
        c["name"] = e.name;
        c["color"] = {e.color.r, e.color.g, e.color.b};
        j["classes"].push_back(c);
    }
    return j.dump(2) + "\n";
}

// ---- masks ------------------------------------------------------------------

namespace detail {

inline std::string coord(std::size_t x, std::size_t y) {
    return "(" + std::to_string(x) + "," + std::to_string(y) + ")";
}

// Binary P5 PGM with maxval <= 255.
inline LabelMask parse_pgm(const std::string& bytes, const std::string& origin) {
    std::size_t pos = 2;
    auto next_token = [&]() -> std::string {
        for (;;) {
            while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
            if (pos < bytes.size() && bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
                continue;
            }
            break;
        }
        const std::size_t start = pos;
        while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
        if (start == pos) throw InputError(origin + ": truncated PGM header");
        return bytes.substr(start, pos - start);
    };
    auto number = [&](const char* what) {
        const auto tok = next_token();
        std::size_t used = 0;
        unsigned long v = 0;
        try {
            v = std::stoul(tok, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != tok.size()) throw InputError(origin + ": PGM " + what + " '" + tok + "' is not a number");
        return v;
    };
    const auto w = number("width"), h = number("height"), maxval = number("maxval");
    if (maxval == 0 || maxval > 65535) throw InputError(origin + ": PGM maxval out of range");
    if (maxval > 255) throw InputError(origin + ": 16-bit PGM is not a valid label mask (maxval " +
                                       std::to_string(maxval) + ")");
    ++pos;  // single whitespace after maxval
    if (bytes.size() - std::min(pos, bytes.size()) < w * h)
        throw InputError(origin + ": PGM payload truncated (expected " + std::to_string(w * h) + " bytes)");
    std::vector<ClassIndex> labels(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                                   bytes.begin() + static_cast<std::ptrdiff_t>(pos + w * h));
    return LabelMask(w, h, std::move(labels));
}

struct PngRead {
    std::size_t width = 0, height = 0;
    bool paletted = false;
    std::vector<std::uint8_t> pixels;  // gray values or palette indices
    std::vector<Rgb> palette;
};

inline void png_error_handler(png_structp png, png_const_charp msg) {
    auto* buf = static_cast<std::string*>(png_get_error_ptr(png));
    if (buf) *buf = msg;
    png_longjmp(png, 1);
}
inline void png_warning_handler(png_structp, png_const_charp) {}

inline PngRead read_png(const fs::path& path) {
    const std::string origin = path.string();
    std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.c_str(), "rb"), &std::fclose);
    if (!fp) throw InputError(origin + ": cannot open for reading");
    std::string error;
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &error, png_error_handler, png_warning_handler);
    if (!png) throw std::runtime_error("libpng: cannot create read struct");
    png_infop info = png_create_info_struct(png);
    PngRead out;
    std::vector<png_bytep> rows;
    std::string reject;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw InputError(origin + ": unreadable PNG (" + error + ")");
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);
    const auto w = png_get_image_width(png, info), h = png_get_image_height(png, info);
    const int depth = png_get_bit_depth(png, info), color = png_get_color_type(png, info);
    if (depth == 16) reject = "16-bit PNG is not a valid label mask";
    else if (color == PNG_COLOR_TYPE_PALETTE) {
        out.paletted = true;
        png_colorp pal = nullptr;
        int n = 0;
        png_get_PLTE(png, info, &pal, &n);
        for (int i = 0; i < n; ++i) out.palette.push_back({pal[i].red, pal[i].green, pal[i].blue});
        if (depth < 8) png_set_packing(png);
    } else if (color == PNG_COLOR_TYPE_GRAY) {
        if (depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    } else {
        reject = "PNG must be 8-bit single-channel or paletted (RGB/alpha masks are display output)";
    }
    if (reject.empty()) {
        png_read_update_info(png, info);
        out.width = w;
        out.height = h;
        out.pixels.resize(static_cast<std::size_t>(w) * h);
        rows.resize(h);
        for (std::size_t y = 0; y < h; ++y) rows[y] = out.pixels.data() + y * w;
        png_read_image(png, rows.data());
        png_read_end(png, nullptr);
    }
    png_destroy_read_struct(&png, &info, nullptr);
    if (!reject.empty()) throw InputError(origin + ": " + reject);
    return out;
}

}  // namespace detail

// Loads a mask whose pixel values are class indices (8-bit PGM or PNG), or a
// paletted PNG whose palette colors are looked up in the class map.
inline LabelMask load_mask(const fs::path& path, const ClassMap& cmap) {
    const std::string origin = path.string();
    std::string head;
    {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw InputError(origin + ": cannot open for reading");
        head.resize(8);
        in.read(head.data(), 8);
        head.resize(static_cast<std::size_t>(in.gcount()));
    }
    LabelMask mask;
    if (head.size() >= 2 && head[0] == 'P' && head[1] == '5') {
        mask = detail::parse_pgm(read_file(path), origin);
    } else if (head.size() == 8 && png_sig_cmp(reinterpret_cast<png_const_bytep>(head.data()), 0, 8) == 0) {
        auto png = detail::read_png(path);
        if (png.paletted) {
            std::vector<std::optional<ClassIndex>> lut;
            for (const auto& c : png.palette) lut.push_back(cmap.index_of_color(c));
            for (std::size_t i = 0; i < png.pixels.size(); ++i) {
                const auto pi = png.pixels[i];
                if (pi >= lut.size() || !lut[pi])
                    throw InputError(origin + ": pixel " + detail::coord(i % png.width, i / png.width) +
                                     " has palette entry " + std::to_string(pi) + " with no class mapping");
                png.pixels[i] = *lut[pi];
            }
        }
        mask = LabelMask(png.width, png.height, std::move(png.pixels));
    } else {
        throw InputError(origin + ": not a binary PGM (P5) or PNG file");
    }
    const auto labels = mask.labels();
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] >= cmap.omega())
            throw InputError(origin + ": pixel " + detail::coord(i % mask.width(), i / mask.width()) + " value " +
                             std::to_string(labels[i]) + " has no class mapping (omega " +
                             std::to_string(cmap.omega()) + ")");
    return mask;
}

inline std::string encode_pgm(const LabelMask& mask) {
    std::string out = "P5\n" + std::to_string(mask.width()) + " " + std::to_string(mask.height()) + "\n255\n";
    out.append(reinterpret_cast<const char*>(mask.labels().data()), mask.size());
    return out;
}

inline void save_png(const fs::path& path, std::size_t w, std::size_t h, const std::uint8_t* data, bool rgb) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(w);
    image.height = static_cast<png_uint_32>(h);
    image.format = rgb ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    if (!png_image_write_to_file(&image, path.c_str(), 0, data, 0, nullptr)) {
        const std::string msg = image.message;
        png_image_free(&image);
        throw std::runtime_error(path.string() + ": PNG write failed (" + msg + ")");
    }
}

// Writes class indices as 8-bit grayscale; format from the extension
// (.png, otherwise PGM).
inline void save_mask(const fs::path& path, const LabelMask& mask) {
    if (path.extension() == ".png") save_png(path, mask.width(), mask.height(), mask.labels().data(), false);
    else write_file(path, encode_pgm(mask));
}

inline std::string encode_ppm(std::size_t w, std::size_t h, const std::vector<std::uint8_t>& rgb) {
    std::string out = "P6\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
    out.append(reinterpret_cast<const char*>(rgb.data()), rgb.size());
    return out;
}

// Display rendering of a mask using the class-map colors.
inline std::vector<std::uint8_t> colorize(const LabelMask& mask, const ClassMap& cmap) {
    std::vector<std::uint8_t> rgb(mask.size() * 3);
    for (std::size_t i = 0; i < mask.size(); ++i) {
        const auto c = cmap.color(mask[i]);
        rgb[3 * i] = c.r;
        rgb[3 * i + 1] = c.g;
        rgb[3 * i + 2] = c.b;
    }
    return rgb;
}

inline bool is_mask_file(const fs::path& p) {
    const auto ext = p.extension().string();
    return ext == ".png" || ext == ".pgm";
}

// Mask files of a directory in lexicographic filename order.
inline std::vector<fs::path> list_masks(const fs::path& dir) {
    if (!fs::is_directory(dir)) throw InputError(dir.string() + ": not a directory");
    std::vector<fs::path> out;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && is_mask_file(e.path())) out.push_back(e.path());
    std::sort(out.begin(), out.end(), [](const fs::path& a, const fs::path& b) {
        return a.filename().string() < b.filename().string();
    });
    return out;
}

// ---- CSV --------------------------------------------------------------------

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line_numbers;  // 1-based source line of each row
};

// RFC 4180 style: comma separated, double-quoted fields may contain commas,
// quotes ("") and newlines.
inline CsvTable parse_csv(const std::string& text, const std::string& origin) {
    CsvTable t;
    std::vector<std::string> record;
    std::string field;
    bool quoted = false, field_started = false;
    std::size_t line = 1, record_line = 1;
    auto end_record = [&] {
        record.push_back(std::move(field));
        field.clear();
        field_started = false;
        const bool blank = record.size() == 1 && record[0].empty();
        if (!blank) {
            if (t.header.empty()) {
                t.header = std::move(record);
            } else {
                if (record.size() != t.header.size())
                    throw InputError(origin + ": line " + std::to_string(record_line) + " has " +
                                     std::to_string(record.size()) + " fields, header has " +
                                     std::to_string(t.header.size()));
                t.rows.push_back(std::move(record));
                t.line_numbers.push_back(record_line);
            }
        }
        record.clear();
    };
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                if (c == '\n') ++line;
                field += c;
            }
            continue;
        }
        if (c == '"' && !field_started) {
            quoted = true;
            field_started = true;
        } else if (c == ',') {
            record.push_back(std::move(field));
            field.clear();
            field_started = false;
        } else if (c == '\n') {
            if (!field.empty() && field.back() == '\r') field.pop_back();
            end_record();
            ++line;
            record_line = line;
        } else {
            field += c;
            field_started = true;
        }
    }
    if (quoted) throw InputError(origin + ": unterminated quoted field starting on line " + std::to_string(record_line));
    if (!field.empty() || !record.empty()) {
        if (!field.empty() && field.back() == '\r') field.pop_back();
        end_record();
    }
    return t;
}

inline CsvTable load_csv(const fs::path& path) { return parse_csv(read_file(path), path.string()); }

inline std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

inline std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

// ---- clinical tables --------------------------------------------------------

// {"features": [{"key": "...", "display": "...", "categories": ["No","Yes"]}, ...]}
inline TabularSchema load_schema(const fs::path& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw InputError(path.string() + ": invalid JSON (" + e.what() + ")");
    }
    if (!j.contains("features") || !j["features"].is_array())
        throw InputError(path.string() + ": missing 'features' array");
    std::vector<FeatureDef> defs;
    for (const auto& f : j["features"]) {
        FeatureDef d;
        d.key = f.at("key").get<std::string>();
        d.display = f.value("display", d.key);
        d.categories = f.at("categories").get<std::vector<std::string>>();
        defs.push_back(std::move(d));
    }
    return TabularSchema(std::move(defs));
}

// Category cell: a declared category name first, else a 0-based index.
inline int parse_category(const FeatureDef& def, const std::string& cell, const std::string& where) {
    const auto v = trim(cell);
    for (std::size_t i = 0; i < def.categories.size(); ++i)
        if (def.categories[i] == v) return static_cast<int>(i);
    std::size_t used = 0;
    long idx = -1;
    try {
        idx = std::stol(v, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == v.size() && !v.empty()) {
        if (idx < 0 || static_cast<std::size_t>(idx) >= def.categories.size())
            throw InputError(where + ": category index " + v + " outside cardinality " +
                             std::to_string(def.categories.size()) + " of '" + def.key + "'");
        return static_cast<int>(idx);
    }
    throw InputError(where + ": unknown category '" + v + "' for '" + def.key + "'");
}

// Header: image_id plus one column per schema feature (any order).
inline std::vector<TabularRecord> parse_tabular(const CsvTable& csv, const TabularSchema& schema,
                                                const std::string& origin) {
    if (csv.header.empty()) throw InputError(origin + ": missing header row");
    std::vector<std::optional<std::size_t>> column_feature(csv.header.size());
    std::optional<std::size_t> id_col;
    std::set<std::string> seen;
    for (std::size_t c = 0; c < csv.header.size(); ++c) {
        const auto name = trim(csv.header[c]);
        if (!seen.insert(name).second) throw InputError(origin + ": duplicate column '" + name + "'");
        if (name == "image_id") {
            id_col = c;
            continue;
        }
        const auto f = schema.find(name);
        if (!f) throw InputError(origin + ": unknown column '" + name + "'");
        column_feature[c] = *f;
    }
    if (!id_col) throw InputError(origin + ": missing 'image_id' column");
    for (const auto& f : schema.features())
        if (!seen.count(f.key)) throw InputError(origin + ": missing column '" + f.key + "'");

    std::vector<TabularRecord> out;
    std::set<std::string> ids;
    for (std::size_t r = 0; r < csv.rows.size(); ++r) {
        const std::string where = origin + ": line " + std::to_string(csv.line_numbers[r]);
        TabularRecord rec;
        rec.image_id = trim(csv.rows[r][*id_col]);
        if (rec.image_id.empty()) throw InputError(where + ": empty image_id");
        if (!ids.insert(rec.image_id).second) throw InputError(where + ": duplicate image_id '" + rec.image_id + "'");
        for (std::size_t c = 0; c < csv.header.size(); ++c) {
            if (!column_feature[c]) continue;
            const auto& def = schema.features()[*column_feature[c]];
            rec.features[def.key] = parse_category(def, csv.rows[r][c], where + ", column '" + def.key + "'");
        }
        out.push_back(std::move(rec));
    }
    return out;
}

inline std::vector<TabularRecord> load_tabular(const fs::path& path, const TabularSchema& schema) {
    return parse_tabular(load_csv(path), schema, path.string());
}

// ---- tensor fixtures --------------------------------------------------------
//
// Binary: one ASCII line "f32le <rank> <d0> ... <dn-1>\n" followed by the
// row-major payload as little-endian IEEE-754 binary32.
// CSV (.csv): first line "shape,<d0>,...", then values in row-major order,
// any number per line.

namespace detail {
inline std::uint32_t to_le(std::uint32_t v) {
    if constexpr (std::endian::native == std::endian::big)
        v = ((v & 0xffu) << 24) | ((v & 0xff00u) << 8) | ((v >> 8) & 0xff00u) | (v >> 24);
    return v;
}
}  // namespace detail

inline std::string encode_tensor(const Tensor& t) {
    std::string out = "f32le " + std::to_string(t.rank());
    for (auto d : t.shape()) out += " " + std::to_string(d);
    out += "\n";
    for (double v : t.data()) {
        const auto bits = detail::to_le(std::bit_cast<std::uint32_t>(static_cast<float>(v)));
        char b[4];
        std::memcpy(b, &bits, 4);
        out.append(b, 4);
    }
    return out;
}

inline Tensor decode_tensor(const std::string& bytes, const std::string& origin) {
    const auto nl = bytes.find('\n');
    if (nl == std::string::npos) throw InputError(origin + ": missing tensor header line");
    std::istringstream header(bytes.substr(0, nl));
    std::string tag;
    std::size_t rank = 0;
    header >> tag >> rank;
    if (tag != "f32le" || !header) throw InputError(origin + ": header must start with 'f32le <rank>'");
    std::vector<std::size_t> shape(rank);
    for (auto& d : shape)
        if (!(header >> d)) throw InputError(origin + ": header declares rank " + std::to_string(rank) +
                                             " but lists fewer extents");
    std::string rest;
    if (header >> rest) throw InputError(origin + ": trailing tokens in tensor header");
    const std::size_t n = Tensor::product(shape);
    if (bytes.size() - nl - 1 != 4 * n)
        throw InputError(origin + ": payload has " + std::to_string(bytes.size() - nl - 1) + " bytes, shape " +
                         shape_string(shape) + " needs " + std::to_string(4 * n));
    std::vector<double> data(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::uint32_t bits;
        std::memcpy(&bits, bytes.data() + nl + 1 + 4 * i, 4);
        data[i] = std::bit_cast<float>(detail::to_le(bits));
    }
    return Tensor(std::move(shape), std::move(data));
}

inline Tensor parse_tensor_csv(const std::string& text, const std::string& origin) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw InputError(origin + ": empty tensor CSV");
    auto split = [](const std::string& s) {
        std::vector<std::string> out;
        std::string cur;
        for (char c : s) {
            if (c == ',') {
                out.push_back(trim(cur));
                cur.clear();
            } else {
                cur += c;
            }
        }
        out.push_back(trim(cur));
        return out;
    };
    auto head = split(line);
    if (head.empty() || head[0] != "shape") throw InputError(origin + ": first line must be 'shape,<d0>,...'");
    std::vector<std::size_t> shape;
    for (std::size_t i = 1; i < head.size(); ++i) {
        try {
            shape.push_back(std::stoul(head[i]));
        } catch (const std::exception&) {
            throw InputError(origin + ": bad extent '" + head[i] + "'");
        }
    }
    std::vector<double> data;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        for (const auto& tok : split(line)) {
            std::size_t used = 0;
            double v = 0;
            try {
                v = std::stod(tok, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (tok.empty() || used != tok.size())
                throw InputError(origin + ": line " + std::to_string(lineno) + ": '" + tok + "' is not a number");
            data.push_back(v);
        }
    }
    try {
        return Tensor(std::move(shape), std::move(data));
    } catch (const InputError& e) {
        throw InputError(origin + ": " + e.what());
    }
}

inline Tensor load_tensor(const fs::path& path) {
    if (path.extension() == ".csv") return parse_tensor_csv(read_file(path), path.string());
    return decode_tensor(read_file(path), path.string());
}

inline void save_tensor(const fs::path& path, const Tensor& t) { write_file(path, encode_tensor(t)); }

// ---- reports ----------------------------------------------------------------

using Cell = std::variant<std::monostate, bool, std::int64_t, double, std::string>;

inline Cell cell(std::optional<double> v) { return v ? Cell(*v) : Cell(std::monostate{}); }

struct Table {
    std::string name;
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    void add(std::vector<Cell> row) {
        if (row.size() != columns.size())
            throw std::logic_error("table '" + name + "': row has " + std::to_string(row.size()) + " cells, expected " +
                                   std::to_string(columns.size()));
        rows.push_back(std::move(row));
    }
};

struct InputDigest {
    std::string path;
    std::string sha256;
};

struct ReportDocument {
    std::string tool_version;
    std::vector<InputDigest> inputs;
    std::deque<Table> sections;  // stable references from section()

    Table& section(const std::string& name, std::vector<std::string> columns) {
        sections.push_back({name, std::move(columns), {}});
        return sections.back();
    }
    const Table* find(const std::string& name) const {
        for (const auto& s : sections)
            if (s.name == name) return &s;
        return nullptr;
    }
    void add_input(const fs::path& p) {
        inputs.push_back({p.generic_string(), sha256_file(p)});
    }
};

// "%.9g"; non-finite values have no JSON number form.
inline std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

namespace detail {

inline std::string json_string(const std::string& s) { return nlohmann::json(s).dump(); }

inline std::string json_cell(const Cell& c) {
    return std::visit(
        [](const auto& v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::monostate>) return "null";
            else if constexpr (std::is_same_v<T, bool>) return v ? "true" : "false";
            else if constexpr (std::is_same_v<T, std::int64_t>) return std::to_string(v);
            else if constexpr (std::is_same_v<T, double>) {
                if (std::isnan(v)) return "null";
                if (std::isinf(v)) return v > 0 ? "\"inf\"" : "\"-inf\"";
                return format_number(v);
            } else return json_string(v);
        },
        c);
}

inline std::string csv_cell(const Cell& c) {
    return std::visit(
        [](const auto& v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, std::monostate>) return "";
            else if constexpr (std::is_same_v<T, bool>) return v ? "true" : "false";
            else if constexpr (std::is_same_v<T, std::int64_t>) return std::to_string(v);
            else if constexpr (std::is_same_v<T, double>) return format_number(v);
            else return csv_escape(v);
        },
        c);
}

}  // namespace detail

inline std::string report_to_json(const ReportDocument& doc) {
    std::string out = "{\n  \"tool_version\": " + detail::json_string(doc.tool_version) + ",\n  \"inputs\": [";
    for (std::size_t i = 0; i < doc.inputs.size(); ++i) {
        out += i ? ",\n    " : "\n    ";
        out += "{\"path\": " + detail::json_string(doc.inputs[i].path) +
               ", \"sha256\": " + detail::json_string(doc.inputs[i].sha256) + "}";
    }
    out += doc.inputs.empty() ? "],\n" : "\n  ],\n";
    out += "  \"sections\": [";
    for (std::size_t s = 0; s < doc.sections.size(); ++s) {
        const auto& t = doc.sections[s];
        out += s ? ",\n    {" : "\n    {";
        out += "\n      \"name\": " + detail::json_string(t.name) + ",\n      \"columns\": [";
        for (std::size_t c = 0; c < t.columns.size(); ++c) out += (c ? ", " : "") + detail::json_string(t.columns[c]);
        out += "],\n      \"rows\": [";
        for (std::size_t r = 0; r < t.rows.size(); ++r) {
            out += r ? ",\n        [" : "\n        [";
            for (std::size_t c = 0; c < t.rows[r].size(); ++c) out += (c ? ", " : "") + detail::json_cell(t.rows[r][c]);
            out += "]";
        }
        out += t.rows.empty() ? "]\n    }" : "\n      ]\n    }";
    }
    out += doc.sections.empty() ? "]\n}\n" : "\n  ]\n}\n";
    return out;
}

inline ReportDocument parse_report_json(const std::string& text, const std::string& origin = "report") {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw InputError(origin + ": invalid JSON (" + e.what() + ")");
    }
    ReportDocument doc;
    try {
        doc.tool_version = j.at("tool_version").get<std::string>();
        for (const auto& in : j.at("inputs"))
            doc.inputs.push_back({in.at("path").get<std::string>(), in.at("sha256").get<std::string>()});
        for (const auto& s : j.at("sections")) {
            Table t;
            t.name = s.at("name").get<std::string>();
            t.columns = s.at("columns").get<std::vector<std::string>>();
            for (const auto& row : s.at("rows")) {
                std::vector<Cell> cells;
                for (const auto& v : row) {
                    if (v.is_null()) cells.emplace_back(std::monostate{});
                    else if (v.is_boolean()) cells.emplace_back(v.get<bool>());
                    else if (v.is_number_integer()) cells.emplace_back(v.get<std::int64_t>());
                    else if (v.is_number()) cells.emplace_back(v.get<double>());
                    else if (v.is_string()) {
                        const auto str = v.get<std::string>();
                        if (str == "inf") cells.emplace_back(std::numeric_limits<double>::infinity());
                        else if (str == "-inf") cells.emplace_back(-std::numeric_limits<double>::infinity());
                        else cells.emplace_back(str);
                    } else throw InputError(origin + ": unsupported cell type in section '" + t.name + "'");
                }
                if (cells.size() != t.columns.size())
                    throw InputError(origin + ": row width mismatch in section '" + t.name + "'");
                t.rows.push_back(std::move(cells));
            }
            doc.sections.push_back(std::move(t));
        }
    } catch (const nlohmann::json::exception& e) {
        throw InputError(origin + ": malformed report (" + e.what() + ")");
    }
    return doc;
}

inline std::string table_to_csv(const Table& t) {
    std::string out;
    for (std::size_t c = 0; c < t.columns.size(); ++c) out += (c ? "," : "") + csv_escape(t.columns[c]);
    out += "\n";
    for (const auto& row : t.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) out += (c ? "," : "") + detail::csv_cell(row[c]);
        out += "\n";
    }
    return out;
}

enum class ReportFormat { Json, Csv };

inline ReportFormat parse_format(const std::string& s) {
    if (s == "json") return ReportFormat::Json;
    if (s == "csv") return ReportFormat::Csv;
    throw InputError("unknown report format '" + s + "' (expected json or csv)");
}

// File name used for a section in CSV output.
inline std::string section_file_name(const std::string& section) {
    std::string out;
    for (char c : section) out += std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' ? c : '_';
    return out + ".csv";
}

// JSON: one file at `path`. CSV: `path` is a directory receiving one file
// per section plus manifest.json listing them. Returns the files written.
inline std::vector<fs::path> write_report(const ReportDocument& doc, const fs::path& path, ReportFormat format) {
    if (format == ReportFormat::Json) {
        write_file(path, report_to_json(doc));
        return {path};
    }
    fs::create_directories(path);
    std::vector<fs::path> written;
    nlohmann::ordered_json manifest;
    manifest["tool_version"] = doc.tool_version;
    manifest["inputs"] = nlohmann::ordered_json::array();
    for (const auto& in : doc.inputs) manifest["inputs"].push_back({{"path", in.path}, {"sha256", in.sha256}});
    manifest["tables"] = nlohmann::ordered_json::array();
    std::set<std::string> used;
    for (const auto& t : doc.sections) {
        const auto file = section_file_name(t.name);
        if (!used.insert(file).second) throw std::logic_error("report: duplicate section file '" + file + "'");
        write_file(path / file, table_to_csv(t));
        written.push_back(path / file);
        manifest["tables"].push_back({{"name", t.name}, {"file", file}, {"rows", t.rows.size()}});
    }
    write_file(path / "manifest.json", manifest.dump(2) + "\n");
    written.push_back(path / "manifest.json");
    return written;
}

}  // namespace mammoeval::io
