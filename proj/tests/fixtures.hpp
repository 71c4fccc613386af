#pragma once
// Small synthetic dataset shared by the CLI tests and the acceptance runner:
// masks, clinical tables, score files and fusion fixtures under one root.

#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "mammoeval/io.hpp"

namespace fixture {

using namespace mammoeval;
namespace fs = std::filesystem;

inline std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

// Relative path -> file bytes for every regular file below root.
inline std::map<std::string, std::string> tree(const fs::path& root) {
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file()) out[fs::relative(e.path(), root).generic_string()] = slurp(e.path());
    return out;
}

inline void write_text(const fs::path& p, const std::string& s) {
    fs::create_directories(p.parent_path());
    std::ofstream(p, std::ios::binary) << s;
}

inline LabelMask blobs(std::mt19937_64& eng, std::size_t w, std::size_t h) {
    LabelMask m(w, h);
    for (ClassIndex k = 1; k <= 4; ++k) {
        const std::size_t x0 = eng() % (w - 6), y0 = eng() % (h - 6), bw = 2 + eng() % 5, bh = 2 + eng() % 5;
        for (std::size_t y = y0; y < y0 + bh; ++y)
            for (std::size_t x = x0; x < x0 + bw; ++x) m.at(x, y) = k;
    }
    return m;
}

inline LabelMask perturb(std::mt19937_64& eng, LabelMask m, int flips) {
    for (int i = 0; i < flips; ++i) m[eng() % m.size()] = static_cast<ClassIndex>(eng() % 5);
    return m;
}

inline void write_dataset(const fs::path& root) {
    std::mt19937_64 eng(2024);
    const char* birads[] = {"1", "2", "3", "4", "5", "6"};
    std::string tab = "image_id,mass_presence,mass_definition,mass_density,mass_shape,mass_calcification,"
                      "axilla_findings,calcification_presence,calcification_distribution,acr_breast_density,"
                      "birads\n";
    std::string tab_b = tab;
    for (int i = 0; i < 12; ++i) {
        const std::string id = "img" + std::to_string(10 + i);
        const auto gt = blobs(eng, 24, 20);
        io::save_mask(root / "gt" / (id + ".png"), gt);
        io::save_mask(root / "a" / (id + ".png"), perturb(eng, gt, 10));
        io::save_mask(root / "b" / (id + ".pgm"), perturb(eng, gt, 30));
        io::save_mask(root / "after" / (id + ".png"), perturb(eng, gt, 5));
        std::string row = id + "," + std::to_string(i % 2) + "," + std::to_string(i % 4) + "," +
                          std::to_string((i / 2) % 4) + ",Oval,No,Yes," + std::to_string(i % 2) + ",0," +
                          std::to_string(i % 4) + "," + birads[i % 6] + "\n";
        tab += row;
        tab_b += i % 5 == 0 ? id + ",0,0,0,0,0,0,0,0,0,1\n" : row;
    }
    write_text(root / "tab.csv", tab);
    write_text(root / "tab_b.csv", tab_b);

    std::string scores = "score,label,task,class\n";
    std::normal_distribution<double> n(0.0, 1.0);
    for (int i = 0; i < 60; ++i) {
        const int label = i % 3 == 0;
        scores += std::to_string(n(eng) + label) + "," + std::to_string(label) + ",birads," +
                  (i % 2 ? "4" : "5") + "\n";
    }
    write_text(root / "scores.csv", scores);

    const fs::path fx = root / "fixtures";
    fs::create_directories(fx);
    auto rnd = [&](std::vector<std::size_t> shape) {
        Tensor t(std::move(shape));
        for (auto& v : t.data()) v = n(eng);
        return t;
    };
    io::save_tensor(fx / "image.tensor", rnd({4, 4, 3}));
    io::save_tensor(fx / "features.tensor", rnd({3, 3, 8}));
    io::save_tensor(fx / "tabular.tensor", rnd({10}));
    io::save_tensor(fx / "w1.tensor", rnd({18, 4}));
    io::save_tensor(fx / "b1.tensor", rnd({4}));
    io::save_tensor(fx / "w2.tensor", rnd({4, 3}));
    io::save_tensor(fx / "b2.tensor", rnd({3}));
    write_text(fx / "mlp.json", R"({"layers":[{"weights":"w1.tensor","bias":"b1.tensor","activation":"relu"},)"
                                R"({"weights":"w2.tensor","bias":"b2.tensor","activation":"softmax"}]})");
    io::save_tensor(fx / "att_x.tensor", rnd({3, 3, 2}));
    io::save_tensor(fx / "att_g.tensor", rnd({3, 3, 2}));
    io::save_tensor(fx / "att_theta_w.tensor", rnd({2, 4}));
    io::save_tensor(fx / "att_theta_b.tensor", rnd({4}));
    io::save_tensor(fx / "att_phi_w.tensor", rnd({2, 4}));
    io::save_tensor(fx / "att_phi_b.tensor", rnd({4}));
    io::save_tensor(fx / "att_psi_w.tensor", rnd({4, 1}));
    io::save_tensor(fx / "att_psi_b.tensor", rnd({1}));
    io::save_tensor(fx / "head_features.tensor", rnd({2, 2, 3}));
    io::save_tensor(fx / "head_w.tensor", rnd({3, 5}));
    io::save_tensor(fx / "head_b.tensor", rnd({5}));
    io::save_tensor(fx / "loss_pred.tensor", Tensor({1, 2}, {0.5, 0.5}));
    io::save_tensor(fx / "loss_gt.tensor", Tensor({1, 2}, {1, 0}));
}

// One invocation per subcommand, writing under `out`.
inline std::vector<std::vector<std::string>> all_commands(const fs::path& root, const std::string& out) {
    auto p = [&](const std::string& rel) { return (root / rel).string(); };
    return {
        {"eval", "--pred", p("a"), "--gt", p("gt"), "--out", out, "--error-maps"},
        {"compare", "--a", p("a"), "--b", p("b"), "--gt", p("gt"), "--out", out},
        {"roc", "--scores", p("scores.csv"), "--resamples", "200", "--out", out},
        {"audit", "--masks", p("gt"), "--masks-after", p("after"), "--tabular", p("tab.csv"), "--tabular-after",
         p("tab_b.csv"), "--out", out},
        {"assoc", "--masks", p("gt"), "--tabular", p("tab.csv"), "--out", out},
        {"agree", "--a", p("a"), "--b", p("b"), "--tab-a", p("tab.csv"), "--tab-b", p("tab_b.csv"), "--out", out},
        {"fusion-check", "--fixtures", p("fixtures"), "--trials", "5", "--out", out},
    };
}

}  // namespace fixture
