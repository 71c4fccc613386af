#pragma once
// Batch front-end. Each subcommand reads its inputs, runs one part of the
// evaluation pipeline and writes a report (JSON file or CSV directory) under
// --out. Exit codes: 0 success, 2 invalid input or usage, 1 internal error.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mammoeval/audit.hpp"
#include "mammoeval/core.hpp"
#include "mammoeval/fusion.hpp"
#include "mammoeval/io.hpp"
#include "mammoeval/parallel.hpp"
#include "mammoeval/seg_metrics.hpp"
#include "mammoeval/stats.hpp"

namespace mammoeval::cli {

namespace fs = std::filesystem;
using io::Cell;

inline constexpr const char* kToolVersion = "mammoeval 1.0.0";

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitInput = 2;

struct RunConfig {
    std::string out_dir;
    std::string format = "json";
    std::string classes;
    std::string schema;
    std::uint64_t seed = 0;
    std::size_t threads = 0;  // 0: one per processor
    double boundary_d = kDefaultBoundaryBand;
    double z_threshold = kDefaultOutlierThreshold;
    double alpha = 0.05;
    std::string policy = "skip";

    std::size_t worker_count() const { return threads == 0 ? default_threads() : threads; }
};

namespace detail {

inline Cell num(double v) { return Cell(v); }
inline Cell num(std::optional<double> v) { return io::cell(v); }
inline Cell count(std::size_t v) { return Cell(static_cast<std::int64_t>(v)); }
inline Cell str(std::string v) { return Cell(std::move(v)); }

struct Context {
    const RunConfig& cfg;
    io::ReportDocument doc;
    std::set<std::string> recorded;

    explicit Context(const RunConfig& c) : cfg(c) { doc.tool_version = kToolVersion; }

    void input(const fs::path& p) {
        if (recorded.insert(p.generic_string()).second) doc.add_input(p);
    }

    ClassMap class_map() {
        if (cfg.classes.empty()) return ClassMap::mammography();
        input(cfg.classes);
        return io::load_class_map(cfg.classes);
    }
    TabularSchema schema() {
        if (cfg.schema.empty()) return TabularSchema::mammography();
        input(cfg.schema);
        return io::load_schema(cfg.schema);
    }

    struct NamedMask {
        std::string id;
        LabelMask mask;
    };

    std::vector<NamedMask> masks(const fs::path& dir, const ClassMap& cmap) {
        const auto files = io::list_masks(dir);
        std::vector<NamedMask> out(files.size());
        for (const auto& f : files) input(f);
        parallel_for(files.size(), cfg.worker_count(), [&](std::size_t i) {
            out[i] = {files[i].stem().string(), io::load_mask(files[i], cmap)};
        });
        std::set<std::string> ids;
        for (std::size_t i = 0; i < out.size(); ++i)
            if (!ids.insert(out[i].id).second)
                throw InputError(dir.string() + ": two mask files share the image id '" + out[i].id + "'");
        return out;
    }

    // Masks of `b` reordered to match the ids of `a`; both sets must agree.
    static std::vector<LabelMask> align(const std::vector<NamedMask>& a, const std::vector<NamedMask>& b,
                                        const std::string& a_name, const std::string& b_name) {
        std::map<std::string, const LabelMask*> by_id;
        for (const auto& m : b) by_id[m.id] = &m.mask;
        std::vector<LabelMask> out;
        for (const auto& m : a) {
            auto it = by_id.find(m.id);
            if (it == by_id.end()) throw InputError(b_name + ": no mask for image '" + m.id + "' found in " + a_name);
            if (!it->second->same_shape(m.mask))
                throw InputError(b_name + ": mask '" + m.id + "' is " + std::to_string(it->second->width()) + "x" +
                                 std::to_string(it->second->height()) + ", " + a_name + " has " +
                                 std::to_string(m.mask.width()) + "x" + std::to_string(m.mask.height()));
            out.push_back(*it->second);
        }
        if (b.size() != a.size()) {
            std::set<std::string> ids;
            for (const auto& m : a) ids.insert(m.id);
            for (const auto& m : b)
                if (!ids.count(m.id)) throw InputError(a_name + ": no mask for image '" + m.id + "' found in " + b_name);
        }
        return out;
    }

    // Writes the report; returns the files written.
    std::vector<fs::path> finish(const std::string& name) {
        const auto fmt = io::parse_format(cfg.format);
        const fs::path base = fs::path(cfg.out_dir) / (fmt == io::ReportFormat::Json ? name + ".json" : name);
        return io::write_report(doc, base, fmt);
    }
};

inline std::string strip_image_extension(const std::string& id) {
    const fs::path p(id);
    return io::is_mask_file(p) || p.extension() == ".jpg" || p.extension() == ".dcm" ? p.stem().string() : id;
}

inline EmptyMaskPolicy parse_policy(const std::string& s) {
    if (s == "skip") return EmptyMaskPolicy::Skip;
    if (s == "zero") return EmptyMaskPolicy::CountAsZero;
    throw InputError("unknown aggregation policy '" + s + "' (expected skip or zero)");
}

inline Alternative parse_alternative(const std::string& s) {
    if (s == "two-sided") return Alternative::TwoSided;
    if (s == "greater") return Alternative::Greater;
    if (s == "less") return Alternative::Less;
    throw InputError("unknown alternative '" + s + "' (expected two-sided, greater or less)");
}

inline std::vector<ClassIndex> foreground(const ClassMap& cmap) {
    std::vector<ClassIndex> out;
    for (std::size_t k = 1; k < cmap.omega(); ++k) out.push_back(static_cast<ClassIndex>(k));
    return out;
}

}  // namespace detail

// ---- eval -------------------------------------------------------------------

struct EvalOptions {
    std::string pred, gt;
    bool error_maps = false;
};

inline std::vector<fs::path> run_eval(const RunConfig& cfg, const EvalOptions& opt) {
    using namespace detail;
    Context ctx(cfg);
    const auto cmap = ctx.class_map();
    const auto policy = parse_policy(cfg.policy);
    const auto preds = ctx.masks(opt.pred, cmap);
    const auto gts = ctx.masks(opt.gt, cmap);
    const auto aligned_gt = Context::align(preds, gts, opt.pred, opt.gt);
    const auto classes = foreground(cmap);

    struct PerImage {
        std::vector<std::vector<MetricSample>> samples;  // per class
        std::vector<ConfusionCounts> counts;
    };
    std::vector<PerImage> results(preds.size());
    parallel_for(preds.size(), cfg.worker_count(), [&](std::size_t i) {
        for (auto k : classes) {
            results[i].samples.push_back(evaluate_image(preds[i].id, preds[i].mask, aligned_gt[i], k, cfg.boundary_d));
            results[i].counts.push_back(confusion_counts(preds[i].mask, aligned_gt[i], k));
        }
    });

    std::vector<std::string> cols = {"image_id", "class_index", "class"};
    for (auto m : kAllMetrics) cols.emplace_back(to_string(m));
    auto& per = ctx.doc.section("per_image", cols);
    auto& box = ctx.doc.section("box_plot", {"image_id", "class_index", "class", "metric", "value"});
    std::map<MetricName, std::vector<MetricSample>> by_metric;
    for (std::size_t i = 0; i < preds.size(); ++i) {
        for (std::size_t c = 0; c < classes.size(); ++c) {
            std::vector<Cell> row = {str(preds[i].id), count(classes[c]), str(cmap.name(classes[c]))};
            for (const auto& s : results[i].samples[c]) {
                row.push_back(num(s.value));
                box.add({str(s.image_id), count(classes[c]), str(cmap.name(classes[c])), str(to_string(s.metric)),
                         num(s.value)});
                by_metric[s.metric].push_back(s);
            }
            per.add(std::move(row));
        }
    }

    auto& summary = ctx.doc.section("summary", {"class_index", "class", "metric", "mean", "sd", "n"});
    for (auto m : kAllMetrics) {
        const auto agg = aggregate_per_class(by_metric[m], policy);
        for (auto k : classes) {
            auto it = agg.find(k);
            if (it == agg.end()) {
                summary.add({count(k), str(cmap.name(k)), str(to_string(m)), Cell{}, Cell{}, count(0)});
                continue;
            }
            summary.add({count(k), str(cmap.name(k)), str(to_string(m)), num(it->second.mean), num(it->second.sd),
                         count(it->second.n)});
        }
    }

    auto& pooled = ctx.doc.section("pooled", {"class_index", "class", "tp", "fp", "fn", "tn", "iou", "dice",
                                              "precision", "sensitivity", "specificity", "f1"});
    for (std::size_t c = 0; c < classes.size(); ++c) {
        std::vector<ConfusionCounts> per_image;
        for (const auto& r : results) per_image.push_back(r.counts[c]);
        ConfusionCounts sum;
        for (const auto& x : per_image) sum += x;
        const auto om = pooled_overlap_metrics(per_image);
        pooled.add({count(classes[c]), str(cmap.name(classes[c])), count(sum.tp), count(sum.fp), count(sum.fn),
                    count(sum.tn), num(om.iou), num(om.dice), num(om.precision), num(om.sensitivity),
                    num(om.specificity), num(om.f1)});
    }

    auto files = ctx.finish("eval");
    if (opt.error_maps) {
        const fs::path dir = fs::path(cfg.out_dir) / "error_maps";
        std::vector<std::vector<fs::path>> written(preds.size());
        parallel_for(preds.size(), cfg.worker_count(), [&](std::size_t i) {
            for (auto k : classes) {
                const auto em = error_map(preds[i].mask, aligned_gt[i], k);
                const auto p = dir / (preds[i].id + "_class" + std::to_string(k) + ".png");
                io::save_png(p, em.width(), em.height(), em.to_rgb().data(), true);
                written[i].push_back(p);
            }
        });
        for (const auto& w : written) files.insert(files.end(), w.begin(), w.end());
    }
    return files;
}

// ---- compare ----------------------------------------------------------------

struct CompareOptions {
    std::string a, b, gt;
    std::string alternative = "two-sided";
    std::vector<std::string> metrics = {"iou", "dice"};
};

inline MetricName parse_metric(const std::string& s) {
    for (auto m : kAllMetrics)
        if (s == to_string(m)) return m;
    throw InputError("unknown metric '" + s + "'");
}

inline std::vector<fs::path> run_compare(const RunConfig& cfg, const CompareOptions& opt) {
    using namespace detail;
    Context ctx(cfg);
    const auto cmap = ctx.class_map();
    const auto alt = parse_alternative(opt.alternative);
    const auto gts = ctx.masks(opt.gt, cmap);
    const auto as = Context::align(gts, ctx.masks(opt.a, cmap), opt.gt, opt.a);
    const auto bs = Context::align(gts, ctx.masks(opt.b, cmap), opt.gt, opt.b);
    const auto classes = foreground(cmap);
    std::vector<MetricName> metrics;
    for (const auto& m : opt.metrics) metrics.push_back(parse_metric(m));

    // samples[image][class] for each model
    std::vector<std::vector<std::vector<MetricSample>>> sa(gts.size()), sb(gts.size());
    parallel_for(gts.size(), cfg.worker_count(), [&](std::size_t i) {
        for (auto k : classes) {
            sa[i].push_back(evaluate_image(gts[i].id, as[i], gts[i].mask, k, cfg.boundary_d));
            sb[i].push_back(evaluate_image(gts[i].id, bs[i], gts[i].mask, k, cfg.boundary_d));
        }
    });
    auto metric_pos = [](MetricName m) {
        return static_cast<std::size_t>(std::find(kAllMetrics.begin(), kAllMetrics.end(), m) - kAllMetrics.begin());
    };

    const std::size_t comparisons = classes.size() * metrics.size();
    const double corrected = bonferroni_alpha(cfg.alpha, std::max<std::size_t>(comparisons, 1));
    auto& cmp = ctx.doc.section(
        "comparison", {"class_index", "class", "metric", "n", "mean_a", "mean_b", "wilcoxon_w", "wilcoxon_p",
                       "wilcoxon_exact", "wilcoxon_degenerate", "t_statistic", "t_p", "cohens_d", "effect",
                       "alternative", "bonferroni_alpha", "significant"});
    auto& ba = ctx.doc.section("bland_altman", {"class_index", "class", "metric", "bias", "sd", "loa_low",
                                                "loa_high", "ci_low", "ci_high", "n"});
    auto& pts = ctx.doc.section("bland_altman_points", {"class_index", "class", "metric", "image_id", "mean", "difference"});

    for (std::size_t c = 0; c < classes.size(); ++c) {
        const auto k = classes[c];
        for (auto m : metrics) {
            std::vector<double> va, vb;
            std::vector<std::string> ids;
            for (std::size_t i = 0; i < gts.size(); ++i) {
                const auto& x = sa[i][c][metric_pos(m)].value;
                const auto& y = sb[i][c][metric_pos(m)].value;
                if (x && y) {
                    va.push_back(*x);
                    vb.push_back(*y);
                    ids.push_back(gts[i].id);
                }
            }
            const std::vector<Cell> key = {count(k), str(cmap.name(k)), str(to_string(m))};
            auto with_key = [&](std::vector<Cell> rest) {
                std::vector<Cell> row = key;
                row.insert(row.end(), rest.begin(), rest.end());
                return row;
            };
            if (va.empty()) {
                cmp.add(with_key({count(0), Cell{}, Cell{}, Cell{}, Cell{}, Cell{}, Cell(true), Cell{}, Cell{}, Cell{},
                                  Cell{}, str(to_string(alt)), num(corrected), Cell(false)}));
                ba.add(with_key({Cell{}, Cell{}, Cell{}, Cell{}, Cell{}, Cell{}, count(0)}));
                continue;
            }
            const PairedSeries s(va, vb);
            Cell w, wp, wexact = Cell(false), t, tp, d, eff;
            bool degenerate = false, significant = false;
            try {
                const auto wr = wilcoxon_signed_rank(s, alt);
                w = num(wr.w_plus);
                wp = num(wr.p_value);
                wexact = Cell(wr.exact);
                significant = wr.p_value < corrected;
            } catch (const DegenerateError&) {
                degenerate = true;
            }
            if (s.n() >= 2) {
                try {
                    const auto tr = paired_t_test(s, alt);
                    t = num(tr.statistic);
                    tp = num(tr.p_value);
                } catch (const DegenerateError&) {
                }
                try {
                    const auto cd = cohens_d_paired(s);
                    d = num(cd.d);
                    eff = str(to_string(cd.category));
                } catch (const DegenerateError&) {
                }
            }
            cmp.add(with_key({count(s.n()), num(mean_of(va)), num(mean_of(vb)), w, wp, wexact, Cell(degenerate), t, tp,
                              d, eff, str(to_string(alt)), num(corrected), Cell(significant)}));
            if (s.n() >= 2) {
                const auto r = bland_altman(s);
                ba.add(with_key({num(r.bias), num(r.sd), num(r.loa_low), num(r.loa_high), num(r.ci_low),
                                 num(r.ci_high), count(r.n)}));
                for (std::size_t i = 0; i < r.points.size(); ++i)
                    pts.add(with_key({str(ids[i]), num(r.points[i].mean), num(r.points[i].difference)}));
            } else {
                ba.add(with_key({num(va[0] - vb[0]), Cell{}, Cell{}, Cell{}, Cell{}, Cell{}, count(1)}));
            }
        }
    }
    return ctx.finish("compare");
}

// ---- roc --------------------------------------------------------------------

struct RocOptions {
    std::string scores;
    std::size_t resamples = kDefaultResamples;
    double level = 0.95;
};

inline std::vector<fs::path> run_roc(const RunConfig& cfg, const RocOptions& opt) {
    using namespace detail;
    Context ctx(cfg);
    ctx.input(opt.scores);
    const auto csv = io::load_csv(opt.scores);
    auto column = [&](const std::string& name) -> std::optional<std::size_t> {
        for (std::size_t c = 0; c < csv.header.size(); ++c)
            if (io::trim(csv.header[c]) == name) return c;
        return std::nullopt;
    };
    const auto score_col = column("score"), label_col = column("label");
    if (!score_col || !label_col) throw InputError(opt.scores + ": needs 'score' and 'label' columns");
    const auto task_col = column("task"), class_col = column("class");

    struct Group {
        std::vector<double> scores;
        std::vector<int> labels;
    };
    std::map<std::pair<std::string, std::string>, Group> groups;
    for (std::size_t r = 0; r < csv.rows.size(); ++r) {
        const std::string where = opt.scores + ": line " + std::to_string(csv.line_numbers[r]);
        const auto& row = csv.rows[r];
        double score = 0;
        std::size_t used = 0;
        const auto st = io::trim(row[*score_col]);
        try {
            score = std::stod(st, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (st.empty() || used != st.size() || !std::isfinite(score))
            throw InputError(where + ": score '" + st + "' is not a finite number");
        const auto lt = io::trim(row[*label_col]);
        if (lt != "0" && lt != "1") throw InputError(where + ": label '" + lt + "' must be 0 or 1");
        auto& g = groups[{task_col ? io::trim(row[*task_col]) : "", class_col ? io::trim(row[*class_col]) : ""}];
        g.scores.push_back(score);
        g.labels.push_back(lt == "1");
    }

    auto& auc = ctx.doc.section("auc", {"task", "class", "n_pos", "n_neg", "auc", "bootstrap_low", "bootstrap_high",
                                        "delong_low", "delong_high", "resamples", "seed", "level"});
    auto& curve = ctx.doc.section("roc_curve", {"task", "class", "threshold", "fpr", "tpr"});
    for (const auto& [key, g] : groups) {
        std::size_t n_pos = 0;
        for (int l : g.labels) n_pos += l == 1;
        const std::size_t n_neg = g.labels.size() - n_pos;
        const auto point = roc_auc_ovr(g.scores, g.labels);
        Cell bl, bh, dl, dh;
        if (point) {
            const auto b = bootstrap_auc_ci(g.scores, g.labels, opt.resamples, cfg.seed, opt.level, cfg.worker_count());
            bl = num(b.ci_low);
            bh = num(b.ci_high);
            if (n_pos >= 2 && n_neg >= 2) {
                const auto d = delong_auc_ci(g.scores, g.labels, opt.level);
                dl = num(d.ci_low);
                dh = num(d.ci_high);
            }
        }
        auc.add({str(key.first), str(key.second), count(n_pos), count(n_neg), num(point), bl, bh, dl, dh,
                 count(opt.resamples), Cell(static_cast<std::int64_t>(cfg.seed)), num(opt.level)});
        for (const auto& p : roc_curve(g.scores, g.labels))
            curve.add({str(key.first), str(key.second), num(p.threshold), num(p.fpr), num(p.tpr)});
    }
    return ctx.finish("roc");
}

// ---- audit ------------------------------------------------------------------

struct AuditOptions {
    std::string masks, masks_after;
    std::string tabular, tabular_after;
};

inline std::vector<fs::path> run_audit(const RunConfig& cfg, const AuditOptions& opt) {
    using namespace detail;
    Context ctx(cfg);
    const auto cmap = ctx.class_map();
    const auto classes = foreground(cmap);

    auto& summary = ctx.doc.section(
        "distribution_summary",
        {"cohort", "class_index", "class", "n", "mean", "median", "mode", "variance", "std", "min", "max", "skewness",
         "kurtosis", "excess_kurtosis", "gini", "entropy", "theil"});
    auto& props = ctx.doc.section("proportions", {"cohort", "image_id", "class_index", "class", "proportion"});
    auto& zs = ctx.doc.section("zscores", {"cohort", "image_id", "class_index", "class", "proportion", "z_score", "outlier"});
    auto& co = ctx.doc.section("cooccurrence", {"cohort", "class_i", "class_j", "fraction"});
    auto& cx = ctx.doc.section("complexity", {"cohort", "n_classes", "masks", "percent"});
    auto& corr = ctx.doc.section("correlations", {"cohort", "class_i", "class_j", "spearman", "pearson"});

    auto audit_cohort = [&](const std::string& cohort, const std::string& dir) {
        const auto named = ctx.masks(dir, cmap);
        if (named.empty()) throw InputError(dir + ": no mask files");
        std::vector<LabelMask> masks;
        for (const auto& m : named) masks.push_back(m.mask);
        std::vector<std::vector<double>> p(named.size());
        parallel_for(named.size(), cfg.worker_count(), [&](std::size_t i) { p[i] = class_proportions(masks[i], cmap); });

        std::map<ClassIndex, std::vector<double>> series;
        for (std::size_t i = 0; i < named.size(); ++i)
            for (auto k : classes) {
                series[k].push_back(p[i][k]);
                props.add({str(cohort), str(named[i].id), count(k), str(cmap.name(k)), num(p[i][k])});
            }
        for (auto k : classes) {
            const auto s = distribution_summary(series[k]);
            summary.add({str(cohort), count(k), str(cmap.name(k)), count(s.n), num(s.mean), num(s.median), num(s.mode),
                         num(s.variance), num(s.std), num(s.min), num(s.max), num(s.skewness), num(s.kurtosis),
                         num(s.excess_kurtosis), num(s.gini), num(s.entropy), num(s.theil)});
            std::vector<ZScore> z;
            try {
                z = zscore_outliers(series[k], cfg.z_threshold);
            } catch (const DegenerateError&) {
            }
            for (std::size_t i = 0; i < named.size(); ++i) {
                zs.add({str(cohort), str(named[i].id), count(k), str(cmap.name(k)), num(series[k][i]),
                        z.empty() ? Cell{} : num(z[i].z), z.empty() ? Cell{} : Cell(z[i].outlier)});
            }
        }
        const auto m = class_cooccurrence(masks, cmap);
        for (std::size_t i = 0; i < cmap.omega(); ++i)
            for (std::size_t j = 0; j < cmap.omega(); ++j)
                co.add({str(cohort), str(cmap.name(static_cast<ClassIndex>(i))),
                        str(cmap.name(static_cast<ClassIndex>(j))), num(m[i][j])});
        for (const auto& [k, n] : mask_complexity_histogram(masks))
            cx.add({str(cohort), count(k), count(n),
                    num(100.0 * static_cast<double>(n) / static_cast<double>(masks.size()))});
        for (std::size_t a = 0; a < classes.size(); ++a)
            for (std::size_t b = a + 1; b < classes.size(); ++b) {
                std::optional<Correlations> r;
                if (named.size() >= 2) r = rank_correlations(series[classes[a]], series[classes[b]]);
                corr.add({str(cohort), str(cmap.name(classes[a])), str(cmap.name(classes[b])),
                          r ? num(r->spearman) : Cell{}, r ? num(r->pearson) : Cell{}});
            }
    };
    audit_cohort("before", opt.masks);
    if (!opt.masks_after.empty()) audit_cohort("after", opt.masks_after);

    if (!opt.tabular.empty()) {
        const auto schema = ctx.schema();
        ctx.input(opt.tabular);
        const auto before = io::load_tabular(opt.tabular, schema);
        std::vector<TabularRecord> after;
        const bool has_after = !opt.tabular_after.empty();
        if (has_after) {
            ctx.input(opt.tabular_after);
            after = io::load_tabular(opt.tabular_after, schema);
        }
        auto& aug = ctx.doc.section("augmentation", {"feature", "category", "count_before", "pct_before", "count_after",
                                                     "pct_after", "delta_pct"});
        for (const auto& d : augmentation_delta_report(before, has_after ? after : before, schema)) {
            if (has_after)
                aug.add({str(d.feature), str(d.category), count(d.count_before), num(d.pct_before), count(d.count_after),
                         num(d.pct_after), num(d.delta_pct)});
            else
                aug.add({str(d.feature), str(d.category), count(d.count_before), num(d.pct_before), Cell{}, Cell{},
                         Cell{}});
        }
    }
    return ctx.finish("audit");
}

// ---- assoc ------------------------------------------------------------------

struct AssocOptions {
    std::string masks, tabular;
    std::size_t top = 10;
};

inline std::vector<fs::path> run_assoc(const RunConfig& cfg, const AssocOptions& opt) {
    using namespace detail;
    Context ctx(cfg);
    const auto cmap = ctx.class_map();
    const auto schema = ctx.schema();
    const auto named = ctx.masks(opt.masks, cmap);
    ctx.input(opt.tabular);
    const auto records = io::load_tabular(opt.tabular, schema);
    std::map<std::string, const TabularRecord*> by_id;
    for (const auto& r : records) {
        if (!by_id.emplace(strip_image_extension(r.image_id), &r).second)
            throw InputError(opt.tabular + ": image_id '" + r.image_id + "' is ambiguous once its extension is removed");
    }
    std::vector<std::vector<double>> proportions;
    std::vector<TabularRecord> matched;
    for (const auto& m : named) {
        auto it = by_id.find(m.id);
        if (it == by_id.end()) throw InputError(opt.tabular + ": no clinical record for image '" + m.id + "'");
        proportions.push_back(class_proportions(m.mask, cmap));
        matched.push_back(*it->second);
    }
    const auto assoc = association_tests(proportions, matched, schema, cmap.omega());

    const std::vector<std::string> cols = {"class_index", "class", "feature", "n_groups", "kruskal_h", "kruskal_df",
                                           "kruskal_p", "kruskal_fdr", "anova_f", "anova_df1", "anova_df2", "anova_p",
                                           "anova_fdr", "significant"};
    auto row_of = [&](const Association& a) {
        const auto& kw = a.kruskal;
        const auto& an = a.anova;
        const bool sig = a.kruskal_fdr && *a.kruskal_fdr < cfg.alpha;
        return std::vector<Cell>{count(a.class_index), str(cmap.name(static_cast<ClassIndex>(a.class_index))),
                                 str(schema.at(a.feature).display), count(a.n_groups),
                                 kw ? num(kw->statistic) : Cell{}, kw ? num(kw->df) : Cell{},
                                 kw ? num(kw->p_value) : Cell{}, num(a.kruskal_fdr), an ? num(an->statistic) : Cell{},
                                 an ? num(an->df) : Cell{}, an ? num(an->df2) : Cell{}, an ? num(an->p_value) : Cell{},
                                 num(a.anova_fdr), Cell(sig)};
    };
    auto& all = ctx.doc.section("associations", cols);
    for (const auto& a : assoc) all.add(row_of(a));

    std::vector<const Association*> ranked;
    for (const auto& a : assoc)
        if (a.kruskal) ranked.push_back(&a);
    std::stable_sort(ranked.begin(), ranked.end(), [](const Association* x, const Association* y) {
        return x->kruskal->statistic > y->kruskal->statistic;
    });
    auto top_cols = cols;
    top_cols.insert(top_cols.begin(), "rank");
    auto& top = ctx.doc.section("top_associations", top_cols);
    for (std::size_t i = 0; i < std::min(opt.top, ranked.size()); ++i) {
        auto row = row_of(*ranked[i]);
        row.insert(row.begin(), count(i + 1));
        top.add(std::move(row));
    }
    return ctx.finish("assoc");
}

// ---- agree ------------------------------------------------------------------

struct AgreeOptions {
    std::string a, b;
    std::string tab_a, tab_b;
};

inline std::vector<fs::path> run_agree(const RunConfig& cfg, const AgreeOptions& opt) {
    using namespace detail;
    Context ctx(cfg);
    const auto cmap = ctx.class_map();
    auto& jac = ctx.doc.section("jaccard", {"class_index", "class", "mean", "sd", "n"});
    if (!opt.a.empty() || !opt.b.empty()) {
        if (opt.a.empty() || opt.b.empty()) throw InputError("agree: --a and --b must be given together");
        const auto na = ctx.masks(opt.a, cmap);
        const auto bs = Context::align(na, ctx.masks(opt.b, cmap), opt.a, opt.b);
        std::vector<LabelMask> as;
        for (const auto& m : na) as.push_back(m.mask);
        const auto agg = jaccard_agreement(as, bs, cmap);
        for (auto k : foreground(cmap)) {
            auto it = agg.find(k);
            if (it == agg.end()) jac.add({count(k), str(cmap.name(k)), Cell{}, Cell{}, count(0)});
            else jac.add({count(k), str(cmap.name(k)), num(it->second.mean), num(it->second.sd), count(it->second.n)});
        }
    }
    if (!opt.tab_a.empty() || !opt.tab_b.empty()) {
        if (opt.tab_a.empty() || opt.tab_b.empty())
            throw InputError("agree: --tab-a and --tab-b must be given together");
        const auto schema = ctx.schema();
        ctx.input(opt.tab_a);
        ctx.input(opt.tab_b);
        auto ra = io::load_tabular(opt.tab_a, schema);
        auto rb = io::load_tabular(opt.tab_b, schema);
        auto by_id = [](const TabularRecord& x, const TabularRecord& y) { return x.image_id < y.image_id; };
        std::sort(ra.begin(), ra.end(), by_id);
        std::sort(rb.begin(), rb.end(), by_id);
        if (ra.size() != rb.size())
            throw InputError("agree: " + opt.tab_a + " has " + std::to_string(ra.size()) + " records, " + opt.tab_b +
                             " has " + std::to_string(rb.size()));
        auto& kap = ctx.doc.section("kappa", {"feature", "kappa", "n"});
        std::vector<double> values;
        for (const auto& f : schema.features()) {
            const auto k = feature_kappa(ra, rb, f.key);
            if (k) values.push_back(*k);
            kap.add({str(f.display), num(k), count(ra.size())});
        }
        auto& ks = ctx.doc.section("kappa_summary", {"mean", "sd", "n_features"});
        if (values.empty()) ks.add({Cell{}, Cell{}, count(0)});
        else
            ks.add({num(mean_of(values)), values.size() >= 2 ? num(sample_sd(values)) : Cell{}, count(values.size())});
    }
    return ctx.finish("agree");
}

// ---- fusion-check -----------------------------------------------------------

struct FusionOptions {
    std::string fixtures;
    std::size_t trials = 20;
    double lambda1 = fusion::kLambdaSegmentation;
    double lambda2 = fusion::kLambdaClassification;
    double focal_alpha = fusion::kFocalAlpha;
    double focal_gamma = fusion::kFocalGamma;
    double dice_epsilon = fusion::kDiceEpsilon;
};

// Returns the files written and whether every gradient check passed.
inline std::pair<std::vector<fs::path>, bool> run_fusion_check(const RunConfig& cfg, const FusionOptions& opt) {
    using namespace detail;
    Context ctx(cfg);
    const fs::path tensor_dir = fs::path(cfg.out_dir) / "fusion_tensors";
    std::vector<fs::path> extra;
    auto& kernels = ctx.doc.section("kernels", {"kernel", "output", "shape", "sum", "min", "max"});
    auto emit = [&](const std::string& kernel, const Tensor& t) {
        const auto file = tensor_dir / (kernel + ".tensor");
        io::save_tensor(file, t);
        extra.push_back(file);
        double s = 0, lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (double v : t.data()) {
            s += v;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        kernels.add({str(kernel), str("fusion_tensors/" + kernel + ".tensor"), str(shape_string(t.shape())), num(s),
                     t.size() ? num(lo) : Cell{}, t.size() ? num(hi) : Cell{}});
    };

    if (!opt.fixtures.empty()) {
        const fs::path dir = opt.fixtures;
        if (!fs::is_directory(dir)) throw InputError(opt.fixtures + ": not a directory");
        auto have = [&](const std::string& f) { return fs::exists(dir / f); };
        auto load = [&](const std::string& f) {
            ctx.input(dir / f);
            return io::load_tensor(dir / f);
        };
        if (have("image.tensor")) emit("zscore_normalize", fusion::zscore_normalize(load("image.tensor")));
        std::optional<Tensor> fused;
        if (have("features.tensor")) {
            const auto pooled = fusion::global_avg_pool(load("features.tensor"));
            emit("global_avg_pool", pooled);
            const auto normalized = fusion::normalize_features(pooled);
            emit("normalize_features", normalized);
            if (have("tabular.tensor")) {
                fused = fusion::fuse_concat(load("tabular.tensor"), normalized);
                emit("fuse_concat", *fused);
            }
        }
        if (have("mlp.json")) {
            ctx.input(dir / "mlp.json");
            nlohmann::json j;
            try {
                j = nlohmann::json::parse(io::read_file(dir / "mlp.json"));
            } catch (const nlohmann::json::exception& e) {
                throw InputError((dir / "mlp.json").string() + ": invalid JSON (" + e.what() + ")");
            }
            std::vector<fusion::DenseLayer> layers;
            try {
                for (const auto& l : j.at("layers"))
                    layers.push_back({load(l.at("weights").get<std::string>()), load(l.at("bias").get<std::string>()),
                                      fusion::parse_activation(l.at("activation").get<std::string>())});
            } catch (const nlohmann::json::exception& e) {
                throw InputError((dir / "mlp.json").string() + ": " + e.what());
            }
            const fusion::MlpSpec spec(std::move(layers));
            const Tensor input = have("mlp_input.tensor") ? load("mlp_input.tensor")
                                 : fused                  ? *fused
                                                          : throw InputError(opt.fixtures + ": mlp.json needs mlp_input.tensor or features/tabular fixtures");
            emit("mlp_forward", fusion::mlp_forward(spec, input));
        }
        if (have("att_x.tensor")) {
            fusion::AttentionGateSpec spec{load("att_theta_w.tensor"), load("att_theta_b.tensor"),
                                           load("att_phi_w.tensor"),   load("att_phi_b.tensor"),
                                           load("att_psi_w.tensor"),   load("att_psi_b.tensor")};
            emit("attention_gate", fusion::attention_gate(load("att_x.tensor"), load("att_g.tensor"), spec));
        }
        if (have("head_features.tensor"))
            emit("softmax_head",
                 fusion::softmax_head(load("head_features.tensor"), load("head_w.tensor"), load("head_b.tensor")));
        if (have("loss_pred.tensor")) {
            const auto pred = load("loss_pred.tensor");
            const auto gt = load("loss_gt.tensor");
            const double ld = fusion::dice_loss(pred, gt, opt.dice_epsilon);
            const double lf = fusion::focal_loss(pred, gt, opt.focal_alpha, opt.focal_gamma);
            const double lc = fusion::categorical_cross_entropy(pred, gt);
            auto& losses = ctx.doc.section("losses", {"dice", "focal", "cross_entropy", "combined", "lambda1", "lambda2"});
            losses.add({num(ld), num(lf), num(lc), num(fusion::combined_loss(ld, lf, lc, opt.lambda1, opt.lambda2)),
                        num(opt.lambda1), num(opt.lambda2)});
        }
    }

    auto& grad = ctx.doc.section("gradient_check", {"kernel", "trial", "max_rel_error", "tolerance", "pass"});
    bool all_pass = true;
    for (const auto& g : fusion::run_gradient_checks(opt.trials, cfg.seed)) {
        const bool pass = g.max_rel_error < fusion::kGradientTolerance;
        all_pass = all_pass && pass;
        grad.add({str(g.kernel), count(g.trial), num(g.max_rel_error), num(fusion::kGradientTolerance), Cell(pass)});
    }
    auto files = ctx.finish("fusion_check");
    files.insert(files.end(), extra.begin(), extra.end());
    return {files, all_pass};
}

// ---- entry point ------------------------------------------------------------

inline void add_common(CLI::App* sub, RunConfig& cfg) {
    sub->add_option("--out", cfg.out_dir, "Output directory")->required();
    sub->add_option("--format", cfg.format, "Report format: json or csv")->check(CLI::IsMember({"json", "csv"}));
    sub->add_option("--threads", cfg.threads, "Worker threads (0: one per processor)");
    sub->add_option("--seed", cfg.seed, "Random seed");
}

inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Segmentation evaluation and statistical validation toolkit", "mammoeval"};
    app.set_config("--config", "", "TOML-style file setting any flag");
    app.set_version_flag("--version", kToolVersion);
    app.require_subcommand(1);

    RunConfig cfg;
    EvalOptions eval;
    CompareOptions compare;
    RocOptions roc;
    AuditOptions audit;
    AssocOptions assoc;
    AgreeOptions agree;
    FusionOptions fus;

    auto* s_eval = app.add_subcommand("eval", "Prediction vs reference masks: per-image and summary metrics");
    add_common(s_eval, cfg);
    s_eval->add_option("--pred", eval.pred, "Directory of predicted masks")->required();
    s_eval->add_option("--gt", eval.gt, "Directory of reference masks")->required();
    s_eval->add_option("--classes", cfg.classes, "Class-map JSON (default: mammography taxonomy)");
    s_eval->add_option("--boundary-d", cfg.boundary_d, "Boundary IoU band width in pixels");
    s_eval->add_option("--policy", cfg.policy, "Undefined-metric policy: skip or zero");
    s_eval->add_flag("--error-maps", eval.error_maps, "Write TP/FP/FN error-map PNGs");

    auto* s_cmp = app.add_subcommand("compare", "Two prediction sets: Wilcoxon, Cohen's d, Bland-Altman");
    add_common(s_cmp, cfg);
    s_cmp->add_option("--a", compare.a, "Directory of model A masks")->required();
    s_cmp->add_option("--b", compare.b, "Directory of model B masks")->required();
    s_cmp->add_option("--gt", compare.gt, "Directory of reference masks")->required();
    s_cmp->add_option("--classes", cfg.classes, "Class-map JSON");
    s_cmp->add_option("--alternative", compare.alternative, "two-sided, greater or less");
    s_cmp->add_option("--alpha", cfg.alpha, "Family-wise alpha before Bonferroni correction");
    s_cmp->add_option("--metrics", compare.metrics, "Metrics to compare")->delimiter(',');
    s_cmp->add_option("--boundary-d", cfg.boundary_d, "Boundary IoU band width in pixels");

    auto* s_roc = app.add_subcommand("roc", "Scores and labels: AUC with bootstrap and DeLong CIs");
    add_common(s_roc, cfg);
    s_roc->add_option("--scores", roc.scores, "CSV with score,label[,task][,class]")->required();
    s_roc->add_option("--resamples", roc.resamples, "Bootstrap resamples");
    s_roc->add_option("--level", roc.level, "Confidence level");

    auto* s_audit = app.add_subcommand("audit", "Dataset class balance and distribution statistics");
    add_common(s_audit, cfg);
    s_audit->add_option("--masks", audit.masks, "Directory of masks")->required();
    s_audit->add_option("--masks-after", audit.masks_after, "Directory of masks after augmentation");
    s_audit->add_option("--tabular", audit.tabular, "Clinical CSV");
    s_audit->add_option("--tabular-after", audit.tabular_after, "Clinical CSV after augmentation");
    s_audit->add_option("--classes", cfg.classes, "Class-map JSON");
    s_audit->add_option("--schema", cfg.schema, "Clinical feature schema JSON");
    s_audit->add_option("--z-threshold", cfg.z_threshold, "|z| above which a value is an outlier");

    auto* s_assoc = app.add_subcommand("assoc", "Class proportions vs clinical features: Kruskal-Wallis, ANOVA, FDR");
    add_common(s_assoc, cfg);
    s_assoc->add_option("--masks", assoc.masks, "Directory of masks")->required();
    s_assoc->add_option("--tabular", assoc.tabular, "Clinical CSV")->required();
    s_assoc->add_option("--classes", cfg.classes, "Class-map JSON");
    s_assoc->add_option("--schema", cfg.schema, "Clinical feature schema JSON");
    s_assoc->add_option("--alpha", cfg.alpha, "FDR significance level");
    s_assoc->add_option("--top", assoc.top, "Rows in the ranked association table");

    auto* s_agree = app.add_subcommand("agree", "Inter-annotator agreement: Jaccard and Cohen's kappa");
    add_common(s_agree, cfg);
    s_agree->add_option("--a", agree.a, "Directory of annotator A masks");
    s_agree->add_option("--b", agree.b, "Directory of annotator B masks");
    s_agree->add_option("--tab-a", agree.tab_a, "Annotator A clinical CSV");
    s_agree->add_option("--tab-b", agree.tab_b, "Annotator B clinical CSV");
    s_agree->add_option("--classes", cfg.classes, "Class-map JSON");
    s_agree->add_option("--schema", cfg.schema, "Clinical feature schema JSON");

    auto* s_fus = app.add_subcommand("fusion-check", "Fusion/loss kernels on fixtures plus gradient checks");
    add_common(s_fus, cfg);
    s_fus->add_option("--fixtures", fus.fixtures, "Directory of tensor fixtures");
    s_fus->add_option("--trials", fus.trials, "Random gradient-check trials per kernel");
    s_fus->add_option("--lambda1", fus.lambda1, "Segmentation loss weight");
    s_fus->add_option("--lambda2", fus.lambda2, "Classification loss weight");
    s_fus->add_option("--focal-alpha", fus.focal_alpha, "Focal loss balancing coefficient");
    s_fus->add_option("--focal-gamma", fus.focal_gamma, "Focal loss focusing parameter");
    s_fus->add_option("--dice-epsilon", fus.dice_epsilon, "Dice smoothing term");

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForVersion&) {
        out << kToolVersion << "\n";
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kExitInput;
    }

    try {
        std::vector<fs::path> files;
        int code = kExitOk;
        if (*s_eval) files = run_eval(cfg, eval);
        else if (*s_cmp) files = run_compare(cfg, compare);
        else if (*s_roc) files = run_roc(cfg, roc);
        else if (*s_audit) files = run_audit(cfg, audit);
        else if (*s_assoc) files = run_assoc(cfg, assoc);
        else if (*s_agree) files = run_agree(cfg, agree);
        else if (*s_fus) {
            auto [f, pass] = run_fusion_check(cfg, fus);
            files = std::move(f);
            if (!pass) {
                err << "error: gradient check failed\n";
                code = kExitInternal;
            }
        }
        for (const auto& f : files) out << f.generic_string() << "\n";
        return code;
    } catch (const InputError& e) {
        err << "input error: " << e.what() << "\n";
        return kExitInput;
    } catch (const DegenerateError& e) {
        err << "input error: " << e.what() << "\n";
        return kExitInput;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
}

inline int run(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run(args);
}

}  // namespace mammoeval::cli
