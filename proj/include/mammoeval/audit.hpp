#pragma once
// Dataset audit: class-proportion distributions, inequality indices,
// outliers, co-occurrence, mask complexity, inter-annotator agreement,
// augmentation balance and proportion/clinical-feature associations.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mammoeval/core.hpp"
#include "mammoeval/seg_metrics.hpp"
#include "mammoeval/stats.hpp"

namespace mammoeval {

// Fraction of pixels per class index; sums to 1 over all classes.
inline std::vector<double> class_proportions(const LabelMask& mask, const ClassMap& cmap) {
    require_valid(mask, cmap, "class_proportions");
    std::vector<std::size_t> counts(cmap.omega(), 0);
    for (auto l : mask.labels()) ++counts[l];
    std::vector<double> out(cmap.omega(), 0.0);
    if (mask.size() == 0) return out;
    for (std::size_t k = 0; k < counts.size(); ++k)
        out[k] = static_cast<double>(counts[k]) / static_cast<double>(mask.size());
    return out;
}

struct DistributionSummary {
    std::size_t n = 0;
    double mean = 0, median = 0, mode = 0, variance = 0, std = 0, min = 0, max = 0;
    std::optional<double> skewness;         // population third standardized moment
    std::optional<double> kurtosis;         // population m4 / m2^2
    std::optional<double> excess_kurtosis;  // kurtosis - 3
    // Undefined for all-zero or negative-valued series.
    std::optional<double> gini, entropy, theil;
};

inline constexpr double kModeRounding = 1e9;

namespace detail {
inline double round9(double x) { return std::round(x * kModeRounding) / kModeRounding; }
}  // namespace detail

// variance/std use the n-1 denominator; shape moments are population moments.
inline DistributionSummary distribution_summary(const std::vector<double>& values) {
    if (values.empty()) throw InputError("distribution_summary: empty series");
    DistributionSummary s;
    const std::size_t n = values.size();
    const double nd = static_cast<double>(n);
    s.n = n;
    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    s.min = sorted.front();
    s.max = sorted.back();
    s.median = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    s.mean = mean_of(values);

    double m2 = 0, m3 = 0, m4 = 0;
    for (double x : values) {
        const double d = x - s.mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    s.variance = n > 1 ? m2 / (nd - 1.0) : 0.0;
    s.std = std::sqrt(s.variance);
    m2 /= nd;
    m3 /= nd;
    m4 /= nd;
    if (m2 > 0.0) {
        s.skewness = m3 / std::pow(m2, 1.5);
        s.kurtosis = m4 / (m2 * m2);
        s.excess_kurtosis = *s.kurtosis - 3.0;
    }

    // Mode: most frequent value at 9 decimals; smallest value wins ties.
    std::map<double, std::size_t> freq;
    for (double x : sorted) ++freq[detail::round9(x)];
    std::size_t best = 0;
    for (const auto& [v, c] : freq)
        if (c > best) { best = c; s.mode = v; }

    const bool nonneg = s.min >= 0.0;
    double total = 0.0;
    for (double x : sorted) total += x;
    if (nonneg && total > 0.0) {
        double weighted = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            weighted += (2.0 * static_cast<double>(i + 1) - nd - 1.0) * sorted[i];
        s.gini = weighted / (nd * total);

        double h = 0.0;
        for (double x : values)
            if (x > 0.0) {
                const double p = x / total;
                h -= p * std::log2(p);
            }
        s.entropy = h;

        const double mu = total / nd;
        double t = 0.0;
        for (double x : values)
            if (x > 0.0) t += (x / mu) * std::log(x / mu);
        s.theil = t / nd;
    }
    return s;
}

struct ZScore {
    double z = 0.0;
    bool outlier = false;
};

inline constexpr double kDefaultOutlierThreshold = 3.0;

inline ZScore zscore(double x, double mean, double std, double threshold = kDefaultOutlierThreshold) {
    if (!(std > 0.0)) throw DegenerateError("zscore: standard deviation must be positive");
    const double z = (x - mean) / std;
    return {z, std::abs(z) > threshold};
}

// Standardization with the population standard deviation.
inline std::vector<ZScore> zscore_outliers(const std::vector<double>& values,
                                           double threshold = kDefaultOutlierThreshold) {
    if (values.empty()) throw InputError("zscore_outliers: empty series");
    const double mu = mean_of(values);
    double ss = 0.0;
    for (double x : values) ss += (x - mu) * (x - mu);
    const double sd = std::sqrt(ss / static_cast<double>(values.size()));
    if (sd == 0.0) throw DegenerateError("zscore_outliers: zero standard deviation");
    std::vector<ZScore> out;
    out.reserve(values.size());
    for (double x : values) out.push_back(zscore(x, mu, sd, threshold));
    return out;
}

// cell(i, j): fraction of masks with at least one pixel of both i and j.
inline std::vector<std::vector<double>> class_cooccurrence(const std::vector<LabelMask>& masks,
                                                           const ClassMap& cmap) {
    if (masks.empty()) throw InputError("class_cooccurrence: no masks");
    const std::size_t w = cmap.omega();
    std::vector<std::vector<double>> counts(w, std::vector<double>(w, 0.0));
    std::vector<bool> present(w);
    for (const auto& m : masks) {
        require_valid(m, cmap, "class_cooccurrence");
        std::fill(present.begin(), present.end(), false);
        for (auto l : m.labels()) present[l] = true;
        for (std::size_t i = 0; i < w; ++i)
            for (std::size_t j = 0; j < w; ++j)
                if (present[i] && present[j]) counts[i][j] += 1.0;
    }
    for (auto& row : counts)
        for (auto& c : row) c /= static_cast<double>(masks.size());
    return counts;
}

// Number of masks by count of distinct non-background classes present.
inline std::map<std::size_t, std::size_t> mask_complexity_histogram(const std::vector<LabelMask>& masks) {
    std::map<std::size_t, std::size_t> hist;
    for (const auto& m : masks) {
        std::vector<bool> present(256, false);
        for (auto l : m.labels()) present[l] = true;
        std::size_t k = 0;
        for (std::size_t c = 1; c < present.size(); ++c) k += present[c];
        ++hist[k];
    }
    return hist;
}

// Per-class Jaccard (IoU) between two annotators, mean and sample sd over
// images where the class appears in either annotation. Background excluded.
inline std::map<int, ClassAggregate> jaccard_agreement(const std::vector<LabelMask>& a,
                                                       const std::vector<LabelMask>& b, const ClassMap& cmap) {
    if (a.size() != b.size())
        throw InputError("jaccard_agreement: annotation sets differ in length (" + std::to_string(a.size()) +
                         " vs " + std::to_string(b.size()) + ")");
    std::map<int, ClassAggregate> out;
    for (std::size_t k = 1; k < cmap.omega(); ++k) {
        std::vector<MetricSample> samples;
        for (std::size_t i = 0; i < a.size(); ++i) {
            const auto c = confusion_counts(a[i], b[i], static_cast<ClassIndex>(k));
            samples.push_back({std::to_string(i), static_cast<int>(k), MetricName::IoU, overlap_metrics(c).iou});
        }
        auto agg = aggregate_per_class(std::move(samples));
        if (auto it = agg.find(static_cast<int>(k)); it != agg.end()) out.emplace(it->first, it->second);
    }
    return out;
}

// ---- augmentation balance ---------------------------------------------------

struct CategoryDelta {
    std::string feature;
    std::string category;
    std::size_t count_before = 0, count_after = 0;
    double pct_before = 0.0, pct_after = 0.0;  // one decimal, half-up
    double delta_pct = 0.0;
};

// count / total as a percentage rounded half-up to one decimal, computed in
// integer tenths so that exact halves are not lost to binary rounding.
inline long percent_tenths(std::size_t count, std::size_t total) {
    if (total == 0) return 0;
    const auto num = 2ULL * 1000ULL * count + total;
    return static_cast<long>(num / (2ULL * total));
}

inline std::vector<CategoryDelta> augmentation_delta_report(const std::vector<TabularRecord>& before,
                                                            const std::vector<TabularRecord>& after,
                                                            const TabularSchema& schema) {
    auto tally = [&](const std::vector<TabularRecord>& recs) {
        std::map<std::string, std::vector<std::size_t>> t;
        for (const auto& f : schema.features()) t[f.key].assign(f.categories.size(), 0);
        for (const auto& r : recs) {
            validate_record(r, schema);
            for (const auto& [key, v] : r.features) ++t[key][static_cast<std::size_t>(v)];
        }
        return t;
    };
    const auto tb = tally(before), ta = tally(after);
    std::vector<CategoryDelta> out;
    for (const auto& f : schema.features()) {
        for (std::size_t c = 0; c < f.categories.size(); ++c) {
            CategoryDelta d;
            d.feature = f.display;
            d.category = f.categories[c];
            d.count_before = tb.at(f.key)[c];
            d.count_after = ta.at(f.key)[c];
            const long pb = percent_tenths(d.count_before, before.size());
            const long pa = percent_tenths(d.count_after, after.size());
            d.pct_before = static_cast<double>(pb) / 10.0;
            d.pct_after = static_cast<double>(pa) / 10.0;
            d.delta_pct = static_cast<double>(pa - pb) / 10.0;
            out.push_back(d);
        }
    }
    return out;
}

// ---- associations -----------------------------------------------------------

struct Association {
    int class_index = 0;
    std::string feature;
    std::size_t n_groups = 0;
    std::optional<TestResult> kruskal;
    std::optional<TestResult> anova;
    std::optional<double> kruskal_fdr;
    std::optional<double> anova_fdr;
};

// For each foreground class and each clinical feature, groups the per-image
// class proportions by category and tests for a difference between groups.
// `proportions[i]` belongs to `records[i]`. FDR adjustment runs over all
// tests of the same kind.
inline std::vector<Association> association_tests(const std::vector<std::vector<double>>& proportions,
                                                  const std::vector<TabularRecord>& records,
                                                  const TabularSchema& schema, std::size_t omega) {
    if (proportions.size() != records.size())
        throw InputError("association_tests: " + std::to_string(proportions.size()) + " images but " +
                         std::to_string(records.size()) + " records");
    std::vector<Association> out;
    for (std::size_t k = 1; k < omega; ++k) {
        for (const auto& f : schema.features()) {
            std::vector<std::vector<double>> by_cat(f.categories.size());
            for (std::size_t i = 0; i < records.size(); ++i) {
                auto it = records[i].features.find(f.key);
                if (it == records[i].features.end()) continue;
                by_cat[static_cast<std::size_t>(it->second)].push_back(proportions[i].at(k));
            }
            std::vector<std::vector<double>> groups;
            for (auto& g : by_cat)
                if (!g.empty()) groups.push_back(std::move(g));
            Association a;
            a.class_index = static_cast<int>(k);
            a.feature = f.key;
            a.n_groups = groups.size();
            if (groups.size() >= 2) {
                try {
                    a.kruskal = kruskal_wallis(groups);
                } catch (const InputError&) {
                }
                try {
                    a.anova = anova_oneway(groups);
                } catch (const InputError&) {
                } catch (const DegenerateError&) {
                }
            }
            out.push_back(std::move(a));
        }
    }
    std::vector<double> pk, pa;
    for (const auto& a : out) {
        if (a.kruskal) pk.push_back(a.kruskal->p_value);
        if (a.anova) pa.push_back(a.anova->p_value);
    }
    const auto qk = bh_fdr(pk), qa = bh_fdr(pa);
    std::size_t ik = 0, ia = 0;
    for (auto& a : out) {
        if (a.kruskal) a.kruskal_fdr = qk[ik++];
        if (a.anova) a.anova_fdr = qa[ia++];
    }
    return out;
}

// Inter-rater agreement on one categorical feature.
inline std::optional<double> feature_kappa(const std::vector<TabularRecord>& a, const std::vector<TabularRecord>& b,
                                           const std::string& key) {
    if (a.size() != b.size()) throw InputError("feature_kappa: record lists differ in length");
    std::vector<int> ra, rb;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].image_id != b[i].image_id)
            throw InputError("feature_kappa: record " + std::to_string(i) + " pairs '" + a[i].image_id +
                             "' with '" + b[i].image_id + "'");
        ra.push_back(a[i].features.at(key));
        rb.push_back(b[i].features.at(key));
    }
    return cohens_kappa(ra, rb);
}

}  // namespace mammoeval
