#pragma once
// Hypothesis tests, effect sizes, agreement analysis and ROC/AUC confidence
// intervals used to compare segmentation models and clinical predictions.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mammoeval/core.hpp"
#include "mammoeval/parallel.hpp"
#include "mammoeval/special.hpp"

namespace mammoeval {

struct PairedSeries {
    std::vector<double> a;
    std::vector<double> b;

    PairedSeries(std::vector<double> a_, std::vector<double> b_) : a(std::move(a_)), b(std::move(b_)) {
        if (a.size() != b.size())
            throw InputError("paired series: lengths differ (" + std::to_string(a.size()) + " vs " +
                             std::to_string(b.size()) + ")");
        if (a.empty()) throw InputError("paired series: empty");
    }

    // Series whose differences a - b are exactly `diffs`.
    static PairedSeries from_differences(const std::vector<double>& diffs) {
        return PairedSeries(diffs, std::vector<double>(diffs.size(), 0.0));
    }

    std::size_t n() const noexcept { return a.size(); }
    std::vector<double> differences() const {
        std::vector<double> d(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) d[i] = a[i] - b[i];
        return d;
    }
    PairedSeries swapped() const { return PairedSeries(b, a); }
};

enum class Alternative { TwoSided, Greater, Less };

inline const char* to_string(Alternative alt) {
    switch (alt) {
        case Alternative::TwoSided: return "two-sided";
        case Alternative::Greater: return "greater";
        case Alternative::Less: return "less";
    }
    return "?";
}

struct TestResult {
    double statistic = 0.0;
    double p_value = 1.0;
    std::optional<double> df;   // df, or numerator df for F
    std::optional<double> df2;  // denominator df for F
    std::size_t n = 0;
};

// ---- descriptive helpers ----------------------------------------------------

inline double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

// Sample (n-1) standard deviation.
inline double sample_sd(const std::vector<double>& v) {
    const double m = mean_of(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

// Average (mid) ranks, 1-based. `tie_term` receives sum(t^3 - t) over tie groups.
inline std::vector<double> average_ranks(const std::vector<double>& v, double* tie_term = nullptr) {
    const std::size_t n = v.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
    std::vector<double> ranks(n);
    double ties = 0.0;
    for (std::size_t i = 0; i < n;) {
        std::size_t j = i;
        while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
        const double r = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
        const double t = static_cast<double>(j - i + 1);
        ties += t * t * t - t;
        i = j + 1;
    }
    if (tie_term) *tie_term = ties;
    return ranks;
}

// ---- Wilcoxon signed-rank ---------------------------------------------------

inline constexpr std::size_t kWilcoxonExactMax = 25;

struct WilcoxonResult {
    double w_plus = 0.0;       // sum of ranks of positive differences
    double p_value = 1.0;
    std::size_t n_nonzero = 0; // differences kept after dropping zeros
    bool exact = false;
    double z = 0.0;            // normal-approximation statistic when !exact
};

// Zero differences are dropped; ties get average ranks. Exact null
// distribution (all 2^n sign assignments) for n <= 25, otherwise normal
// approximation with tie and continuity correction.
inline WilcoxonResult wilcoxon_signed_rank(const PairedSeries& s, Alternative alt = Alternative::TwoSided) {
    std::vector<double> absd;
    std::vector<bool> positive;
    for (double d : s.differences()) {
        if (d == 0.0) continue;
        absd.push_back(std::abs(d));
        positive.push_back(d > 0.0);
    }
    if (absd.empty()) throw DegenerateError("wilcoxon: no nonzero differences");
    const std::size_t n = absd.size();
    double tie_term = 0.0;
    const auto ranks = average_ranks(absd, &tie_term);

    WilcoxonResult r;
    r.n_nonzero = n;
    for (std::size_t i = 0; i < n; ++i)
        if (positive[i]) r.w_plus += ranks[i];

    if (n <= kWilcoxonExactMax) {
        // Doubled mid-ranks are integers; count sign patterns per doubled sum.
        std::vector<long> doubled(n);
        std::size_t max_sum = 0;
        for (std::size_t i = 0; i < n; ++i) {
            doubled[i] = std::lround(2.0 * ranks[i]);
            max_sum += static_cast<std::size_t>(doubled[i]);
        }
        std::vector<double> count(max_sum + 1, 0.0);
        count[0] = 1.0;
        std::size_t reach = 0;
        for (long dr : doubled) {
            const auto step = static_cast<std::size_t>(dr);
            for (std::size_t s2 = reach + 1; s2-- > 0;)
                if (count[s2] != 0.0) count[s2 + step] += count[s2];
            reach += step;
        }
        const long obs = std::lround(2.0 * r.w_plus);
        const double total = std::ldexp(1.0, static_cast<int>(n));
        double ge = 0.0, le = 0.0;
        for (std::size_t s2 = 0; s2 <= max_sum; ++s2) {
            if (static_cast<long>(s2) >= obs) ge += count[s2];
            if (static_cast<long>(s2) <= obs) le += count[s2];
        }
        const double p_greater = ge / total, p_less = le / total;
        r.exact = true;
        switch (alt) {
            case Alternative::Greater: r.p_value = p_greater; break;
            case Alternative::Less: r.p_value = p_less; break;
            case Alternative::TwoSided: r.p_value = std::min(1.0, 2.0 * std::min(p_greater, p_less)); break;
        }
        return r;
    }

    const double nd = static_cast<double>(n);
    const double mu = nd * (nd + 1.0) / 4.0;
    const double var = nd * (nd + 1.0) * (2.0 * nd + 1.0) / 24.0 - tie_term / 48.0;
    const double se = std::sqrt(var);
    const double diff = r.w_plus - mu;
    switch (alt) {
        case Alternative::Greater:
            r.z = (diff - 0.5) / se;
            r.p_value = special::normal_sf(r.z);
            break;
        case Alternative::Less:
            r.z = (diff + 0.5) / se;
            r.p_value = special::normal_cdf(r.z);
            break;
        case Alternative::TwoSided: {
            const double corr = diff > 0 ? 0.5 : diff < 0 ? -0.5 : 0.0;
            r.z = (diff - corr) / se;
            r.p_value = std::min(1.0, 2.0 * special::normal_sf(std::abs(r.z)));
            break;
        }
    }
    return r;
}

// Paired Student t-test on a - b.
inline TestResult paired_t_test(const PairedSeries& s, Alternative alt = Alternative::TwoSided) {
    if (s.n() < 2) throw InputError("paired t-test: needs n >= 2");
    const auto d = s.differences();
    const double sd = sample_sd(d);
    if (sd == 0.0) throw DegenerateError("paired t-test: constant differences");
    const double t = mean_of(d) / (sd / std::sqrt(static_cast<double>(d.size())));
    const double df = static_cast<double>(d.size() - 1);
    TestResult r{t, 1.0, df, std::nullopt, d.size()};
    switch (alt) {
        case Alternative::TwoSided: r.p_value = special::t_two_sided(t, df); break;
        case Alternative::Greater: r.p_value = special::t_sf(t, df); break;
        case Alternative::Less: r.p_value = 1.0 - special::t_sf(t, df); break;
    }
    return r;
}

// ---- effect size and multiplicity -------------------------------------------

enum class EffectCategory { Negligible, Small, Medium, Large };

inline const char* to_string(EffectCategory c) {
    switch (c) {
        case EffectCategory::Negligible: return "negligible";
        case EffectCategory::Small: return "small";
        case EffectCategory::Medium: return "medium";
        case EffectCategory::Large: return "large";
    }
    return "?";
}

inline EffectCategory categorize_effect(double d) {
    const double a = std::abs(d);
    if (a < 0.2) return EffectCategory::Negligible;
    if (a < 0.5) return EffectCategory::Small;
    if (a < 0.8) return EffectCategory::Medium;
    return EffectCategory::Large;
}

struct CohensD {
    double d = 0.0;
    EffectCategory category = EffectCategory::Negligible;
};

// mean(a - b) / sd(a - b) with the sample sd of the differences.
inline CohensD cohens_d_paired(const PairedSeries& s) {
    if (s.n() < 2) throw InputError("cohens_d: needs n >= 2");
    const auto d = s.differences();
    const double sd = sample_sd(d);
    if (sd == 0.0) throw DegenerateError("cohens_d: constant differences");
    const double v = mean_of(d) / sd;
    return {v, categorize_effect(v)};
}

inline double bonferroni_alpha(double alpha, std::size_t m) {
    if (m == 0) throw InputError("bonferroni: number of comparisons must be >= 1");
    if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("bonferroni: alpha must lie in (0,1)");
    return alpha / static_cast<double>(m);
}

// Benjamini-Hochberg step-up adjusted p-values, in input order.
inline std::vector<double> bh_fdr(const std::vector<double>& p) {
    for (std::size_t i = 0; i < p.size(); ++i)
        if (!(p[i] >= 0.0 && p[i] <= 1.0))
            throw InputError("bh_fdr: p-value " + std::to_string(p[i]) + " at position " + std::to_string(i) +
                             " outside [0,1]");
    const std::size_t m = p.size();
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return p[i] < p[j]; });
    std::vector<double> q(m);
    double running = 1.0;
    for (std::size_t r = m; r-- > 0;) {
        const double v = p[order[r]] * (static_cast<double>(m) / static_cast<double>(r + 1));
        running = std::min(running, v);
        q[order[r]] = std::min(1.0, running);
    }
    return q;
}

// ---- agreement --------------------------------------------------------------

inline constexpr double kLoaMultiplier = 1.96;

struct BlandAltmanPoint {
    double mean = 0.0;
    double difference = 0.0;
};

struct BlandAltmanResult {
    double bias = 0.0;
    double sd = 0.0;
    double loa_low = 0.0, loa_high = 0.0;
    double ci_low = 0.0, ci_high = 0.0;
    std::size_t n = 0;
    std::vector<BlandAltmanPoint> points;
};

// Bias and limits of agreement from summary values (bias ± 1.96 sd, CI of
// the bias ± 1.96 sd / sqrt(n)).
inline BlandAltmanResult bland_altman_from_summary(double bias, double sd, std::size_t n) {
    BlandAltmanResult r;
    r.bias = bias;
    r.sd = sd;
    r.n = n;
    r.loa_low = bias - kLoaMultiplier * sd;
    r.loa_high = bias + kLoaMultiplier * sd;
    const double half = kLoaMultiplier * sd / std::sqrt(static_cast<double>(n));
    r.ci_low = bias - half;
    r.ci_high = bias + half;
    return r;
}

inline BlandAltmanResult bland_altman(const PairedSeries& s) {
    if (s.n() < 2) throw InputError("bland_altman: needs n >= 2");
    const auto d = s.differences();
    auto r = bland_altman_from_summary(mean_of(d), sample_sd(d), d.size());
    r.points.reserve(s.n());
    for (std::size_t i = 0; i < s.n(); ++i) r.points.push_back({0.5 * (s.a[i] + s.b[i]), d[i]});
    return r;
}

// ---- group comparisons ------------------------------------------------------

// H with tie correction; p from chi-square with k - 1 df. When every value
// is tied there is no rank information: H = 0, p = 1.
inline TestResult kruskal_wallis(const std::vector<std::vector<double>>& groups) {
    if (groups.size() < 2) throw InputError("kruskal_wallis: needs at least 2 groups");
    std::vector<double> all;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        if (groups[g].empty()) throw InputError("kruskal_wallis: group " + std::to_string(g) + " is empty");
        all.insert(all.end(), groups[g].begin(), groups[g].end());
    }
    const double n = static_cast<double>(all.size());
    if (all.size() < 3) throw InputError("kruskal_wallis: needs total n >= 3");
    double tie_term = 0.0;
    const auto ranks = average_ranks(all, &tie_term);
    double sum = 0.0;
    std::size_t offset = 0;
    for (const auto& g : groups) {
        double rs = 0.0;
        for (std::size_t i = 0; i < g.size(); ++i) rs += ranks[offset + i];
        offset += g.size();
        sum += rs * rs / static_cast<double>(g.size());
    }
    const double df = static_cast<double>(groups.size() - 1);
    const double correction = 1.0 - tie_term / (n * n * n - n);
    TestResult r{0.0, 1.0, df, std::nullopt, all.size()};
    if (correction <= 0.0) return r;
    double h = (12.0 / (n * (n + 1.0)) * sum - 3.0 * (n + 1.0)) / correction;
    if (h < 0.0 && h > -1e-9) h = 0.0;
    r.statistic = h;
    r.p_value = special::chi2_sf(h, df);
    return r;
}

// One-way ANOVA F = MSB / MSW.
inline TestResult anova_oneway(const std::vector<std::vector<double>>& groups) {
    if (groups.size() < 2) throw InputError("anova: needs at least 2 groups");
    std::size_t n = 0;
    double total = 0.0;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        if (groups[g].empty()) throw InputError("anova: group " + std::to_string(g) + " is empty");
        n += groups[g].size();
        for (double x : groups[g]) total += x;
    }
    const std::size_t k = groups.size();
    if (n <= k) throw InputError("anova: within-group variance undefined (N <= k)");
    const double grand = total / static_cast<double>(n);
    double ssb = 0.0, ssw = 0.0;
    for (const auto& g : groups) {
        const double m = mean_of(g);
        ssb += static_cast<double>(g.size()) * (m - grand) * (m - grand);
        for (double x : g) ssw += (x - m) * (x - m);
    }
    const double df1 = static_cast<double>(k - 1), df2 = static_cast<double>(n - k);
    TestResult r{0.0, 1.0, df1, df2, n};
    if (ssw == 0.0) {
        if (ssb == 0.0) throw DegenerateError("anova: zero within- and between-group variance");
        r.statistic = std::numeric_limits<double>::infinity();
        r.p_value = 0.0;
        return r;
    }
    r.statistic = (ssb / df1) / (ssw / df2);
    r.p_value = special::f_sf(r.statistic, df1, df2);
    return r;
}

// ---- ROC / AUC --------------------------------------------------------------

namespace detail {
inline void check_binary(const std::vector<double>& scores, const std::vector<int>& labels) {
    if (scores.size() != labels.size())
        throw InputError("roc: " + std::to_string(scores.size()) + " scores but " + std::to_string(labels.size()) +
                         " labels");
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] != 0 && labels[i] != 1)
            throw InputError("roc: label at position " + std::to_string(i) + " is not 0/1");
}
}  // namespace detail

// Mann-Whitney AUC, P(s+ > s-) + P(tie)/2; nullopt when one class is absent.
inline std::optional<double> roc_auc_ovr(const std::vector<double>& scores, const std::vector<int>& labels) {
    detail::check_binary(scores, labels);
    const auto ranks = average_ranks(scores);
    double n_pos = 0, n_neg = 0, doubled_rank_sum = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] == 1) {
            n_pos += 1;
            doubled_rank_sum += 2.0 * ranks[i];
        } else {
            n_neg += 1;
        }
    }
    if (n_pos == 0 || n_neg == 0) return std::nullopt;
    // 2U = 2 R+ - n+(n+ + 1): integer arithmetic in doubles.
    const double twice_u = doubled_rank_sum - n_pos * (n_pos + 1.0);
    return twice_u / (2.0 * n_pos * n_neg);
}

struct RocPoint {
    double threshold = 0.0;
    double fpr = 0.0;
    double tpr = 0.0;
};

// Operating points for thresholds at each distinct score, descending.
inline std::vector<RocPoint> roc_curve(const std::vector<double>& scores, const std::vector<int>& labels) {
    detail::check_binary(scores, labels);
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return scores[i] > scores[j]; });
    double n_pos = 0, n_neg = 0;
    for (int l : labels) (l == 1 ? n_pos : n_neg) += 1;
    std::vector<RocPoint> pts;
    pts.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
    double tp = 0, fp = 0;
    for (std::size_t i = 0; i < order.size();) {
        const double s = scores[order[i]];
        while (i < order.size() && scores[order[i]] == s) {
            (labels[order[i]] == 1 ? tp : fp) += 1;
            ++i;
        }
        pts.push_back({s, n_neg > 0 ? fp / n_neg : 0.0, n_pos > 0 ? tp / n_pos : 0.0});
    }
    return pts;
}

struct AucInterval {
    double auc = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
};

inline constexpr std::size_t kDefaultResamples = 1000;

// Linear-interpolated quantile of sorted data.
inline double quantile_sorted(const std::vector<double>& sorted, double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

// Percentile CI from class-stratified bootstrap resamples. Resample i draws
// from its own seeded substream, so results do not depend on `threads`.
inline AucInterval bootstrap_auc_ci(const std::vector<double>& scores, const std::vector<int>& labels,
                                    std::size_t resamples = kDefaultResamples, std::uint64_t seed = 0,
                                    double level = 0.95, std::size_t threads = 1) {
    const auto point = roc_auc_ovr(scores, labels);
    if (!point) throw InputError("bootstrap_auc_ci: both classes must be present");
    if (resamples < 100) throw InputError("bootstrap_auc_ci: needs at least 100 resamples");
    if (!(level > 0.0 && level < 1.0)) throw InputError("bootstrap_auc_ci: level must lie in (0,1)");
    std::vector<double> pos, neg;
    for (std::size_t i = 0; i < scores.size(); ++i) (labels[i] == 1 ? pos : neg).push_back(scores[i]);

    std::vector<double> aucs(resamples);
    parallel_for(resamples, threads, [&](std::size_t r) {
        std::mt19937_64 eng(substream_seed(seed, r));
        std::vector<double> s;
        std::vector<int> l;
        s.reserve(scores.size());
        l.reserve(scores.size());
        for (std::size_t i = 0; i < pos.size(); ++i) {
            s.push_back(pos[bounded(eng, pos.size())]);
            l.push_back(1);
        }
        for (std::size_t i = 0; i < neg.size(); ++i) {
            s.push_back(neg[bounded(eng, neg.size())]);
            l.push_back(0);
        }
        aucs[r] = *roc_auc_ovr(s, l);
    });
    std::sort(aucs.begin(), aucs.end());
    const double tail = 0.5 * (1.0 - level);
    return {*point, quantile_sorted(aucs, tail), quantile_sorted(aucs, 1.0 - tail)};
}

struct DeLongComponents {
    std::vector<double> v10;  // per positive: fraction of negatives it beats
    std::vector<double> v01;  // per negative: fraction of positives beating it
    double auc = 0.0;
    double variance = 0.0;
};

// Structural components of the AUC (placement values), O(n log n).
inline DeLongComponents delong_components(const std::vector<double>& scores, const std::vector<int>& labels) {
    detail::check_binary(scores, labels);
    std::vector<double> pos, neg;
    for (std::size_t i = 0; i < scores.size(); ++i) (labels[i] == 1 ? pos : neg).push_back(scores[i]);
    if (pos.size() < 2 || neg.size() < 2) throw InputError("delong: each class needs at least 2 members");
    std::vector<double> sp = pos, sn = neg;
    std::sort(sp.begin(), sp.end());
    std::sort(sn.begin(), sn.end());
    const double m = static_cast<double>(pos.size()), n = static_cast<double>(neg.size());
    // ψ(x, y) = 1 if x > y, 1/2 if equal: count below + half count equal.
    auto placement = [](const std::vector<double>& sorted, double v) {
        const auto lo = std::lower_bound(sorted.begin(), sorted.end(), v);
        const auto hi = std::upper_bound(lo, sorted.end(), v);
        return static_cast<double>(lo - sorted.begin()) + 0.5 * static_cast<double>(hi - lo);
    };
    DeLongComponents c;
    c.v10.reserve(pos.size());
    c.v01.reserve(neg.size());
    for (double x : pos) c.v10.push_back(placement(sn, x) / n);
    for (double y : neg) c.v01.push_back((m - placement(sp, y)) / m);
    c.auc = mean_of(c.v10);
    auto var = [](const std::vector<double>& v) {
        const double mu = mean_of(v);
        double ss = 0.0;
        for (double x : v) ss += (x - mu) * (x - mu);
        return ss / static_cast<double>(v.size() - 1);
    };
    c.variance = var(c.v10) / m + var(c.v01) / n;
    return c;
}

// Normal-approximation CI with DeLong variance, clamped to [0,1].
inline AucInterval delong_auc_ci(const std::vector<double>& scores, const std::vector<int>& labels,
                                 double level = 0.95) {
    if (!(level > 0.0 && level < 1.0)) throw InputError("delong_auc_ci: level must lie in (0,1)");
    const auto c = delong_components(scores, labels);
    if (c.variance <= 0.0) return {c.auc, c.auc, c.auc};
    const double z = special::normal_quantile(0.5 + 0.5 * level);
    const double half = z * std::sqrt(c.variance);
    return {c.auc, std::max(0.0, c.auc - half), std::min(1.0, c.auc + half)};
}

// ---- correlation and agreement ----------------------------------------------

struct Correlations {
    double spearman = 0.0;
    double pearson = 0.0;
};

inline std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const double mx = mean_of(x), my = mean_of(y);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return std::nullopt;
    return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

// nullopt when either series has zero variance.
inline std::optional<Correlations> rank_correlations(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw InputError("correlation: series lengths differ");
    if (x.size() < 2) throw InputError("correlation: needs n >= 2");
    const auto p = pearson(x, y);
    if (!p) return std::nullopt;
    const auto s = pearson(average_ranks(x), average_ranks(y));
    if (!s) return std::nullopt;
    return Correlations{*s, *p};
}

// Chance-corrected agreement; nullopt when expected agreement is 1.
inline std::optional<double> cohens_kappa(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() != b.size()) throw InputError("kappa: rating lists differ in length");
    if (a.empty()) throw InputError("kappa: no ratings");
    std::map<int, double> ma, mb;
    double agree = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma[a[i]] += 1.0;
        mb[b[i]] += 1.0;
        agree += a[i] == b[i];
    }
    const double n = static_cast<double>(a.size());
    double pe = 0.0;
    for (const auto& [cat, count] : ma) {
        auto it = mb.find(cat);
        if (it != mb.end()) pe += (count / n) * (it->second / n);
    }
    const double po = agree / n;
    if (pe >= 1.0) return std::nullopt;
    return (po - pe) / (1.0 - pe);
}

}  // namespace mammoeval
