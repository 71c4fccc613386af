#pragma once
// Per-image, per-class segmentation metrics: overlap ratios, surface
// distances, boundary IoU, volume differences and TP/FP/FN/TN error maps.
//
// Per-class evaluation is one-vs-rest: for class k a pixel is "positive"
// iff its label equals k, so TN includes background. Ratios with a zero
// denominator are std::nullopt rather than 0 or 1.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mammoeval/core.hpp"

namespace mammoeval {

struct ConfusionCounts {
    std::size_t tp = 0, fp = 0, fn = 0, tn = 0;

    std::size_t total() const noexcept { return tp + fp + fn + tn; }
    ConfusionCounts& operator+=(const ConfusionCounts& o) noexcept {
        tp += o.tp; fp += o.fp; fn += o.fn; tn += o.tn;
        return *this;
    }
    friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

inline void require_same_shape(const LabelMask& pred, const LabelMask& gt) {
    if (!pred.same_shape(gt))
        throw InputError("dimension mismatch: prediction " + std::to_string(pred.width()) + "x" +
                         std::to_string(pred.height()) + " vs reference " + std::to_string(gt.width()) + "x" +
                         std::to_string(gt.height()));
}

inline ConfusionCounts confusion_counts(const LabelMask& pred, const LabelMask& gt, ClassIndex k) {
    require_same_shape(pred, gt);
    ConfusionCounts c;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const bool p = pred[i] == k;
        const bool g = gt[i] == k;
        if (p && g) ++c.tp;
        else if (p) ++c.fp;
        else if (g) ++c.fn;
        else ++c.tn;
    }
    return c;
}

struct OverlapMetrics {
    std::optional<double> iou, dice, precision, sensitivity, specificity, f1;
};

namespace detail {
inline std::optional<double> ratio(double num, double den) {
    if (den == 0.0) return std::nullopt;
    return num / den;
}
}  // namespace detail

inline OverlapMetrics overlap_metrics(const ConfusionCounts& c) {
    const double tp = static_cast<double>(c.tp), fp = static_cast<double>(c.fp);
    const double fn = static_cast<double>(c.fn), tn = static_cast<double>(c.tn);
    OverlapMetrics m;
    m.iou = detail::ratio(tp, tp + fp + fn);
    m.dice = detail::ratio(2.0 * tp, 2.0 * tp + fp + fn);
    m.precision = detail::ratio(tp, tp + fp);
    m.sensitivity = detail::ratio(tp, tp + fn);
    m.specificity = detail::ratio(tn, tn + fp);
    m.f1 = m.dice;
    return m;
}

// ---- distance machinery -----------------------------------------------------

// Foreground pixels of class k with at least one 4-neighbour outside the
// class; the image border counts as outside.
inline std::vector<bool> boundary_pixels(const LabelMask& m, ClassIndex k) {
    const std::size_t w = m.width(), h = m.height();
    std::vector<bool> b(w * h, false);
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            if (m.at(x, y) != k) continue;
            const bool edge = x == 0 || y == 0 || x + 1 == w || y + 1 == h || m.at(x - 1, y) != k ||
                              m.at(x + 1, y) != k || m.at(x, y - 1) != k || m.at(x, y + 1) != k;
            b[y * w + x] = edge;
        }
    }
    return b;
}

namespace detail {

// Lower envelope of parabolas, one dimension (Felzenszwalb & Huttenlocher).
// f holds squared distances (inf where no site); result written to d.
inline void edt_1d(const std::vector<double>& f, std::vector<double>& d, std::vector<std::size_t>& v,
                   std::vector<double>& z) {
    const std::size_t n = f.size();
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::size_t k = 0;
    std::size_t first = n;
    for (std::size_t q = 0; q < n; ++q)
        if (f[q] < inf) { first = q; break; }
    if (first == n) {
        std::fill(d.begin(), d.end(), inf);
        return;
    }
    v[0] = first;
    z[0] = -inf;
    z[1] = inf;
    for (std::size_t q = first + 1; q < n; ++q) {
        if (f[q] == inf) continue;
        const double qd = static_cast<double>(q);
        double s;
        for (;;) {
            const double vk = static_cast<double>(v[k]);
            s = ((f[q] + qd * qd) - (f[v[k]] + vk * vk)) / (2.0 * qd - 2.0 * vk);
            // z[0] is -inf, so this terminates at k == 0
            if (s <= z[k]) { --k; continue; }
            break;
        }
        ++k;
        v[k] = q;
        z[k] = s;
        z[k + 1] = inf;
    }
    k = 0;
    for (std::size_t q = 0; q < n; ++q) {
        const double qd = static_cast<double>(q);
        while (z[k + 1] < qd) ++k;
        const double diff = qd - static_cast<double>(v[k]);
        d[q] = diff * diff + f[v[k]];
    }
}

}  // namespace detail

// Exact squared Euclidean distance from every pixel to the nearest site.
// All-infinite when there are no sites.
inline std::vector<double> squared_distance_transform(const std::vector<bool>& sites, std::size_t w,
                                                      std::size_t h) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> grid(w * h);
    for (std::size_t i = 0; i < w * h; ++i) grid[i] = sites[i] ? 0.0 : inf;

    const std::size_t n = std::max(w, h);
    std::vector<double> f(n), d(n), z(n + 1);
    std::vector<std::size_t> v(n);

    f.resize(h); d.resize(h);
    for (std::size_t x = 0; x < w; ++x) {
        for (std::size_t y = 0; y < h; ++y) f[y] = grid[y * w + x];
        detail::edt_1d(f, d, v, z);
        for (std::size_t y = 0; y < h; ++y) grid[y * w + x] = d[y];
    }
    f.resize(w); d.resize(w);
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) f[x] = grid[y * w + x];
        detail::edt_1d(f, d, v, z);
        for (std::size_t x = 0; x < w; ++x) grid[y * w + x] = d[x];
    }
    return grid;
}

struct SurfaceDistances {
    double hd = 0.0;   // pixels
    double asd = 0.0;  // pixels
};

// nullopt when the class is absent from either mask.
inline std::optional<SurfaceDistances> surface_distances(const LabelMask& pred, const LabelMask& gt,
                                                         ClassIndex k) {
    require_same_shape(pred, gt);
    const std::size_t w = pred.width(), h = pred.height();
    const auto bp = boundary_pixels(pred, k);
    const auto bg = boundary_pixels(gt, k);
    const auto np = static_cast<std::size_t>(std::count(bp.begin(), bp.end(), true));
    const auto ng = static_cast<std::size_t>(std::count(bg.begin(), bg.end(), true));
    if (np == 0 || ng == 0) return std::nullopt;

    const auto dt_to_gt = squared_distance_transform(bg, w, h);
    const auto dt_to_pred = squared_distance_transform(bp, w, h);

    double max_sq = 0.0;
    double sum = 0.0;
    for (std::size_t i = 0; i < w * h; ++i) {
        if (bp[i]) {
            max_sq = std::max(max_sq, dt_to_gt[i]);
            sum += std::sqrt(dt_to_gt[i]);
        }
        if (bg[i]) {
            max_sq = std::max(max_sq, dt_to_pred[i]);
            sum += std::sqrt(dt_to_pred[i]);
        }
    }
    return SurfaceDistances{std::sqrt(max_sq), sum / static_cast<double>(np + ng)};
}

// Class pixels within Euclidean distance d of the class boundary.
inline std::vector<bool> boundary_band(const LabelMask& m, ClassIndex k, double d) {
    const std::size_t w = m.width(), h = m.height();
    const auto dt = squared_distance_transform(boundary_pixels(m, k), w, h);
    std::vector<bool> band(w * h, false);
    const double d2 = d * d;
    for (std::size_t i = 0; i < w * h; ++i) band[i] = m[i] == k && dt[i] <= d2;
    return band;
}

inline constexpr double kDefaultBoundaryBand = 2.0;

// nullopt when the class is absent from both masks.
inline std::optional<double> boundary_iou(const LabelMask& pred, const LabelMask& gt, ClassIndex k,
                                          double d = kDefaultBoundaryBand) {
    require_same_shape(pred, gt);
    if (!(d >= 1.0)) throw InputError("boundary_iou: band width must be >= 1 pixel");
    const auto bp = boundary_band(pred, k, d);
    const auto bg = boundary_band(gt, k, d);
    std::size_t inter = 0, uni = 0;
    for (std::size_t i = 0; i < bp.size(); ++i) {
        inter += bp[i] && bg[i];
        uni += bp[i] || bg[i];
    }
    if (uni == 0) return std::nullopt;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

struct VolumeDifference {
    double rvd = 0.0;
    double ravd = 0.0;
};

// nullopt when the reference volume is zero.
inline std::optional<VolumeDifference> volume_difference(const LabelMask& pred, const LabelMask& gt,
                                                         ClassIndex k) {
    require_same_shape(pred, gt);
    const double vp = static_cast<double>(pred.count(k));
    const double vg = static_cast<double>(gt.count(k));
    if (vg == 0.0) return std::nullopt;
    const double rvd = (vp - vg) / vg;
    return VolumeDifference{rvd, std::abs(vp - vg) / vg};
}

// ---- error maps -------------------------------------------------------------

enum class ErrorCategory : std::uint8_t { TN = 0, TP = 1, FP = 2, FN = 3 };

class ErrorMap {
public:
    ErrorMap(std::size_t w, std::size_t h, std::vector<ErrorCategory> cells)
        : width_(w), height_(h), cells_(std::move(cells)) {}

    std::size_t width() const noexcept { return width_; }
    std::size_t height() const noexcept { return height_; }
    ErrorCategory at(std::size_t x, std::size_t y) const { return cells_[y * width_ + x]; }
    const std::vector<ErrorCategory>& cells() const noexcept { return cells_; }

    ConfusionCounts counts() const {
        ConfusionCounts c;
        for (auto e : cells_) {
            switch (e) {
                case ErrorCategory::TP: ++c.tp; break;
                case ErrorCategory::FP: ++c.fp; break;
                case ErrorCategory::FN: ++c.fn; break;
                case ErrorCategory::TN: ++c.tn; break;
            }
        }
        return c;
    }

    // TP green, FP red, FN blue, TN black; interleaved RGB bytes.
    std::vector<std::uint8_t> to_rgb() const {
        std::vector<std::uint8_t> rgb(cells_.size() * 3, 0);
        for (std::size_t i = 0; i < cells_.size(); ++i) {
            switch (cells_[i]) {
                case ErrorCategory::TP: rgb[3 * i + 1] = 255; break;
                case ErrorCategory::FP: rgb[3 * i + 0] = 255; break;
                case ErrorCategory::FN: rgb[3 * i + 2] = 255; break;
                case ErrorCategory::TN: break;
            }
        }
        return rgb;
    }

private:
    std::size_t width_, height_;
    std::vector<ErrorCategory> cells_;
};

inline ErrorMap error_map(const LabelMask& pred, const LabelMask& gt, ClassIndex k) {
    require_same_shape(pred, gt);
    std::vector<ErrorCategory> cells(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const bool p = pred[i] == k, g = gt[i] == k;
        cells[i] = p && g ? ErrorCategory::TP : p ? ErrorCategory::FP : g ? ErrorCategory::FN : ErrorCategory::TN;
    }
    return ErrorMap(pred.width(), pred.height(), std::move(cells));
}

// ---- per-image evaluation and aggregation -----------------------------------

// Every metric for one image and one class, as MetricSamples.
inline std::vector<MetricSample> evaluate_image(const std::string& image_id, const LabelMask& pred,
                                                const LabelMask& gt, ClassIndex k,
                                                double band = kDefaultBoundaryBand) {
    const auto om = overlap_metrics(confusion_counts(pred, gt, k));
    const auto sd = surface_distances(pred, gt, k);
    const auto biou = boundary_iou(pred, gt, k, band);
    const auto vd = volume_difference(pred, gt, k);
    auto opt = [](const auto& o, auto member) -> std::optional<double> {
        if (!o) return std::nullopt;
        return (*o).*member;
    };
    const int ci = k;
    return {
        {image_id, ci, MetricName::IoU, om.iou},
        {image_id, ci, MetricName::Dice, om.dice},
        {image_id, ci, MetricName::Precision, om.precision},
        {image_id, ci, MetricName::Sensitivity, om.sensitivity},
        {image_id, ci, MetricName::Specificity, om.specificity},
        {image_id, ci, MetricName::F1, om.f1},
        {image_id, ci, MetricName::Hausdorff, opt(sd, &SurfaceDistances::hd)},
        {image_id, ci, MetricName::AverageSurfaceDistance, opt(sd, &SurfaceDistances::asd)},
        {image_id, ci, MetricName::BoundaryIoU, biou},
        {image_id, ci, MetricName::RVD, opt(vd, &VolumeDifference::rvd)},
        {image_id, ci, MetricName::RAVD, opt(vd, &VolumeDifference::ravd)},
    };
}

enum class EmptyMaskPolicy { Skip, CountAsZero };

struct ClassAggregate {
    double mean = 0.0;
    std::optional<double> sd;  // sample sd; undefined for n < 2
    std::size_t n = 0;
};

// Mean and sample sd per class. Classes with no usable samples are absent.
// Samples are reduced in (class, image_id) order so the result does not
// depend on the input order.
inline std::map<int, ClassAggregate> aggregate_per_class(std::vector<MetricSample> samples,
                                                         EmptyMaskPolicy policy = EmptyMaskPolicy::Skip) {
    if (!samples.empty()) {
        const auto name = samples.front().metric;
        for (const auto& s : samples)
            if (s.metric != name) throw InputError("aggregate_per_class: samples mix metrics");
    }
    std::stable_sort(samples.begin(), samples.end(), [](const MetricSample& a, const MetricSample& b) {
        return std::tie(a.class_index, a.image_id) < std::tie(b.class_index, b.image_id);
    });
    std::map<int, std::vector<double>> values;
    for (const auto& s : samples) {
        if (s.value) values[s.class_index].push_back(*s.value);
        else if (policy == EmptyMaskPolicy::CountAsZero) values[s.class_index].push_back(0.0);
    }
    std::map<int, ClassAggregate> out;
    for (const auto& [k, v] : values) {
        if (v.empty()) continue;
        ClassAggregate a;
        a.n = v.size();
        double sum = 0.0;
        for (double x : v) sum += x;
        a.mean = sum / static_cast<double>(a.n);
        if (a.n >= 2) {
            double ss = 0.0;
            for (double x : v) ss += (x - a.mean) * (x - a.mean);
            a.sd = std::sqrt(ss / static_cast<double>(a.n - 1));
        }
        out.emplace(k, a);
    }
    return out;
}

// Metrics from confusion counts pooled over all images (the global-pixel
// alternative to averaging per-image values).
inline OverlapMetrics pooled_overlap_metrics(const std::vector<ConfusionCounts>& per_image) {
    ConfusionCounts sum;
    for (const auto& c : per_image) sum += c;
    return overlap_metrics(sum);
}

}  // namespace mammoeval
