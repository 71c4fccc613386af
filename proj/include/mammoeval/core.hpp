#pragma once
// Shared domain types: label masks, the class taxonomy, clinical records,
// metric samples and the dense tensor used by the fusion kernels.

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mammoeval {

// Input that violates a documented precondition or file contract.
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A computation whose inputs are well-formed but carry no information
// (all differences zero, constant series, ...).
class DegenerateError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using ClassIndex = std::uint8_t;

struct Rgb {
    std::uint8_t r = 0, g = 0, b = 0;
    friend bool operator==(const Rgb&, const Rgb&) = default;
};

struct ClassEntry {
    ClassIndex index = 0;
    std::string name;
    Rgb color;
};

// Index 0 is always background. Indices are dense 0..omega-1.
class ClassMap {
public:
    ClassMap() = default;

    explicit ClassMap(std::vector<ClassEntry> entries) : entries_(std::move(entries)) {
        if (entries_.empty()) throw InputError("class map: no classes declared");
        if (entries_.size() > 256) throw InputError("class map: more than 256 classes");
        std::sort(entries_.begin(), entries_.end(),
                  [](const ClassEntry& a, const ClassEntry& b) { return a.index < b.index; });
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            if (entries_[i].index != i)
                throw InputError("class map: indices must be 0..omega-1 without gaps (missing " +
                                 std::to_string(i) + ")");
            auto [it, inserted] = by_name_.emplace(entries_[i].name, entries_[i].index);
            if (!inserted) throw InputError("class map: duplicate class name '" + entries_[i].name + "'");
        }
    }

    // background, tissue, axilla findings, mass, calcification
    static ClassMap mammography() {
        return ClassMap({{0, "background", {0, 0, 0}},
                         {1, "tissue", {240, 230, 200}},
                         {2, "axilla findings", {255, 170, 200}},
                         {3, "mass", {0, 200, 0}},
                         {4, "calcification", {40, 90, 255}}});
    }

    std::size_t omega() const noexcept { return entries_.size(); }
    const std::vector<ClassEntry>& entries() const noexcept { return entries_; }

    const std::string& name(ClassIndex index) const {
        if (index >= entries_.size()) throw InputError("class map: unknown class index " + std::to_string(index));
        return entries_[index].name;
    }
    Rgb color(ClassIndex index) const {
        if (index >= entries_.size()) throw InputError("class map: unknown class index " + std::to_string(index));
        return entries_[index].color;
    }
    std::optional<ClassIndex> index(const std::string& name) const {
        auto it = by_name_.find(name);
        if (it == by_name_.end()) return std::nullopt;
        return it->second;
    }
    std::optional<ClassIndex> index_of_color(Rgb c) const {
        for (const auto& e : entries_)
            if (e.color == c) return e.index;
        return std::nullopt;
    }

private:
    std::vector<ClassEntry> entries_;
    std::map<std::string, ClassIndex> by_name_;
};

// Row-major grid of class indices. Construction checks only the size
// relation so that validate_mask can report every violation as data.
class LabelMask {
public:
    LabelMask() = default;
    LabelMask(std::size_t width, std::size_t height, ClassIndex fill = 0)
        : width_(width), height_(height), labels_(width * height, fill) {}
    LabelMask(std::size_t width, std::size_t height, std::vector<ClassIndex> labels)
        : width_(width), height_(height), labels_(std::move(labels)) {}

    std::size_t width() const noexcept { return width_; }
    std::size_t height() const noexcept { return height_; }
    std::size_t size() const noexcept { return labels_.size(); }
    std::span<const ClassIndex> labels() const noexcept { return labels_; }

    ClassIndex at(std::size_t x, std::size_t y) const { return labels_[y * width_ + x]; }
    ClassIndex& at(std::size_t x, std::size_t y) { return labels_[y * width_ + x]; }
    ClassIndex operator[](std::size_t i) const { return labels_[i]; }
    ClassIndex& operator[](std::size_t i) { return labels_[i]; }

    bool same_shape(const LabelMask& o) const noexcept { return width_ == o.width_ && height_ == o.height_; }

    LabelMask transposed() const {
        LabelMask t(height_, width_);
        for (std::size_t y = 0; y < height_; ++y)
            for (std::size_t x = 0; x < width_; ++x) t.at(y, x) = at(x, y);
        return t;
    }

    std::size_t count(ClassIndex k) const {
        return static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), k));
    }

    friend bool operator==(const LabelMask&, const LabelMask&) = default;

private:
    std::size_t width_ = 0;
    std::size_t height_ = 0;
    std::vector<ClassIndex> labels_;
};

struct MaskViolation {
    enum class Kind { SizeMismatch, LabelOutOfRange };
    Kind kind;
    std::size_t cell = 0;   // valid for LabelOutOfRange
    ClassIndex label = 0;   // valid for LabelOutOfRange
    std::string message;
};

// Empty result means the mask is valid for the class map.
inline std::vector<MaskViolation> validate_mask(const LabelMask& mask, const ClassMap& cmap) {
    std::vector<MaskViolation> out;
    if (mask.width() * mask.height() != mask.size()) {
        out.push_back({MaskViolation::Kind::SizeMismatch, 0, 0,
                       "size mismatch: " + std::to_string(mask.width()) + "x" + std::to_string(mask.height()) +
                           " declared but " + std::to_string(mask.size()) + " labels present"});
    }
    const auto labels = mask.labels();
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] >= cmap.omega()) {
            out.push_back({MaskViolation::Kind::LabelOutOfRange, i, labels[i],
                           "label " + std::to_string(labels[i]) + " at cell " + std::to_string(i) +
                               " outside [0," + std::to_string(cmap.omega()) + ")"});
        }
    }
    return out;
}

inline void require_valid(const LabelMask& mask, const ClassMap& cmap, const std::string& what) {
    auto v = validate_mask(mask, cmap);
    if (!v.empty()) throw InputError(what + ": " + v.front().message);
}

// ---- clinical features ------------------------------------------------------

struct FeatureDef {
    std::string key;                     // CSV column name
    std::string display;                 // report label
    std::vector<std::string> categories; // index -> category name
};

// Ordered set of categorical clinical features.
class TabularSchema {
public:
    TabularSchema() = default;
    explicit TabularSchema(std::vector<FeatureDef> features) : features_(std::move(features)) {
        for (std::size_t i = 0; i < features_.size(); ++i) {
            if (features_[i].categories.empty())
                throw InputError("schema: feature '" + features_[i].key + "' has no categories");
            if (!index_.emplace(features_[i].key, i).second)
                throw InputError("schema: duplicate feature '" + features_[i].key + "'");
        }
    }

    // The ten mammography report features. "None" marks an absent finding.
    static TabularSchema mammography() {
        return TabularSchema({
            {"mass_presence", "Mass Presence", {"No", "Yes"}},
            {"mass_definition", "Mass Definition", {"None", "Well Defined", "Ill-Defined", "Spiculated"}},
            {"mass_density", "Mass Density", {"None", "Low Dense", "Isodense", "High Dense"}},
            {"mass_shape", "Mass Shape", {"None", "Oval", "Round", "Irregular"}},
            {"mass_calcification", "Mass Calcification", {"No", "Yes"}},
            {"axilla_findings", "Axilla Findings", {"No", "Yes"}},
            {"calcification_presence", "Calcification Presence", {"No", "Yes"}},
            {"calcification_distribution", "Calcification Distribution", {"None", "Discrete", "Cluster", "Line"}},
            {"acr_breast_density", "ACR Breast Density",
             {"Fatty/Normal", "Fibroglandular/Mixed", "Heterogeneously Dense", "Highly Dense"}},
            {"birads", "BI-RADS Category", {"1", "2", "3", "4", "5", "6"}},
        });
    }

    const std::vector<FeatureDef>& features() const noexcept { return features_; }
    std::optional<std::size_t> find(const std::string& key) const {
        auto it = index_.find(key);
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }
    const FeatureDef& at(const std::string& key) const {
        auto i = find(key);
        if (!i) throw InputError("schema: unknown feature '" + key + "'");
        return features_[*i];
    }

private:
    std::vector<FeatureDef> features_;
    std::map<std::string, std::size_t> index_;
};

struct TabularRecord {
    std::string image_id;
    std::map<std::string, int> features; // feature key -> category index
};

inline void validate_record(const TabularRecord& rec, const TabularSchema& schema) {
    for (const auto& [key, value] : rec.features) {
        const auto& def = schema.at(key);
        if (value < 0 || static_cast<std::size_t>(value) >= def.categories.size())
            throw InputError("record '" + rec.image_id + "': category index " + std::to_string(value) +
                             " outside cardinality " + std::to_string(def.categories.size()) + " of '" + key +
                             "'");
    }
}

// ---- metric samples ---------------------------------------------------------

enum class MetricName {
    IoU, Dice, Precision, Sensitivity, Specificity, F1,
    Hausdorff, AverageSurfaceDistance, BoundaryIoU, RVD, RAVD
};

inline constexpr std::array<MetricName, 11> kAllMetrics = {
    MetricName::IoU, MetricName::Dice, MetricName::Precision, MetricName::Sensitivity,
    MetricName::Specificity, MetricName::F1, MetricName::Hausdorff, MetricName::AverageSurfaceDistance,
    MetricName::BoundaryIoU, MetricName::RVD, MetricName::RAVD};

inline const char* to_string(MetricName m) {
    switch (m) {
        case MetricName::IoU: return "iou";
        case MetricName::Dice: return "dice";
        case MetricName::Precision: return "precision";
        case MetricName::Sensitivity: return "sensitivity";
        case MetricName::Specificity: return "specificity";
        case MetricName::F1: return "f1";
        case MetricName::Hausdorff: return "hd";
        case MetricName::AverageSurfaceDistance: return "asd";
        case MetricName::BoundaryIoU: return "boundary_iou";
        case MetricName::RVD: return "rvd";
        case MetricName::RAVD: return "ravd";
    }
    return "?";
}

// value is nullopt when the metric is undefined for this image/class.
struct MetricSample {
    std::string image_id;
    int class_index = 0;
    MetricName metric = MetricName::IoU;
    std::optional<double> value;
};

// ---- tensors ----------------------------------------------------------------

// Dense row-major N-D array of doubles. Image-like tensors are H x W x C.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0)
        : shape_(std::move(shape)), data_(product(shape_), fill) {}
    Tensor(std::vector<std::size_t> shape, std::vector<double> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        if (product(shape_) != data_.size())
            throw InputError("tensor: shape product " + std::to_string(product(shape_)) +
                             " does not match data length " + std::to_string(data_.size()));
    }

    static Tensor vector(std::vector<double> v) {
        const auto n = v.size();
        return Tensor({n}, std::move(v));
    }

    const std::vector<std::size_t>& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t size() const noexcept { return data_.size(); }
    std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
    std::span<const double> data() const noexcept { return data_; }
    std::span<double> data() noexcept { return data_; }

    double operator[](std::size_t i) const { return data_[i]; }
    double& operator[](std::size_t i) { return data_[i]; }

    // Extent of the last axis and the number of leading positions.
    std::size_t channels() const { return shape_.empty() ? 1 : shape_.back(); }
    std::size_t positions() const { return channels() == 0 ? 0 : data_.size() / channels(); }

    friend bool operator==(const Tensor&, const Tensor&) = default;

    static std::size_t product(const std::vector<std::size_t>& s) {
        return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>());
    }

private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

inline std::string shape_string(const std::vector<std::size_t>& s) {
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (i) out += 'x';
        out += std::to_string(s[i]);
    }
    return out.empty() ? "scalar" : out;
}

}  // namespace mammoeval
