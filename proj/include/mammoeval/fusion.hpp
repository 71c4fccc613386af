#pragma once
// Reference kernels for the multimodal pipeline at inference time:
// preprocessing, pooling, late fusion, attention gating, output heads and
// the segmentation/classification losses (with analytic input gradients).
//
// Image-like tensors are channel-last (H x W x C). Weights are supplied by
// the caller; nothing here trains.

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mammoeval/core.hpp"
#include "mammoeval/parallel.hpp"

namespace mammoeval::fusion {

inline constexpr double kProbabilityClip = 1e-7;
inline constexpr double kDiceEpsilon = 1e-5;
inline constexpr double kFocalAlpha = 0.5;
inline constexpr double kFocalGamma = 2.0;
inline constexpr double kLambdaSegmentation = 0.7;
inline constexpr double kLambdaClassification = 0.3;
inline constexpr double kLeakySlope = 0.1;

namespace detail {
inline void require(bool ok, const std::string& msg) {
    if (!ok) throw InputError(msg);
}
inline void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
    require(a.shape() == b.shape(), std::string(what) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                                        shape_string(b.shape()));
}
inline double clip(double p) { return std::clamp(p, kProbabilityClip, 1.0 - kProbabilityClip); }
inline double clip_slope(double p) { return p > kProbabilityClip && p < 1.0 - kProbabilityClip ? 1.0 : 0.0; }
inline double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}
}  // namespace detail

// ---- preprocessing ----------------------------------------------------------

// Per-channel (x - mean) / population std; a constant channel maps to zeros.
// Rank <= 2 inputs are treated as a single channel.
inline Tensor zscore_normalize(const Tensor& image) {
    detail::require(image.size() > 0, "zscore_normalize: empty tensor");
    const std::size_t c = image.rank() >= 3 ? image.channels() : 1;
    const std::size_t positions = image.size() / c;
    Tensor out(image.shape());
    for (std::size_t ch = 0; ch < c; ++ch) {
        double sum = 0.0;
        for (std::size_t p = 0; p < positions; ++p) sum += image[p * c + ch];
        const double mu = sum / static_cast<double>(positions);
        double ss = 0.0;
        for (std::size_t p = 0; p < positions; ++p) ss += (image[p * c + ch] - mu) * (image[p * c + ch] - mu);
        const double sd = std::sqrt(ss / static_cast<double>(positions));
        for (std::size_t p = 0; p < positions; ++p) out[p * c + ch] = sd > 0.0 ? (image[p * c + ch] - mu) / sd : 0.0;
    }
    return out;
}

// H x W x omega with a single 1 per pixel at the pixel's label.
inline Tensor one_hot_encode(const LabelMask& mask, std::size_t omega) {
    Tensor out({mask.height(), mask.width(), omega});
    for (std::size_t i = 0; i < mask.size(); ++i) {
        if (mask[i] >= omega)
            throw InputError("one_hot_encode: label " + std::to_string(mask[i]) + " at cell " + std::to_string(i) +
                             " >= omega " + std::to_string(omega));
        out[i * omega + mask[i]] = 1.0;
    }
    return out;
}

// ---- pooling and fusion -----------------------------------------------------

inline Tensor global_avg_pool(const Tensor& features) {
    detail::require(features.rank() == 3, "global_avg_pool: expected H x W x C, got " + shape_string(features.shape()));
    detail::require(features.dim(0) >= 1 && features.dim(1) >= 1, "global_avg_pool: empty spatial extent");
    const std::size_t c = features.dim(2), positions = features.dim(0) * features.dim(1);
    Tensor out({c});
    for (std::size_t p = 0; p < positions; ++p)
        for (std::size_t ch = 0; ch < c; ++ch) out[ch] += features[p * c + ch];
    for (std::size_t ch = 0; ch < c; ++ch) out[ch] /= static_cast<double>(positions);
    return out;
}

// (v - mean) / population std; zeros for a constant vector.
inline Tensor normalize_features(const Tensor& v) {
    detail::require(v.size() >= 1, "normalize_features: empty vector");
    const double n = static_cast<double>(v.size());
    double sum = 0.0;
    for (double x : v.data()) sum += x;
    const double mu = sum / n;
    double ss = 0.0;
    for (double x : v.data()) ss += (x - mu) * (x - mu);
    const double sd = std::sqrt(ss / n);
    Tensor out(v.shape());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = sd > 0.0 ? (v[i] - mu) / sd : 0.0;
    return out;
}

// Tabular features first, then imaging features.
inline Tensor fuse_concat(const Tensor& tabular, const Tensor& features) {
    detail::require(tabular.rank() == 1 && features.rank() == 1,
                    "fuse_concat: both inputs must be 1-D (got " + shape_string(tabular.shape()) + ", " +
                        shape_string(features.shape()) + ")");
    std::vector<double> out(tabular.data().begin(), tabular.data().end());
    out.insert(out.end(), features.data().begin(), features.data().end());
    return Tensor::vector(std::move(out));
}

// ---- dense layers -----------------------------------------------------------

enum class Activation { Relu, LeakyRelu, Linear, Sigmoid, Softmax };

inline const char* to_string(Activation a) {
    switch (a) {
        case Activation::Relu: return "relu";
        case Activation::LeakyRelu: return "leaky_relu";
        case Activation::Linear: return "linear";
        case Activation::Sigmoid: return "sigmoid";
        case Activation::Softmax: return "softmax";
    }
    return "?";
}

inline Activation parse_activation(const std::string& s) {
    if (s == "relu") return Activation::Relu;
    if (s == "leaky_relu") return Activation::LeakyRelu;
    if (s == "linear") return Activation::Linear;
    if (s == "sigmoid") return Activation::Sigmoid;
    if (s == "softmax") return Activation::Softmax;
    throw InputError("unknown activation '" + s + "'");
}

// Output head for a clinical feature with `omega` outcomes: one linear unit
// for regression, one sigmoid unit for binary, softmax over omega otherwise.
inline Activation head_activation(std::size_t omega) {
    if (omega == 1) return Activation::Linear;
    if (omega == 2) return Activation::Sigmoid;
    return Activation::Softmax;
}
inline std::size_t head_units(std::size_t omega) { return omega <= 2 ? 1 : omega; }

struct DenseLayer {
    Tensor weights;  // in x out
    Tensor bias;     // out
    Activation activation = Activation::Linear;

    std::size_t inputs() const { return weights.dim(0); }
    std::size_t outputs() const { return weights.dim(1); }
};

class MlpSpec {
public:
    explicit MlpSpec(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
        detail::require(!layers_.empty(), "mlp: no layers");
        for (std::size_t i = 0; i < layers_.size(); ++i) {
            const auto& l = layers_[i];
            const std::string where = "mlp layer " + std::to_string(i);
            detail::require(l.weights.rank() == 2, where + ": weights must be 2-D");
            detail::require(l.bias.rank() == 1 && l.bias.dim(0) == l.outputs(), where + ": bias length mismatch");
            if (i > 0)
                detail::require(layers_[i - 1].outputs() == l.inputs(),
                                where + ": expects " + std::to_string(l.inputs()) + " inputs but previous layer emits " +
                                    std::to_string(layers_[i - 1].outputs()));
            const bool squashing = l.activation == Activation::Sigmoid || l.activation == Activation::Softmax;
            detail::require(!squashing || i + 1 == layers_.size(), where + ": sigmoid/softmax only on the final layer");
        }
    }
    const std::vector<DenseLayer>& layers() const noexcept { return layers_; }

private:
    std::vector<DenseLayer> layers_;
};

namespace detail {

inline std::vector<double> affine(const DenseLayer& l, const std::vector<double>& x) {
    std::vector<double> z(l.bias.data().begin(), l.bias.data().end());
    const std::size_t out = l.outputs();
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t j = 0; j < out; ++j) z[j] += x[i] * l.weights[i * out + j];
    return z;
}

inline void softmax_inplace(std::span<double> z) {
    const double m = *std::max_element(z.begin(), z.end());
    double s = 0.0;
    for (double& v : z) {
        v = std::exp(v - m);
        s += v;
    }
    for (double& v : z) v /= s;
}

inline std::vector<double> activate(Activation a, std::vector<double> z) {
    switch (a) {
        case Activation::Relu:
            for (double& v : z) v = std::max(0.0, v);
            break;
        case Activation::LeakyRelu:
            for (double& v : z) v = v >= 0 ? v : kLeakySlope * v;
            break;
        case Activation::Linear: break;
        case Activation::Sigmoid:
            for (double& v : z) v = sigmoid(v);
            break;
        case Activation::Softmax: softmax_inplace(z); break;
    }
    return z;
}

}  // namespace detail

// Inference-mode forward pass (dropout inactive).
inline Tensor mlp_forward(const MlpSpec& spec, const Tensor& input) {
    const auto& first = spec.layers().front();
    detail::require(input.size() == first.inputs(), "mlp_forward: input length " + std::to_string(input.size()) +
                                                        " but first layer expects " + std::to_string(first.inputs()));
    std::vector<double> x(input.data().begin(), input.data().end());
    for (const auto& l : spec.layers()) x = detail::activate(l.activation, detail::affine(l, x));
    return Tensor::vector(std::move(x));
}

// d output / d input, shape out x in.
inline Tensor mlp_input_jacobian(const MlpSpec& spec, const Tensor& input) {
    const auto& first = spec.layers().front();
    detail::require(input.size() == first.inputs(), "mlp_input_jacobian: input length mismatch");
    const std::size_t n_in = input.size();
    // jac[r][c]: d activation_r / d input_c, starting at the identity.
    std::vector<std::vector<double>> jac(n_in, std::vector<double>(n_in, 0.0));
    for (std::size_t i = 0; i < n_in; ++i) jac[i][i] = 1.0;
    std::vector<double> x(input.data().begin(), input.data().end());
    for (const auto& l : spec.layers()) {
        const std::size_t out = l.outputs();
        const auto z = detail::affine(l, x);
        const auto y = detail::activate(l.activation, z);
        std::vector<std::vector<double>> dz(out, std::vector<double>(n_in, 0.0));
        for (std::size_t j = 0; j < out; ++j)
            for (std::size_t i = 0; i < x.size(); ++i) {
                const double w = l.weights[i * out + j];
                if (w == 0.0) continue;
                for (std::size_t c = 0; c < n_in; ++c) dz[j][c] += w * jac[i][c];
            }
        std::vector<std::vector<double>> dy(out, std::vector<double>(n_in, 0.0));
        for (std::size_t j = 0; j < out; ++j) {
            for (std::size_t c = 0; c < n_in; ++c) {
                switch (l.activation) {
                    case Activation::Relu: dy[j][c] = z[j] > 0 ? dz[j][c] : 0.0; break;
                    case Activation::LeakyRelu: dy[j][c] = z[j] >= 0 ? dz[j][c] : kLeakySlope * dz[j][c]; break;
                    case Activation::Linear: dy[j][c] = dz[j][c]; break;
                    case Activation::Sigmoid: dy[j][c] = y[j] * (1.0 - y[j]) * dz[j][c]; break;
                    case Activation::Softmax: {
                        double s = 0.0;
                        for (std::size_t k = 0; k < out; ++k) s += y[k] * dz[k][c];
                        dy[j][c] = y[j] * (dz[j][c] - s);
                        break;
                    }
                }
            }
        }
        jac = std::move(dy);
        x = y;
    }
    const std::size_t n_out = jac.size();
    Tensor out({n_out, n_in});
    for (std::size_t r = 0; r < n_out; ++r)
        for (std::size_t c = 0; c < n_in; ++c) out[r * n_in + c] = jac[r][c];
    return out;
}

// ---- attention and output head ----------------------------------------------

// 1x1 convolutions: theta (Cx -> Ci), phi (Cg -> Ci), psi (Ci -> 1).
struct AttentionGateSpec {
    Tensor theta_w, theta_b;
    Tensor phi_w, phi_b;
    Tensor psi_w, psi_b;

    void validate(std::size_t cx, std::size_t cg) const {
        using detail::require;
        require(theta_w.rank() == 2 && phi_w.rank() == 2 && psi_w.rank() == 2, "attention: weights must be 2-D");
        require(theta_w.dim(0) == cx, "attention: theta expects " + std::to_string(theta_w.dim(0)) +
                                          " channels, x has " + std::to_string(cx));
        require(phi_w.dim(0) == cg, "attention: phi expects " + std::to_string(phi_w.dim(0)) + " channels, g has " +
                                        std::to_string(cg));
        const std::size_t ci = theta_w.dim(1);
        require(phi_w.dim(1) == ci, "attention: theta and phi intermediate channels differ");
        require(psi_w.dim(0) == ci && psi_w.dim(1) == 1, "attention: psi must map intermediate channels to 1");
        require(theta_b.size() == ci && phi_b.size() == ci && psi_b.size() == 1, "attention: bias length mismatch");
    }
};

// Sigmoid attention coefficients, H x W x 1.
inline Tensor attention_coefficients(const Tensor& x, const Tensor& g, const AttentionGateSpec& spec) {
    detail::require(x.rank() == 3 && g.rank() == 3, "attention: x and g must be H x W x C");
    detail::require(x.dim(0) == g.dim(0) && x.dim(1) == g.dim(1), "attention: x and g are not spatially aligned");
    const std::size_t cx = x.dim(2), cg = g.dim(2);
    spec.validate(cx, cg);
    const std::size_t ci = spec.theta_w.dim(1), positions = x.dim(0) * x.dim(1);
    Tensor alpha({x.dim(0), x.dim(1), 1});
    std::vector<double> f(ci);
    for (std::size_t p = 0; p < positions; ++p) {
        for (std::size_t j = 0; j < ci; ++j) {
            double v = spec.theta_b[j] + spec.phi_b[j];
            for (std::size_t c = 0; c < cx; ++c) v += x[p * cx + c] * spec.theta_w[c * ci + j];
            for (std::size_t c = 0; c < cg; ++c) v += g[p * cg + c] * spec.phi_w[c * ci + j];
            f[j] = std::max(0.0, v);
        }
        double psi = spec.psi_b[0];
        for (std::size_t j = 0; j < ci; ++j) psi += f[j] * spec.psi_w[j];
        alpha[p] = detail::sigmoid(psi);
    }
    return alpha;
}

// x gated by its per-location attention coefficient, broadcast over channels.
inline Tensor attention_gate(const Tensor& x, const Tensor& g, const AttentionGateSpec& spec) {
    const auto alpha = attention_coefficients(x, g, spec);
    const std::size_t cx = x.dim(2);
    Tensor out(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * alpha[i / cx];
    return out;
}

// Per-pixel affine map C -> omega followed by softmax.
inline Tensor softmax_head(const Tensor& features, const Tensor& weights, const Tensor& bias) {
    detail::require(features.rank() >= 1, "softmax_head: empty feature tensor");
    detail::require(weights.rank() == 2 && weights.dim(0) == features.channels(),
                    "softmax_head: weights " + shape_string(weights.shape()) + " do not match " +
                        std::to_string(features.channels()) + " feature channels");
    const std::size_t c = features.channels(), omega = weights.dim(1);
    detail::require(bias.size() == omega, "softmax_head: bias length mismatch");
    auto shape = features.shape();
    shape.back() = omega;
    Tensor out(shape);
    const std::size_t positions = features.positions();
    for (std::size_t p = 0; p < positions; ++p) {
        auto z = out.data().subspan(p * omega, omega);
        for (std::size_t k = 0; k < omega; ++k) {
            double v = bias[k];
            for (std::size_t ch = 0; ch < c; ++ch) v += features[p * c + ch] * weights[ch * omega + k];
            z[k] = v;
        }
        detail::softmax_inplace(z);
    }
    return out;
}

// ---- losses -----------------------------------------------------------------

namespace detail {
// Channels entering the Dice average: foreground (1..C-1), or the only one.
inline std::pair<std::size_t, std::size_t> dice_channels(const Tensor& t) {
    const std::size_t c = t.channels();
    return c == 1 ? std::pair<std::size_t, std::size_t>{0, 1} : std::pair<std::size_t, std::size_t>{1, c};
}
}  // namespace detail

// Soft Dice loss averaged over foreground channels (last axis).
inline double dice_loss(const Tensor& pred, const Tensor& gt, double epsilon = kDiceEpsilon) {
    detail::require_same_shape(pred, gt, "dice_loss");
    const std::size_t c = pred.channels(), positions = pred.positions();
    const auto [lo, hi] = detail::dice_channels(pred);
    double total = 0.0;
    for (std::size_t k = lo; k < hi; ++k) {
        double inter = 0, sp = 0, sg = 0;
        for (std::size_t p = 0; p < positions; ++p) {
            inter += pred[p * c + k] * gt[p * c + k];
            sp += pred[p * c + k];
            sg += gt[p * c + k];
        }
        total += 1.0 - (2.0 * inter + epsilon) / (sp + sg + epsilon);
    }
    return total / static_cast<double>(hi - lo);
}

inline Tensor dice_loss_grad(const Tensor& pred, const Tensor& gt, double epsilon = kDiceEpsilon) {
    detail::require_same_shape(pred, gt, "dice_loss_grad");
    const std::size_t c = pred.channels(), positions = pred.positions();
    const auto [lo, hi] = detail::dice_channels(pred);
    const double scale = 1.0 / static_cast<double>(hi - lo);
    Tensor grad(pred.shape());
    for (std::size_t k = lo; k < hi; ++k) {
        double inter = 0, sp = 0, sg = 0;
        for (std::size_t p = 0; p < positions; ++p) {
            inter += pred[p * c + k] * gt[p * c + k];
            sp += pred[p * c + k];
            sg += gt[p * c + k];
        }
        const double num = 2.0 * inter + epsilon, den = sp + sg + epsilon;
        for (std::size_t p = 0; p < positions; ++p)
            grad[p * c + k] = -scale * (2.0 * gt[p * c + k] * den - num) / (den * den);
    }
    return grad;
}

// Mean over positions of -alpha (1 - p_t)^gamma ln p_t.
inline double focal_loss(const Tensor& pred, const Tensor& gt, double alpha = kFocalAlpha, double gamma = kFocalGamma) {
    detail::require_same_shape(pred, gt, "focal_loss");
    const std::size_t c = pred.channels(), positions = pred.positions();
    double total = 0.0;
    for (std::size_t p = 0; p < positions; ++p) {
        double pt = 0.0;
        for (std::size_t k = 0; k < c; ++k) pt += gt[p * c + k] * detail::clip(pred[p * c + k]);
        total += -alpha * std::pow(1.0 - pt, gamma) * std::log(pt);
    }
    return total / static_cast<double>(positions);
}

inline Tensor focal_loss_grad(const Tensor& pred, const Tensor& gt, double alpha = kFocalAlpha,
                              double gamma = kFocalGamma) {
    detail::require_same_shape(pred, gt, "focal_loss_grad");
    const std::size_t c = pred.channels(), positions = pred.positions();
    const double inv_n = 1.0 / static_cast<double>(positions);
    Tensor grad(pred.shape());
    for (std::size_t p = 0; p < positions; ++p) {
        double pt = 0.0;
        for (std::size_t k = 0; k < c; ++k) pt += gt[p * c + k] * detail::clip(pred[p * c + k]);
        const double one_minus = 1.0 - pt;
        // d/dp_t of -alpha (1-p)^g ln p
        double dpt = -alpha * std::pow(one_minus, gamma) / pt;
        if (gamma != 0.0) dpt += alpha * gamma * std::pow(one_minus, gamma - 1.0) * std::log(pt);
        for (std::size_t k = 0; k < c; ++k)
            grad[p * c + k] = inv_n * dpt * gt[p * c + k] * detail::clip_slope(pred[p * c + k]);
    }
    return grad;
}

// Mean over positions of -sum_k gt_k ln p_k.
inline double categorical_cross_entropy(const Tensor& pred, const Tensor& gt) {
    detail::require_same_shape(pred, gt, "categorical_cross_entropy");
    const std::size_t c = pred.channels(), positions = pred.positions();
    double total = 0.0;
    for (std::size_t p = 0; p < positions; ++p)
        for (std::size_t k = 0; k < c; ++k)
            if (gt[p * c + k] != 0.0) total -= gt[p * c + k] * std::log(detail::clip(pred[p * c + k]));
    return total / static_cast<double>(positions);
}

inline Tensor categorical_cross_entropy_grad(const Tensor& pred, const Tensor& gt) {
    detail::require_same_shape(pred, gt, "categorical_cross_entropy_grad");
    const double inv_n = 1.0 / static_cast<double>(pred.positions());
    Tensor grad(pred.shape());
    for (std::size_t i = 0; i < pred.size(); ++i)
        grad[i] = -inv_n * gt[i] / detail::clip(pred[i]) * detail::clip_slope(pred[i]);
    return grad;
}

inline double combined_loss(double l_dice, double l_focal, double l_ce, double lambda1 = kLambdaSegmentation,
                            double lambda2 = kLambdaClassification) {
    return lambda1 * (l_dice + l_focal) + lambda2 * l_ce;
}

// ---- finite-difference gradient checking ------------------------------------

struct GradientCheck {
    std::string kernel;
    std::size_t trial = 0;
    double max_rel_error = 0.0;
};

inline constexpr double kFiniteDifferenceStep = 1e-5;
inline constexpr double kGradientTolerance = 1e-4;

// max_i |analytic_i - fd_i| / max(|analytic_i|, |fd_i|, 1e-8) using central
// differences of `f` around x.
template <typename Fn>
double max_relative_gradient_error(const Tensor& x, const Tensor& analytic, Fn&& f,
                                   double h = kFiniteDifferenceStep) {
    double worst = 0.0;
    Tensor probe = x;
    for (std::size_t i = 0; i < x.size(); ++i) {
        probe[i] = x[i] + h;
        const double up = f(probe);
        probe[i] = x[i] - h;
        const double down = f(probe);
        probe[i] = x[i];
        const double fd = (up - down) / (2.0 * h);
        const double scale = std::max({std::abs(analytic[i]), std::abs(fd), 1e-8});
        worst = std::max(worst, std::abs(analytic[i] - fd) / scale);
    }
    return worst;
}

// Random probability maps (rows on the simplex, entries bounded away from
// the clip limits) and matching one-hot targets.
inline std::pair<Tensor, Tensor> random_prediction_pair(std::mt19937_64& eng, std::size_t positions,
                                                        std::size_t classes) {
    Tensor pred({positions, classes}), gt({positions, classes});
    for (std::size_t p = 0; p < positions; ++p) {
        double s = 0.0;
        for (std::size_t k = 0; k < classes; ++k) {
            pred[p * classes + k] = 0.2 + uniform01(eng);
            s += pred[p * classes + k];
        }
        for (std::size_t k = 0; k < classes; ++k) pred[p * classes + k] /= s;
        gt[p * classes + bounded(eng, classes)] = 1.0;
    }
    return {pred, gt};
}

// Analytic-vs-finite-difference checks for every differentiable kernel on
// `trials` seeded random inputs.
inline std::vector<GradientCheck> run_gradient_checks(std::size_t trials, std::uint64_t seed) {
    std::vector<GradientCheck> out;
    for (std::size_t t = 0; t < trials; ++t) {
        std::mt19937_64 eng(substream_seed(seed, t));
        const std::size_t positions = 2 + bounded(eng, 6), classes = 2 + bounded(eng, 4);
        auto [pred, gt] = random_prediction_pair(eng, positions, classes);

        out.push_back({"dice_loss", t,
                       max_relative_gradient_error(pred, dice_loss_grad(pred, gt),
                                                   [&](const Tensor& p) { return dice_loss(p, gt); })});
        out.push_back({"focal_loss", t,
                       max_relative_gradient_error(pred, focal_loss_grad(pred, gt),
                                                   [&](const Tensor& p) { return focal_loss(p, gt); })});
        out.push_back({"categorical_cross_entropy", t,
                       max_relative_gradient_error(pred, categorical_cross_entropy_grad(pred, gt), [&](const Tensor& p) {
                           return categorical_cross_entropy(p, gt);
                       })});

        // Random MLP: in -> hidden (relu / leaky) -> out (softmax); checks the
        // gradient of a random linear functional of the output.
        const std::size_t n_in = 2 + bounded(eng, 4), hidden = 2 + bounded(eng, 4), n_out = 2 + bounded(eng, 3);
        auto rnd = [&](std::vector<std::size_t> shape) {
            Tensor w(std::move(shape));
            for (auto& v : w.data()) v = 2.0 * uniform01(eng) - 1.0;
            return w;
        };
        MlpSpec spec({{rnd({n_in, hidden}), rnd({hidden}), t % 2 ? Activation::LeakyRelu : Activation::Relu},
                      {rnd({hidden, n_out}), rnd({n_out}), Activation::Softmax}});
        const Tensor input = rnd({n_in});
        const Tensor weights = rnd({n_out});
        const Tensor jac = mlp_input_jacobian(spec, input);
        Tensor grad({n_in});
        for (std::size_t r = 0; r < n_out; ++r)
            for (std::size_t c = 0; c < n_in; ++c) grad[c] += weights[r] * jac[r * n_in + c];
        out.push_back({"mlp_forward", t, max_relative_gradient_error(input, grad, [&](const Tensor& x) {
                           const auto y = mlp_forward(spec, x);
                           double s = 0.0;
                           for (std::size_t r = 0; r < n_out; ++r) s += weights[r] * y[r];
                           return s;
                       })});
    }
    return out;
}

}  // namespace mammoeval::fusion
