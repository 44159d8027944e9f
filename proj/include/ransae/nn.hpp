#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ransae/error.hpp"
#include "ransae/io.hpp"
#include "ransae/matrix.hpp"
#include "ransae/rng.hpp"

namespace ransae::nn {

enum class Activation { relu, sigmoid, tanh, linear, softmax };

inline std::string to_string(Activation a)
{
    switch (a) {
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
    case Activation::tanh: return "tanh";
    case Activation::linear: return "linear";
    case Activation::softmax: return "softmax";
    }
    return "linear";
}

inline Activation activation_from_string(const std::string& name)
{
    for (auto a : {Activation::relu, Activation::sigmoid, Activation::tanh, Activation::linear, Activation::softmax}) {
        if (to_string(a) == name) {
            return a;
        }
    }
    throw Error(ErrorKind::ConfigError, "unknown activation '" + name + "'");
}

inline double sigmoid(double x) noexcept
{
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

/// Row-wise softmax with max subtraction.
inline void softmax_inplace(std::span<double> row) noexcept
{
    if (row.empty()) {
        return;
    }
    const double peak = *std::max_element(row.begin(), row.end());
    double total = 0.0;
    for (double& v : row) {
        v = std::exp(v - peak);
        total += v;
    }
    for (double& v : row) {
        v /= total;
    }
}

inline Matrix softmax_rows(Matrix logits)
{
    for (std::size_t r = 0; r < logits.rows(); ++r) {
        softmax_inplace(logits.row(r));
    }
    return logits;
}

inline Matrix apply_activation(Activation a, Matrix z)
{
    switch (a) {
    case Activation::relu:
        for (double& v : z.flat()) {
            v = v > 0.0 ? v : 0.0;
        }
        return z;
    case Activation::sigmoid:
        for (double& v : z.flat()) {
            v = sigmoid(v);
        }
        return z;
    case Activation::tanh:
        for (double& v : z.flat()) {
            v = std::tanh(v);
        }
        return z;
    case Activation::linear:
        return z;
    case Activation::softmax:
        return softmax_rows(std::move(z));
    }
    return z;
}

/// Fully connected layer: output = activation(input · weightsᵀ + biases).
struct DenseLayer {
    Matrix weights; // out_dim × in_dim
    std::vector<double> biases;
    Activation activation = Activation::linear;

    std::size_t in_dim() const noexcept { return weights.cols(); }
    std::size_t out_dim() const noexcept { return weights.rows(); }
    std::size_t parameter_count() const noexcept { return weights.size() + biases.size(); }

    static DenseLayer zeros(std::size_t in_dim, std::size_t out_dim, Activation act)
    {
        return {Matrix(out_dim, in_dim), std::vector<double>(out_dim, 0.0), act};
    }

    /// Glorot-uniform weights in ±sqrt(6 / (fan_in + fan_out)), zero biases.
    static DenseLayer glorot(std::size_t in_dim, std::size_t out_dim, Activation act, SplitMix64& rng)
    {
        DenseLayer layer = zeros(in_dim, out_dim, act);
        const double bound = std::sqrt(6.0 / static_cast<double>(in_dim + out_dim));
        for (double& w : layer.weights.flat()) {
            w = rng.uniform(-bound, bound);
        }
        return layer;
    }

    friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

/// x and activations of one layer for one forward pass.
struct BatchCache {
    Matrix input;
    Matrix pre;
    Matrix output;
};

struct ForwardResult {
    Matrix output;
    BatchCache cache;
};

inline ForwardResult dense_forward(const DenseLayer& layer, const Matrix& input)
{
    if (input.cols() != layer.in_dim()) {
        throw Error(ErrorKind::ShapeMismatch, "dense_forward: input width " + std::to_string(input.cols()) +
                                                  " != in_dim " + std::to_string(layer.in_dim()));
    }
    Matrix pre = matmul_nt(input, layer.weights);
    for (std::size_t r = 0; r < pre.rows(); ++r) {
        auto row = pre.row(r);
        for (std::size_t j = 0; j < row.size(); ++j) {
            row[j] += layer.biases[j];
        }
    }
    Matrix out = apply_activation(layer.activation, pre);
    return {out, BatchCache{input, std::move(pre), out}};
}

/// ∂L/∂pre given ∂L/∂output.
inline Matrix activation_backward(Activation a, const BatchCache& cache, const Matrix& grad_output)
{
    require_shape(grad_output, cache.output.rows(), cache.output.cols(), "activation_backward");
    Matrix g = grad_output;
    switch (a) {
    case Activation::relu:
        for (std::size_t i = 0; i < g.size(); ++i) {
            if (!(cache.pre.flat()[i] > 0.0)) {
                g.flat()[i] = 0.0;
            }
        }
        break;
    case Activation::sigmoid:
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double y = cache.output.flat()[i];
            g.flat()[i] *= y * (1.0 - y);
        }
        break;
    case Activation::tanh:
        for (std::size_t i = 0; i < g.size(); ++i) {
            const double y = cache.output.flat()[i];
            g.flat()[i] *= 1.0 - y * y;
        }
        break;
    case Activation::linear:
        break;
    case Activation::softmax:
        for (std::size_t r = 0; r < g.rows(); ++r) {
            auto y = cache.output.row(r);
            auto gr = g.row(r);
            double dot = 0.0;
            for (std::size_t j = 0; j < y.size(); ++j) {
                dot += gr[j] * y[j];
            }
            for (std::size_t j = 0; j < y.size(); ++j) {
                gr[j] = y[j] * (gr[j] - dot);
            }
        }
        break;
    }
    return g;
}

struct DenseGradients {
    Matrix grad_input;
    Matrix grad_weights;
    std::vector<double> grad_biases;
};

/// Backward pass through the affine part only, starting from ∂L/∂pre.
inline DenseGradients linear_backward(const DenseLayer& layer, const Matrix& input, const Matrix& grad_pre)
{
    require_shape(grad_pre, input.rows(), layer.out_dim(), "linear_backward");
    DenseGradients g;
    g.grad_input = matmul(grad_pre, layer.weights);
    g.grad_weights = matmul_tn(grad_pre, input);
    g.grad_biases.assign(layer.out_dim(), 0.0);
    for (std::size_t r = 0; r < grad_pre.rows(); ++r) {
        auto row = grad_pre.row(r);
        for (std::size_t j = 0; j < row.size(); ++j) {
            g.grad_biases[j] += row[j];
        }
    }
    return g;
}

inline DenseGradients dense_backward(const DenseLayer& layer, const BatchCache& cache, const Matrix& grad_output)
{
    if (grad_output.rows() != cache.input.rows() || grad_output.cols() != layer.out_dim()) {
        throw Error(ErrorKind::ShapeMismatch, "dense_backward: grad_output shape");
    }
    return linear_backward(layer, cache.input, activation_backward(layer.activation, cache, grad_output));
}

// ---------------------------------------------------------------------------
// Losses
// ---------------------------------------------------------------------------

struct LossResult {
    double loss = 0.0;
    Matrix grad;
};

/// (1/m) Σᵢ ‖targetᵢ − predictedᵢ‖². Divides by the sample count only.
inline LossResult mse_loss(const Matrix& predicted, const Matrix& target)
{
    require_shape(target, predicted.rows(), predicted.cols(), "mse_loss");
    if (predicted.rows() == 0) {
        return {0.0, Matrix(0, predicted.cols())};
    }
    const double m = static_cast<double>(predicted.rows());
    LossResult out{0.0, Matrix(predicted.rows(), predicted.cols())};
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        const double d = predicted.flat()[i] - target.flat()[i];
        out.loss += d * d;
        out.grad.flat()[i] = 2.0 * d / m;
    }
    out.loss /= m;
    return out;
}

inline constexpr double kLogFloor = 1e-12;

/// −(1/N) Σᵢ log p[i, yᵢ]; `grad` is w.r.t. the pre-softmax logits, (p − onehot)/N.
inline LossResult cross_entropy_loss(const Matrix& probabilities, std::span<const int> labels)
{
    if (labels.size() != probabilities.rows()) {
        throw Error(ErrorKind::ShapeMismatch, "cross_entropy_loss: label count != rows");
    }
    const std::size_t n = probabilities.rows();
    const std::size_t c = probabilities.cols();
    LossResult out{0.0, probabilities};
    if (n == 0) {
        return out;
    }
    for (std::size_t i = 0; i < n; ++i) {
        const int y = labels[i];
        if (y < 0 || static_cast<std::size_t>(y) >= c) {
            throw Error(ErrorKind::LabelOutOfRange, "label " + std::to_string(y) + " with " + std::to_string(c) +
                                                        " classes");
        }
        double total = 0.0;
        for (double p : probabilities.row(i)) {
            total += p;
        }
        if (std::abs(total - 1.0) > 1e-6) {
            throw Error(ErrorKind::InvalidArgument, "probability row " + std::to_string(i) + " sums to " +
                                                        format_number(total));
        }
        out.loss -= std::log(std::max(probabilities(i, static_cast<std::size_t>(y)), kLogFloor));
        out.grad(i, static_cast<std::size_t>(y)) -= 1.0;
    }
    const double inv = 1.0 / static_cast<double>(n);
    out.loss *= inv;
    for (double& g : out.grad.flat()) {
        g *= inv;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Layer stacks
// ---------------------------------------------------------------------------

struct StackForward {
    Matrix output;
    std::vector<BatchCache> caches;
};

inline StackForward stack_forward(std::span<const DenseLayer> layers, const Matrix& x)
{
    StackForward out{x, {}};
    out.caches.reserve(layers.size());
    for (const auto& layer : layers) {
        auto step = dense_forward(layer, out.output);
        out.output = std::move(step.output);
        out.caches.push_back(std::move(step.cache));
    }
    return out;
}

/// Backpropagate through a stack. If `grad_is_pre` is set, `grad` is already
/// ∂L/∂pre of the last layer (fused softmax + cross-entropy).
inline std::vector<DenseGradients> stack_backward(std::span<const DenseLayer> layers,
                                                  std::span<const BatchCache> caches, Matrix grad,
                                                  bool grad_is_pre = false)
{
    std::vector<DenseGradients> grads(layers.size());
    for (std::size_t l = layers.size(); l-- > 0;) {
        const bool fused = grad_is_pre && l + 1 == layers.size();
        grads[l] = fused ? linear_backward(layers[l], caches[l].input, grad)
                         : dense_backward(layers[l], caches[l], grad);
        grad = grads[l].grad_input;
    }
    return grads;
}

/// Parameter views in a fixed order: weights then biases, layer by layer.
inline std::vector<std::span<double>> parameter_views(std::span<DenseLayer> layers)
{
    std::vector<std::span<double>> views;
    for (auto& layer : layers) {
        views.emplace_back(layer.weights.flat());
        views.emplace_back(layer.biases);
    }
    return views;
}

/// Flattened gradients aligned with parameter_views.
inline std::vector<std::vector<double>> gradient_blocks(const std::vector<DenseGradients>& grads)
{
    std::vector<std::vector<double>> blocks;
    for (const auto& g : grads) {
        blocks.push_back(g.grad_weights.storage());
        blocks.push_back(g.grad_biases);
    }
    return blocks;
}

inline std::vector<std::size_t> block_sizes(const std::vector<std::span<double>>& views)
{
    std::vector<std::size_t> sizes;
    for (const auto& v : views) {
        sizes.push_back(v.size());
    }
    return sizes;
}

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Moment estimates for a list of parameter blocks.
class AdamState {
public:
    AdamState() = default;

    AdamState(AdamConfig config, const std::vector<std::size_t>& sizes) : config_(config)
    {
        if (!(config.beta1 > 0.0 && config.beta1 < 1.0 && config.beta2 > 0.0 && config.beta2 < 1.0)) {
            throw Error(ErrorKind::ConfigError, "Adam betas must lie in (0, 1)");
        }
        for (std::size_t n : sizes) {
            first_moment_.emplace_back(n, 0.0);
            second_moment_.emplace_back(n, 0.0);
        }
    }

    const AdamConfig& config() const noexcept { return config_; }
    std::size_t timestep() const noexcept { return timestep_; }
    const std::vector<std::vector<double>>& first_moment() const noexcept { return first_moment_; }
    const std::vector<std::vector<double>>& second_moment() const noexcept { return second_moment_; }

    friend void adam_step(AdamState& state, std::span<const std::span<double>> params,
                          std::span<const std::vector<double>> grads);

private:
    AdamConfig config_;
    std::size_t timestep_ = 0;
    std::vector<std::vector<double>> first_moment_;
    std::vector<std::vector<double>> second_moment_;
};

/// One bias-corrected Adam update over every parameter block.
inline void adam_step(AdamState& state, std::span<const std::span<double>> params,
                      std::span<const std::vector<double>> grads)
{
    if (params.size() != state.first_moment_.size() || grads.size() != params.size()) {
        throw Error(ErrorKind::ShapeMismatch, "adam_step: block count mismatch");
    }
    ++state.timestep_;
    const auto& c = state.config_;
    const double t = static_cast<double>(state.timestep_);
    const double correction1 = 1.0 - std::pow(c.beta1, t);
    const double correction2 = 1.0 - std::pow(c.beta2, t);
    for (std::size_t b = 0; b < params.size(); ++b) {
        auto p = params[b];
        const auto& g = grads[b];
        auto& m = state.first_moment_[b];
        auto& v = state.second_moment_[b];
        if (p.size() != m.size() || g.size() != m.size()) {
            throw Error(ErrorKind::ShapeMismatch, "adam_step: block " + std::to_string(b) + " size mismatch");
        }
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g[i];
            v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g[i] * g[i];
            const double m_hat = m[i] / correction1;
            const double v_hat = v[i] / correction2;
            p[i] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
        }
    }
}

// ---------------------------------------------------------------------------
// Parameter counting and gradient checking
// ---------------------------------------------------------------------------

/// Σ (in·out + out) over consecutive dims of a dense stack.
inline std::size_t param_count(std::span<const std::size_t> dims)
{
    std::size_t total = 0;
    for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
        if (dims[i] == 0 || dims[i + 1] == 0) {
            throw Error(ErrorKind::InvalidArgument, "layer dims must be positive");
        }
        total += dims[i] * dims[i + 1] + dims[i + 1];
    }
    return total;
}

inline std::size_t param_count(std::initializer_list<std::size_t> dims)
{
    return param_count(std::span<const std::size_t>(dims.begin(), dims.size()));
}

/// Max relative error between analytic gradients and central differences,
/// |a − n| / max(|a|, |n|, 1e-8), over every parameter.
inline double grad_check(const std::function<double()>& loss, const std::vector<std::span<double>>& params,
                         const std::vector<std::vector<double>>& analytic, double perturbation = 1e-5)
{
    if (analytic.size() != params.size()) {
        throw Error(ErrorKind::ShapeMismatch, "grad_check: block count mismatch");
    }
    double worst = 0.0;
    for (std::size_t b = 0; b < params.size(); ++b) {
        if (analytic[b].size() != params[b].size()) {
            throw Error(ErrorKind::ShapeMismatch, "grad_check: block size mismatch");
        }
        for (std::size_t i = 0; i < params[b].size(); ++i) {
            double& p = params[b][i];
            const double saved = p;
            p = saved + perturbation;
            const double up = loss();
            p = saved - perturbation;
            const double down = loss();
            p = saved;
            const double numeric = (up - down) / (2.0 * perturbation);
            const double a = analytic[b][i];
            const double scale = std::max({std::abs(a), std::abs(numeric), 1e-8});
            worst = std::max(worst, std::abs(a - numeric) / scale);
        }
    }
    return worst;
}

/// Anything exposing its parameters, a scalar loss at the current
/// parameters, and the analytic gradient of that loss.
template <typename M>
concept Differentiable = requires(M m) {
    { m.parameters() } -> std::convertible_to<std::vector<std::span<double>>>;
    { m.loss() } -> std::convertible_to<double>;
    { m.gradients() } -> std::convertible_to<std::vector<std::vector<double>>>;
};

template <Differentiable M>
double grad_check(M& model, double perturbation = 1e-5)
{
    const auto analytic = model.gradients();
    return grad_check([&] { return model.loss(); }, model.parameters(), analytic, perturbation);
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

inline Json to_json(const DenseLayer& layer)
{
    return {{"in_dim", layer.in_dim()},
            {"out_dim", layer.out_dim()},
            {"activation", to_string(layer.activation)},
            {"weights", layer.weights.storage()},
            {"biases", layer.biases}};
}

inline DenseLayer layer_from_json(const Json& doc)
{
    const auto in = doc.at("in_dim").get<std::size_t>();
    const auto out = doc.at("out_dim").get<std::size_t>();
    DenseLayer layer{Matrix(out, in, doc.at("weights").get<std::vector<double>>()),
                     doc.at("biases").get<std::vector<double>>(),
                     activation_from_string(doc.at("activation").get<std::string>())};
    if (layer.biases.size() != out) {
        throw Error(ErrorKind::SchemaMismatch, "bias length does not match out_dim");
    }
    return layer;
}

/// Versioned model document: {schema_version, component, layers[]}.
inline Json model_to_json(const std::string& component, std::span<const DenseLayer> layers)
{
    Json list = Json::array();
    for (const auto& l : layers) {
        list.push_back(to_json(l));
    }
    return {{"schema_version", kSchemaVersion}, {"component", component}, {"layers", list}};
}

inline std::vector<DenseLayer> model_from_json(const Json& doc, const std::string& component)
{
    if (doc.value("schema_version", 0) != kSchemaVersion) {
        throw Error(ErrorKind::SchemaMismatch, "unsupported model schema_version");
    }
    if (doc.value("component", std::string{}) != component) {
        throw Error(ErrorKind::SchemaMismatch, "expected component '" + component + "'");
    }
    std::vector<DenseLayer> layers;
    for (const auto& l : doc.at("layers")) {
        layers.push_back(layer_from_json(l));
    }
    return layers;
}

} // namespace ransae::nn
