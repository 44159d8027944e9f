#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ransae/error.hpp"
#include "ransae/io.hpp"
#include "ransae/matrix.hpp"
#include "ransae/nn.hpp"
#include "ransae/rng.hpp"

namespace ransae::lstm {

using nn::DenseLayer;

enum Gate : std::size_t { input_gate = 0, forget_gate = 1, output_gate = 2, candidate_gate = 3 };
inline constexpr std::array<const char*, 4> kGateNames{"input", "forget", "output", "candidate"};

/// One LSTM layer. Every gate matrix is hidden × (hidden + input_dim) and
/// multiplies the concatenation [h_{t-1}, x_t] in that order.
struct LstmCell {
    std::size_t input_dim = 0;
    std::size_t hidden = 0;
    std::array<Matrix, 4> weights;
    std::array<std::vector<double>, 4> biases;

    std::size_t parameter_count() const noexcept { return 4 * (input_dim + hidden + 1) * hidden; }

    static LstmCell zeros(std::size_t input_dim, std::size_t hidden)
    {
        LstmCell cell{input_dim, hidden, {}, {}};
        for (std::size_t g = 0; g < 4; ++g) {
            cell.weights[g] = Matrix(hidden, hidden + input_dim);
            cell.biases[g].assign(hidden, 0.0);
        }
        return cell;
    }

    /// Glorot-uniform gate matrices, zero biases.
    static LstmCell glorot(std::size_t input_dim, std::size_t hidden, SplitMix64& rng)
    {
        LstmCell cell = zeros(input_dim, hidden);
        const double bound = std::sqrt(6.0 / static_cast<double>(2 * hidden + input_dim));
        for (auto& w : cell.weights) {
            for (double& v : w.flat()) {
                v = rng.uniform(-bound, bound);
            }
        }
        return cell;
    }

    friend bool operator==(const LstmCell&, const LstmCell&) = default;
};

/// Activations of one time step for a batch (rows = samples).
struct GateCache {
    Matrix concat; // [h_{t-1}, x_t]
    bool h_prev_zero = false;
    Matrix i, f, o;
    Matrix candidate; // tanh(W_c·[h_{t-1}, x_t] + b_c)
    Matrix c_prev, c, tanh_c, h;
};

namespace detail {

/// z = concat · Wᵀ + b, skipping the recurrent block when h_{t-1} is zero.
inline Matrix gate_pre(const Matrix& concat, const Matrix& w, const std::vector<double>& b, std::size_t skip)
{
    Matrix z(concat.rows(), w.rows());
    const std::size_t width = concat.cols();
    for (std::size_t r = 0; r < concat.rows(); ++r) {
        const double* in = concat.row(r).data();
        double* zr = z.row(r).data();
        for (std::size_t j = 0; j < w.rows(); ++j) {
            const double* wr = w.row(j).data();
            double acc = b[j];
            for (std::size_t p = skip; p < width; ++p) {
                acc += in[p] * wr[p];
            }
            zr[j] = acc;
        }
    }
    return z;
}

} // namespace detail

/// One batched step of the recurrence:
///   i = σ(W_i·[h,x] + b_i), f = σ(W_f·[h,x] + b_f), o = σ(W_o·[h,x] + b_o)
///   c = f ⊙ c_prev + i ⊙ tanh(W_c·[h,x] + b_c),  h = o ⊙ tanh(c)
inline GateCache cell_step(const LstmCell& cell, const Matrix& x, const Matrix& h_prev, const Matrix& c_prev,
                           bool h_prev_zero = false)
{
    const std::size_t batch = x.rows();
    require_shape(x, batch, cell.input_dim, "lstm x_t");
    require_shape(h_prev, batch, cell.hidden, "lstm h_prev");
    require_shape(c_prev, batch, cell.hidden, "lstm c_prev");
    const std::size_t H = cell.hidden;

    GateCache gc;
    gc.h_prev_zero = h_prev_zero;
    gc.concat = Matrix(batch, H + cell.input_dim);
    for (std::size_t r = 0; r < batch; ++r) {
        auto dst = gc.concat.row(r);
        std::copy(h_prev.row(r).begin(), h_prev.row(r).end(), dst.begin());
        std::copy(x.row(r).begin(), x.row(r).end(), dst.begin() + static_cast<std::ptrdiff_t>(H));
    }
    const std::size_t skip = h_prev_zero ? H : 0;
    gc.i = detail::gate_pre(gc.concat, cell.weights[input_gate], cell.biases[input_gate], skip);
    gc.f = detail::gate_pre(gc.concat, cell.weights[forget_gate], cell.biases[forget_gate], skip);
    gc.o = detail::gate_pre(gc.concat, cell.weights[output_gate], cell.biases[output_gate], skip);
    gc.candidate = detail::gate_pre(gc.concat, cell.weights[candidate_gate], cell.biases[candidate_gate], skip);
    for (auto* m : {&gc.i, &gc.f, &gc.o}) {
        for (double& v : m->flat()) {
            v = nn::sigmoid(v);
        }
    }
    for (double& v : gc.candidate.flat()) {
        v = std::tanh(v);
    }
    gc.c_prev = c_prev;
    gc.c = Matrix(batch, H);
    gc.tanh_c = Matrix(batch, H);
    gc.h = Matrix(batch, H);
    for (std::size_t k = 0; k < gc.c.size(); ++k) {
        const double c = gc.f.flat()[k] * c_prev.flat()[k] + gc.i.flat()[k] * gc.candidate.flat()[k];
        gc.c.flat()[k] = c;
        gc.tanh_c.flat()[k] = std::tanh(c);
        gc.h.flat()[k] = gc.o.flat()[k] * gc.tanh_c.flat()[k];
    }
    return gc;
}

struct CellOutput {
    std::vector<double> h;
    std::vector<double> c;
    GateCache cache;
};

/// Single-sample form of cell_step.
inline CellOutput lstm_cell_forward(const LstmCell& cell, std::span<const double> x_t, std::span<const double> h_prev,
                                    std::span<const double> c_prev)
{
    if (x_t.size() != cell.input_dim || h_prev.size() != cell.hidden || c_prev.size() != cell.hidden) {
        throw Error(ErrorKind::ShapeMismatch, "lstm_cell_forward: dims do not match cell");
    }
    Matrix x(1, cell.input_dim, std::vector<double>(x_t.begin(), x_t.end()));
    Matrix h(1, cell.hidden, std::vector<double>(h_prev.begin(), h_prev.end()));
    Matrix c(1, cell.hidden, std::vector<double>(c_prev.begin(), c_prev.end()));
    auto gc = cell_step(cell, x, h, c);
    return {gc.h.storage(), gc.c.storage(), std::move(gc)};
}

// ---------------------------------------------------------------------------
// Classifier
// ---------------------------------------------------------------------------

/// How a tabular row becomes a sequence: one step holding every feature, or
/// one step per feature.
enum class SequenceLayout { single_step, feature_steps };

inline std::string to_string(SequenceLayout layout)
{
    return layout == SequenceLayout::single_step ? "single_step" : "feature_steps";
}

inline SequenceLayout layout_from_string(const std::string& s)
{
    if (s == "single_step") {
        return SequenceLayout::single_step;
    }
    if (s == "feature_steps") {
        return SequenceLayout::feature_steps;
    }
    throw Error(ErrorKind::ConfigError, "unknown sequence layout '" + s + "'");
}

struct LstmConfig {
    std::vector<std::size_t> hidden_dims{168};
    std::size_t epochs = 400;
    double learning_rate = 1e-3;
    std::size_t batch_size = 128;
    SequenceLayout sequence_layout = SequenceLayout::single_step;
    std::optional<double> clip_threshold;
    std::uint64_t seed = 1819;

    void validate() const
    {
        if (hidden_dims.empty()) {
            throw Error(ErrorKind::ConfigError, "lstm.hidden_dims must be non-empty");
        }
        for (auto h : hidden_dims) {
            if (h == 0) {
                throw Error(ErrorKind::ConfigError, "lstm.hidden_dims entries must be positive");
            }
        }
        if (batch_size == 0) {
            throw Error(ErrorKind::ConfigError, "lstm.batch_size must be positive");
        }
        if (!(learning_rate > 0.0)) {
            throw Error(ErrorKind::ConfigError, "lstm.learning_rate must be positive");
        }
        if (clip_threshold && !(*clip_threshold > 0.0)) {
            throw Error(ErrorKind::ConfigError, "lstm.clip_threshold must be positive");
        }
    }
};

struct LstmClassifier {
    std::vector<LstmCell> cells;
    DenseLayer head; // last hidden → K, softmax
    LstmConfig config;

    std::size_t input_dim() const { return cells.empty() ? 0 : cells.front().input_dim; }
    std::size_t k_classes() const { return head.out_dim(); }

    std::size_t parameter_count() const
    {
        std::size_t n = head.parameter_count();
        for (const auto& c : cells) {
            n += c.parameter_count();
        }
        return n;
    }

    /// Weights then biases per gate per cell, then the head.
    std::vector<std::span<double>> parameters()
    {
        std::vector<std::span<double>> views;
        for (auto& cell : cells) {
            for (auto& w : cell.weights) {
                views.emplace_back(w.flat());
            }
            for (auto& b : cell.biases) {
                views.emplace_back(b);
            }
        }
        views.emplace_back(head.weights.flat());
        views.emplace_back(head.biases);
        return views;
    }
};

/// Per-step input width for a layout over `features` columns.
inline std::size_t step_width(SequenceLayout layout, std::size_t features)
{
    return layout == SequenceLayout::single_step ? features : 1;
}

inline LstmClassifier make_classifier(std::size_t features, std::size_t k_classes, const LstmConfig& config)
{
    config.validate();
    SplitMix64 rng(derive_seed(config.seed, 4000));
    LstmClassifier model;
    model.config = config;
    std::size_t in = step_width(config.sequence_layout, features);
    for (auto h : config.hidden_dims) {
        model.cells.push_back(LstmCell::glorot(in, h, rng));
        in = h;
    }
    model.head = DenseLayer::glorot(in, k_classes, nn::Activation::softmax, rng);
    return model;
}

/// Rows of `x` as a list of T step matrices (each n × step width).
inline std::vector<Matrix> to_sequences(const Matrix& x, SequenceLayout layout)
{
    if (layout == SequenceLayout::single_step) {
        return {x};
    }
    std::vector<Matrix> steps(x.cols(), Matrix(x.rows(), 1));
    for (std::size_t r = 0; r < x.rows(); ++r) {
        for (std::size_t t = 0; t < x.cols(); ++t) {
            steps[t](r, 0) = x(r, t);
        }
    }
    return steps;
}

struct SequenceCache {
    std::vector<std::vector<GateCache>> steps; // [layer][t]
    nn::BatchCache head;
};

struct BatchForward {
    Matrix probs; // batch × K
    SequenceCache cache;
};

/// Unroll every layer over T steps from zero state; the head reads h_T of the top layer.
inline BatchForward forward_batch(const LstmClassifier& model, const std::vector<Matrix>& steps)
{
    if (steps.empty()) {
        throw Error(ErrorKind::ShapeMismatch, "sequence must have at least one step");
    }
    const std::size_t batch = steps.front().rows();
    BatchForward out;
    std::vector<Matrix> inputs = steps;
    for (const auto& cell : model.cells) {
        std::vector<GateCache> layer_steps;
        layer_steps.reserve(inputs.size());
        Matrix h(batch, cell.hidden);
        Matrix c(batch, cell.hidden);
        for (std::size_t t = 0; t < inputs.size(); ++t) {
            auto gc = cell_step(cell, inputs[t], h, c, t == 0);
            h = gc.h;
            c = gc.c;
            inputs[t] = gc.h;
            layer_steps.push_back(std::move(gc));
        }
        out.cache.steps.push_back(std::move(layer_steps));
    }
    auto head = nn::dense_forward(model.head, inputs.back());
    out.probs = std::move(head.output);
    out.cache.head = std::move(head.cache);
    return out;
}

struct SequenceForward {
    std::vector<double> class_probs;
    SequenceCache cache;
};

/// Forward pass of one sequence (T × input_dim).
inline SequenceForward lstm_sequence_forward(const LstmClassifier& model, const Matrix& sequence)
{
    if (sequence.rows() == 0 || sequence.cols() != model.input_dim()) {
        throw Error(ErrorKind::ShapeMismatch, "sequence must be T × " + std::to_string(model.input_dim()));
    }
    std::vector<Matrix> steps;
    for (std::size_t t = 0; t < sequence.rows(); ++t) {
        steps.emplace_back(1, sequence.cols(), std::vector<double>(sequence.row(t).begin(), sequence.row(t).end()));
    }
    auto fwd = forward_batch(model, steps);
    return {fwd.probs.storage(), std::move(fwd.cache)};
}

struct LstmGradients {
    std::vector<std::array<Matrix, 4>> weights;
    std::vector<std::array<std::vector<double>, 4>> biases;
    Matrix head_weights;
    std::vector<double> head_biases;
    double loss = 0.0;
    double norm = 0.0; // global L2 norm after clipping

    /// Aligned with LstmClassifier::parameters().
    std::vector<std::vector<double>> blocks() const
    {
        std::vector<std::vector<double>> out;
        for (std::size_t l = 0; l < weights.size(); ++l) {
            for (const auto& w : weights[l]) {
                out.push_back(w.storage());
            }
            for (const auto& b : biases[l]) {
                out.push_back(b);
            }
        }
        out.push_back(head_weights.storage());
        out.push_back(head_biases);
        return out;
    }
};

inline double global_norm(const LstmGradients& g)
{
    double ss = 0.0;
    for (const auto& block : g.blocks()) {
        for (double v : block) {
            ss += v * v;
        }
    }
    return std::sqrt(ss);
}

/// Rescale every gradient so the global norm is at most `threshold`.
inline void clip_gradients(LstmGradients& g, double threshold)
{
    const double norm = global_norm(g);
    if (norm > threshold && norm > 0.0) {
        const double scale = threshold / norm;
        for (std::size_t l = 0; l < g.weights.size(); ++l) {
            for (auto& w : g.weights[l]) {
                for (double& v : w.flat()) {
                    v *= scale;
                }
            }
            for (auto& b : g.biases[l]) {
                for (double& v : b) {
                    v *= scale;
                }
            }
        }
        for (double& v : g.head_weights.flat()) {
            v *= scale;
        }
        for (double& v : g.head_biases) {
            v *= scale;
        }
    }
    g.norm = global_norm(g);
}

/// Backpropagation through time of the mean cross-entropy over the batch.
inline LstmGradients backward_batch(const LstmClassifier& model, const BatchForward& fwd, std::span<const int> labels,
                                    std::optional<double> clip_threshold = std::nullopt)
{
    auto ce = nn::cross_entropy_loss(fwd.probs, labels);
    LstmGradients grads;
    grads.loss = ce.loss;
    auto head_g = nn::linear_backward(model.head, fwd.cache.head.input, ce.grad);
    grads.head_weights = std::move(head_g.grad_weights);
    grads.head_biases = std::move(head_g.grad_biases);

    const std::size_t n_layers = model.cells.size();
    grads.weights.resize(n_layers);
    grads.biases.resize(n_layers);
    const std::size_t T = fwd.cache.steps.front().size();
    const std::size_t batch = fwd.probs.rows();

    // Gradient arriving at each step's h from the layer above (or the head).
    std::vector<Matrix> dh_above(T);
    dh_above[T - 1] = std::move(head_g.grad_input);

    for (std::size_t l = n_layers; l-- > 0;) {
        const LstmCell& cell = model.cells[l];
        const std::size_t H = cell.hidden;
        const std::size_t width = H + cell.input_dim;
        for (std::size_t g = 0; g < 4; ++g) {
            grads.weights[l][g] = Matrix(H, width);
            grads.biases[l][g].assign(H, 0.0);
        }
        std::vector<Matrix> dx(T, Matrix(batch, cell.input_dim));
        Matrix dh_next(batch, H);
        Matrix dc_next(batch, H);
        std::array<Matrix, 4> dz;
        for (std::size_t t = T; t-- > 0;) {
            const GateCache& gc = fwd.cache.steps[l][t];
            Matrix dh = dh_next;
            if (!dh_above[t].empty()) {
                for (std::size_t k = 0; k < dh.size(); ++k) {
                    dh.flat()[k] += dh_above[t].flat()[k];
                }
            }
            for (auto& m : dz) {
                m = Matrix(batch, H);
            }
            for (std::size_t k = 0; k < dh.size(); ++k) {
                const double i = gc.i.flat()[k];
                const double f = gc.f.flat()[k];
                const double o = gc.o.flat()[k];
                const double cand = gc.candidate.flat()[k];
                const double tc = gc.tanh_c.flat()[k];
                const double d_h = dh.flat()[k];
                const double dc = dc_next.flat()[k] + d_h * o * (1.0 - tc * tc);
                dz[output_gate].flat()[k] = d_h * tc * o * (1.0 - o);
                dz[input_gate].flat()[k] = dc * cand * i * (1.0 - i);
                dz[forget_gate].flat()[k] = dc * gc.c_prev.flat()[k] * f * (1.0 - f);
                dz[candidate_gate].flat()[k] = dc * i * (1.0 - cand * cand);
                dc_next.flat()[k] = dc * f;
            }
            const std::size_t skip = gc.h_prev_zero ? H : 0;
            Matrix dconcat(batch, width);
            for (std::size_t g = 0; g < 4; ++g) {
                const Matrix& w = cell.weights[g];
                Matrix& dw = grads.weights[l][g];
                auto& db = grads.biases[l][g];
                for (std::size_t r = 0; r < batch; ++r) {
                    const double* in = gc.concat.row(r).data();
                    double* dcat = dconcat.row(r).data();
                    const double* dzr = dz[g].row(r).data();
                    for (std::size_t j = 0; j < H; ++j) {
                        const double s = dzr[j];
                        if (s == 0.0) {
                            continue;
                        }
                        db[j] += s;
                        const double* wr = w.row(j).data();
                        double* dwr = dw.row(j).data();
                        for (std::size_t p = skip; p < width; ++p) {
                            dwr[p] += s * in[p];
                            dcat[p] += s * wr[p];
                        }
                    }
                }
            }
            for (std::size_t r = 0; r < batch; ++r) {
                auto dcat = dconcat.row(r);
                std::copy(dcat.begin(), dcat.begin() + static_cast<std::ptrdiff_t>(H), dh_next.row(r).begin());
                std::copy(dcat.begin() + static_cast<std::ptrdiff_t>(H), dcat.end(), dx[t].row(r).begin());
            }
        }
        dh_above = std::move(dx);
    }

    if (clip_threshold) {
        clip_gradients(grads, *clip_threshold);
    } else {
        grads.norm = global_norm(grads);
    }
    return grads;
}

/// Single-sequence BPTT given the caches of the matching forward pass.
inline LstmGradients lstm_backward(const LstmClassifier& model, const Matrix& sequence, int label,
                                   const SequenceForward& fwd, std::optional<double> clip_threshold = std::nullopt)
{
    if (sequence.rows() != fwd.cache.steps.front().size()) {
        throw Error(ErrorKind::ShapeMismatch, "lstm_backward: cache does not match sequence length");
    }
    BatchForward batch{Matrix(1, fwd.class_probs.size(), fwd.class_probs), fwd.cache};
    const int labels[1] = {label};
    return backward_batch(model, batch, labels, clip_threshold);
}

/// Mean cross-entropy of a fixed batch as a Differentiable unit.
struct SequenceLoss {
    LstmClassifier model;
    std::vector<Matrix> steps;
    std::vector<int> labels;

    std::vector<std::span<double>> parameters() { return model.parameters(); }

    double loss() const { return nn::cross_entropy_loss(forward_batch(model, steps).probs, labels).loss; }

    std::vector<std::vector<double>> gradients() const
    {
        return backward_batch(model, forward_batch(model, steps), labels).blocks();
    }
};

inline Matrix predict_proba(const LstmClassifier& model, const Matrix& x, std::size_t chunk = 1024)
{
    const bool fits = model.config.sequence_layout == SequenceLayout::single_step
                          ? x.cols() == model.input_dim()
                          : model.input_dim() == 1 && x.cols() > 0;
    if (!fits) {
        throw Error(ErrorKind::ShapeMismatch, "predict: feature width does not match model");
    }
    Matrix probs(x.rows(), model.k_classes());
    for (std::size_t start = 0; start < x.rows(); start += chunk) {
        const std::size_t end = std::min(x.rows(), start + chunk);
        std::vector<std::size_t> idx;
        for (std::size_t r = start; r < end; ++r) {
            idx.push_back(r);
        }
        auto fwd = forward_batch(model, to_sequences(x.select_rows(idx), model.config.sequence_layout));
        for (std::size_t r = start; r < end; ++r) {
            auto src = fwd.probs.row(r - start);
            std::copy(src.begin(), src.end(), probs.row(r).begin());
        }
    }
    return probs;
}

/// Index of the largest entry; the lowest index wins ties.
inline int argmax(std::span<const double> row)
{
    std::size_t best = 0;
    for (std::size_t j = 1; j < row.size(); ++j) {
        if (row[j] > row[best]) {
            best = j;
        }
    }
    return static_cast<int>(best);
}

inline std::vector<int> predict(const LstmClassifier& model, const Matrix& x)
{
    const Matrix probs = predict_proba(model, x);
    std::vector<int> out(x.rows());
    for (std::size_t r = 0; r < x.rows(); ++r) {
        out[r] = argmax(probs.row(r));
    }
    return out;
}

struct TrainHistory {
    std::vector<double> loss;
    std::vector<double> accuracy;
};

struct TrainResult {
    LstmClassifier model;
    TrainHistory history;
};

/// Mini-batch Adam on mean cross-entropy. Per-epoch training loss and
/// accuracy are measured on the mini-batches as they are visited.
inline TrainResult train_classifier(const Matrix& x, std::span<const int> y, std::size_t k_classes,
                                    const LstmConfig& config)
{
    config.validate();
    if (y.size() != x.rows()) {
        throw Error(ErrorKind::LengthMismatch, "train_classifier: label count != rows");
    }
    if (k_classes < 2) {
        throw Error(ErrorKind::DegenerateClasses, "train_classifier needs at least 2 classes");
    }
    for (int label : y) {
        if (label < 0 || static_cast<std::size_t>(label) >= k_classes) {
            throw Error(ErrorKind::LabelOutOfRange, "label " + std::to_string(label));
        }
    }
    if (x.rows() == 0) {
        throw Error(ErrorKind::EmptyData, "train_classifier: no rows");
    }

    TrainResult result{make_classifier(x.cols(), k_classes, config), {}};
    LstmClassifier& model = result.model;
    auto params = model.parameters();
    nn::AdamState adam({config.learning_rate}, nn::block_sizes(params));
    SplitMix64 batch_rng(derive_seed(config.seed, 4001));

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        std::vector<std::size_t> order(x.rows());
        for (std::size_t i = 0; i < order.size(); ++i) {
            order[i] = i;
        }
        batch_rng.shuffle(order);
        double total_loss = 0.0;
        std::size_t correct = 0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t end = std::min(order.size(), start + config.batch_size);
            std::span<const std::size_t> batch(order.data() + start, end - start);
            std::vector<int> yb;
            yb.reserve(batch.size());
            for (auto i : batch) {
                yb.push_back(y[i]);
            }
            auto fwd = forward_batch(model, to_sequences(x.select_rows(batch), config.sequence_layout));
            for (std::size_t r = 0; r < batch.size(); ++r) {
                correct += argmax(fwd.probs.row(r)) == yb[r] ? 1 : 0;
            }
            auto grads = backward_batch(model, fwd, yb, config.clip_threshold);
            total_loss += grads.loss * static_cast<double>(batch.size());
            nn::adam_step(adam, params, grads.blocks());
        }
        result.history.loss.push_back(total_loss / static_cast<double>(x.rows()));
        result.history.accuracy.push_back(static_cast<double>(correct) / static_cast<double>(x.rows()));
    }
    return result;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

inline Json to_json(const LstmConfig& c)
{
    Json doc{{"hidden_dims", c.hidden_dims},
             {"epochs", c.epochs},
             {"learning_rate", c.learning_rate},
             {"batch_size", c.batch_size},
             {"sequence_layout", to_string(c.sequence_layout)},
             {"seed", c.seed}};
    doc["clip_threshold"] = c.clip_threshold ? Json(*c.clip_threshold) : Json(nullptr);
    return doc;
}

inline Json to_json(const LstmClassifier& model)
{
    Json cells = Json::array();
    for (const auto& cell : model.cells) {
        Json w = Json::object();
        Json b = Json::object();
        for (std::size_t g = 0; g < 4; ++g) {
            w[kGateNames[g]] = cell.weights[g].storage();
            b[kGateNames[g]] = cell.biases[g];
        }
        cells.push_back({{"input_dim", cell.input_dim}, {"hidden", cell.hidden}, {"weights", w}, {"biases", b}});
    }
    return {{"schema_version", kSchemaVersion},
            {"component", "lstm"},
            {"cells", cells},
            {"head", nn::to_json(model.head)},
            {"config", to_json(model.config)}};
}

inline LstmConfig lstm_config_from_json(const Json& doc)
{
    LstmConfig c;
    c.hidden_dims = doc.at("hidden_dims").get<std::vector<std::size_t>>();
    c.epochs = doc.at("epochs").get<std::size_t>();
    c.learning_rate = doc.at("learning_rate").get<double>();
    c.batch_size = doc.at("batch_size").get<std::size_t>();
    c.sequence_layout = layout_from_string(doc.at("sequence_layout").get<std::string>());
    c.seed = doc.at("seed").get<std::uint64_t>();
    if (doc.contains("clip_threshold") && !doc.at("clip_threshold").is_null()) {
        c.clip_threshold = doc.at("clip_threshold").get<double>();
    }
    return c;
}

inline LstmClassifier lstm_from_json(const Json& doc)
{
    if (doc.value("schema_version", 0) != kSchemaVersion || doc.value("component", std::string{}) != "lstm") {
        throw Error(ErrorKind::SchemaMismatch, "not an lstm model document");
    }
    LstmClassifier model;
    for (const auto& c : doc.at("cells")) {
        LstmCell cell = LstmCell::zeros(c.at("input_dim").get<std::size_t>(), c.at("hidden").get<std::size_t>());
        for (std::size_t g = 0; g < 4; ++g) {
            cell.weights[g] = Matrix(cell.hidden, cell.hidden + cell.input_dim,
                                     c.at("weights").at(kGateNames[g]).get<std::vector<double>>());
            cell.biases[g] = c.at("biases").at(kGateNames[g]).get<std::vector<double>>();
            if (cell.biases[g].size() != cell.hidden) {
                throw Error(ErrorKind::SchemaMismatch, "lstm bias length mismatch");
            }
        }
        model.cells.push_back(std::move(cell));
    }
    model.head = nn::layer_from_json(doc.at("head"));
    model.config = lstm_config_from_json(doc.at("config"));
    return model;
}

inline std::string history_csv(const TrainHistory& h)
{
    std::string out = "epoch,loss,accuracy\n";
    for (std::size_t e = 0; e < h.loss.size(); ++e) {
        out += std::to_string(e + 1) + "," + format_number(h.loss[e]) + "," + format_number(h.accuracy[e]) + "\n";
    }
    return out;
}

} // namespace ransae::lstm
