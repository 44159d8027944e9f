#pragma once

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

namespace ransae::sae {

using nn::Activation;
using nn::DenseLayer;

struct SAEConfig {
    std::vector<std::size_t> encoder_dims{75, 50, 13};
    Activation activation = Activation::relu;
    std::size_t epochs = 50;
    std::size_t batch_size = 128;
    double learning_rate = 1e-3;
    std::optional<double> convergence_threshold; // stop once an epoch's mean loss falls below this
    std::uint64_t seed = 1819;

    void validate() const
    {
        if (encoder_dims.empty()) {
            throw Error(ErrorKind::ConfigError, "sae.encoder_dims must be non-empty");
        }
        for (auto d : encoder_dims) {
            if (d == 0) {
                throw Error(ErrorKind::ConfigError, "sae.encoder_dims entries must be positive");
            }
        }
        if (batch_size == 0) {
            throw Error(ErrorKind::ConfigError, "sae.batch_size must be positive");
        }
        if (!(learning_rate > 0.0)) {
            throw Error(ErrorKind::ConfigError, "sae.learning_rate must be positive");
        }
    }
};

/// Encoders in forward order and decoders in the order they are applied
/// (mirror image), so the full reconstruction path is encoders ++ decoders.
struct SAEModel {
    std::vector<DenseLayer> encoders;
    std::vector<DenseLayer> decoders;
    std::vector<std::vector<double>> training_history; // per encoder layer, per-epoch mean loss
    double final_stack_loss = 0.0;

    std::size_t input_dim() const { return encoders.empty() ? 0 : encoders.front().in_dim(); }
    std::size_t output_dim() const { return encoders.empty() ? 0 : encoders.back().out_dim(); }

    std::vector<DenseLayer> stack() const
    {
        std::vector<DenseLayer> all = encoders;
        all.insert(all.end(), decoders.begin(), decoders.end());
        return all;
    }

    std::size_t parameter_count() const
    {
        std::size_t n = 0;
        for (const auto& l : encoders) {
            n += l.parameter_count();
        }
        for (const auto& l : decoders) {
            n += l.parameter_count();
        }
        return n;
    }
};

struct PretrainResult {
    DenseLayer encoder;
    DenseLayer decoder;
    std::vector<double> losses;
};

namespace detail {

/// Shuffled mini-batch index lists for one epoch.
inline std::vector<std::vector<std::size_t>> make_batches(std::size_t n, std::size_t batch_size, SplitMix64& rng)
{
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) {
        order[i] = i;
    }
    rng.shuffle(order);
    std::vector<std::vector<std::size_t>> batches;
    for (std::size_t start = 0; start < n; start += batch_size) {
        const std::size_t end = std::min(n, start + batch_size);
        batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                             order.begin() + static_cast<std::ptrdiff_t>(end));
    }
    return batches;
}

} // namespace detail

/// Train one d_in → hidden → d_in autoencoder on `data` by mini-batch Adam
/// under the per-sample squared reconstruction error. `layer_index` salts the
/// seed; the decoder uses `decoder_activation` (linear for the outermost layer).
inline PretrainResult pretrain_layer(const Matrix& data, std::size_t hidden_dim, const SAEConfig& config,
                                     std::size_t layer_index = 0,
                                     Activation decoder_activation = Activation::linear)
{
    if (data.rows() == 0 || data.cols() == 0) {
        throw Error(ErrorKind::EmptyData, "pretrain_layer: no training rows");
    }
    if (hidden_dim == 0) {
        throw Error(ErrorKind::InvalidArgument, "pretrain_layer: hidden_dim must be >= 1");
    }
    SplitMix64 init_rng(derive_seed(config.seed, 1000 + layer_index));
    std::vector<DenseLayer> ae{DenseLayer::glorot(data.cols(), hidden_dim, config.activation, init_rng),
                               DenseLayer::glorot(hidden_dim, data.cols(), decoder_activation, init_rng)};
    auto params = nn::parameter_views(ae);
    nn::AdamState adam({config.learning_rate}, nn::block_sizes(params));
    SplitMix64 batch_rng(derive_seed(config.seed, 2000 + layer_index));

    std::vector<double> losses;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        double total = 0.0;
        for (const auto& batch : detail::make_batches(data.rows(), config.batch_size, batch_rng)) {
            const Matrix x = data.select_rows(batch);
            auto fwd = nn::stack_forward(ae, x);
            auto loss = nn::mse_loss(fwd.output, x);
            total += loss.loss * static_cast<double>(batch.size());
            auto grads = nn::stack_backward(ae, fwd.caches, std::move(loss.grad));
            nn::adam_step(adam, params, nn::gradient_blocks(grads));
        }
        losses.push_back(total / static_cast<double>(data.rows()));
        if (config.convergence_threshold && losses.back() < *config.convergence_threshold) {
            break;
        }
    }
    return {std::move(ae[0]), std::move(ae[1]), std::move(losses)};
}

inline Matrix encode(const SAEModel& model, const Matrix& x)
{
    Matrix h = x;
    for (const auto& layer : model.encoders) {
        h = nn::dense_forward(layer, h).output;
    }
    return h;
}

inline Matrix reconstruct(const SAEModel& model, const Matrix& x)
{
    Matrix h = encode(model, x);
    for (const auto& layer : model.decoders) {
        h = nn::dense_forward(layer, h).output;
    }
    return h;
}

/// Greedy layerwise pretraining: autoencoder l is trained on the codes of
/// encoders 1..l-1, then all encoders and mirrored decoders are assembled.
/// Only the outermost decoder is linear; inner decoders reproduce codes of the
/// hidden activation.
inline SAEModel build_stack(const Matrix& data, const SAEConfig& config)
{
    config.validate();
    if (data.rows() == 0) {
        throw Error(ErrorKind::EmptyData, "build_stack: no training rows");
    }
    SAEModel model;
    std::vector<DenseLayer> decoders_inner_first;
    Matrix codes = data;
    for (std::size_t l = 0; l < config.encoder_dims.size(); ++l) {
        const Activation dec_act = l == 0 ? Activation::linear : config.activation;
        auto trained = pretrain_layer(codes, config.encoder_dims[l], config, l, dec_act);
        codes = nn::dense_forward(trained.encoder, codes).output;
        model.encoders.push_back(std::move(trained.encoder));
        decoders_inner_first.push_back(std::move(trained.decoder));
        model.training_history.push_back(std::move(trained.losses));
    }
    model.decoders.assign(decoders_inner_first.rbegin(), decoders_inner_first.rend());
    model.final_stack_loss = nn::mse_loss(reconstruct(model, data), data).loss;
    return model;
}

/// Reconstruction loss of the whole stack as a Differentiable unit.
struct StackReconstruction {
    std::vector<DenseLayer> layers;
    Matrix data;

    std::vector<std::span<double>> parameters() { return nn::parameter_views(layers); }

    double loss() const { return nn::mse_loss(nn::stack_forward(layers, data).output, data).loss; }

    std::vector<std::vector<double>> gradients() const
    {
        auto fwd = nn::stack_forward(layers, data);
        auto l = nn::mse_loss(fwd.output, data);
        return nn::gradient_blocks(nn::stack_backward(layers, fwd.caches, std::move(l.grad)));
    }
};

/// Encoder stack + softmax head under cross-entropy, as a Differentiable unit.
struct SupervisedStack {
    std::vector<DenseLayer> layers; // encoders followed by the softmax head
    Matrix x;
    std::vector<int> y;

    std::vector<std::span<double>> parameters() { return nn::parameter_views(layers); }

    double loss() const { return nn::cross_entropy_loss(nn::stack_forward(layers, x).output, y).loss; }

    std::vector<std::vector<double>> gradients() const
    {
        auto fwd = nn::stack_forward(layers, x);
        auto l = nn::cross_entropy_loss(fwd.output, y);
        return nn::gradient_blocks(nn::stack_backward(layers, fwd.caches, std::move(l.grad), true));
    }
};

struct FineTuneResult {
    SAEModel model;
    DenseLayer head;
    std::vector<double> losses;
};

/// Attach a softmax head to the encoders and jointly minimise cross-entropy
/// over encoder and head parameters. Decoders are left untouched.
inline FineTuneResult fine_tune(const SAEModel& model, const Matrix& x, std::span<const int> y, std::size_t k_classes,
                                const SAEConfig& config)
{
    if (k_classes < 2) {
        throw Error(ErrorKind::DegenerateClasses, "fine_tune needs at least 2 classes");
    }
    if (y.size() != x.rows()) {
        throw Error(ErrorKind::LengthMismatch, "fine_tune: label count != rows");
    }
    for (int label : y) {
        if (label < 0 || static_cast<std::size_t>(label) >= k_classes) {
            throw Error(ErrorKind::LabelOutOfRange, "label " + std::to_string(label));
        }
    }
    if (x.rows() == 0) {
        throw Error(ErrorKind::EmptyData, "fine_tune: no rows");
    }
    SplitMix64 init_rng(derive_seed(config.seed, 3000));
    std::vector<DenseLayer> layers = model.encoders;
    layers.push_back(DenseLayer::glorot(model.output_dim(), k_classes, Activation::softmax, init_rng));
    auto params = nn::parameter_views(layers);
    nn::AdamState adam({config.learning_rate}, nn::block_sizes(params));
    SplitMix64 batch_rng(derive_seed(config.seed, 3001));

    std::vector<double> losses;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        double total = 0.0;
        for (const auto& batch : detail::make_batches(x.rows(), config.batch_size, batch_rng)) {
            const Matrix xb = x.select_rows(batch);
            std::vector<int> yb;
            yb.reserve(batch.size());
            for (auto i : batch) {
                yb.push_back(y[i]);
            }
            auto fwd = nn::stack_forward(layers, xb);
            auto loss = nn::cross_entropy_loss(fwd.output, yb);
            total += loss.loss * static_cast<double>(batch.size());
            auto grads = nn::stack_backward(layers, fwd.caches, std::move(loss.grad), true);
            nn::adam_step(adam, params, nn::gradient_blocks(grads));
        }
        losses.push_back(total / static_cast<double>(x.rows()));
    }

    FineTuneResult out{model, layers.back(), std::move(losses)};
    out.model.encoders.assign(layers.begin(), layers.end() - 1);
    return out;
}

inline Json to_json(const SAEModel& model)
{
    Json doc = nn::model_to_json("sae", model.stack());
    doc["encoder_count"] = model.encoders.size();
    doc["training_history"] = model.training_history;
    doc["final_stack_loss"] = model.final_stack_loss;
    return doc;
}

inline SAEModel sae_from_json(const Json& doc)
{
    auto layers = nn::model_from_json(doc, "sae");
    const auto n_enc = doc.at("encoder_count").get<std::size_t>();
    if (n_enc > layers.size()) {
        throw Error(ErrorKind::SchemaMismatch, "encoder_count exceeds layer count");
    }
    SAEModel model;
    model.encoders.assign(layers.begin(), layers.begin() + static_cast<std::ptrdiff_t>(n_enc));
    model.decoders.assign(layers.begin() + static_cast<std::ptrdiff_t>(n_enc), layers.end());
    model.training_history = doc.value("training_history", std::vector<std::vector<double>>{});
    model.final_stack_loss = doc.value("final_stack_loss", 0.0);
    return model;
}

/// epoch,layer,loss rows (1-based epoch and layer).
inline std::string history_csv(const SAEModel& model)
{
    std::string out = "epoch,layer,loss\n";
    for (std::size_t l = 0; l < model.training_history.size(); ++l) {
        for (std::size_t e = 0; e < model.training_history[l].size(); ++e) {
            out += std::to_string(e + 1) + "," + std::to_string(l + 1) + "," +
                   format_number(model.training_history[l][e]) + "\n";
        }
    }
    return out;
}

} // namespace ransae::sae
