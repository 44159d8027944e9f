#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "ransae/dataset.hpp"
#include "ransae/sae.hpp"

using namespace ransae;
using namespace ransae::sae;
using nn::Activation;
using nn::DenseLayer;

namespace {

Matrix uniform_data(std::size_t rows, std::size_t cols, std::uint64_t seed)
{
    SplitMix64 rng(seed);
    Matrix m(rows, cols);
    for (double& v : m.flat()) {
        v = rng.uniform();
    }
    return m;
}

SAEConfig small_config(std::size_t epochs = 10)
{
    SAEConfig c;
    c.epochs = epochs;
    c.batch_size = 32;
    return c;
}

double accuracy(const std::vector<DenseLayer>& layers, const Matrix& x, const std::vector<int>& y)
{
    const Matrix p = nn::stack_forward(layers, x).output;
    std::size_t hits = 0;
    for (std::size_t r = 0; r < p.rows(); ++r) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < p.cols(); ++c) {
            if (p(r, c) > p(r, best)) {
                best = c;
            }
        }
        hits += static_cast<int>(best) == y[r] ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(y.size());
}

} // namespace

// ---------------------------------------------------------------------------
// pretrain_layer

TEST(Pretrain, ConstantRowsReconstruct)
{
    Matrix data(64, 13);
    for (std::size_t r = 0; r < 64; ++r) {
        for (std::size_t c = 0; c < 13; ++c) {
            data(r, c) = 0.1 + 0.05 * static_cast<double>(c);
        }
    }
    SAEConfig cfg = small_config(500);
    cfg.batch_size = 16;
    const auto res = pretrain_layer(data, 75, cfg);
    EXPECT_LT(res.losses.back(), 1e-3);
}

TEST(Pretrain, RandomDataLossDecreases)
{
    const auto res = pretrain_layer(uniform_data(200, 13, 3), 75, small_config(20));
    ASSERT_EQ(res.losses.size(), 20u);
    EXPECT_LT(res.losses.back(), res.losses.front());
    EXPECT_EQ(res.encoder.in_dim(), 13u);
    EXPECT_EQ(res.encoder.out_dim(), 75u);
    EXPECT_EQ(res.decoder.out_dim(), 13u);
    EXPECT_EQ(res.decoder.activation, Activation::linear);
}

TEST(Pretrain, ConvergenceThresholdStopsEarly)
{
    SAEConfig cfg = small_config(100);
    cfg.convergence_threshold = 1e9;
    const auto res = pretrain_layer(uniform_data(50, 4, 1), 3, cfg);
    EXPECT_EQ(res.losses.size(), 1u);
    EXPECT_LE(pretrain_layer(uniform_data(50, 4, 1), 3, small_config(7)).losses.size(), 7u);
}

TEST(Pretrain, Errors)
{
    try {
        pretrain_layer(Matrix(0, 13), 5, small_config());
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::EmptyData);
    }
    EXPECT_THROW(pretrain_layer(uniform_data(5, 3, 1), 0, small_config()), Error);
}

TEST(Pretrain, SingleSampleOverfits)
{
    SAEConfig cfg = small_config(3000);
    cfg.encoder_dims = {13};
    const Matrix one = uniform_data(1, 13, 17);
    const auto model = build_stack(one, cfg);
    EXPECT_LT(model.final_stack_loss, 1e-6);
    const Matrix xhat = reconstruct(model, one);
    for (std::size_t c = 0; c < 13; ++c) {
        EXPECT_NEAR(xhat(0, c), one(0, c), 1e-3);
    }
}

// ---------------------------------------------------------------------------
// build_stack

TEST(BuildStack, DefaultParameterCounts)
{
    const auto model = build_stack(uniform_data(40, 13, 5), small_config(1));
    EXPECT_EQ(model.parameter_count(), 11026u);
    std::vector<std::size_t> enc;
    std::vector<std::size_t> dec;
    for (const auto& l : model.encoders) {
        enc.push_back(l.parameter_count());
    }
    for (const auto& l : model.decoders) {
        dec.push_back(l.parameter_count());
    }
    EXPECT_EQ(enc, (std::vector<std::size_t>{1050, 3800, 663}));
    EXPECT_EQ(dec, (std::vector<std::size_t>{700, 3825, 988}));
    EXPECT_EQ(model.training_history.size(), 3u);
    EXPECT_EQ(model.decoders.back().activation, Activation::linear);
}

TEST(BuildStack, SingleLayerTrains)
{
    SAEConfig cfg = small_config(30);
    cfg.encoder_dims = {13};
    const auto model = build_stack(uniform_data(200, 13, 6), cfg);
    ASSERT_EQ(model.training_history.size(), 1u);
    EXPECT_LT(model.training_history[0].back(), model.training_history[0].front());
    EXPECT_EQ(model.encoders.size(), 1u);
    EXPECT_EQ(model.decoders.size(), 1u);
}

TEST(BuildStack, DeterministicPerSeed)
{
    const Matrix data = uniform_data(100, 13, 8);
    const auto a = build_stack(data, small_config(3));
    const auto b = build_stack(data, small_config(3));
    EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
    SAEConfig other = small_config(3);
    other.seed = 99;
    EXPECT_NE(to_json(build_stack(data, other)).dump(), to_json(a).dump());
}

TEST(BuildStack, PretrainingIgnoresLabels)
{
    // build_stack only sees features; two label vectors over the same x give
    // byte-identical models.
    const Matrix x = uniform_data(60, 13, 9);
    std::vector<int> y(60);
    for (std::size_t i = 0; i < y.size(); ++i) {
        y[i] = static_cast<int>(i % 3);
    }
    std::vector<int> permuted = y;
    SplitMix64 rng(4);
    rng.shuffle(permuted);
    FeatureMatrix a{x, y, 3};
    FeatureMatrix b{x, permuted, 3};
    EXPECT_EQ(to_json(build_stack(a.x, small_config(2))).dump(), to_json(build_stack(b.x, small_config(2))).dump());
}

TEST(BuildStack, ConfigValidation)
{
    SAEConfig cfg;
    cfg.encoder_dims = {};
    EXPECT_THROW(build_stack(uniform_data(4, 13, 1), cfg), Error);
    cfg.encoder_dims = {5, 0};
    EXPECT_THROW(build_stack(uniform_data(4, 13, 1), cfg), Error);
    cfg = SAEConfig{};
    cfg.learning_rate = 0;
    EXPECT_THROW(cfg.validate(), Error);
    EXPECT_THROW(build_stack(Matrix(0, 13), SAEConfig{}), Error);
}

// ---------------------------------------------------------------------------
// encode / reconstruct

TEST(Encode, ZeroWeightReluModelGivesZeros)
{
    SAEModel model;
    model.encoders = {DenseLayer::zeros(13, 75, Activation::relu), DenseLayer::zeros(75, 13, Activation::relu)};
    const Matrix codes = encode(model, uniform_data(5, 13, 2));
    ASSERT_EQ(codes.cols(), 13u);
    for (double v : codes.flat()) {
        EXPECT_EQ(v, 0.0);
    }
}

TEST(Encode, ReconstructMatchesRecordedLoss)
{
    const Matrix data = uniform_data(150, 13, 10);
    const auto model = build_stack(data, small_config(5));
    const double recomputed = nn::mse_loss(reconstruct(model, data), data).loss;
    EXPECT_NEAR(recomputed, model.final_stack_loss, 1e-9);
    const Matrix xhat = reconstruct(model, data);
    EXPECT_EQ(xhat.rows(), 150u);
    EXPECT_EQ(xhat.cols(), 13u);
}

TEST(Encode, RowwiseEqualsBatch)
{
    const Matrix data = uniform_data(30, 13, 11);
    const auto model = build_stack(data, small_config(2));
    const Matrix batch = encode(model, data);
    for (std::size_t r = 0; r < data.rows(); ++r) {
        const std::vector<std::size_t> idx{r};
        const Matrix single = encode(model, data.select_rows(idx));
        for (std::size_t c = 0; c < batch.cols(); ++c) {
            EXPECT_EQ(single(0, c), batch(r, c));
        }
    }
}

TEST(Encode, StackingEqualsLayerComposition)
{
    const Matrix data = uniform_data(20, 13, 12);
    const auto model = build_stack(data, small_config(2));
    Matrix h = data;
    for (const auto& layer : model.encoders) {
        h = nn::dense_forward(layer, h).output;
    }
    EXPECT_EQ(h, encode(model, data));
}

TEST(Encode, ShapeMismatchRaises)
{
    const auto model = build_stack(uniform_data(20, 13, 12), small_config(1));
    try {
        encode(model, Matrix(3, 12));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::ShapeMismatch);
    }
}

TEST(Reconstruct, PermutationControl)
{
    // Structured data: features are noisy functions of two latent factors, so
    // breaking the joint structure across columns makes reconstruction harder.
    SplitMix64 rng(13);
    Matrix data(300, 13);
    for (std::size_t r = 0; r < data.rows(); ++r) {
        const double a = rng.uniform();
        const double b = rng.uniform();
        for (std::size_t c = 0; c < 13; ++c) {
            const double w = static_cast<double>(c) / 12.0;
            data(r, c) = std::clamp(w * a + (1 - w) * b + 0.02 * rng.normal(), 0.0, 1.0);
        }
    }
    SAEConfig cfg = small_config(40);
    const auto model = build_stack(data, cfg);
    Matrix shuffled = data;
    for (std::size_t c = 0; c < 13; ++c) {
        std::vector<double> col(data.rows());
        for (std::size_t r = 0; r < data.rows(); ++r) {
            col[r] = data(r, c);
        }
        rng.shuffle(col);
        for (std::size_t r = 0; r < data.rows(); ++r) {
            shuffled(r, c) = col[r];
        }
    }
    const double train_err = nn::mse_loss(reconstruct(model, data), data).loss;
    const double perm_err = nn::mse_loss(reconstruct(model, shuffled), shuffled).loss;
    EXPECT_LE(train_err, perm_err);
}

// ---------------------------------------------------------------------------
// Gradient of the whole reconstruction path

TEST(StackGradient, FullStackPassesGradCheck)
{
    const Matrix data = uniform_data(6, 13, 14);
    SAEConfig cfg = small_config(1);
    cfg.encoder_dims = {9, 5};
    auto model = build_stack(data, cfg);
    StackReconstruction problem{model.stack(), data};
    // move relu pre-activations away from the kink
    for (int pass = 0; pass < 50; ++pass) {
        auto fwd = nn::stack_forward(problem.layers, data);
        bool moved = false;
        for (std::size_t l = 0; l < problem.layers.size(); ++l) {
            if (problem.layers[l].activation != Activation::relu) {
                continue;
            }
            for (std::size_t r = 0; r < data.rows(); ++r) {
                for (std::size_t c = 0; c < fwd.caches[l].pre.cols(); ++c) {
                    if (std::abs(fwd.caches[l].pre(r, c)) < 1e-3) {
                        problem.layers[l].biases[c] += 1e-2;
                        moved = true;
                    }
                }
            }
        }
        if (!moved) {
            break;
        }
    }
    EXPECT_LT(nn::grad_check(problem), 1e-4);
}

// ---------------------------------------------------------------------------
// fine_tune

TEST(FineTune, SeparableTwoClassReachesPerfectAccuracy)
{
    SplitMix64 rng(15);
    Matrix x(80, 4);
    std::vector<int> y(80);
    for (std::size_t r = 0; r < 80; ++r) {
        y[r] = static_cast<int>(r % 2);
        const double centre = y[r] == 0 ? 0.2 : 0.8;
        for (std::size_t c = 0; c < 4; ++c) {
            x(r, c) = centre + rng.uniform(-0.1, 0.1);
        }
    }
    SAEConfig cfg = small_config(10);
    cfg.encoder_dims = {6, 4};
    const auto model = build_stack(x, cfg);
    cfg.epochs = 200;
    const auto tuned = fine_tune(model, x, y, 2, cfg);
    ASSERT_EQ(tuned.losses.size(), 200u);
    EXPECT_LT(tuned.losses.back(), tuned.losses.front());
    auto layers = tuned.model.encoders;
    layers.push_back(tuned.head);
    EXPECT_EQ(accuracy(layers, x, y), 1.0);
    // decoders are not touched by fine-tuning
    EXPECT_TRUE(tuned.model.decoders[0] == model.decoders[0]);
}

TEST(FineTune, Errors)
{
    const Matrix x = uniform_data(10, 13, 1);
    const auto model = build_stack(x, small_config(1));
    std::vector<int> y(10, 0);
    try {
        fine_tune(model, x, y, 1, small_config(1));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::DegenerateClasses);
    }
    y[3] = 5;
    try {
        fine_tune(model, x, y, 3, small_config(1));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::LabelOutOfRange);
    }
    std::vector<int> short_y(4, 0);
    EXPECT_THROW(fine_tune(model, x, short_y, 3, small_config(1)), Error);
}

TEST(FineTune, SupervisedStackGradCheck)
{
    const Matrix x = uniform_data(5, 13, 16);
    SAEConfig cfg = small_config(1);
    cfg.encoder_dims = {6};
    cfg.activation = Activation::tanh;
    const auto model = build_stack(x, cfg);
    SplitMix64 rng(3);
    SupervisedStack problem{{model.encoders[0], DenseLayer::glorot(6, 3, Activation::softmax, rng)}, x, {0, 1, 2, 0, 1}};
    EXPECT_LT(nn::grad_check(problem), 1e-4);
}

// ---------------------------------------------------------------------------
// Serialization

TEST(Serialization, RoundTripIsByteStable)
{
    const auto model = build_stack(uniform_data(30, 13, 18), small_config(2));
    const Json doc = to_json(model);
    const auto back = sae_from_json(Json::parse(doc.dump()));
    EXPECT_EQ(to_json(back).dump(), doc.dump());
    EXPECT_EQ(encode(back, uniform_data(4, 13, 2)), encode(model, uniform_data(4, 13, 2)));
    EXPECT_EQ(back.training_history, model.training_history);
}

TEST(Serialization, HistoryCsv)
{
    const auto model = build_stack(uniform_data(30, 13, 18), small_config(2));
    const std::string csv = history_csv(model);
    EXPECT_EQ(csv.rfind("epoch,layer,loss\n", 0), 0u);
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 3 * 2);
}
