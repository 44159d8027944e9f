#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "ransae/gbt.hpp"

using namespace ransae;
using namespace ransae::gbt;

namespace {

std::vector<std::size_t> all_rows(std::size_t n)
{
    std::vector<std::size_t> rows(n);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    return rows;
}

GbtParams plain(std::size_t k = 2)
{
    GbtParams p;
    p.k_classes = k;
    p.min_child_hessian = 0.0;
    return p;
}

/// Per-row loss −log softmax(s)[y], the quantity g and h differentiate.
double row_loss(const Matrix& s, std::size_t i, int y)
{
    const Matrix row = s.select_rows(std::vector<std::size_t>{i});
    return -std::log(nn::softmax_rows(row)(0, static_cast<std::size_t>(y)));
}

/// Second-order objective of a node with the given leaf weight.
double local_objective(double G, double H, double lambda, double w) { return G * w + 0.5 * (H + lambda) * w * w; }

FeatureMatrix separable_2class(std::size_t n, std::uint64_t seed)
{
    SplitMix64 rng(seed);
    FeatureMatrix fm{Matrix(n, 3), std::vector<int>(n), 2};
    for (std::size_t i = 0; i < n; ++i) {
        fm.y[i] = static_cast<int>(i % 2);
        fm.x(i, 0) = rng.uniform();
        fm.x(i, 1) = fm.y[i] == 0 ? rng.uniform(0.0, 0.45) : rng.uniform(0.55, 1.0);
        fm.x(i, 2) = rng.uniform();
    }
    return fm;
}

FeatureMatrix noisy_3class(std::size_t n, std::uint64_t seed)
{
    SplitMix64 rng(seed);
    FeatureMatrix fm{Matrix(n, 4), std::vector<int>(n), 3};
    for (std::size_t i = 0; i < n; ++i) {
        fm.y[i] = static_cast<int>(rng.below(3));
        for (std::size_t j = 0; j < 4; ++j) {
            fm.x(i, j) = rng.normal(0.3 * fm.y[i] * static_cast<double>(j % 2), 0.4);
        }
    }
    return fm;
}

} // namespace

// ---------------------------------------------------------------------------
// grad_hess

TEST(GradHess, UniformScores)
{
    const std::vector<int> y{0};
    const auto gh = grad_hess(y, Matrix(1, 3));
    EXPECT_NEAR(gh.g(0, 0), -2.0 / 3.0, 1e-15);
    EXPECT_NEAR(gh.g(0, 1), 1.0 / 3.0, 1e-15);
    EXPECT_NEAR(gh.g(0, 2), 1.0 / 3.0, 1e-15);
    for (std::size_t k = 0; k < 3; ++k) {
        EXPECT_NEAR(gh.h(0, k), 2.0 / 9.0, 1e-15);
    }
}

TEST(GradHess, ConfidentCorrectGivesNearZeroGradient)
{
    const std::vector<int> y{1};
    const auto gh = grad_hess(y, Matrix{{-30, 30, -30}});
    for (double g : gh.g.flat()) {
        EXPECT_LT(std::abs(g), 1e-12);
    }
}

TEST(GradHess, MatchesFiniteDifferences)
{
    SplitMix64 rng(3);
    Matrix s(4, 3);
    for (double& v : s.flat()) {
        v = rng.uniform(-2, 2);
    }
    const std::vector<int> y{0, 2, 1, 2};
    const auto gh = grad_hess(y, s);
    const double eps = 1e-5;
    double worst_g = 0;
    double worst_h = 0;
    for (std::size_t i = 0; i < 4; ++i) {
        for (std::size_t k = 0; k < 3; ++k) {
            Matrix up = s;
            Matrix down = s;
            up(i, k) += eps;
            down(i, k) -= eps;
            const double g_num = (row_loss(up, i, y[i]) - row_loss(down, i, y[i])) / (2 * eps);
            const double h_num = (grad_hess(y, up).g(i, k) - grad_hess(y, down).g(i, k)) / (2 * eps);
            worst_g = std::max(worst_g, std::abs(g_num - gh.g(i, k)) / std::max(std::abs(gh.g(i, k)), 1e-8));
            worst_h = std::max(worst_h, std::abs(h_num - gh.h(i, k)) / std::max(std::abs(gh.h(i, k)), 1e-8));
        }
    }
    EXPECT_LT(worst_g, 1e-6);
    EXPECT_LT(worst_h, 1e-6);
}

TEST(GradHess, Errors)
{
    const std::vector<int> bad{3};
    try {
        grad_hess(bad, Matrix(1, 3));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::LabelOutOfRange);
    }
    const std::vector<int> two{0, 1};
    EXPECT_THROW(grad_hess(two, Matrix(1, 3)), Error);
}

// ---------------------------------------------------------------------------
// best_split

TEST(BestSplit, HandGainExample)
{
    const Matrix x{{1}, {2}, {3}, {4}};
    const std::vector<double> g{-1, -1, 1, 1};
    const std::vector<double> h{1, 1, 1, 1};
    const auto split = best_split(all_rows(4), x, g, h, plain());
    ASSERT_TRUE(split.has_value());
    EXPECT_EQ(split->feature, 0u);
    EXPECT_GE(split->threshold, 2.0);
    EXPECT_LT(split->threshold, 3.0);
    EXPECT_NEAR(split->gain, 4.0 / 3.0, 1e-12);
}

TEST(BestSplit, ZeroGradientNoSplit)
{
    const Matrix x{{1}, {2}, {3}};
    const std::vector<double> g{0, 0, 0};
    const std::vector<double> h{1, 1, 1};
    EXPECT_FALSE(best_split(all_rows(3), x, g, h, plain()).has_value());
}

TEST(BestSplit, GammaAboveGainBlocksSplit)
{
    const Matrix x{{1}, {2}, {3}, {4}};
    const std::vector<double> g{-1, -1, 1, 1};
    const std::vector<double> h{1, 1, 1, 1};
    GbtParams p = plain();
    p.gamma = 1.5;
    EXPECT_FALSE(best_split(all_rows(4), x, g, h, p).has_value());
    p.gamma = 1.0;
    const auto split = best_split(all_rows(4), x, g, h, p);
    ASSERT_TRUE(split.has_value());
    EXPECT_NEAR(split->gain, 4.0 / 3.0 - 1.0, 1e-12);
}

TEST(BestSplit, MinChildHessianBlocksSplit)
{
    const Matrix x{{1}, {2}, {3}, {4}};
    const std::vector<double> g{-1, -1, 1, 1};
    const std::vector<double> h{1, 1, 1, 1};
    GbtParams p = plain();
    p.min_child_hessian = 2.5;
    EXPECT_FALSE(best_split(all_rows(4), x, g, h, p).has_value());
}

TEST(BestSplit, IdenticalRowsHaveNoThreshold)
{
    const Matrix x{{5, 5}, {5, 5}, {5, 5}};
    const std::vector<double> g{-1, 2, -1};
    const std::vector<double> h{1, 1, 1};
    EXPECT_FALSE(best_split(all_rows(3), x, g, h, plain()).has_value());
}

TEST(BestSplit, GainEqualsObjectiveReduction)
{
    SplitMix64 rng(5);
    for (int trial = 0; trial < 10; ++trial) {
        Matrix x(12, 2);
        std::vector<double> g(12);
        std::vector<double> h(12);
        for (std::size_t i = 0; i < 12; ++i) {
            x(i, 0) = rng.uniform();
            x(i, 1) = rng.uniform();
            g[i] = rng.uniform(-1, 1);
            h[i] = rng.uniform(0.1, 0.3);
        }
        GbtParams p = plain();
        p.gamma = 0.01;
        const auto split = best_split(all_rows(12), x, g, h, p);
        if (!split) {
            continue;
        }
        double G = 0, H = 0, GL = 0, HL = 0;
        for (std::size_t i = 0; i < 12; ++i) {
            G += g[i];
            H += h[i];
            if (x(i, split->feature) <= split->threshold) {
                GL += g[i];
                HL += h[i];
            }
        }
        const double GR = G - GL;
        const double HR = H - HL;
        auto best_obj = [&](double gs, double hs) { return local_objective(gs, hs, p.lambda, -gs / (hs + p.lambda)); };
        const double reduction = best_obj(G, H) - (best_obj(GL, HL) + best_obj(GR, HR));
        EXPECT_NEAR(reduction, split->gain + p.gamma, 1e-12);
    }
}

TEST(BestSplit, MonotoneTransformKeepsPartition)
{
    SplitMix64 rng(6);
    Matrix x(20, 1);
    std::vector<double> g(20);
    const std::vector<double> h(20, 0.25);
    for (std::size_t i = 0; i < 20; ++i) {
        x(i, 0) = rng.uniform(0.1, 2.0);
        g[i] = x(i, 0) > 1.1 ? 0.5 : -0.5;
        g[i] += rng.uniform(-0.1, 0.1);
    }
    Matrix y = x;
    for (double& v : y.flat()) {
        v = std::exp(3 * v);
    }
    const auto a = best_split(all_rows(20), x, g, h, plain());
    const auto b = best_split(all_rows(20), y, g, h, plain());
    ASSERT_TRUE(a && b);
    EXPECT_NEAR(a->gain, b->gain, 1e-12);
    for (std::size_t i = 0; i < 20; ++i) {
        EXPECT_EQ(x(i, 0) <= a->threshold, y(i, 0) <= b->threshold);
    }
}

// ---------------------------------------------------------------------------
// build_tree

TEST(BuildTree, SingleRowLeafWeight)
{
    const Matrix x{{0.5}};
    const std::vector<double> g{2};
    const std::vector<double> h{1};
    const auto tree = build_tree(all_rows(1), x, g, h, plain());
    ASSERT_EQ(tree.nodes.size(), 1u);
    EXPECT_DOUBLE_EQ(tree.nodes[0].weight, -1.0);
}

TEST(BuildTree, DepthOneIsStumpOrLeaf)
{
    SplitMix64 rng(7);
    Matrix x(30, 3);
    std::vector<double> g(30);
    const std::vector<double> h(30, 1);
    for (std::size_t i = 0; i < 30; ++i) {
        for (std::size_t j = 0; j < 3; ++j) {
            x(i, j) = rng.uniform();
        }
        g[i] = rng.uniform(-1, 1);
    }
    GbtParams p = plain();
    p.max_depth = 1;
    const auto tree = build_tree(all_rows(30), x, g, h, p);
    EXPECT_LE(tree.depth(), 1u);
    EXPECT_TRUE(tree.nodes.size() == 1 || tree.nodes.size() == 3);
    p.max_depth = 4;
    EXPECT_LE(build_tree(all_rows(30), x, g, h, p).depth(), 4u);
}

TEST(BuildTree, IdenticalRowsGiveSingleLeaf)
{
    const Matrix x{{1, 2}, {1, 2}, {1, 2}, {1, 2}};
    const std::vector<double> g{1, -1, 1, 1};
    const std::vector<double> h{1, 1, 1, 1};
    const auto tree = build_tree(all_rows(4), x, g, h, plain());
    EXPECT_EQ(tree.leaf_count(), 1u);
    EXPECT_DOUBLE_EQ(tree.nodes[0].weight, -2.0 / 5.0);
}

TEST(BuildTree, LeafWeightsAreLocalOptima)
{
    SplitMix64 rng(8);
    Matrix x(25, 2);
    std::vector<double> g(25);
    std::vector<double> h(25);
    for (std::size_t i = 0; i < 25; ++i) {
        x(i, 0) = rng.uniform();
        x(i, 1) = rng.uniform();
        g[i] = rng.uniform(-1, 1);
        h[i] = rng.uniform(0.2, 1.0);
    }
    GbtParams p = plain();
    p.max_depth = 3;
    const auto tree = build_tree(all_rows(25), x, g, h, p);
    // Gather G, H per leaf by routing rows.
    std::map<double, std::pair<double, double>> sums;
    for (std::size_t i = 0; i < 25; ++i) {
        auto& s = sums[tree.predict(x.row(i))];
        s.first += g[i];
        s.second += h[i];
    }
    for (const auto& [w, gh] : sums) {
        EXPECT_NEAR(w, -gh.first / (gh.second + p.lambda), 1e-12);
        const double at = local_objective(gh.first, gh.second, p.lambda, w);
        for (double d : {1e-3, -1e-3}) {
            EXPECT_GT(local_objective(gh.first, gh.second, p.lambda, w + d), at);
        }
    }
}

TEST(BuildTree, EmptyRowsRaise)
{
    const Matrix x{{1}};
    const std::vector<double> g{1};
    EXPECT_THROW(build_tree(std::vector<std::size_t>{}, x, g, g, plain()), Error);
}

// ---------------------------------------------------------------------------
// train_gbt / gbt_predict

TEST(Train, ZeroRoundsPredictsUniform)
{
    const auto fm = noisy_3class(30, 1);
    GbtParams p;
    p.rounds = 0;
    const auto model = train_gbt(fm, p);
    const Matrix probs = gbt_predict(model, fm.x);
    for (double v : probs.flat()) {
        EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
    }
    EXPECT_EQ(model.loss_history.size(), 1u);
}

TEST(Train, SeparableToyReachesPerfectAccuracy)
{
    const auto fm = separable_2class(60, 2);
    GbtParams p;
    p.k_classes = 2;
    p.rounds = 20;
    const auto model = train_gbt(fm, p);
    EXPECT_EQ(gbt_predict_labels(model, fm.x), fm.y);
    for (const auto& trees : model.trees) {
        EXPECT_EQ(trees.size(), 20u);
    }
}

TEST(Train, LossNonIncreasing)
{
    const auto fm = noisy_3class(200, 3);
    GbtParams p;
    p.rounds = 30;
    const auto model = train_gbt(fm, p);
    ASSERT_EQ(model.loss_history.size(), 31u);
    for (std::size_t r = 1; r < model.loss_history.size(); ++r) {
        EXPECT_LE(model.loss_history[r], model.loss_history[r - 1] + 1e-9) << "round " << r;
    }
}

TEST(Train, ProbabilitiesSumToOne)
{
    const auto fm = noisy_3class(100, 4);
    GbtParams p;
    p.rounds = 5;
    const Matrix probs = gbt_predict(train_gbt(fm, p), fm.x);
    for (std::size_t r = 0; r < probs.rows(); ++r) {
        double total = 0;
        for (double v : probs.row(r)) {
            total += v;
        }
        EXPECT_NEAR(total, 1.0, 1e-9);
    }
}

TEST(Train, HandStumpProbabilities)
{
    GbtModel model;
    model.n_features = 1;
    model.params.k_classes = 2;
    Tree stump0{{TreeNode{0, 0.5, 1, 2, 0}, TreeNode{-1, 0, -1, -1, 1.0}, TreeNode{-1, 0, -1, -1, -1.0}}};
    Tree stump1{{TreeNode{-1, 0, -1, -1, 0.0}}};
    model.trees = {{stump0}, {stump1}};
    const Matrix probs = gbt_predict(model, Matrix{{0.2}, {0.9}});
    const double e = std::exp(1.0);
    EXPECT_NEAR(probs(0, 0), e / (e + 1), 1e-15);
    EXPECT_NEAR(probs(1, 0), 1 / (1 + e), 1e-15);
}

TEST(Train, Errors)
{
    auto fm = noisy_3class(10, 5);
    GbtParams p;
    p.k_classes = 1;
    try {
        train_gbt(fm, p);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::DegenerateClasses);
    }
    p = GbtParams{};
    p.shrinkage = 0;
    EXPECT_THROW(train_gbt(fm, p), Error);
    p = GbtParams{};
    p.max_depth = 0;
    EXPECT_THROW(p.validate(), Error);
    const auto model = train_gbt(fm, GbtParams{.rounds = 1});
    try {
        gbt_predict(model, Matrix(2, 3));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::ShapeMismatch);
    }
}

TEST(Train, Deterministic)
{
    const auto fm = noisy_3class(80, 6);
    GbtParams p;
    p.rounds = 5;
    EXPECT_EQ(to_json(train_gbt(fm, p)).dump(), to_json(train_gbt(fm, p)).dump());
}

// ---------------------------------------------------------------------------
// Serialization

TEST(Serialization, RoundTripIsByteStable)
{
    const auto fm = noisy_3class(80, 7);
    GbtParams p;
    p.rounds = 4;
    const auto model = train_gbt(fm, p);
    const Json doc = to_json(model);
    const auto back = gbt_from_json(Json::parse(doc.dump()));
    EXPECT_EQ(to_json(back).dump(), doc.dump());
    EXPECT_EQ(gbt_predict(back, fm.x), gbt_predict(model, fm.x));
    EXPECT_EQ(back.loss_history, model.loss_history);
}

TEST(Serialization, HistoryCsv)
{
    const auto fm = noisy_3class(40, 8);
    GbtParams p;
    p.rounds = 3;
    const std::string csv = history_csv(train_gbt(fm, p));
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 5);
}
