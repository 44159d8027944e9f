#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ransae/dataset.hpp"
#include "ransae/error.hpp"
#include "ransae/io.hpp"
#include "ransae/matrix.hpp"
#include "ransae/nn.hpp"

namespace ransae::gbt {

/// Regularised second-order boosting parameters. `lambda` = 1 reproduces the
/// plain ½Σw² weight penalty; `gamma` is the per-leaf cost.
struct GbtParams {
    double gamma = 0.0;
    double lambda = 1.0;
    double shrinkage = 0.3;
    std::size_t max_depth = 6;
    std::size_t rounds = 100;
    double min_child_hessian = 1.0;
    std::size_t k_classes = 3;

    void validate() const
    {
        if (!(gamma >= 0.0)) {
            throw Error(ErrorKind::ConfigError, "gbt.gamma must be >= 0");
        }
        if (!(lambda >= 0.0)) {
            throw Error(ErrorKind::ConfigError, "gbt.lambda must be >= 0");
        }
        if (!(shrinkage > 0.0 && shrinkage <= 1.0)) {
            throw Error(ErrorKind::ConfigError, "gbt.shrinkage must lie in (0, 1]");
        }
        if (max_depth < 1) {
            throw Error(ErrorKind::ConfigError, "gbt.max_depth must be >= 1");
        }
        if (!(min_child_hessian >= 0.0)) {
            throw Error(ErrorKind::ConfigError, "gbt.min_child_hessian must be >= 0");
        }
    }
};

/// Split node when `feature >= 0` (x[feature] <= threshold goes left), leaf otherwise.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double weight = 0.0;

    bool is_leaf() const noexcept { return feature < 0; }

    friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

/// Flat node array; nodes[0] is the root.
struct Tree {
    std::vector<TreeNode> nodes;

    double predict(std::span<const double> x) const
    {
        std::size_t i = 0;
        while (!nodes[i].is_leaf()) {
            const auto& n = nodes[i];
            i = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
        }
        return nodes[i].weight;
    }

    std::size_t leaf_count() const
    {
        return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
    }

    /// Number of split levels on the deepest path.
    std::size_t depth() const { return nodes.empty() ? 0 : depth_from(0); }

    friend bool operator==(const Tree&, const Tree&) = default;

private:
    std::size_t depth_from(std::size_t i) const
    {
        const auto& n = nodes[i];
        if (n.is_leaf()) {
            return 0;
        }
        return 1 + std::max(depth_from(static_cast<std::size_t>(n.left)), depth_from(static_cast<std::size_t>(n.right)));
    }
};

struct GbtModel {
    double base_score = 0.0;
    std::size_t n_features = 0;
    std::vector<std::vector<Tree>> trees; // [class][round]
    GbtParams params;
    std::vector<double> loss_history; // [0] before any round, then one entry per round
};

// ---------------------------------------------------------------------------
// Loss derivatives
// ---------------------------------------------------------------------------

struct GradHess {
    Matrix g;
    Matrix h;
};

/// Softmax cross-entropy derivatives w.r.t. raw scores: g = p − onehot, h = p(1 − p).
inline GradHess grad_hess(std::span<const int> labels, const Matrix& raw_scores)
{
    if (labels.size() != raw_scores.rows()) {
        throw Error(ErrorKind::LengthMismatch, "grad_hess: label count != rows");
    }
    const Matrix p = nn::softmax_rows(raw_scores);
    GradHess out{p, Matrix(p.rows(), p.cols())};
    for (std::size_t i = 0; i < p.rows(); ++i) {
        const int y = labels[i];
        if (y < 0 || static_cast<std::size_t>(y) >= p.cols()) {
            throw Error(ErrorKind::LabelOutOfRange, "label " + std::to_string(y));
        }
        out.g(i, static_cast<std::size_t>(y)) -= 1.0;
        for (std::size_t k = 0; k < p.cols(); ++k) {
            out.h(i, k) = p(i, k) * (1.0 - p(i, k));
        }
    }
    return out;
}

/// Mean softmax cross-entropy of raw scores.
inline double softmax_loss(std::span<const int> labels, const Matrix& raw_scores)
{
    const Matrix p = nn::softmax_rows(raw_scores);
    double total = 0.0;
    for (std::size_t i = 0; i < p.rows(); ++i) {
        total -= std::log(std::max(p(i, static_cast<std::size_t>(labels[i])), nn::kLogFloor));
    }
    return p.rows() == 0 ? 0.0 : total / static_cast<double>(p.rows());
}

// ---------------------------------------------------------------------------
// Split finding
// ---------------------------------------------------------------------------

struct SplitCandidate {
    std::size_t feature = 0;
    double threshold = 0.0;
    double gain = 0.0;
};

/// Gains at or below this are treated as no improvement (rounding noise).
inline constexpr double kMinGain = 1e-12;

/// Optimal leaf weight −G / (H + λ).
inline double leaf_weight(double g_sum, double h_sum, double lambda)
{
    const double denom = h_sum + lambda;
    return denom > 0.0 ? -g_sum / denom : 0.0;
}

namespace detail {

inline double score(double g_sum, double h_sum, double lambda)
{
    const double denom = h_sum + lambda;
    return denom > 0.0 ? g_sum * g_sum / denom : 0.0;
}

/// Threshold strictly below `hi` and at least `lo`, so x <= threshold
/// selects exactly the values <= lo.
inline double threshold_between(double lo, double hi)
{
    const double mid = lo + (hi - lo) / 2.0;
    return mid < hi ? mid : lo;
}

/// Exact greedy scan; `sorted[f]` lists the node's rows ordered by feature f.
inline std::optional<SplitCandidate> scan_splits(const std::vector<std::vector<std::size_t>>& sorted, const Matrix& x,
                                                 std::span<const double> g, std::span<const double> h,
                                                 const GbtParams& params)
{
    const auto& rows = sorted.front();
    double g_total = 0.0;
    double h_total = 0.0;
    for (auto r : rows) {
        g_total += g[r];
        h_total += h[r];
    }
    const double parent = score(g_total, h_total, params.lambda);
    std::optional<SplitCandidate> best;
    for (std::size_t f = 0; f < sorted.size(); ++f) {
        const auto& order = sorted[f];
        double gl = 0.0;
        double hl = 0.0;
        for (std::size_t i = 0; i + 1 < order.size(); ++i) {
            gl += g[order[i]];
            hl += h[order[i]];
            const double v = x(order[i], f);
            const double next = x(order[i + 1], f);
            if (!(v < next)) {
                continue;
            }
            const double gr = g_total - gl;
            const double hr = h_total - hl;
            if (hl < params.min_child_hessian || hr < params.min_child_hessian) {
                continue;
            }
            const double gain =
                0.5 * (score(gl, hl, params.lambda) + score(gr, hr, params.lambda) - parent) - params.gamma;
            if (gain > kMinGain && (!best || gain > best->gain)) {
                best = SplitCandidate{f, threshold_between(v, next), gain};
            }
        }
    }
    return best;
}

inline std::vector<std::vector<std::size_t>> sort_by_feature(std::span<const std::size_t> rows, const Matrix& x)
{
    std::vector<std::vector<std::size_t>> sorted(x.cols(), std::vector<std::size_t>(rows.begin(), rows.end()));
    for (std::size_t f = 0; f < x.cols(); ++f) {
        std::stable_sort(sorted[f].begin(), sorted[f].end(),
                         [&](std::size_t a, std::size_t b) { return x(a, f) < x(b, f); });
    }
    return sorted;
}

inline int grow(Tree& tree, std::vector<std::vector<std::size_t>> sorted, const Matrix& x, std::span<const double> g,
                std::span<const double> h, const GbtParams& params, std::size_t depth)
{
    const int index = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    const auto& rows = sorted.front();

    std::optional<SplitCandidate> split;
    if (depth < params.max_depth && rows.size() >= 2) {
        split = scan_splits(sorted, x, g, h, params);
    }
    if (!split) {
        double gs = 0.0;
        double hs = 0.0;
        for (auto r : rows) {
            gs += g[r];
            hs += h[r];
        }
        tree.nodes[static_cast<std::size_t>(index)].weight = leaf_weight(gs, hs, params.lambda);
        return index;
    }

    std::vector<char> goes_left(x.rows(), 0);
    for (auto r : rows) {
        goes_left[r] = x(r, split->feature) <= split->threshold ? 1 : 0;
    }
    std::vector<std::vector<std::size_t>> left(sorted.size());
    std::vector<std::vector<std::size_t>> right(sorted.size());
    for (std::size_t f = 0; f < sorted.size(); ++f) {
        for (auto r : sorted[f]) {
            (goes_left[r] ? left[f] : right[f]).push_back(r);
        }
    }
    sorted.clear();
    sorted.shrink_to_fit();

    const int l = grow(tree, std::move(left), x, g, h, params, depth + 1);
    const int r = grow(tree, std::move(right), x, g, h, params, depth + 1);
    auto& node = tree.nodes[static_cast<std::size_t>(index)];
    node.feature = static_cast<int>(split->feature);
    node.threshold = split->threshold;
    node.left = l;
    node.right = r;
    return index;
}

} // namespace detail

/// Best split of `rows` by second-order gain
/// ½[G_L²/(H_L+λ) + G_R²/(H_R+λ) − G²/(H+λ)] − γ, or nothing if no
/// candidate has positive gain with both children meeting min_child_hessian.
inline std::optional<SplitCandidate> best_split(std::span<const std::size_t> rows, const Matrix& x,
                                                std::span<const double> g, std::span<const double> h,
                                                const GbtParams& params)
{
    if (rows.size() < 2 || x.cols() == 0) {
        return std::nullopt;
    }
    return detail::scan_splits(detail::sort_by_feature(rows, x), x, g, h, params);
}

/// Grow a tree on `rows` down to params.max_depth; leaf weights are the raw
/// optimum −G/(H+λ), before shrinkage.
inline Tree build_tree(std::span<const std::size_t> rows, const Matrix& x, std::span<const double> g,
                       std::span<const double> h, const GbtParams& params, std::size_t depth = 0)
{
    if (rows.empty()) {
        throw Error(ErrorKind::EmptyData, "build_tree: no rows");
    }
    if (x.cols() == 0) {
        throw Error(ErrorKind::ShapeMismatch, "build_tree: no features");
    }
    Tree tree;
    detail::grow(tree, detail::sort_by_feature(rows, x), x, g, h, params, depth);
    return tree;
}

// ---------------------------------------------------------------------------
// Training and prediction
// ---------------------------------------------------------------------------

/// Raw additive scores Σ_k f_k(x) per class.
inline Matrix raw_scores(const GbtModel& model, const Matrix& x)
{
    if (x.cols() != model.n_features) {
        throw Error(ErrorKind::ShapeMismatch, "gbt: expected " + std::to_string(model.n_features) + " features, got " +
                                                  std::to_string(x.cols()));
    }
    Matrix scores(x.rows(), model.trees.size(), model.base_score);
    for (std::size_t k = 0; k < model.trees.size(); ++k) {
        for (const auto& tree : model.trees[k]) {
            for (std::size_t i = 0; i < x.rows(); ++i) {
                scores(i, k) += tree.predict(x.row(i));
            }
        }
    }
    return scores;
}

inline Matrix gbt_predict(const GbtModel& model, const Matrix& x) { return nn::softmax_rows(raw_scores(model, x)); }

inline std::vector<int> gbt_predict_labels(const GbtModel& model, const Matrix& x)
{
    const Matrix p = gbt_predict(model, x);
    std::vector<int> out(p.rows());
    for (std::size_t i = 0; i < p.rows(); ++i) {
        std::size_t best = 0;
        for (std::size_t k = 1; k < p.cols(); ++k) {
            if (p(i, k) > p(i, best)) {
                best = k;
            }
        }
        out[i] = static_cast<int>(best);
    }
    return out;
}

/// Each round fits one tree per class to the softmax g/h of the current
/// scores and adds its shrinkage-scaled output.
inline GbtModel train_gbt(const FeatureMatrix& fm, const GbtParams& params)
{
    params.validate();
    if (params.k_classes < 2) {
        throw Error(ErrorKind::DegenerateClasses, "gbt needs at least 2 classes");
    }
    for (int label : fm.y) {
        if (label < 0 || static_cast<std::size_t>(label) >= params.k_classes) {
            throw Error(ErrorKind::LabelOutOfRange, "label " + std::to_string(label));
        }
    }
    GbtModel model;
    model.params = params;
    model.n_features = fm.x.cols();
    model.trees.resize(params.k_classes);

    const std::size_t n = fm.x.rows();
    Matrix scores(n, params.k_classes, model.base_score);
    model.loss_history.push_back(softmax_loss(fm.y, scores));
    if (n == 0 || params.rounds == 0) {
        return model;
    }

    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), std::size_t{0});
    const auto presorted = detail::sort_by_feature(all, fm.x);

    std::vector<double> gk(n);
    std::vector<double> hk(n);
    for (std::size_t round = 0; round < params.rounds; ++round) {
        const auto gh = grad_hess(fm.y, scores);
        for (std::size_t k = 0; k < params.k_classes; ++k) {
            for (std::size_t i = 0; i < n; ++i) {
                gk[i] = gh.g(i, k);
                hk[i] = gh.h(i, k);
            }
            Tree tree;
            detail::grow(tree, presorted, fm.x, gk, hk, params, 0);
            for (auto& node : tree.nodes) {
                if (node.is_leaf()) {
                    node.weight *= params.shrinkage;
                }
            }
            for (std::size_t i = 0; i < n; ++i) {
                scores(i, k) += tree.predict(fm.x.row(i));
            }
            model.trees[k].push_back(std::move(tree));
        }
        model.loss_history.push_back(softmax_loss(fm.y, scores));
    }
    return model;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

inline Json to_json(const GbtParams& p)
{
    return {{"gamma", p.gamma},           {"lambda", p.lambda},        {"shrinkage", p.shrinkage},
            {"max_depth", p.max_depth},   {"rounds", p.rounds},        {"min_child_hessian", p.min_child_hessian},
            {"k_classes", p.k_classes}};
}

inline GbtParams params_from_json(const Json& doc)
{
    GbtParams p;
    p.gamma = doc.at("gamma").get<double>();
    p.lambda = doc.at("lambda").get<double>();
    p.shrinkage = doc.at("shrinkage").get<double>();
    p.max_depth = doc.at("max_depth").get<std::size_t>();
    p.rounds = doc.at("rounds").get<std::size_t>();
    p.min_child_hessian = doc.at("min_child_hessian").get<double>();
    p.k_classes = doc.at("k_classes").get<std::size_t>();
    return p;
}

inline Json to_json(const GbtModel& model)
{
    Json classes = Json::array();
    for (const auto& per_class : model.trees) {
        Json list = Json::array();
        for (const auto& tree : per_class) {
            Json t{{"feature", Json::array()}, {"threshold", Json::array()}, {"left", Json::array()},
                   {"right", Json::array()},   {"weight", Json::array()}};
            for (const auto& n : tree.nodes) {
                t["feature"].push_back(n.feature);
                t["threshold"].push_back(n.threshold);
                t["left"].push_back(n.left);
                t["right"].push_back(n.right);
                t["weight"].push_back(n.weight);
            }
            list.push_back(std::move(t));
        }
        classes.push_back(std::move(list));
    }
    return {{"schema_version", kSchemaVersion}, {"component", "gbt"},           {"params", to_json(model.params)},
            {"base_score", model.base_score},    {"n_features", model.n_features}, {"trees", classes},
            {"loss_history", model.loss_history}};
}

inline GbtModel gbt_from_json(const Json& doc)
{
    if (doc.value("schema_version", 0) != kSchemaVersion || doc.value("component", std::string{}) != "gbt") {
        throw Error(ErrorKind::SchemaMismatch, "not a gbt model document");
    }
    GbtModel model;
    model.params = params_from_json(doc.at("params"));
    model.base_score = doc.at("base_score").get<double>();
    model.n_features = doc.at("n_features").get<std::size_t>();
    model.loss_history = doc.value("loss_history", std::vector<double>{});
    for (const auto& per_class : doc.at("trees")) {
        std::vector<Tree> list;
        for (const auto& t : per_class) {
            Tree tree;
            const auto feature = t.at("feature").get<std::vector<int>>();
            const auto threshold = t.at("threshold").get<std::vector<double>>();
            const auto left = t.at("left").get<std::vector<int>>();
            const auto right = t.at("right").get<std::vector<int>>();
            const auto weight = t.at("weight").get<std::vector<double>>();
            if (threshold.size() != feature.size() || left.size() != feature.size() ||
                right.size() != feature.size() || weight.size() != feature.size() || feature.empty()) {
                throw Error(ErrorKind::SchemaMismatch, "malformed tree arrays");
            }
            const auto count = static_cast<int>(feature.size());
            for (std::size_t i = 0; i < feature.size(); ++i) {
                const auto self = static_cast<int>(i);
                if (feature[i] >= 0 && (static_cast<std::size_t>(feature[i]) >= model.n_features || left[i] <= self ||
                                        right[i] <= self || left[i] >= count || right[i] >= count)) {
                    throw Error(ErrorKind::SchemaMismatch, "tree node " + std::to_string(i) + " is malformed");
                }
                tree.nodes.push_back({feature[i], threshold[i], left[i], right[i], weight[i]});
            }
            list.push_back(std::move(tree));
        }
        model.trees.push_back(std::move(list));
    }
    return model;
}

inline std::string history_csv(const GbtModel& model)
{
    std::string out = "round,loss\n";
    for (std::size_t r = 0; r < model.loss_history.size(); ++r) {
        out += std::to_string(r) + "," + format_number(model.loss_history[r]) + "\n";
    }
    return out;
}

} // namespace ransae::gbt
