// Acceptance checks: one PASS / FAIL / SKIP line per criterion, measured values
// alongside. Exit status is non-zero when any criterion fails.
//
//   acceptance [--only N]...

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "ransae/analytics.hpp"
#include "ransae/pipeline.hpp"
#include "ransae/synthetic.hpp"

namespace fs = std::filesystem;
using namespace ransae;

namespace {

enum class Status { pass, fail, skip };

struct Outcome {
    Status status = Status::pass;
    std::string detail;
};

/// Collects sub-check results for one criterion.
class Checks {
public:
    void expect(bool ok, const std::string& what)
    {
        if (!ok) {
            failed_ = true;
        }
        notes_.push_back(std::string(ok ? "" : "FAILED ") + what);
    }

    void note(const std::string& what) { notes_.push_back(what); }

    Outcome outcome() const
    {
        std::string d;
        for (const auto& n : notes_) {
            d += (d.empty() ? "" : "; ") + n;
        }
        return {failed_ ? Status::fail : Status::pass, d};
    }

private:
    bool failed_ = false;
    std::vector<std::string> notes_;
};

std::string fmt(double v, int decimals = 6) { return format_fixed(v, decimals); }

std::string near_text(const std::string& name, double got, double want, double tol, int decimals = 6)
{
    return name + " " + fmt(got, decimals) + " (target " + fmt(want, decimals) + " +/- " + format_number(tol) + ")";
}

void expect_near(Checks& c, const std::string& name, double got, double want, double tol, int decimals = 6)
{
    c.expect(std::abs(got - want) <= tol, near_text(name, got, want, tol, decimals));
}

std::optional<fs::path> real_dataset()
{
    if (const char* env = std::getenv("RANSAE_UGRANSOME_CSV"); env && *env && fs::exists(env)) {
        return fs::path(env);
    }
#ifdef RANSAE_SOURCE_DIR
    const auto local = fs::path(RANSAE_SOURCE_DIR) / "data" / "UGRansome.csv";
    if (fs::exists(local)) {
        return local;
    }
#endif
    return std::nullopt;
}

fs::path fixture(const std::string& name)
{
#ifdef RANSAE_FIXTURE_DIR
    return fs::path(RANSAE_FIXTURE_DIR) / name;
#else
    return fs::path("tests/fixtures") / name;
#endif
}

fs::path fresh_dir(const std::string& name)
{
    const auto dir = fs::temp_directory_path() / ("ransae_acceptance_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

Matrix random_matrix(std::size_t rows, std::size_t cols, SplitMix64& rng, double lo = -1.0, double hi = 1.0)
{
    Matrix m(rows, cols);
    for (double& v : m.flat()) {
        v = rng.uniform(lo, hi);
    }
    return m;
}

/// Shift biases until no ReLU pre-activation sits within `margin` of zero.
void nudge_off_kinks(std::vector<nn::DenseLayer>& layers, const Matrix& x, double margin = 1e-3)
{
    for (int pass = 0; pass < 50; ++pass) {
        const auto fwd = nn::stack_forward(layers, x);
        bool moved = false;
        for (std::size_t l = 0; l < layers.size(); ++l) {
            if (layers[l].activation != nn::Activation::relu) {
                continue;
            }
            const Matrix& pre = fwd.caches[l].pre;
            for (std::size_t r = 0; r < pre.rows(); ++r) {
                for (std::size_t c = 0; c < pre.cols(); ++c) {
                    if (std::abs(pre(r, c)) < margin) {
                        layers[l].biases[c] += 10 * margin;
                        moved = true;
                    }
                }
            }
        }
        if (!moved) {
            return;
        }
    }
}

// ---------------------------------------------------------------------------
// 1. Parameter counts

Outcome parameter_counts()
{
    Checks c;
    sae::SAEConfig cfg;
    cfg.epochs = 1;
    SplitMix64 rng(1);
    const auto model = sae::build_stack(random_matrix(32, 13, rng, 0.0, 1.0), cfg);
    std::vector<std::size_t> layers;
    for (const auto& l : model.encoders) {
        layers.push_back(l.parameter_count());
    }
    for (const auto& l : model.decoders) {
        layers.push_back(l.parameter_count());
    }
    std::string per_layer;
    for (auto n : layers) {
        per_layer += (per_layer.empty() ? "" : ",") + std::to_string(n);
    }
    c.expect(model.parameter_count() == 11026, "SAE total " + std::to_string(model.parameter_count()));
    c.expect(layers == std::vector<std::size_t>{1050, 3800, 663, 700, 3825, 988}, "SAE layers (" + per_layer + ")");

    const auto lstm_model = lstm::make_classifier(13, 3, lstm::LstmConfig{});
    const std::size_t cell = lstm_model.cells.at(0).parameter_count();
    const std::size_t head = lstm_model.head.parameter_count();
    c.expect(cell == 122304 && head == 507 && lstm_model.parameter_count() == 122811,
             "LSTM " + std::to_string(lstm_model.parameter_count()) + " = " + std::to_string(cell) + " + " +
                 std::to_string(head));
    return c.outcome();
}

// ---------------------------------------------------------------------------
// 2. Gradient checks

lstm::LstmClassifier random_classifier(std::size_t d, std::vector<std::size_t> hidden, std::size_t k, std::uint64_t seed)
{
    lstm::LstmConfig cfg;
    cfg.hidden_dims = std::move(hidden);
    cfg.seed = seed;
    auto model = lstm::make_classifier(d, k, cfg);
    SplitMix64 rng(seed + 100);
    for (auto& cell : model.cells) {
        for (auto& b : cell.biases) {
            for (double& v : b) {
                v = rng.uniform(-0.5, 0.5);
            }
        }
    }
    for (double& v : model.head.biases) {
        v = rng.uniform(-0.5, 0.5);
    }
    return model;
}

double gbt_grad_hess_error()
{
    SplitMix64 rng(3);
    const Matrix s = random_matrix(6, 3, rng, -2.0, 2.0);
    const std::vector<int> y{0, 2, 1, 2, 0, 1};
    const auto gh = gbt::grad_hess(y, s);
    auto row_loss = [](const Matrix& m, std::size_t i, int label) {
        const Matrix row = m.select_rows(std::vector<std::size_t>{i});
        return -std::log(nn::softmax_rows(row)(0, static_cast<std::size_t>(label)));
    };
    const double eps = 1e-5;
    double worst = 0.0;
    for (std::size_t i = 0; i < s.rows(); ++i) {
        for (std::size_t k = 0; k < s.cols(); ++k) {
            Matrix up = s;
            Matrix down = s;
            up(i, k) += eps;
            down(i, k) -= eps;
            const double g_num = (row_loss(up, i, y[i]) - row_loss(down, i, y[i])) / (2 * eps);
            const double h_num = (gbt::grad_hess(y, up).g(i, k) - gbt::grad_hess(y, down).g(i, k)) / (2 * eps);
            worst = std::max(worst, std::abs(g_num - gh.g(i, k)) / std::max(std::abs(gh.g(i, k)), 1e-8));
            worst = std::max(worst, std::abs(h_num - gh.h(i, k)) / std::max(std::abs(gh.h(i, k)), 1e-8));
        }
    }
    return worst;
}

Outcome gradient_checks()
{
    using nn::Activation;
    using nn::DenseLayer;
    Checks c;
    SplitMix64 rng(21);

    // Dense layers under MSE: one sigmoid layer and a tanh/linear pair.
    {
        const Matrix x = random_matrix(5, 4, rng);
        sae::StackReconstruction single{{DenseLayer::glorot(4, 4, Activation::sigmoid, rng)}, x};
        sae::StackReconstruction pair{
            {DenseLayer::glorot(4, 3, Activation::tanh, rng), DenseLayer::glorot(3, 4, Activation::linear, rng)}, x};
        const double e = std::max(nn::grad_check(single), nn::grad_check(pair));
        c.expect(e <= 1e-4, "dense+MSE " + format_number(e));
    }
    // Softmax cross-entropy head.
    {
        sae::SupervisedStack p{{DenseLayer::glorot(4, 6, Activation::tanh, rng), DenseLayer::glorot(6, 3, Activation::softmax, rng)},
                               random_matrix(5, 4, rng),
                               {0, 1, 2, 2, 1}};
        const double e = nn::grad_check(p);
        c.expect(e <= 1e-4, "softmax+CE " + format_number(e));
    }
    // Full SAE stack with the default ReLU encoders.
    {
        const Matrix x = random_matrix(6, 13, rng, 0.0, 1.0);
        sae::SAEConfig cfg;
        cfg.encoder_dims = {9, 5};
        cfg.epochs = 1;
        cfg.batch_size = 6;
        sae::StackReconstruction p{sae::build_stack(x, cfg).stack(), x};
        nudge_off_kinks(p.layers, x);
        const double e = nn::grad_check(p);
        c.expect(e <= 1e-4, "SAE stack " + format_number(e));
    }
    // LSTM BPTT.
    {
        double worst = 0.0;
        for (std::size_t T : {1u, 2u, 5u}) {
            lstm::SequenceLoss p{random_classifier(2, {3}, 3, 20 + T), {}, {0, 2, 1}};
            for (std::size_t t = 0; t < T; ++t) {
                p.steps.push_back(random_matrix(3, 2, rng));
            }
            worst = std::max(worst, nn::grad_check(p));
        }
        c.expect(worst <= 1e-4, "LSTM BPTT T={1,2,5} " + format_number(worst));
    }
    const double gbt_err = gbt_grad_hess_error();
    c.expect(gbt_err <= 1e-6, "GBT grad/hess " + format_number(gbt_err));
    return c.outcome();
}

// ---------------------------------------------------------------------------
// 3. LSTM cell oracle

Outcome lstm_oracle()
{
    Checks c;
    lstm::LstmCell cell = lstm::LstmCell::zeros(1, 1);
    for (auto& w : cell.weights) {
        w = Matrix{{1.0, 1.0}};
    }
    const auto out = lstm::lstm_cell_forward(cell, std::vector<double>{1.0}, std::vector<double>{0.0},
                                             std::vector<double>{0.0});
    const double h = out.h[0];
    const double cs = out.c[0];

    const double gate = 1.0 / (1.0 + std::exp(-1.0));
    const double c_ref = gate * std::tanh(1.0);
    const double h_ref = gate * std::tanh(c_ref);

    expect_near(c, "h", h, 0.368603, 1e-5);
    expect_near(c, "c", cs, 0.556746, 1e-5);
    c.note("scalar evaluation sigmoid(1)*tanh(1) gives c " + fmt(c_ref) + ", h " + fmt(h_ref) + "; cell agrees to " +
           format_number(std::max(std::abs(h - h_ref), std::abs(cs - c_ref))));
    return c.outcome();
}

// ---------------------------------------------------------------------------
// 4. Metrics oracle

Outcome metrics_oracle()
{
    Checks c;
    SplitMix64 rng(2024);
    std::vector<int> truth(10000);
    std::vector<int> pred(10000);
    for (std::size_t i = 0; i < truth.size(); ++i) {
        truth[i] = static_cast<int>(rng.below(3));
        pred[i] = static_cast<int>(rng.below(3));
    }
    const auto r = metrics::report(metrics::confusion(truth, pred, 3));
    bool exact = true;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        correct += truth[i] == pred[i];
    }
    exact = exact && r.accuracy == static_cast<double>(correct) / 10000.0;
    for (int k = 0; k < 3; ++k) {
        std::size_t tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < truth.size(); ++i) {
            tp += truth[i] == k && pred[i] == k;
            fp += truth[i] != k && pred[i] == k;
            fn += truth[i] == k && pred[i] != k;
        }
        const double p = static_cast<double>(tp) / static_cast<double>(tp + fp);
        const double rc = static_cast<double>(tp) / static_cast<double>(tp + fn);
        const auto& m = r.classes[static_cast<std::size_t>(k)];
        exact = exact && m.precision == p && m.recall == rc && m.f1 == 2 * p * rc / (p + rc) && m.support == tp + fn;
    }
    c.expect(exact, "naive counting oracle on 10000 labels matches exactly");

    const auto table5 = metrics::report_from_json(read_json_file(fixture("sae_lstm_report.json")));
    expect_near(c, "class A F1", metrics::f1_score(table5.classes[0].precision, table5.classes[0].recall), 0.978953, 5e-6);
    std::vector<double> p;
    std::vector<std::size_t> s;
    for (const auto& m : table5.classes) {
        p.push_back(m.precision);
        s.push_back(m.support);
    }
    expect_near(c, "weighted precision", metrics::weighted_average(p, s), 0.985004, 5e-6);
    return c.outcome();
}

// ---------------------------------------------------------------------------
// 5. Dataset pipeline on the real CSV

Outcome dataset_pipeline()
{
    const auto path = real_dataset();
    if (!path) {
        return {Status::skip, "UGRansome CSV not found (set RANSAE_UGRANSOME_CSV or place it at data/UGRansome.csv)"};
    }
    Checks c;
    const auto art = pipeline::ingest(parse_csv_file(*path, RecordSchema::ugransome()), pipeline::PipelineConfig{});
    const auto& n = art.counts;
    c.expect(n.parsed == 207533, "parsed " + std::to_string(n.parsed));
    c.expect(n.deduplicated == 149042 && n.duplicates_removed == 58491,
             "after dedup " + std::to_string(n.deduplicated) + " (" + std::to_string(n.duplicates_removed) +
                 " removed, " + fmt(100.0 * static_cast<double>(n.duplicates_removed) / static_cast<double>(n.parsed), 1) +
                 "%)");
    c.expect(n.timestamp_cleaned == 147985, "after timestamp cleaning " + std::to_string(n.timestamp_cleaned));

    std::map<std::string, ColumnSummary> stats;
    for (const auto& s : art.stats) {
        stats[s.name] = s;
    }
    expect_near(c, "USD mean", stats["USD"].mean, 14873.43, 0.01, 2);
    expect_near(c, "USD std", stats["USD"].std, 26859.50, 0.01, 2);
    expect_near(c, "BTC mean", stats["BTC"].mean, 30.69, 0.01, 2);
    expect_near(c, "NetflowBytes mean", stats["NetflowBytes"].mean, 2021.17, 0.01, 2);

    const auto dist = analytics::malware_distribution(art.cleaned);
    const std::map<std::string, double> want{{"SSH", 33.0}, {"Spam", 31.0}, {"UDP Scan", 27.6}, {"NerisBonet", 8.3}};
    for (const auto& [name, pct] : want) {
        double got = 0.0;
        for (const auto& cat : dist.categories) {
            if (cat.category == name) {
                got = cat.percentage;
            }
        }
        expect_near(c, name + " %", got, pct, 0.5, 1);
    }

    const auto fin = analytics::financial_report(art.cleaned);
    auto top3 = [&](analytics::RankKey key) {
        std::set<std::string> out;
        for (const auto& f : analytics::rank_families(fin, key, 3)) {
            out.insert(f.family);
        }
        return out;
    };
    auto join = [](const std::set<std::string>& s) {
        std::string out;
        for (const auto& x : s) {
            out += (out.empty() ? "" : ",") + x;
        }
        return out;
    };
    const auto total = top3(analytics::RankKey::total_usd);
    const auto mean = top3(analytics::RankKey::mean_usd);
    c.expect(total == std::set<std::string>{"Locky", "SamSam", "WannaCry"}, "top-3 total USD {" + join(total) + "}");
    c.expect(mean == std::set<std::string>{"NoobCrypt", "EDA2", "DMALocker"}, "top-3 mean USD {" + join(mean) + "}");
    return c.outcome();
}

// ---------------------------------------------------------------------------
// 6. Desk-scale training on a 5% subsample

Outcome desk_scale_training()
{
    Checks c;
    const auto start = std::chrono::steady_clock::now();
    const fs::path dir = fresh_dir("training");
    fs::path csv;
    if (const auto real = real_dataset()) {
        csv = *real;
        c.note("data: " + csv.string());
    } else {
        csv = dir / "synthetic.csv";
        write_text_file(csv, synthetic::generate_csv(synthetic::SynthConfig{}));
        c.note("data: synthetic UGRansome-shaped table (real CSV absent)");
    }

    pipeline::PipelineConfig cfg;
    cfg.subsample = 0.05;
    cfg.sae.epochs = 50;
    cfg.lstm.epochs = 60;
    cfg.apply_seed();
    const auto art = pipeline::cmd_ingest(csv, cfg, dir / "dataset");
    c.note("rows " + std::to_string(art.counts.subsampled) + " (train " + std::to_string(art.counts.train) + ", test " +
           std::to_string(art.counts.test) + ")");

    const auto lstm_run = pipeline::cmd_train(pipeline::ModelKind::sae_lstm, dir / "dataset", cfg, dir / "sae-lstm");
    double worst_ratio = 0.0;
    for (const auto& hist : lstm_run.bundle.sae->training_history) {
        worst_ratio = std::max(worst_ratio, hist.back() / hist.front());
    }
    c.expect(worst_ratio < 0.5, "SAE last/first epoch loss, worst layer " + fmt(worst_ratio, 4) + " (target < 0.5)");
    const auto lstm_eval = pipeline::cmd_evaluate(dir / "sae-lstm" / "model.json", dir / "dataset", dir / "sae-lstm");
    c.expect(lstm_eval.report.accuracy >= 0.90,
             "SAE-LSTM test accuracy " + fmt(lstm_eval.report.accuracy, 4) + " after 60 epochs (target >= 0.90)");

    pipeline::cmd_train(pipeline::ModelKind::gbt, dir / "dataset", cfg, dir / "gbt");
    const auto gbt_eval = pipeline::cmd_evaluate(dir / "gbt" / "model.json", dir / "dataset", dir / "gbt");
    c.expect(gbt_eval.report.accuracy >= 0.85, "GBT test accuracy " + fmt(gbt_eval.report.accuracy, 4) + " (target >= 0.85)");

    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    c.note("runtime " + fmt(secs, 1) + " s");
    return c.outcome();
}

// ---------------------------------------------------------------------------
// 7. Comparison of the published reports

Outcome published_comparison()
{
    Checks c;
    const fs::path dir = fresh_dir("compare");
    const auto table = pipeline::cmd_compare(fixture("sae_lstm_report.json"), fixture("xgboost_report.json"), "sae-lstm",
                                             "xgboost", dir);
    const auto& acc = table.find("accuracy");
    expect_near(c, "accuracy delta", acc.delta, 0.0298, 1e-4, 6);
    c.expect(acc.winner == metrics::Winner::first, "winner " + metrics::winner_name(table, acc.winner));
    return c.outcome();
}

// ---------------------------------------------------------------------------
// 8. Determinism

std::map<std::string, std::string> tree_contents(const fs::path& root)
{
    std::map<std::string, std::string> out;
    for (const auto& e : fs::recursive_directory_iterator(root)) {
        if (e.is_regular_file()) {
            out[fs::relative(e.path(), root).generic_string()] = read_text_file(e.path());
        }
    }
    return out;
}

/// Every command once, all outputs under `dir`.
void run_every_command(const fs::path& dir)
{
    auto synth = synthetic::SynthConfig{}.scaled(0.004);
    write_text_file(dir / "input.csv", synthetic::generate_csv(synth));
    pipeline::PipelineConfig cfg;
    cfg.sae.epochs = 3;
    cfg.lstm.epochs = 3;
    cfg.gbt.rounds = 10;
    cfg.apply_seed();
    pipeline::cmd_ingest(dir / "input.csv", cfg, dir / "dataset");
    pipeline::cmd_train(pipeline::ModelKind::sae_lstm, dir / "dataset", cfg, dir / "sae-lstm");
    pipeline::cmd_train(pipeline::ModelKind::gbt, dir / "dataset", cfg, dir / "gbt");
    pipeline::cmd_evaluate(dir / "sae-lstm" / "model.json", dir / "dataset", dir / "sae-lstm");
    pipeline::cmd_evaluate(dir / "gbt" / "model.json", dir / "dataset", dir / "gbt");
    pipeline::cmd_compare(dir / "sae-lstm" / "report.json", dir / "gbt" / "report.json", "sae-lstm", "gbt",
                          dir / "compare");
    pipeline::cmd_analyze(dir / "dataset", dir / "analysis");
    pipeline::cmd_predict(dir / "gbt" / "model.json", dir / "input.csv", dir / "predictions.csv");
}

Outcome determinism()
{
    Checks c;
    const fs::path a = fresh_dir("determinism_a");
    const fs::path b = fresh_dir("determinism_b");
    run_every_command(a);
    run_every_command(b);
    const auto fa = tree_contents(a);
    const auto fb = tree_contents(b);
    std::vector<std::string> differing;
    for (const auto& [name, bytes] : fa) {
        const auto it = fb.find(name);
        if (it == fb.end() || it->second != bytes) {
            differing.push_back(name);
        }
    }
    c.expect(fa.size() == fb.size() && differing.empty(),
             std::to_string(fa.size()) + " artifacts compared, " + std::to_string(differing.size()) + " differ");
    for (const auto& d : differing) {
        c.note("differs: " + d);
    }
    return c.outcome();
}

} // namespace

int main(int argc, char** argv)
{
    std::set<int> only;
    for (int i = 1; i < argc; ++i) {
        if (std::string(argv[i]) == "--only" && i + 1 < argc) {
            only.insert(std::atoi(argv[++i]));
        }
    }
    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"parameter counts", parameter_counts},
        {"gradient checks", gradient_checks},
        {"LSTM cell oracle", lstm_oracle},
        {"metrics oracle", metrics_oracle},
        {"dataset pipeline", dataset_pipeline},
        {"desk-scale training", desk_scale_training},
        {"model comparison", published_comparison},
        {"determinism", determinism},
    };
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i + 1);
        if (!only.empty() && !only.contains(id)) {
            continue;
        }
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {Status::fail, std::string("exception: ") + e.what()};
        }
        const char* tag = o.status == Status::pass ? "PASS" : o.status == Status::fail ? "FAIL" : "SKIP";
        failures += o.status == Status::fail;
        std::cout << tag << " " << id << " " << criteria[i].first << ": " << o.detail << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
