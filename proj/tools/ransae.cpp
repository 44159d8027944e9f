// ransae: command-line front end for the ransomware classification pipeline.
//
//   ransae synth    --out data.csv [--fraction F]
//   ransae ingest   data.csv [--config cfg.json] [--out DIR]
//   ransae train    sae-lstm|gbt [--data DIR] [--out DIR]
//   ransae evaluate BUNDLE [--data DIR] [--out DIR]
//   ransae compare  REPORT_A REPORT_B [--names A B] [--out DIR]
//   ransae analyze  [--data DIR] [--out DIR]
//   ransae predict  BUNDLE data.csv [--out FILE]
//
// Exit codes: 0 success, 1 config/validation, 2 I/O, 3 data.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "ransae/pipeline.hpp"
#include "ransae/synthetic.hpp"

namespace fs = std::filesystem;
using namespace ransae;

namespace {

struct Options {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<double> test_ratio;
    std::optional<double> subsample;
    bool split_before_dedup = false;
    std::optional<std::size_t> sae_epochs;
    std::optional<std::size_t> lstm_epochs;
    std::optional<std::size_t> gbt_rounds;
};

/// Config file first, then command-line overrides.
pipeline::PipelineConfig resolve(const Options& o)
{
    pipeline::PipelineConfig c = o.config_path.empty() ? pipeline::PipelineConfig{} : pipeline::load_config(o.config_path);
    if (o.seed) {
        c.seed = *o.seed;
    }
    if (o.test_ratio) {
        c.test_ratio = *o.test_ratio;
    }
    if (o.subsample) {
        c.subsample = *o.subsample;
    }
    if (o.split_before_dedup) {
        c.split_before_dedup = true;
    }
    if (o.sae_epochs) {
        c.sae.epochs = *o.sae_epochs;
    }
    if (o.lstm_epochs) {
        c.lstm.epochs = *o.lstm_epochs;
    }
    if (o.gbt_rounds) {
        c.gbt.rounds = *o.gbt_rounds;
    }
    c.apply_seed();
    c.validate();
    return c;
}

fs::path or_default(const std::string& given, const fs::path& fallback)
{
    return given.empty() ? fallback : fs::path(given);
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Ransomware classification pipeline: ingest, SAE-LSTM / GBT training, evaluation, analytics"};
    app.require_subcommand(1);

    Options opt;
    auto add_common = [&opt](CLI::App* sub) {
        sub->add_option("-c,--config", opt.config_path, "JSON config file");
        sub->add_option("--seed", opt.seed, "Seed for every random stream (default 1819)");
    };

    std::string out;
    std::string data_dir;

    auto* synth = app.add_subcommand("synth", "Write a synthetic UGRansome-shaped CSV");
    double fraction = 1.0;
    synth->add_option("-o,--out", out, "Output CSV")->required();
    synth->add_option("--fraction", fraction, "Scale of the default row counts")->check(CLI::PositiveNumber);
    synth->add_option("--seed", opt.seed, "Generator seed (default 1819)");

    auto* ingest = app.add_subcommand("ingest", "Parse, encode, deduplicate, clean, normalize and split a CSV");
    std::string csv_path;
    ingest->add_option("csv", csv_path, "UGRansome-schema CSV (defaults to the config's dataset)");
    ingest->add_option("-o,--out", out, "Artifact directory (default <output_dir>/dataset)");
    ingest->add_option("--test-ratio", opt.test_ratio, "Test fraction per class");
    ingest->add_option("--subsample", opt.subsample, "Stratified fraction of rows kept before splitting");
    ingest->add_flag("--split-before-dedup", opt.split_before_dedup, "Split the raw table, clean only the train part");
    add_common(ingest);

    auto* train = app.add_subcommand("train", "Train a model bundle");
    std::string kind_name;
    train->add_option("kind", kind_name, "sae-lstm or gbt")->required();
    train->add_option("-d,--data", data_dir, "Dataset artifact directory (default <output_dir>/dataset)");
    train->add_option("-o,--out", out, "Bundle directory (default <output_dir>/<kind>)");
    train->add_option("--sae-epochs", opt.sae_epochs, "SAE epochs per layer");
    train->add_option("--lstm-epochs", opt.lstm_epochs, "LSTM epochs");
    train->add_option("--gbt-rounds", opt.gbt_rounds, "Boosting rounds");
    add_common(train);

    auto* evaluate = app.add_subcommand("evaluate", "Score a bundle on the artifact's test split");
    std::string bundle_path;
    evaluate->add_option("bundle", bundle_path, "model.json")->required();
    evaluate->add_option("-d,--data", data_dir, "Dataset artifact directory (default <output_dir>/dataset)");
    evaluate->add_option("-o,--out", out, "Report directory (default: the bundle's directory)");
    add_common(evaluate);

    auto* compare = app.add_subcommand("compare", "Metric-by-metric comparison of two report.json files");
    std::string report_a;
    std::string report_b;
    std::vector<std::string> names{"first", "second"};
    compare->add_option("first", report_a, "First report.json")->required();
    compare->add_option("second", report_b, "Second report.json")->required();
    compare->add_option("--names", names, "Display names for the two reports")->expected(2);
    compare->add_option("-o,--out", out, "Output directory (default <output_dir>/compare)");
    add_common(compare);

    auto* analyze = app.add_subcommand("analyze", "Financial, malware, correlation and anomaly reports");
    std::size_t top_n = 3;
    analyze->add_option("-d,--data", data_dir, "Dataset artifact directory (default <output_dir>/dataset)");
    analyze->add_option("-o,--out", out, "Output directory (default <output_dir>/analysis)");
    analyze->add_option("--top", top_n, "Families per ranking")->check(CLI::PositiveNumber);
    add_common(analyze);

    auto* predict = app.add_subcommand("predict", "Classify the rows of a CSV with a bundle");
    predict->add_option("bundle", bundle_path, "model.json")->required();
    predict->add_option("csv", csv_path, "UGRansome-schema CSV")->required();
    predict->add_option("-o,--out", out, "Predictions CSV (default predictions.csv)");
    add_common(predict);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (synth->parsed()) {
            auto cfg = synthetic::SynthConfig{}.scaled(fraction);
            cfg.seed = opt.seed.value_or(1819);
            write_text_file(out, synthetic::generate_csv(cfg));
            std::cout << "wrote " << cfg.total_rows() << " rows to " << out << "\n";
            return 0;
        }

        const auto config = resolve(opt);
        const fs::path root = config.output_dir;
        const fs::path data = or_default(data_dir, root / "dataset");

        if (ingest->parsed()) {
            const std::string input = csv_path.empty() ? config.dataset : csv_path;
            if (input.empty()) {
                throw Error(ErrorKind::ConfigError, "no input CSV given (argument or config 'dataset')");
            }
            const fs::path dest = or_default(out, root / "dataset");
            const auto art = pipeline::cmd_ingest(input, config, dest);
            std::cout << pipeline::ingest_report_text(art) << "\nartifact written to " << dest.string() << "\n";
        } else if (train->parsed()) {
            const auto kind = pipeline::model_kind_from_string(kind_name);
            const fs::path dest = or_default(out, root / pipeline::to_string(kind));
            const auto outcome = pipeline::cmd_train(kind, data, config, dest);
            std::cout << "bundle " << (dest / "model.json").string() << " checksum " << outcome.checksum << "\n";
        } else if (evaluate->parsed()) {
            const fs::path dest = or_default(out, fs::path(bundle_path).parent_path());
            const auto ev = pipeline::cmd_evaluate(bundle_path, data, dest);
            std::cout << metrics::report_text(ev.report);
        } else if (compare->parsed()) {
            const fs::path dest = or_default(out, root / "compare");
            const auto table = pipeline::cmd_compare(report_a, report_b, names.at(0), names.at(1), dest);
            std::cout << metrics::comparison_text(table);
        } else if (analyze->parsed()) {
            const fs::path dest = or_default(out, root / "analysis");
            pipeline::cmd_analyze(data, dest, top_n);
            std::cout << read_text_file(dest / "distribution.txt") << "reports written to " << dest.string() << "\n";
        } else if (predict->parsed()) {
            const fs::path dest = or_default(out, "predictions.csv");
            pipeline::cmd_predict(bundle_path, csv_path, dest);
            std::cout << "predictions written to " << dest.string() << "\n";
        }
        return 0;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e.kind());
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: IoError: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
