#pragma once

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ransae/analytics.hpp"
#include "ransae/dataset.hpp"
#include "ransae/error.hpp"
#include "ransae/gbt.hpp"
#include "ransae/io.hpp"
#include "ransae/lstm.hpp"
#include "ransae/metrics.hpp"
#include "ransae/sae.hpp"

namespace ransae::pipeline {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct PipelineConfig {
    std::string dataset;
    std::string output_dir = "ransae-out";
    double test_ratio = 0.2;
    bool split_before_dedup = false;
    std::optional<double> subsample; // stratified fraction of rows kept before splitting
    std::uint64_t seed = 1819;
    sae::SAEConfig sae;
    lstm::LstmConfig lstm;
    gbt::GbtParams gbt;

    /// Push the single seed into every component config.
    void apply_seed()
    {
        sae.seed = seed;
        lstm.seed = seed;
    }

    void validate() const
    {
        if (!(test_ratio > 0.0 && test_ratio < 1.0)) {
            throw Error(ErrorKind::ConfigError, "test_ratio must lie in (0, 1)");
        }
        if (subsample && !(*subsample > 0.0 && *subsample <= 1.0)) {
            throw Error(ErrorKind::ConfigError, "subsample must lie in (0, 1]");
        }
        sae.validate();
        lstm.validate();
        gbt.validate();
    }
};

namespace detail {

inline void check_keys(const Json& obj, std::initializer_list<const char*> allowed, const std::string& where)
{
    if (!obj.is_object()) {
        throw Error(ErrorKind::ConfigError, where + " must be an object");
    }
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, value] : obj.items()) {
        if (!ok.contains(key)) {
            throw Error(ErrorKind::ConfigError, "unknown key '" + (where.empty() ? key : where + "." + key) + "'");
        }
    }
}

template <typename T>
void read(const Json& obj, const char* key, T& out, const std::string& where)
{
    if (!obj.contains(key)) {
        return;
    }
    try {
        out = obj.at(key).get<T>();
    } catch (const Json::exception&) {
        throw Error(ErrorKind::ConfigError, "bad value for '" + (where.empty() ? "" : where + ".") + key + "'");
    }
}

template <typename T>
void read_optional(const Json& obj, const char* key, std::optional<T>& out, const std::string& where)
{
    if (!obj.contains(key)) {
        return;
    }
    if (obj.at(key).is_null()) {
        out.reset();
        return;
    }
    T value{};
    read(obj, key, value, where);
    out = value;
}

inline Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

} // namespace detail

inline Json to_json(const PipelineConfig& c)
{
    return {{"dataset", c.dataset},
            {"output_dir", c.output_dir},
            {"test_ratio", c.test_ratio},
            {"split_before_dedup", c.split_before_dedup},
            {"subsample", detail::optional_json(c.subsample)},
            {"seed", c.seed},
            {"sae",
             {{"encoder_dims", c.sae.encoder_dims},
              {"activation", nn::to_string(c.sae.activation)},
              {"epochs", c.sae.epochs},
              {"batch_size", c.sae.batch_size},
              {"learning_rate", c.sae.learning_rate},
              {"convergence_threshold", detail::optional_json(c.sae.convergence_threshold)}}},
            {"lstm",
             {{"hidden_dims", c.lstm.hidden_dims},
              {"epochs", c.lstm.epochs},
              {"learning_rate", c.lstm.learning_rate},
              {"batch_size", c.lstm.batch_size},
              {"sequence_layout", lstm::to_string(c.lstm.sequence_layout)},
              {"clip_threshold", detail::optional_json(c.lstm.clip_threshold)}}},
            {"gbt",
             {{"gamma", c.gbt.gamma},
              {"lambda", c.gbt.lambda},
              {"shrinkage", c.gbt.shrinkage},
              {"max_depth", c.gbt.max_depth},
              {"rounds", c.gbt.rounds},
              {"min_child_hessian", c.gbt.min_child_hessian}}}};
}

/// Strict reader: every key is optional, unknown keys are a ConfigError.
inline PipelineConfig config_from_json(const Json& doc)
{
    using detail::read;
    PipelineConfig c;
    detail::check_keys(doc, {"dataset", "output_dir", "test_ratio", "split_before_dedup", "subsample", "seed", "sae",
                             "lstm", "gbt"},
                       "");
    read(doc, "dataset", c.dataset, "");
    read(doc, "output_dir", c.output_dir, "");
    read(doc, "test_ratio", c.test_ratio, "");
    read(doc, "split_before_dedup", c.split_before_dedup, "");
    detail::read_optional(doc, "subsample", c.subsample, "");
    read(doc, "seed", c.seed, "");
    if (doc.contains("sae")) {
        const Json& s = doc.at("sae");
        detail::check_keys(s, {"encoder_dims", "activation", "epochs", "batch_size", "learning_rate",
                               "convergence_threshold"},
                           "sae");
        read(s, "encoder_dims", c.sae.encoder_dims, "sae");
        std::string act = nn::to_string(c.sae.activation);
        read(s, "activation", act, "sae");
        c.sae.activation = nn::activation_from_string(act);
        read(s, "epochs", c.sae.epochs, "sae");
        read(s, "batch_size", c.sae.batch_size, "sae");
        read(s, "learning_rate", c.sae.learning_rate, "sae");
        detail::read_optional(s, "convergence_threshold", c.sae.convergence_threshold, "sae");
    }
    if (doc.contains("lstm")) {
        const Json& l = doc.at("lstm");
        detail::check_keys(l, {"hidden_dims", "epochs", "learning_rate", "batch_size", "sequence_layout",
                               "clip_threshold"},
                           "lstm");
        read(l, "hidden_dims", c.lstm.hidden_dims, "lstm");
        read(l, "epochs", c.lstm.epochs, "lstm");
        read(l, "learning_rate", c.lstm.learning_rate, "lstm");
        read(l, "batch_size", c.lstm.batch_size, "lstm");
        std::string layout = lstm::to_string(c.lstm.sequence_layout);
        read(l, "sequence_layout", layout, "lstm");
        try {
            c.lstm.sequence_layout = lstm::layout_from_string(layout);
        } catch (const Error& e) {
            throw Error(ErrorKind::ConfigError, e.detail());
        }
        detail::read_optional(l, "clip_threshold", c.lstm.clip_threshold, "lstm");
    }
    if (doc.contains("gbt")) {
        const Json& g = doc.at("gbt");
        detail::check_keys(g, {"gamma", "lambda", "shrinkage", "max_depth", "rounds", "min_child_hessian"}, "gbt");
        read(g, "gamma", c.gbt.gamma, "gbt");
        read(g, "lambda", c.gbt.lambda, "gbt");
        read(g, "shrinkage", c.gbt.shrinkage, "gbt");
        read(g, "max_depth", c.gbt.max_depth, "gbt");
        read(g, "rounds", c.gbt.rounds, "gbt");
        read(g, "min_child_hessian", c.gbt.min_child_hessian, "gbt");
    }
    c.apply_seed();
    return c;
}

inline PipelineConfig load_config(const fs::path& path)
{
    if (!fs::exists(path)) {
        throw Error(ErrorKind::IoError, "config file not found: " + path.string());
    }
    Json doc;
    try {
        doc = Json::parse(read_text_file(path));
    } catch (const Json::exception& e) {
        throw Error(ErrorKind::ConfigError, path.string() + ": " + e.what());
    }
    return config_from_json(doc);
}

// ---------------------------------------------------------------------------
// Dataset artifact
// ---------------------------------------------------------------------------

struct StageCounts {
    std::size_t parsed = 0;
    std::size_t deduplicated = 0;
    std::size_t duplicates_removed = 0;
    std::size_t timestamp_cleaned = 0;
    std::size_t timestamps_removed = 0;
    std::size_t subsampled = 0;
    std::size_t train = 0;
    std::size_t test = 0;
};

inline Json to_json(const StageCounts& s)
{
    return {{"parsed", s.parsed},
            {"deduplicated", s.deduplicated},
            {"duplicates_removed", s.duplicates_removed},
            {"timestamp_cleaned", s.timestamp_cleaned},
            {"timestamps_removed", s.timestamps_removed},
            {"subsampled", s.subsampled},
            {"train", s.train},
            {"test", s.test}};
}

inline StageCounts counts_from_json(const Json& doc)
{
    StageCounts s;
    s.parsed = doc.at("parsed").get<std::size_t>();
    s.deduplicated = doc.at("deduplicated").get<std::size_t>();
    s.duplicates_removed = doc.at("duplicates_removed").get<std::size_t>();
    s.timestamp_cleaned = doc.at("timestamp_cleaned").get<std::size_t>();
    s.timestamps_removed = doc.at("timestamps_removed").get<std::size_t>();
    s.subsampled = doc.at("subsampled").get<std::size_t>();
    s.train = doc.at("train").get<std::size_t>();
    s.test = doc.at("test").get<std::size_t>();
    return s;
}

/// Everything ingest produces. `cleaned` is the deduplicated, timestamp-cleaned
/// table (analytics input); `train`/`test` are the split classifier rows.
struct DatasetArtifact {
    Preprocessing prep;
    EncodedTable cleaned;
    EncodedTable train;
    EncodedTable test;
    StageCounts counts;
    std::vector<ColumnSummary> stats;
    Json config;
};

inline std::vector<std::size_t> class_counts(const EncodedTable& t)
{
    std::vector<std::size_t> out(t.maps.category_count(t.schema.target_column), 0);
    for (int y : target_labels(t)) {
        ++out[static_cast<std::size_t>(y)];
    }
    return out;
}

/// Keep a stratified `fraction` of rows, in original order.
inline EncodedTable stratified_subsample(const EncodedTable& t, double fraction, std::uint64_t seed)
{
    if (fraction >= 1.0) {
        return t;
    }
    const auto part = stratified_partition(target_labels(t), t.maps.category_count(t.schema.target_column), fraction,
                                           derive_seed(seed, 0x5b));
    return t.select_rows(part.test, "subsampled");
}

/// parse → encode → dedup → clean → (subsample) → split. With
/// `split_before_dedup`, the split is taken on the encoded table and only the
/// training part is deduplicated and cleaned.
inline DatasetArtifact ingest(const RawTable& raw, const PipelineConfig& config)
{
    config.validate();
    const RecordSchema schema = RecordSchema::ugransome();
    DatasetArtifact art;
    art.config = to_json(config);
    art.counts.parsed = raw.row_count();

    const EncodedTable encoded = label_encode(raw, schema);
    auto dedup = deduplicate(encoded);
    auto cleaned = clean_timestamps(dedup.table);
    art.counts.deduplicated = dedup.table.row_count();
    art.counts.duplicates_removed = dedup.removed;
    art.counts.timestamp_cleaned = cleaned.table.row_count();
    art.counts.timestamps_removed = cleaned.removed;
    art.cleaned = cleaned.table;

    const std::size_t k = encoded.maps.category_count(schema.target_column);
    const double fraction = config.subsample.value_or(1.0);
    if (config.split_before_dedup) {
        const EncodedTable pool = stratified_subsample(encoded, fraction, config.seed);
        art.counts.subsampled = pool.row_count();
        const auto part = stratified_partition(target_labels(pool), k, config.test_ratio, config.seed);
        art.train = clean_timestamps(deduplicate(pool.select_rows(part.train, "train")).table).table;
        art.test = pool.select_rows(part.test, "test");
    } else {
        const EncodedTable pool = stratified_subsample(art.cleaned, fraction, config.seed);
        art.counts.subsampled = pool.row_count();
        const auto part = stratified_partition(target_labels(pool), k, config.test_ratio, config.seed);
        art.train = pool.select_rows(part.train, "train");
        art.test = pool.select_rows(part.test, "test");
    }
    art.counts.train = art.train.row_count();
    art.counts.test = art.test.row_count();

    art.prep = {schema, encoded.maps, normalize(art.train).stats};
    art.stats = dataset_stats(art.cleaned);
    return art;
}

inline std::string ingest_report_text(const DatasetArtifact& art)
{
    const auto& c = art.counts;
    auto pct = [](std::size_t part, std::size_t whole) {
        return whole == 0 ? std::string("0.0") : format_fixed(100.0 * static_cast<double>(part) / static_cast<double>(whole), 1);
    };
    std::string out;
    out += "rows parsed:              " + std::to_string(c.parsed) + "\n";
    out += "after deduplication:      " + std::to_string(c.deduplicated) + " (" + std::to_string(c.duplicates_removed) +
           " removed, " + pct(c.duplicates_removed, c.parsed) + "%)\n";
    out += "after timestamp cleaning: " + std::to_string(c.timestamp_cleaned) + " (" +
           std::to_string(c.timestamps_removed) + " removed)\n";
    out += "rows used for split:      " + std::to_string(c.subsampled) + "\n";
    out += "train / test:             " + std::to_string(c.train) + " / " + std::to_string(c.test) + "\n\n";
    out += metrics::pad_right("column", 14) + metrics::pad_left("count", 10) + metrics::pad_left("mean", 14) +
           metrics::pad_left("std", 14) + metrics::pad_left("min", 12) + metrics::pad_left("median", 12) +
           metrics::pad_left("max", 14) + "\n";
    for (const auto& s : art.stats) {
        out += metrics::pad_right(s.name, 14) + metrics::pad_left(std::to_string(s.count), 10) +
               metrics::pad_left(format_fixed(s.mean, 2), 14) + metrics::pad_left(format_fixed(s.std, 2), 14) +
               metrics::pad_left(format_fixed(s.min, 2), 12) + metrics::pad_left(format_fixed(s.p50, 2), 12) +
               metrics::pad_left(format_fixed(s.max, 2), 14) + "\n";
    }
    return out;
}

inline std::string stats_csv(const std::vector<ColumnSummary>& stats)
{
    std::string out = "column,count,mean,std,min,p25,p50,p75,max\n";
    for (const auto& s : stats) {
        out += s.name + "," + std::to_string(s.count) + "," + format_number(s.mean) + "," + format_number(s.std) + "," +
               format_number(s.min) + "," + format_number(s.p25) + "," + format_number(s.p50) + "," +
               format_number(s.p75) + "," + format_number(s.max) + "\n";
    }
    return out;
}

inline Json ingest_report_json(const DatasetArtifact& art)
{
    Json stats = Json::array();
    for (const auto& s : art.stats) {
        stats.push_back(to_json(s));
    }
    const auto& names = art.prep.maps.categories(art.prep.schema.target_column);
    Json train_classes = Json::object();
    Json test_classes = Json::object();
    const auto tc = class_counts(art.train);
    const auto sc = class_counts(art.test);
    for (std::size_t i = 0; i < names.size(); ++i) {
        train_classes[names[i]] = tc[i];
        test_classes[names[i]] = sc[i];
    }
    return {{"schema_version", kSchemaVersion},
            {"counts", to_json(art.counts)},
            {"class_counts", {{"train", train_classes}, {"test", test_classes}}},
            {"stats", stats},
            {"config", art.config}};
}

inline void save_artifact(const DatasetArtifact& art, const fs::path& dir)
{
    const Json prep = preprocessing_to_json(art.prep.schema, art.prep.maps, art.prep.stats);
    write_text_file(dir / "dataset.json", dump_json({{"schema_version", kSchemaVersion},
                                                      {"component", "dataset"},
                                                      {"preprocessing", prep},
                                                      {"counts", to_json(art.counts)},
                                                      {"stats", ingest_report_json(art).at("stats")},
                                                      {"config", art.config}}));
    write_text_file(dir / "encoding.json", dump_json(art.prep.maps.to_json()));
    write_text_file(dir / "norm_stats.json", dump_json(art.prep.stats.to_json()));
    write_text_file(dir / "cleaned.csv", to_csv(decode(art.cleaned)));
    write_text_file(dir / "train.csv", to_csv(decode(art.train)));
    write_text_file(dir / "test.csv", to_csv(decode(art.test)));
    write_text_file(dir / "stats.csv", stats_csv(art.stats));
    write_text_file(dir / "ingest_report.json", dump_json(ingest_report_json(art)));
    write_text_file(dir / "ingest_report.txt", ingest_report_text(art));
}

inline EncodedTable load_table(const fs::path& path, const Preprocessing& prep)
{
    if (!fs::exists(path)) {
        throw Error(ErrorKind::IoError, "missing artifact file " + path.string());
    }
    try {
        return encode_with(parse_csv_file(path, prep.schema), prep.schema, prep.maps);
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::IoError) {
            throw;
        }
        throw Error(e.kind(), path.string() + ": " + e.detail());
    }
}

inline DatasetArtifact load_artifact(const fs::path& dir)
{
    const fs::path meta = dir / "dataset.json";
    if (!fs::exists(meta)) {
        throw Error(ErrorKind::IoError, "no dataset artifact at " + dir.string() + " (missing dataset.json)");
    }
    const Json doc = read_json_file(meta);
    if (doc.value("component", std::string{}) != "dataset" || doc.value("schema_version", 0) != kSchemaVersion) {
        throw Error(ErrorKind::SchemaMismatch, meta.string() + " is not a dataset artifact");
    }
    DatasetArtifact art;
    try {
        art.prep = preprocessing_from_json(doc.at("preprocessing"));
        art.counts = counts_from_json(doc.at("counts"));
        for (const auto& s : doc.at("stats")) {
            ColumnSummary c;
            c.name = s.at("name").get<std::string>();
            c.count = s.at("count").get<std::size_t>();
            c.mean = s.at("mean").get<double>();
            c.std = s.at("std").get<double>();
            c.min = s.at("min").get<double>();
            c.p25 = s.at("p25").get<double>();
            c.p50 = s.at("p50").get<double>();
            c.p75 = s.at("p75").get<double>();
            c.max = s.at("max").get<double>();
            art.stats.push_back(std::move(c));
        }
        art.config = doc.at("config");
    } catch (const Json::exception& e) {
        throw Error(ErrorKind::SchemaMismatch, meta.string() + ": " + e.what());
    }
    art.cleaned = load_table(dir / "cleaned.csv", art.prep);
    art.train = load_table(dir / "train.csv", art.prep);
    art.test = load_table(dir / "test.csv", art.prep);
    return art;
}

// ---------------------------------------------------------------------------
// Model bundle
// ---------------------------------------------------------------------------

enum class ModelKind { sae_lstm, gbt };

inline std::string to_string(ModelKind k) { return k == ModelKind::sae_lstm ? "sae-lstm" : "gbt"; }

inline ModelKind model_kind_from_string(const std::string& s)
{
    if (s == "sae-lstm") {
        return ModelKind::sae_lstm;
    }
    if (s == "gbt") {
        return ModelKind::gbt;
    }
    throw Error(ErrorKind::ConfigError, "unknown model kind '" + s + "' (expected sae-lstm or gbt)");
}

struct ModelBundle {
    ModelKind kind = ModelKind::sae_lstm;
    Preprocessing prep;
    std::optional<sae::SAEModel> sae;
    std::optional<lstm::LstmClassifier> lstm;
    std::optional<gbt::GbtModel> gbt;
    Json config;
};

/// Bundle document with a checksum over the compact dump of everything else.
inline Json to_json(const ModelBundle& b)
{
    Json doc{{"schema_version", kSchemaVersion},
             {"component", "bundle"},
             {"kind", to_string(b.kind)},
             {"preprocessing", preprocessing_to_json(b.prep.schema, b.prep.maps, b.prep.stats)},
             {"config", b.config}};
    if (b.sae) {
        doc["sae"] = sae::to_json(*b.sae);
    }
    if (b.lstm) {
        doc["lstm"] = lstm::to_json(*b.lstm);
    }
    if (b.gbt) {
        doc["gbt"] = gbt::to_json(*b.gbt);
    }
    doc["checksum"] = fnv1a_hex(doc.dump());
    return doc;
}

inline ModelBundle bundle_from_json(Json doc)
{
    if (doc.value("component", std::string{}) != "bundle" || doc.value("schema_version", 0) != kSchemaVersion) {
        throw Error(ErrorKind::SchemaMismatch, "not a model bundle of schema_version " + std::to_string(kSchemaVersion));
    }
    if (!doc.contains("checksum") || !doc.at("checksum").is_string()) {
        throw Error(ErrorKind::ChecksumMismatch, "bundle has no checksum");
    }
    const std::string stored = doc.at("checksum").get<std::string>();
    doc.erase("checksum");
    const std::string actual = fnv1a_hex(doc.dump());
    if (stored != actual) {
        throw Error(ErrorKind::ChecksumMismatch, "bundle checksum " + stored + " != computed " + actual);
    }
    ModelBundle b;
    try {
        b.kind = model_kind_from_string(doc.at("kind").get<std::string>());
        b.prep = preprocessing_from_json(doc.at("preprocessing"));
        b.config = doc.at("config");
        if (b.kind == ModelKind::sae_lstm) {
            b.sae = sae::sae_from_json(doc.at("sae"));
            b.lstm = lstm::lstm_from_json(doc.at("lstm"));
        } else {
            b.gbt = gbt::gbt_from_json(doc.at("gbt"));
        }
    } catch (const Json::exception& e) {
        throw Error(ErrorKind::SchemaMismatch, std::string("bundle: ") + e.what());
    } catch (const Error& e) {
        throw Error(ErrorKind::SchemaMismatch, "bundle: " + e.detail());
    }
    return b;
}

inline ModelBundle load_bundle(const fs::path& path)
{
    if (!fs::exists(path)) {
        throw Error(ErrorKind::IoError, "bundle not found: " + path.string());
    }
    return bundle_from_json(read_json_file(path));
}

/// Class probabilities for normalized features.
inline Matrix score(const ModelBundle& b, const Matrix& x)
{
    if (b.kind == ModelKind::sae_lstm) {
        return lstm::predict_proba(*b.lstm, sae::encode(*b.sae, x));
    }
    return gbt::gbt_predict(*b.gbt, x);
}

inline std::vector<int> predict_labels(const ModelBundle& b, const Matrix& x)
{
    const Matrix p = score(b, x);
    std::vector<int> out(p.rows());
    for (std::size_t r = 0; r < p.rows(); ++r) {
        out[r] = lstm::argmax(p.row(r));
    }
    return out;
}

inline bool same_preprocessing(const Preprocessing& a, const Preprocessing& b)
{
    return preprocessing_to_json(a.schema, a.maps, a.stats) == preprocessing_to_json(b.schema, b.maps, b.stats);
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

inline DatasetArtifact cmd_ingest(const fs::path& csv_path, const PipelineConfig& config, const fs::path& out_dir)
{
    config.validate();
    if (!fs::exists(csv_path)) {
        throw Error(ErrorKind::IoError, "input file not found: " + csv_path.string());
    }
    const RawTable raw = parse_csv_file(csv_path, RecordSchema::ugransome());
    DatasetArtifact art = ingest(raw, config);
    save_artifact(art, out_dir);
    return art;
}

struct TrainOutcome {
    ModelBundle bundle;
    std::string checksum;
};

inline TrainOutcome cmd_train(ModelKind kind, const fs::path& artifact_dir, PipelineConfig config,
                              const fs::path& out_dir)
{
    config.apply_seed();
    config.validate();
    const DatasetArtifact art = load_artifact(artifact_dir);
    const std::size_t k = art.prep.maps.category_count(art.prep.schema.target_column);
    const FeatureMatrix fm = normalize(art.train, art.prep.stats).features;
    if (fm.size() == 0) {
        throw Error(ErrorKind::EmptyData, "training split of " + artifact_dir.string() + " is empty");
    }

    ModelBundle b;
    b.kind = kind;
    b.prep = art.prep;
    b.config = to_json(config);
    if (kind == ModelKind::sae_lstm) {
        b.sae = sae::build_stack(fm.x, config.sae);
        auto trained = lstm::train_classifier(sae::encode(*b.sae, fm.x), fm.y, k, config.lstm);
        b.lstm = std::move(trained.model);
        write_text_file(out_dir / "sae_history.csv", sae::history_csv(*b.sae));
        write_text_file(out_dir / "lstm_history.csv", lstm::history_csv(trained.history));
    } else {
        gbt::GbtParams params = config.gbt;
        params.k_classes = k;
        b.gbt = gbt::train_gbt(fm, params);
        write_text_file(out_dir / "gbt_history.csv", gbt::history_csv(*b.gbt));
    }
    const Json doc = to_json(b);
    write_text_file(out_dir / "model.json", dump_json(doc));
    return {std::move(b), doc.at("checksum").get<std::string>()};
}

struct Evaluation {
    metrics::ConfusionMatrix confusion;
    metrics::MetricsReport report;
};

inline Evaluation evaluate(const ModelBundle& b, const EncodedTable& test)
{
    const FeatureMatrix fm = normalize(test, b.prep.stats).features;
    const auto& names = b.prep.maps.categories(b.prep.schema.target_column);
    auto cm = metrics::confusion(fm.y, predict_labels(b, fm.x), names.size(), names);
    auto rep = metrics::report(cm);
    return {std::move(cm), std::move(rep)};
}

inline Evaluation cmd_evaluate(const fs::path& bundle_path, const fs::path& artifact_dir, const fs::path& out_dir)
{
    const ModelBundle b = load_bundle(bundle_path);
    const DatasetArtifact art = load_artifact(artifact_dir);
    if (!same_preprocessing(b.prep, art.prep)) {
        throw Error(ErrorKind::SchemaMismatch,
                    "bundle preprocessing does not match dataset artifact " + artifact_dir.string());
    }
    Evaluation ev = evaluate(b, art.test);
    Json doc = metrics::to_json(ev.report);
    doc["model"] = to_string(b.kind);
    doc["config"] = b.config;
    write_text_file(out_dir / "report.txt", metrics::report_text(ev.report));
    write_text_file(out_dir / "report.csv", metrics::report_csv(ev.report));
    write_text_file(out_dir / "report.json", dump_json(doc));
    write_text_file(out_dir / "confusion.csv", metrics::confusion_csv(ev.confusion));
    return ev;
}

inline metrics::ComparisonTable cmd_compare(const fs::path& first, const fs::path& second, std::string first_name,
                                            std::string second_name, const fs::path& out_dir)
{
    auto load = [](const fs::path& p) {
        if (!fs::exists(p)) {
            throw Error(ErrorKind::IoError, "report not found: " + p.string());
        }
        try {
            return metrics::report_from_json(read_json_file(p));
        } catch (const Json::exception& e) {
            throw Error(ErrorKind::SchemaMismatch, p.string() + ": " + e.what());
        }
    };
    const auto table = metrics::compare(load(first), load(second), std::move(first_name), std::move(second_name));
    write_text_file(out_dir / "comparison.txt", metrics::comparison_text(table));
    write_text_file(out_dir / "comparison.csv", metrics::comparison_csv(table));
    write_text_file(out_dir / "comparison.json", dump_json(metrics::to_json(table)));
    return table;
}

/// Financial, distribution, correlation and anomaly reports over the cleaned table.
inline void cmd_analyze(const fs::path& artifact_dir, const fs::path& out_dir, std::size_t top_n = 3)
{
    using namespace analytics;
    const DatasetArtifact art = load_artifact(artifact_dir);
    const EncodedTable& t = art.cleaned;

    const auto fin = financial_report(t);
    const auto dist = malware_distribution(t);
    const auto anomalies = anomaly_by_family(t);
    std::optional<CorrelationMatrix> corr;
    if (t.row_count() >= 2) {
        corr = correlation_matrix(t);
    }

    Json rankings = Json::object();
    for (auto key : {RankKey::total_usd, RankKey::mean_usd, RankKey::attack_count}) {
        const auto ranked = fin.families.empty() ? std::vector<FamilyFinance>{} : rank_families(fin, key, top_n);
        write_text_file(out_dir / ("ranking_" + to_string(key) + ".csv"), ranking_csv(ranked, key));
        Json list = Json::array();
        for (const auto& f : ranked) {
            list.push_back(f.family);
        }
        rankings[to_string(key)] = list;
    }
    write_text_file(out_dir / "financial.csv", financial_csv(fin));
    write_text_file(out_dir / "distribution.csv", distribution_csv(dist));
    write_text_file(out_dir / "distribution.txt", distribution_text(dist));
    write_text_file(out_dir / "anomaly_by_family.csv", anomaly_csv(anomalies));
    if (corr) {
        write_text_file(out_dir / "correlation.csv", correlation_csv(*corr));
        write_text_file(out_dir / "correlation_long.csv", correlation_long_csv(*corr));
    } else {
        write_text_file(out_dir / "correlation.csv", "feature\n");
        write_text_file(out_dir / "correlation_long.csv", "feature_a,feature_b,r\n");
    }
    write_text_file(out_dir / "analytics.json", dump_json({{"schema_version", kSchemaVersion},
                                                            {"rows", t.row_count()},
                                                            {"financial", to_json(fin)},
                                                            {"rankings", rankings},
                                                            {"top_n", top_n},
                                                            {"distribution", to_json(dist)},
                                                            {"correlation", corr ? to_json(*corr) : Json(nullptr)},
                                                            {"anomaly_by_family", to_json(anomalies)},
                                                            {"config", art.config}}));
}

/// Score a raw UGRansome-schema CSV with a bundle; one line per input row.
inline std::string cmd_predict(const fs::path& bundle_path, const fs::path& csv_path, const fs::path& out_file)
{
    const ModelBundle b = load_bundle(bundle_path);
    if (!fs::exists(csv_path)) {
        throw Error(ErrorKind::IoError, "input file not found: " + csv_path.string());
    }
    const EncodedTable t = encode_with(parse_csv_file(csv_path, b.prep.schema), b.prep.schema, b.prep.maps);
    const FeatureMatrix fm = normalize(t, b.prep.stats).features;
    const Matrix p = score(b, fm.x);
    const auto& names = b.prep.maps.categories(b.prep.schema.target_column);
    std::string out = "row,predicted";
    for (const auto& n : names) {
        out += ",p_" + csv_escape(n);
    }
    out += "\n";
    for (std::size_t r = 0; r < p.rows(); ++r) {
        out += std::to_string(r) + "," + csv_escape(names[static_cast<std::size_t>(lstm::argmax(p.row(r)))]);
        for (double v : p.row(r)) {
            out += "," + format_number(v);
        }
        out += "\n";
    }
    write_text_file(out_file, out);
    return out;
}

} // namespace ransae::pipeline
