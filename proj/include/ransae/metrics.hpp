#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ransae/error.hpp"
#include "ransae/io.hpp"

namespace ransae::metrics {

/// counts[i][j] = samples of true class i predicted as class j.
struct ConfusionMatrix {
    std::vector<std::vector<std::size_t>> counts;
    std::vector<std::string> class_names;

    std::size_t k() const noexcept { return counts.size(); }

    std::size_t total() const noexcept
    {
        std::size_t n = 0;
        for (const auto& row : counts) {
            for (auto c : row) {
                n += c;
            }
        }
        return n;
    }
};

inline std::vector<std::string> default_class_names(std::size_t k)
{
    std::vector<std::string> names;
    for (std::size_t i = 0; i < k; ++i) {
        names.push_back(std::to_string(i));
    }
    return names;
}

inline ConfusionMatrix confusion(std::span<const int> y_true, std::span<const int> y_pred, std::size_t k,
                                 std::vector<std::string> class_names = {})
{
    if (y_true.size() != y_pred.size()) {
        throw Error(ErrorKind::LengthMismatch, "confusion: " + std::to_string(y_true.size()) + " true vs " +
                                                   std::to_string(y_pred.size()) + " predicted labels");
    }
    if (class_names.empty()) {
        class_names = default_class_names(k);
    }
    if (class_names.size() != k) {
        throw Error(ErrorKind::ClassSetMismatch, "class name count != k");
    }
    ConfusionMatrix cm{std::vector<std::vector<std::size_t>>(k, std::vector<std::size_t>(k, 0)),
                       std::move(class_names)};
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        const int t = y_true[i];
        const int p = y_pred[i];
        if (t < 0 || p < 0 || static_cast<std::size_t>(t) >= k || static_cast<std::size_t>(p) >= k) {
            throw Error(ErrorKind::LabelOutOfRange, "label pair (" + std::to_string(t) + ", " + std::to_string(p) +
                                                        ") with k = " + std::to_string(k));
        }
        ++cm.counts[static_cast<std::size_t>(t)][static_cast<std::size_t>(p)];
    }
    return cm;
}

struct ClassMetrics {
    std::string name;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t support = 0;
    bool precision_undefined = false; // nothing predicted as this class
    bool recall_undefined = false;    // no true samples of this class
    bool f1_undefined = false;        // precision + recall == 0
};

struct Averages {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct MetricsReport {
    std::vector<ClassMetrics> classes;
    double accuracy = 0.0;
    Averages macro_avg;
    Averages weighted_avg;
    std::size_t total_support = 0;

    std::vector<std::string> class_names() const
    {
        std::vector<std::string> out;
        for (const auto& c : classes) {
            out.push_back(c.name);
        }
        return out;
    }
};

/// Harmonic mean 2PR/(P+R); 0 (flagged) when P + R = 0.
inline double f1_score(double precision, double recall, bool* undefined = nullptr)
{
    const double denom = precision + recall;
    if (undefined) {
        *undefined = !(denom > 0.0);
    }
    return denom > 0.0 ? 2.0 * precision * recall / denom : 0.0;
}

inline double weighted_average(std::span<const double> values, std::span<const std::size_t> supports)
{
    double total = 0.0;
    double weight = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        total += values[i] * static_cast<double>(supports[i]);
        weight += static_cast<double>(supports[i]);
    }
    return weight > 0.0 ? total / weight : 0.0;
}

/// Fill macro (unweighted mean) and weighted (support-weighted) averages
/// from the per-class rows.
inline void compute_averages(MetricsReport& r)
{
    std::vector<double> p, rc, f;
    std::vector<std::size_t> s;
    for (const auto& c : r.classes) {
        p.push_back(c.precision);
        rc.push_back(c.recall);
        f.push_back(c.f1);
        s.push_back(c.support);
    }
    const double k = static_cast<double>(r.classes.size());
    auto mean = [k](const std::vector<double>& v) {
        double t = 0.0;
        for (double x : v) {
            t += x;
        }
        return k > 0 ? t / k : 0.0;
    };
    r.macro_avg = {mean(p), mean(rc), mean(f)};
    r.weighted_avg = {weighted_average(p, s), weighted_average(rc, s), weighted_average(f, s)};
}

/// Per-class precision (diagonal / column sum), recall (diagonal / row sum)
/// and F1, with accuracy and macro/weighted aggregates. Zero denominators
/// give 0.0 plus a flag.
inline MetricsReport report(const ConfusionMatrix& cm)
{
    const std::size_t total = cm.total();
    if (total == 0) {
        throw Error(ErrorKind::EmptyMatrix, "report: confusion matrix has no samples");
    }
    const std::size_t k = cm.k();
    MetricsReport r;
    r.total_support = total;
    std::size_t trace = 0;
    for (std::size_t j = 0; j < k; ++j) {
        std::size_t row = 0;
        std::size_t col = 0;
        for (std::size_t i = 0; i < k; ++i) {
            row += cm.counts[j][i];
            col += cm.counts[i][j];
        }
        const std::size_t tp = cm.counts[j][j];
        trace += tp;
        ClassMetrics c;
        c.name = j < cm.class_names.size() ? cm.class_names[j] : std::to_string(j);
        c.support = row;
        c.precision_undefined = col == 0;
        c.recall_undefined = row == 0;
        c.precision = col == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(col);
        c.recall = row == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(row);
        c.f1 = f1_score(c.precision, c.recall, &c.f1_undefined);
        r.classes.push_back(std::move(c));
    }
    r.accuracy = static_cast<double>(trace) / static_cast<double>(total);
    compute_averages(r);
    return r;
}

// ---------------------------------------------------------------------------
// Comparison
// ---------------------------------------------------------------------------

enum class Winner { first, second, tie };

struct ComparisonRow {
    std::string metric;
    double first = 0.0;
    double second = 0.0;
    double delta = 0.0; // first − second
    Winner winner = Winner::tie;
};

struct ComparisonTable {
    std::string first_name;
    std::string second_name;
    std::vector<ComparisonRow> rows;

    const ComparisonRow& find(const std::string& metric) const
    {
        for (const auto& r : rows) {
            if (r.metric == metric) {
                return r;
            }
        }
        throw Error(ErrorKind::InvalidArgument, "no comparison row " + metric);
    }
};

/// Deltas below this magnitude are reported as ties.
inline constexpr double kTieTolerance = 1e-12;

/// Metric-by-metric comparison; higher is better for every metric.
inline ComparisonTable compare(const MetricsReport& a, const MetricsReport& b, std::string name_a = "first",
                               std::string name_b = "second")
{
    if (a.class_names() != b.class_names()) {
        throw Error(ErrorKind::ClassSetMismatch, "reports cover different class sets");
    }
    ComparisonTable table{std::move(name_a), std::move(name_b), {}};
    auto add = [&](std::string metric, double x, double y) {
        ComparisonRow row{std::move(metric), x, y, x - y, Winner::tie};
        if (std::abs(row.delta) > kTieTolerance) {
            row.winner = row.delta > 0 ? Winner::first : Winner::second;
        }
        table.rows.push_back(std::move(row));
    };
    add("accuracy", a.accuracy, b.accuracy);
    add("macro_precision", a.macro_avg.precision, b.macro_avg.precision);
    add("macro_recall", a.macro_avg.recall, b.macro_avg.recall);
    add("macro_f1", a.macro_avg.f1, b.macro_avg.f1);
    add("weighted_precision", a.weighted_avg.precision, b.weighted_avg.precision);
    add("weighted_recall", a.weighted_avg.recall, b.weighted_avg.recall);
    add("weighted_f1", a.weighted_avg.f1, b.weighted_avg.f1);
    for (std::size_t j = 0; j < a.classes.size(); ++j) {
        const auto& ca = a.classes[j];
        const auto& cb = b.classes[j];
        add(ca.name + "_precision", ca.precision, cb.precision);
        add(ca.name + "_recall", ca.recall, cb.recall);
        add(ca.name + "_f1", ca.f1, cb.f1);
    }
    return table;
}

// ---------------------------------------------------------------------------
// Emission
// ---------------------------------------------------------------------------

inline std::string pad_right(std::string s, std::size_t width)
{
    if (s.size() < width) {
        s.append(width - s.size(), ' ');
    }
    return s;
}

inline std::string pad_left(std::string s, std::size_t width)
{
    if (s.size() < width) {
        s.insert(0, width - s.size(), ' ');
    }
    return s;
}

inline std::string report_text(const MetricsReport& r)
{
    std::size_t name_w = 12;
    for (const auto& c : r.classes) {
        name_w = std::max(name_w, c.name.size() + 2);
    }
    auto line = [&](const std::string& name, const std::string& p, const std::string& rc, const std::string& f,
                    const std::string& s) {
        return pad_right(name, name_w) + pad_left(p, 10) + pad_left(rc, 10) + pad_left(f, 10) + pad_left(s, 10) +
               "\n";
    };
    std::string out = line("", "precision", "recall", "f1-score", "support");
    for (const auto& c : r.classes) {
        out += line(c.name, format_fixed(c.precision, 6), format_fixed(c.recall, 6), format_fixed(c.f1, 6),
                    std::to_string(c.support));
    }
    out += "\n";
    out += line("accuracy", "", "", format_fixed(r.accuracy, 6), std::to_string(r.total_support));
    out += line("macro avg", format_fixed(r.macro_avg.precision, 6), format_fixed(r.macro_avg.recall, 6),
                format_fixed(r.macro_avg.f1, 6), std::to_string(r.total_support));
    out += line("weighted avg", format_fixed(r.weighted_avg.precision, 6), format_fixed(r.weighted_avg.recall, 6),
                format_fixed(r.weighted_avg.f1, 6), std::to_string(r.total_support));
    for (const auto& c : r.classes) {
        if (c.precision_undefined || c.recall_undefined || c.f1_undefined) {
            out += "note: class " + c.name + " has undefined metrics (zero division), reported as 0\n";
        }
    }
    return out;
}

inline std::string report_csv(const MetricsReport& r)
{
    std::string out = "class,precision,recall,f1,support\n";
    for (const auto& c : r.classes) {
        out += csv_escape(c.name) + "," + format_number(c.precision) + "," + format_number(c.recall) + "," +
               format_number(c.f1) + "," + std::to_string(c.support) + "\n";
    }
    out += "accuracy,,," + format_number(r.accuracy) + "," + std::to_string(r.total_support) + "\n";
    out += "macro_avg," + format_number(r.macro_avg.precision) + "," + format_number(r.macro_avg.recall) + "," +
           format_number(r.macro_avg.f1) + "," + std::to_string(r.total_support) + "\n";
    out += "weighted_avg," + format_number(r.weighted_avg.precision) + "," + format_number(r.weighted_avg.recall) +
           "," + format_number(r.weighted_avg.f1) + "," + std::to_string(r.total_support) + "\n";
    return out;
}

inline Json to_json(const Averages& a) { return {{"precision", a.precision}, {"recall", a.recall}, {"f1", a.f1}}; }

inline Json to_json(const MetricsReport& r)
{
    Json classes = Json::array();
    for (const auto& c : r.classes) {
        classes.push_back({{"name", c.name},
                           {"precision", c.precision},
                           {"recall", c.recall},
                           {"f1", c.f1},
                           {"support", c.support},
                           {"precision_undefined", c.precision_undefined},
                           {"recall_undefined", c.recall_undefined},
                           {"f1_undefined", c.f1_undefined}});
    }
    return {{"schema_version", kSchemaVersion},
            {"classes", classes},
            {"accuracy", r.accuracy},
            {"macro_avg", to_json(r.macro_avg)},
            {"weighted_avg", to_json(r.weighted_avg)},
            {"total_support", r.total_support}};
}

inline Averages averages_from_json(const Json& doc)
{
    return {doc.at("precision").get<double>(), doc.at("recall").get<double>(), doc.at("f1").get<double>()};
}

/// Reads a report document. `macro_avg`/`weighted_avg` may be omitted, in
/// which case they are recomputed from the class rows.
inline MetricsReport report_from_json(const Json& doc)
{
    MetricsReport r;
    for (const auto& c : doc.at("classes")) {
        ClassMetrics m;
        m.name = c.at("name").get<std::string>();
        m.precision = c.at("precision").get<double>();
        m.recall = c.at("recall").get<double>();
        m.f1 = c.contains("f1") ? c.at("f1").get<double>() : f1_score(m.precision, m.recall, &m.f1_undefined);
        m.support = c.at("support").get<std::size_t>();
        m.precision_undefined = c.value("precision_undefined", false);
        m.recall_undefined = c.value("recall_undefined", false);
        m.f1_undefined = c.value("f1_undefined", m.f1_undefined);
        r.total_support += m.support;
        r.classes.push_back(std::move(m));
    }
    compute_averages(r);
    r.accuracy = doc.at("accuracy").get<double>();
    if (doc.contains("macro_avg")) {
        r.macro_avg = averages_from_json(doc.at("macro_avg"));
    }
    if (doc.contains("weighted_avg")) {
        r.weighted_avg = averages_from_json(doc.at("weighted_avg"));
    }
    r.total_support = doc.value("total_support", r.total_support);
    return r;
}

inline std::string confusion_csv(const ConfusionMatrix& cm)
{
    std::string out = "true\\predicted";
    for (const auto& n : cm.class_names) {
        out += "," + csv_escape(n);
    }
    out += "\n";
    for (std::size_t i = 0; i < cm.k(); ++i) {
        out += csv_escape(cm.class_names[i]);
        for (auto c : cm.counts[i]) {
            out += "," + std::to_string(c);
        }
        out += "\n";
    }
    return out;
}

inline std::string winner_name(const ComparisonTable& t, Winner w)
{
    switch (w) {
    case Winner::first: return t.first_name;
    case Winner::second: return t.second_name;
    case Winner::tie: return "tie";
    }
    return "tie";
}

inline std::string comparison_text(const ComparisonTable& t)
{
    std::string out = pad_right("metric", 22) + pad_left(t.first_name, 14) + pad_left(t.second_name, 14) +
                      pad_left("delta", 12) + "  winner\n";
    for (const auto& r : t.rows) {
        out += pad_right(r.metric, 22) + pad_left(format_fixed(r.first, 6), 14) +
               pad_left(format_fixed(r.second, 6), 14) + pad_left(format_fixed(r.delta, 6), 12) + "  " +
               winner_name(t, r.winner) + "\n";
    }
    return out;
}

inline std::string comparison_csv(const ComparisonTable& t)
{
    std::string out = "metric," + csv_escape(t.first_name) + "," + csv_escape(t.second_name) + ",delta,winner\n";
    for (const auto& r : t.rows) {
        out += r.metric + "," + format_number(r.first) + "," + format_number(r.second) + "," +
               format_number(r.delta) + "," + csv_escape(winner_name(t, r.winner)) + "\n";
    }
    return out;
}

inline Json to_json(const ComparisonTable& t)
{
    Json rows = Json::array();
    for (const auto& r : t.rows) {
        rows.push_back({{"metric", r.metric},
                        {"first", r.first},
                        {"second", r.second},
                        {"delta", r.delta},
                        {"winner", winner_name(t, r.winner)}});
    }
    return {{"schema_version", kSchemaVersion}, {"first", t.first_name}, {"second", t.second_name}, {"rows", rows}};
}

} // namespace ransae::metrics
