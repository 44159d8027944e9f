#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "ransae/dataset.hpp"
#include "ransae/error.hpp"
#include "ransae/io.hpp"
#include "ransae/matrix.hpp"

namespace ransae::analytics {

struct FamilyFinance {
    std::string family;
    std::size_t attack_count = 0;
    double total_usd = 0.0;
    double mean_usd = 0.0;
    double total_btc = 0.0;
    double mean_btc = 0.0;
};

struct FinancialReport {
    std::vector<FamilyFinance> families; // ascending by name
    std::size_t rows = 0;
    double total_usd = 0.0;
    double mean_usd = 0.0;
    double total_btc = 0.0;
    double mean_btc = 0.0;
};

/// Group by decoded Family and sum/average the USD and BTC columns.
inline FinancialReport financial_report(const EncodedTable& table, const std::string& family_column = "Family",
                                        const std::string& usd_column = "USD", const std::string& btc_column = "BTC")
{
    const std::size_t fam = table.schema.index_of(family_column);
    const std::size_t usd = table.schema.index_of(usd_column);
    const std::size_t btc = table.schema.index_of(btc_column);
    std::map<std::string, FamilyFinance> groups;
    FinancialReport rep;
    rep.rows = table.row_count();
    for (std::size_t r = 0; r < table.row_count(); ++r) {
        const std::string& name = table.category(r, fam);
        auto& g = groups[name];
        g.family = name;
        ++g.attack_count;
        g.total_usd += table.values(r, usd);
        g.total_btc += table.values(r, btc);
        rep.total_usd += table.values(r, usd);
        rep.total_btc += table.values(r, btc);
    }
    for (auto& [name, g] : groups) {
        g.mean_usd = g.total_usd / static_cast<double>(g.attack_count);
        g.mean_btc = g.total_btc / static_cast<double>(g.attack_count);
        rep.families.push_back(g);
    }
    if (rep.rows > 0) {
        rep.mean_usd = rep.total_usd / static_cast<double>(rep.rows);
        rep.mean_btc = rep.total_btc / static_cast<double>(rep.rows);
    }
    return rep;
}

enum class RankKey { total_usd, mean_usd, attack_count };

inline std::string to_string(RankKey key)
{
    switch (key) {
    case RankKey::total_usd: return "total_usd";
    case RankKey::mean_usd: return "mean_usd";
    case RankKey::attack_count: return "attack_count";
    }
    return "total_usd";
}

inline double rank_value(const FamilyFinance& f, RankKey key)
{
    switch (key) {
    case RankKey::total_usd: return f.total_usd;
    case RankKey::mean_usd: return f.mean_usd;
    case RankKey::attack_count: return static_cast<double>(f.attack_count);
    }
    return 0.0;
}

/// Families ordered by `key` descending, ties by name ascending, truncated to top_n.
inline std::vector<FamilyFinance> rank_families(const FinancialReport& report, RankKey key, std::size_t top_n)
{
    if (top_n == 0) {
        throw Error(ErrorKind::InvalidArgument, "rank_families: top_n must be >= 1");
    }
    std::vector<FamilyFinance> ranked = report.families;
    std::sort(ranked.begin(), ranked.end(), [key](const FamilyFinance& a, const FamilyFinance& b) {
        const double va = rank_value(a, key);
        const double vb = rank_value(b, key);
        if (va != vb) {
            return va > vb;
        }
        return a.family < b.family;
    });
    if (ranked.size() > top_n) {
        ranked.resize(top_n);
    }
    return ranked;
}

struct CategoryShare {
    std::string category;
    std::size_t count = 0;
    double percentage = 0.0;
};

struct DistributionReport {
    std::string column;
    std::size_t rows = 0;
    std::vector<CategoryShare> categories; // descending by count, then name
};

/// Counts and percentages of every category present in `column` (Threats by default).
inline DistributionReport malware_distribution(const EncodedTable& table, const std::string& column = "Threats")
{
    const std::size_t col = table.schema.index_of(column);
    std::map<std::string, std::size_t> counts;
    for (std::size_t r = 0; r < table.row_count(); ++r) {
        ++counts[table.category(r, col)];
    }
    DistributionReport rep{column, table.row_count(), {}};
    for (const auto& [name, n] : counts) {
        rep.categories.push_back(
            {name, n, 100.0 * static_cast<double>(n) / static_cast<double>(rep.rows)});
    }
    std::stable_sort(rep.categories.begin(), rep.categories.end(),
                     [](const CategoryShare& a, const CategoryShare& b) { return a.count > b.count; });
    return rep;
}

struct CorrelationMatrix {
    std::vector<std::string> features;
    Matrix r;
    std::vector<bool> zero_variance;
};

/// Pearson r between every pair of columns. Zero-variance columns are flagged
/// and their row/column (diagonal included) reported as 0.
inline CorrelationMatrix correlation_matrix(const Matrix& x, std::vector<std::string> names = {})
{
    const std::size_t n = x.rows();
    const std::size_t d = x.cols();
    if (n < 2) {
        throw Error(ErrorKind::InsufficientRows, "correlation needs at least 2 rows, got " + std::to_string(n));
    }
    if (names.empty()) {
        for (std::size_t j = 0; j < d; ++j) {
            names.push_back("f" + std::to_string(j));
        }
    }
    if (names.size() != d) {
        throw Error(ErrorKind::ShapeMismatch, "correlation: name count != column count");
    }
    std::vector<double> mean(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            mean[j] += x(i, j);
        }
    }
    for (auto& m : mean) {
        m /= static_cast<double>(n);
    }
    Matrix centered(n, d);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            centered(i, j) = x(i, j) - mean[j];
        }
    }
    const Matrix cov = matmul_tn(centered, centered);
    CorrelationMatrix out{std::move(names), Matrix(d, d), std::vector<bool>(d, false)};
    for (std::size_t j = 0; j < d; ++j) {
        out.zero_variance[j] = !(cov(j, j) > 0.0);
    }
    for (std::size_t a = 0; a < d; ++a) {
        for (std::size_t b = a; b < d; ++b) {
            double v = 0.0;
            if (!out.zero_variance[a] && !out.zero_variance[b]) {
                v = a == b ? 1.0 : std::clamp(cov(a, b) / std::sqrt(cov(a, a) * cov(b, b)), -1.0, 1.0);
            }
            out.r(a, b) = v;
            out.r(b, a) = v;
        }
    }
    return out;
}

/// Correlation of the encoded feature columns, before normalization.
inline CorrelationMatrix correlation_matrix(const EncodedTable& table)
{
    const auto cols = table.schema.feature_indices();
    Matrix x(table.row_count(), cols.size());
    for (std::size_t r = 0; r < table.row_count(); ++r) {
        for (std::size_t j = 0; j < cols.size(); ++j) {
            x(r, j) = table.values(r, cols[j]);
        }
    }
    return correlation_matrix(x, table.schema.feature_names());
}

inline CorrelationMatrix correlation_matrix(const FeatureMatrix& fm, std::vector<std::string> names = {})
{
    return correlation_matrix(fm.x, std::move(names));
}

struct FamilyCount {
    std::string family;
    std::size_t count = 0;
};

/// Rows per family whose target class is `anomaly_class`, descending by count
/// then name. Every family in the encoding map appears, zeros included.
inline std::vector<FamilyCount> anomaly_by_family(const EncodedTable& table, const std::string& anomaly_class = "A",
                                                  const std::string& family_column = "Family")
{
    const std::size_t fam = table.schema.index_of(family_column);
    const std::size_t target = table.schema.target_index();
    std::map<std::string, std::size_t> counts;
    for (const auto& name : table.maps.categories(family_column)) {
        counts[name] = 0;
    }
    for (std::size_t r = 0; r < table.row_count(); ++r) {
        if (table.category(r, target) == anomaly_class) {
            ++counts[table.category(r, fam)];
        }
    }
    std::vector<FamilyCount> out;
    for (const auto& [name, n] : counts) {
        out.push_back({name, n});
    }
    std::stable_sort(out.begin(), out.end(), [](const FamilyCount& a, const FamilyCount& b) { return a.count > b.count; });
    return out;
}

// ---------------------------------------------------------------------------
// Emission
// ---------------------------------------------------------------------------

inline std::string financial_csv(const FinancialReport& rep)
{
    std::string out = "family,attack_count,total_usd,mean_usd,total_btc,mean_btc\n";
    for (const auto& f : rep.families) {
        out += csv_escape(f.family) + "," + std::to_string(f.attack_count) + "," + format_number(f.total_usd) + "," +
               format_number(f.mean_usd) + "," + format_number(f.total_btc) + "," + format_number(f.mean_btc) + "\n";
    }
    return out;
}

inline Json to_json(const FamilyFinance& f)
{
    return {{"family", f.family},       {"attack_count", f.attack_count}, {"total_usd", f.total_usd},
            {"mean_usd", f.mean_usd},   {"total_btc", f.total_btc},       {"mean_btc", f.mean_btc}};
}

inline Json to_json(const FinancialReport& rep)
{
    Json fams = Json::array();
    for (const auto& f : rep.families) {
        fams.push_back(to_json(f));
    }
    return {{"rows", rep.rows},           {"total_usd", rep.total_usd}, {"mean_usd", rep.mean_usd},
            {"total_btc", rep.total_btc}, {"mean_btc", rep.mean_btc},   {"families", fams}};
}

inline std::string ranking_csv(const std::vector<FamilyFinance>& ranked, RankKey key)
{
    std::string out = "rank,family," + to_string(key) + "\n";
    for (std::size_t i = 0; i < ranked.size(); ++i) {
        out += std::to_string(i + 1) + "," + csv_escape(ranked[i].family) + "," +
               format_number(rank_value(ranked[i], key)) + "\n";
    }
    return out;
}

inline std::string distribution_csv(const DistributionReport& rep)
{
    std::string out = "category,count,percentage\n";
    for (const auto& c : rep.categories) {
        out += csv_escape(c.category) + "," + std::to_string(c.count) + "," + format_number(c.percentage) + "\n";
    }
    return out;
}

inline Json to_json(const DistributionReport& rep)
{
    Json cats = Json::array();
    for (const auto& c : rep.categories) {
        cats.push_back({{"category", c.category}, {"count", c.count}, {"percentage", c.percentage}});
    }
    return {{"column", rep.column}, {"rows", rep.rows}, {"categories", cats}};
}

inline std::string distribution_text(const DistributionReport& rep)
{
    std::string out;
    for (const auto& c : rep.categories) {
        out += c.category + ": " + std::to_string(c.count) + " (" + format_fixed(c.percentage, 1) + "%)\n";
    }
    return out;
}

/// Square matrix CSV with feature names as header row and first column.
inline std::string correlation_csv(const CorrelationMatrix& cm)
{
    std::string out = "feature";
    for (const auto& f : cm.features) {
        out += "," + csv_escape(f);
    }
    out += "\n";
    for (std::size_t a = 0; a < cm.features.size(); ++a) {
        out += csv_escape(cm.features[a]);
        for (std::size_t b = 0; b < cm.features.size(); ++b) {
            out += "," + format_number(cm.r(a, b));
        }
        out += "\n";
    }
    return out;
}

/// Long format: one feature_a,feature_b,r line per ordered pair.
inline std::string correlation_long_csv(const CorrelationMatrix& cm)
{
    std::string out = "feature_a,feature_b,r\n";
    for (std::size_t a = 0; a < cm.features.size(); ++a) {
        for (std::size_t b = 0; b < cm.features.size(); ++b) {
            out += csv_escape(cm.features[a]) + "," + csv_escape(cm.features[b]) + "," + format_number(cm.r(a, b)) +
                   "\n";
        }
    }
    return out;
}

inline Json to_json(const CorrelationMatrix& cm)
{
    Json rows = Json::array();
    for (std::size_t a = 0; a < cm.features.size(); ++a) {
        auto row = cm.r.row(a);
        rows.push_back(std::vector<double>(row.begin(), row.end()));
    }
    std::vector<std::string> flagged;
    for (std::size_t j = 0; j < cm.features.size(); ++j) {
        if (cm.zero_variance[j]) {
            flagged.push_back(cm.features[j]);
        }
    }
    return {{"features", cm.features}, {"r", rows}, {"zero_variance", flagged}};
}

inline std::string anomaly_csv(const std::vector<FamilyCount>& counts)
{
    std::string out = "family,anomaly_count\n";
    for (const auto& c : counts) {
        out += csv_escape(c.family) + "," + std::to_string(c.count) + "\n";
    }
    return out;
}

inline Json to_json(const std::vector<FamilyCount>& counts)
{
    Json out = Json::array();
    for (const auto& c : counts) {
        out.push_back({{"family", c.family}, {"anomaly_count", c.count}});
    }
    return out;
}

} // namespace ransae::analytics
