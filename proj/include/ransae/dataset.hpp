#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "ransae/error.hpp"
#include "ransae/io.hpp"
#include "ransae/matrix.hpp"
#include "ransae/rng.hpp"

namespace ransae {

// ---------------------------------------------------------------------------
// Schema
// ---------------------------------------------------------------------------

enum class ColumnKind { numeric, categorical };

struct ColumnSpec {
    std::string name;
    ColumnKind kind = ColumnKind::numeric;

    friend bool operator==(const ColumnSpec&, const ColumnSpec&) = default;
};

/// Ordered column list plus the name of the target column.
struct RecordSchema {
    std::vector<ColumnSpec> columns;
    std::string target_column;

    /// The 14-column UGRansome layout: 6 numeric, 8 categorical, target Prediction.
    static RecordSchema ugransome()
    {
        using enum ColumnKind;
        return RecordSchema{{{"Time", numeric},
                             {"Protocol", categorical},
                             {"Flag", categorical},
                             {"Family", categorical},
                             {"Clusters", numeric},
                             {"SeedAddress", categorical},
                             {"ExpAddress", categorical},
                             {"BTC", numeric},
                             {"USD", numeric},
                             {"NetflowBytes", numeric},
                             {"IPAddress", categorical},
                             {"Threats", categorical},
                             {"Port", numeric},
                             {"Prediction", categorical}},
                            "Prediction"};
    }

    std::size_t width() const noexcept { return columns.size(); }

    std::optional<std::size_t> find(std::string_view name) const
    {
        for (std::size_t i = 0; i < columns.size(); ++i) {
            if (columns[i].name == name) {
                return i;
            }
        }
        return std::nullopt;
    }

    std::size_t index_of(std::string_view name) const
    {
        if (auto idx = find(name)) {
            return *idx;
        }
        throw Error(ErrorKind::MissingColumn, std::string(name));
    }

    std::size_t target_index() const { return index_of(target_column); }

    bool is_categorical(std::size_t col) const { return columns.at(col).kind == ColumnKind::categorical; }

    /// Every column except the target, in schema order.
    std::vector<std::size_t> feature_indices() const
    {
        std::vector<std::size_t> out;
        const std::size_t target = target_index();
        for (std::size_t i = 0; i < columns.size(); ++i) {
            if (i != target) {
                out.push_back(i);
            }
        }
        return out;
    }

    std::vector<std::string> feature_names() const
    {
        std::vector<std::string> out;
        for (std::size_t i : feature_indices()) {
            out.push_back(columns[i].name);
        }
        return out;
    }

    void validate() const
    {
        if (columns.size() != 14) {
            throw Error(ErrorKind::InvalidArgument, "schema must have 14 columns, has " + std::to_string(columns.size()));
        }
        std::size_t targets = 0;
        for (const auto& c : columns) {
            if (c.name == target_column) {
                ++targets;
            }
        }
        if (targets != 1) {
            throw Error(ErrorKind::InvalidArgument, "schema must name exactly one target column");
        }
    }

    friend bool operator==(const RecordSchema&, const RecordSchema&) = default;
};

// ---------------------------------------------------------------------------
// Raw CSV
// ---------------------------------------------------------------------------

/// Parsed CSV with fields reordered into schema column order.
struct RawTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line_numbers; // 1-based source line of each row

    std::size_t row_count() const noexcept { return rows.size(); }
};

namespace detail {

inline std::string header_key(std::string_view name)
{
    std::string key;
    for (char c : trim(name)) {
        if (c == '_' || c == ' ' || c == '-') {
            continue;
        }
        key += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    return key;
}

/// Normalized header spellings accepted for each canonical column. Case,
/// underscores and spaces are ignored before lookup, so Netflow_Bytes and
/// IPaddress resolve without explicit entries.
inline std::vector<std::string> header_aliases(std::string_view canonical)
{
    std::vector<std::string> keys{header_key(canonical)};
    if (canonical == "Family") {
        keys.push_back("ransomware");
    } else if (canonical == "Threats") {
        keys.push_back("malware");
    } else if (canonical == "Protocol") {
        keys.push_back("protcol");
    }
    return keys;
}

} // namespace detail

/// Read a UGRansome-schema CSV. Header names are matched against the schema
/// with the documented aliases; columns not in the schema are ignored.
inline RawTable parse_csv(std::istream& source, const RecordSchema& schema)
{
    RawTable table;
    std::string line;
    std::size_t line_no = 0;

    std::vector<std::string> file_header;
    while (std::getline(source, line)) {
        ++line_no;
        if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) {
            line.erase(0, 3);
        }
        if (!trim(line).empty()) {
            file_header = split_csv_line(line);
            break;
        }
    }
    if (file_header.empty()) {
        throw Error(ErrorKind::MissingColumn, "no header row");
    }

    std::unordered_map<std::string, std::size_t> file_pos;
    for (std::size_t i = 0; i < file_header.size(); ++i) {
        file_pos.emplace(detail::header_key(file_header[i]), i);
    }
    std::vector<std::size_t> source_index(schema.width());
    for (std::size_t c = 0; c < schema.width(); ++c) {
        bool found = false;
        for (const auto& key : detail::header_aliases(schema.columns[c].name)) {
            if (auto it = file_pos.find(key); it != file_pos.end()) {
                source_index[c] = it->second;
                found = true;
                break;
            }
        }
        if (!found) {
            throw Error(ErrorKind::MissingColumn, schema.columns[c].name);
        }
        table.header.push_back(schema.columns[c].name);
    }

    double scratch = 0.0;
    while (std::getline(source, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        auto fields = split_csv_line(line);
        if (fields.size() != file_header.size()) {
            throw Error(ErrorKind::RaggedRow, "line " + std::to_string(line_no) + " has " +
                                                  std::to_string(fields.size()) + " fields, header has " +
                                                  std::to_string(file_header.size()));
        }
        std::vector<std::string> row(schema.width());
        for (std::size_t c = 0; c < schema.width(); ++c) {
            row[c] = std::string(trim(fields[source_index[c]]));
            if (!schema.is_categorical(c) && !parse_number(row[c], scratch)) {
                throw Error(ErrorKind::NonNumericCell, "line " + std::to_string(line_no) + ", column " +
                                                           schema.columns[c].name + ": '" + row[c] + "'");
            }
        }
        table.rows.push_back(std::move(row));
        table.line_numbers.push_back(line_no);
    }
    return table;
}

inline RawTable parse_csv_text(std::string_view text, const RecordSchema& schema)
{
    std::istringstream in{std::string(text)};
    return parse_csv(in, schema);
}

inline RawTable parse_csv_file(const std::filesystem::path& path, const RecordSchema& schema)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(ErrorKind::IoError, "cannot open " + path.string());
    }
    try {
        return parse_csv(in, schema);
    } catch (const Error& e) {
        throw Error(e.kind(), path.string() + ": " + e.detail());
    }
}

// ---------------------------------------------------------------------------
// Label encoding
// ---------------------------------------------------------------------------

/// Per categorical column: category string <-> dense integer code.
class EncodingMap {
public:
    /// Install the categories for a column; codes are assigned in the given order.
    void set_categories(const std::string& column, std::vector<std::string> categories)
    {
        Column col;
        col.names = std::move(categories);
        for (std::size_t i = 0; i < col.names.size(); ++i) {
            col.codes.emplace(col.names[i], static_cast<int>(i));
        }
        columns_[column] = std::move(col);
    }

    bool has_column(const std::string& column) const { return columns_.contains(column); }

    int encode(const std::string& column, const std::string& category) const
    {
        const Column& col = lookup(column);
        auto it = col.codes.find(category);
        if (it == col.codes.end()) {
            throw Error(ErrorKind::UnknownCategory, column + " = '" + category + "'");
        }
        return it->second;
    }

    const std::string& decode(const std::string& column, int code) const
    {
        const Column& col = lookup(column);
        if (code < 0 || static_cast<std::size_t>(code) >= col.names.size()) {
            throw Error(ErrorKind::UnknownCategory, column + " code " + std::to_string(code));
        }
        return col.names[static_cast<std::size_t>(code)];
    }

    std::size_t category_count(const std::string& column) const { return lookup(column).names.size(); }

    const std::vector<std::string>& categories(const std::string& column) const { return lookup(column).names; }

    std::vector<std::string> column_names() const
    {
        std::vector<std::string> out;
        for (const auto& [name, col] : columns_) {
            out.push_back(name);
        }
        return out;
    }

    Json to_json() const
    {
        Json doc = Json::object();
        for (const auto& [name, col] : columns_) {
            doc[name] = col.names;
        }
        return doc;
    }

    static EncodingMap from_json(const Json& doc)
    {
        EncodingMap map;
        for (const auto& [name, values] : doc.items()) {
            map.set_categories(name, values.get<std::vector<std::string>>());
        }
        return map;
    }

    friend bool operator==(const EncodingMap& a, const EncodingMap& b)
    {
        if (a.columns_.size() != b.columns_.size()) {
            return false;
        }
        for (const auto& [name, col] : a.columns_) {
            auto it = b.columns_.find(name);
            if (it == b.columns_.end() || it->second.names != col.names) {
                return false;
            }
        }
        return true;
    }

private:
    struct Column {
        std::vector<std::string> names;
        std::unordered_map<std::string, int> codes;
    };

    const Column& lookup(const std::string& column) const
    {
        auto it = columns_.find(column);
        if (it == columns_.end()) {
            throw Error(ErrorKind::MissingColumn, "no encoding for column " + column);
        }
        return it->second;
    }

    std::map<std::string, Column> columns_;
};

/// Numeric form of a table: one row per record, 14 columns in schema order,
/// categorical cells holding their EncodingMap codes.
struct EncodedTable {
    Matrix values;
    RecordSchema schema;
    EncodingMap maps;
    std::vector<std::string> provenance;

    std::size_t row_count() const noexcept { return values.rows(); }

    double cell(std::size_t row, const std::string& column) const { return values(row, schema.index_of(column)); }

    /// Decoded category name of a categorical cell.
    const std::string& category(std::size_t row, std::size_t col) const
    {
        return maps.decode(schema.columns[col].name, static_cast<int>(values(row, col)));
    }

    EncodedTable select_rows(std::span<const std::size_t> indices, std::string step) const
    {
        EncodedTable out{values.select_rows(indices), schema, maps, provenance};
        out.provenance.push_back(std::move(step));
        return out;
    }
};

namespace detail {

inline EncodedTable encode_rows(const RawTable& raw, const RecordSchema& schema, const EncodingMap& maps)
{
    EncodedTable out{Matrix(raw.row_count(), schema.width()), schema, maps, {"parsed", "encoded"}};
    for (std::size_t r = 0; r < raw.row_count(); ++r) {
        for (std::size_t c = 0; c < schema.width(); ++c) {
            const std::string& cell = raw.rows[r][c];
            if (schema.is_categorical(c)) {
                out.values(r, c) = maps.encode(schema.columns[c].name, cell);
            } else {
                double v = 0.0;
                if (!parse_number(cell, v)) {
                    const std::size_t line = r < raw.line_numbers.size() ? raw.line_numbers[r] : r + 2;
                    throw Error(ErrorKind::NonNumericCell,
                                "line " + std::to_string(line) + ", column " + schema.columns[c].name);
                }
                out.values(r, c) = v;
            }
        }
    }
    return out;
}

} // namespace detail

/// Assign each categorical column's distinct strings codes 0..n-1 in byte-wise
/// ascending order, then encode every cell.
inline EncodedTable label_encode(const RawTable& raw, const RecordSchema& schema)
{
    EncodingMap maps;
    for (std::size_t c = 0; c < schema.width(); ++c) {
        if (!schema.is_categorical(c)) {
            continue;
        }
        std::vector<std::string> distinct;
        {
            std::unordered_set<std::string> seen;
            for (const auto& row : raw.rows) {
                if (seen.insert(row[c]).second) {
                    distinct.push_back(row[c]);
                }
            }
        }
        std::sort(distinct.begin(), distinct.end());
        maps.set_categories(schema.columns[c].name, std::move(distinct));
    }
    return detail::encode_rows(raw, schema, maps);
}

/// Encode with an existing map (inference path). Unseen categories raise UnknownCategory.
inline EncodedTable encode_with(const RawTable& raw, const RecordSchema& schema, const EncodingMap& maps)
{
    return detail::encode_rows(raw, schema, maps);
}

/// Inverse of encoding: categorical codes back to strings, numbers to their
/// shortest round-trip text.
inline RawTable decode(const EncodedTable& table)
{
    RawTable raw;
    for (const auto& c : table.schema.columns) {
        raw.header.push_back(c.name);
    }
    for (std::size_t r = 0; r < table.row_count(); ++r) {
        std::vector<std::string> row(table.schema.width());
        for (std::size_t c = 0; c < table.schema.width(); ++c) {
            row[c] = table.schema.is_categorical(c) ? table.category(r, c) : format_number(table.values(r, c));
        }
        raw.rows.push_back(std::move(row));
        raw.line_numbers.push_back(r + 2);
    }
    return raw;
}

/// Header plus rows, comma-separated, fields quoted only when needed.
inline std::string to_csv(const RawTable& raw)
{
    std::string out;
    auto emit = [&out](const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i > 0) {
                out += ',';
            }
            out += csv_escape(fields[i]);
        }
        out += '\n';
    };
    emit(raw.header);
    for (const auto& row : raw.rows) {
        emit(row);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Cleaning
// ---------------------------------------------------------------------------

struct FilterResult {
    EncodedTable table;
    std::size_t removed = 0;
};

/// Keep the first occurrence of every distinct full row, in original order.
inline FilterResult deduplicate(const EncodedTable& table)
{
    const Matrix& v = table.values;
    const std::size_t width = v.cols();
    auto row_hash = [&](std::size_t r) {
        std::uint64_t h = 0x9E3779B97F4A7C15ULL;
        for (double x : v.row(r)) {
            const double canon = x == 0.0 ? 0.0 : x; // fold -0.0 into 0.0
            std::uint64_t bits = 0;
            std::memcpy(&bits, &canon, sizeof bits);
            h ^= bits + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2);
        }
        return static_cast<std::size_t>(h);
    };
    auto row_eq = [&](std::size_t a, std::size_t b) {
        for (std::size_t c = 0; c < width; ++c) {
            if (v(a, c) != v(b, c)) {
                return false;
            }
        }
        return true;
    };
    std::unordered_set<std::size_t, decltype(row_hash), decltype(row_eq)> seen(v.rows() * 2 + 1, row_hash, row_eq);
    std::vector<std::size_t> keep;
    keep.reserve(v.rows());
    for (std::size_t r = 0; r < v.rows(); ++r) {
        if (seen.insert(r).second) {
            keep.push_back(r);
        }
    }
    return {table.select_rows(keep, "deduplicated"), v.rows() - keep.size()};
}

/// Drop rows whose Time is not strictly positive.
inline FilterResult clean_timestamps(const EncodedTable& table, const std::string& time_column = "Time")
{
    const std::size_t col = table.schema.index_of(time_column);
    std::vector<std::size_t> keep;
    keep.reserve(table.row_count());
    for (std::size_t r = 0; r < table.row_count(); ++r) {
        if (table.values(r, col) > 0.0) {
            keep.push_back(r);
        }
    }
    return {table.select_rows(keep, "timestamp-cleaned"), table.row_count() - keep.size()};
}

// ---------------------------------------------------------------------------
// Normalization
// ---------------------------------------------------------------------------

/// Per-feature min/max from the training rows.
struct NormStats {
    std::vector<std::string> features;
    std::vector<double> min;
    std::vector<double> max;

    Json to_json() const
    {
        Json cols = Json::array();
        for (std::size_t j = 0; j < features.size(); ++j) {
            cols.push_back({{"name", features[j]}, {"min", min[j]}, {"max", max[j]}});
        }
        return cols;
    }

    static NormStats from_json(const Json& doc)
    {
        NormStats s;
        for (const auto& col : doc) {
            s.features.push_back(col.at("name").get<std::string>());
            s.min.push_back(col.at("min").get<double>());
            s.max.push_back(col.at("max").get<double>());
        }
        return s;
    }

    friend bool operator==(const NormStats&, const NormStats&) = default;
};

/// Classifier input: features scaled into [0, 1] plus integer labels.
struct FeatureMatrix {
    Matrix x;
    std::vector<int> y;
    std::size_t k_classes = 0;

    std::size_t size() const noexcept { return y.size(); }

    FeatureMatrix select(std::span<const std::size_t> indices) const
    {
        FeatureMatrix out{x.select_rows(indices), {}, k_classes};
        out.y.reserve(indices.size());
        for (std::size_t i : indices) {
            out.y.push_back(y[i]);
        }
        return out;
    }
};

struct NormalizeResult {
    FeatureMatrix features;
    NormStats stats;
};

/// Min-max scale every feature column. With `stats` supplied (test-time),
/// those bounds are used and out-of-range values clamp to [0, 1].
/// Degenerate columns (max == min) map to 0.
inline NormalizeResult normalize(const EncodedTable& table, const std::optional<NormStats>& stats = std::nullopt)
{
    const auto feature_cols = table.schema.feature_indices();
    const std::size_t target = table.schema.target_index();
    const std::size_t n = table.row_count();

    NormStats s;
    if (stats) {
        s = *stats;
        if (s.features != table.schema.feature_names()) {
            throw Error(ErrorKind::SchemaMismatch, "normalization stats do not match table features");
        }
    } else {
        s.features = table.schema.feature_names();
        s.min.assign(feature_cols.size(), 0.0);
        s.max.assign(feature_cols.size(), 0.0);
        for (std::size_t j = 0; j < feature_cols.size(); ++j) {
            if (n == 0) {
                continue;
            }
            double lo = table.values(0, feature_cols[j]);
            double hi = lo;
            for (std::size_t r = 1; r < n; ++r) {
                lo = std::min(lo, table.values(r, feature_cols[j]));
                hi = std::max(hi, table.values(r, feature_cols[j]));
            }
            s.min[j] = lo;
            s.max[j] = hi;
        }
    }

    FeatureMatrix fm{Matrix(n, feature_cols.size()), std::vector<int>(n),
                     table.maps.category_count(table.schema.target_column)};
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t j = 0; j < feature_cols.size(); ++j) {
            const double range = s.max[j] - s.min[j];
            double v = 0.0;
            if (range > 0.0) {
                v = std::clamp((table.values(r, feature_cols[j]) - s.min[j]) / range, 0.0, 1.0);
            }
            fm.x(r, j) = v;
        }
        fm.y[r] = static_cast<int>(table.values(r, target));
    }
    return {std::move(fm), std::move(s)};
}

/// Map scaled features back to original units.
inline Matrix denormalize(const Matrix& x, const NormStats& stats)
{
    require_shape(x, x.rows(), stats.features.size(), "denormalize");
    Matrix out(x.rows(), x.cols());
    for (std::size_t r = 0; r < x.rows(); ++r) {
        for (std::size_t j = 0; j < x.cols(); ++j) {
            out(r, j) = stats.min[j] + x(r, j) * (stats.max[j] - stats.min[j]);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Splitting
// ---------------------------------------------------------------------------

struct IndexPartition {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
};

/// Stratified partition of row indices: per class, floor(n_c * ratio + 0.5)
/// seeded-random rows go to `test`. Both outputs are in ascending row order.
inline IndexPartition stratified_partition(std::span<const int> labels, std::size_t k_classes, double ratio,
                                           std::uint64_t seed)
{
    if (!(ratio > 0.0 && ratio < 1.0)) {
        throw Error(ErrorKind::InvalidArgument, "split ratio must lie in (0, 1)");
    }
    std::vector<std::vector<std::size_t>> by_class(k_classes);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const int y = labels[i];
        if (y < 0 || static_cast<std::size_t>(y) >= k_classes) {
            throw Error(ErrorKind::LabelOutOfRange, "label " + std::to_string(y));
        }
        by_class[static_cast<std::size_t>(y)].push_back(i);
    }
    std::vector<char> in_test(labels.size(), 0);
    for (std::size_t c = 0; c < k_classes; ++c) {
        auto& rows = by_class[c];
        if (rows.empty()) {
            continue;
        }
        if (rows.size() < 2) {
            throw Error(ErrorKind::DegenerateSplit, "class " + std::to_string(c) + " has fewer than 2 rows");
        }
        SplitMix64 rng(derive_seed(seed, c + 1));
        rng.shuffle(rows);
        const auto n_test = static_cast<std::size_t>(std::floor(static_cast<double>(rows.size()) * ratio + 0.5));
        for (std::size_t i = 0; i < n_test; ++i) {
            in_test[rows[i]] = 1;
        }
    }
    IndexPartition out;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        (in_test[i] ? out.test : out.train).push_back(i);
    }
    return out;
}

struct SplitResult {
    FeatureMatrix train;
    FeatureMatrix test;
};

inline SplitResult split(const FeatureMatrix& fm, double test_ratio, std::uint64_t seed)
{
    const auto part = stratified_partition(fm.y, fm.k_classes, test_ratio, seed);
    return {fm.select(part.train), fm.select(part.test)};
}

/// Labels of the target column as integers.
inline std::vector<int> target_labels(const EncodedTable& table)
{
    const std::size_t target = table.schema.target_index();
    std::vector<int> y(table.row_count());
    for (std::size_t r = 0; r < y.size(); ++r) {
        y[r] = static_cast<int>(table.values(r, target));
    }
    return y;
}

// ---------------------------------------------------------------------------
// Summary statistics
// ---------------------------------------------------------------------------

struct ColumnSummary {
    std::string name;
    std::size_t count = 0;
    double mean = 0.0;
    double std = 0.0;
    double min = 0.0;
    double p25 = 0.0;
    double p50 = 0.0;
    double p75 = 0.0;
    double max = 0.0;
};

/// Percentile by linear interpolation between closest ranks on sorted data.
inline double percentile_sorted(std::span<const double> sorted, double q)
{
    if (sorted.empty()) {
        return 0.0;
    }
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + (sorted[hi] - sorted[lo]) * frac;
}

inline ColumnSummary summarize(std::string name, std::vector<double> values)
{
    ColumnSummary s{std::move(name)};
    s.count = values.size();
    if (values.empty()) {
        return s;
    }
    double sum = 0.0;
    for (double v : values) {
        sum += v;
    }
    s.mean = sum / static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) {
            ss += (v - s.mean) * (v - s.mean);
        }
        s.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    std::sort(values.begin(), values.end());
    s.min = values.front();
    s.max = values.back();
    s.p25 = percentile_sorted(values, 0.25);
    s.p50 = percentile_sorted(values, 0.50);
    s.p75 = percentile_sorted(values, 0.75);
    return s;
}

/// count/mean/std(n-1)/min/quartiles/max for every numeric column.
inline std::vector<ColumnSummary> dataset_stats(const EncodedTable& table)
{
    std::vector<ColumnSummary> out;
    for (std::size_t c = 0; c < table.schema.width(); ++c) {
        if (table.schema.is_categorical(c)) {
            continue;
        }
        std::vector<double> col(table.row_count());
        for (std::size_t r = 0; r < col.size(); ++r) {
            col[r] = table.values(r, c);
        }
        out.push_back(summarize(table.schema.columns[c].name, std::move(col)));
    }
    return out;
}

inline Json to_json(const ColumnSummary& s)
{
    return {{"name", s.name}, {"count", s.count}, {"mean", s.mean}, {"std", s.std}, {"min", s.min},
            {"p25", s.p25},   {"p50", s.p50},     {"p75", s.p75},   {"max", s.max}};
}

/// Encoding maps and normalization bounds in one versioned document, enough
/// to re-encode new data identically.
inline Json preprocessing_to_json(const RecordSchema& schema, const EncodingMap& maps, const NormStats& stats)
{
    Json cols = Json::array();
    for (const auto& c : schema.columns) {
        cols.push_back({{"name", c.name}, {"kind", c.kind == ColumnKind::numeric ? "numeric" : "categorical"}});
    }
    return {{"schema_version", kSchemaVersion},
            {"schema", {{"columns", cols}, {"target", schema.target_column}}},
            {"encoding", maps.to_json()},
            {"normalization", stats.to_json()}};
}

struct Preprocessing {
    RecordSchema schema;
    EncodingMap maps;
    NormStats stats;
};

inline Preprocessing preprocessing_from_json(const Json& doc)
{
    if (doc.value("schema_version", 0) != kSchemaVersion) {
        throw Error(ErrorKind::SchemaMismatch, "unsupported preprocessing schema_version");
    }
    Preprocessing p;
    for (const auto& c : doc.at("schema").at("columns")) {
        p.schema.columns.push_back({c.at("name").get<std::string>(), c.at("kind").get<std::string>() == "numeric"
                                                                         ? ColumnKind::numeric
                                                                         : ColumnKind::categorical});
    }
    p.schema.target_column = doc.at("schema").at("target").get<std::string>();
    p.maps = EncodingMap::from_json(doc.at("encoding"));
    p.stats = NormStats::from_json(doc.at("normalization"));
    return p;
}

} // namespace ransae
