#pragma once

// Delimited-text ingestion and report emission for the utrust tool.
//
// Score files: header row, comma or tab separated, '.' decimals. Required
// columns `score`, `label`; optional `group`, `reference_score`, `age`,
// and the four coefficient columns `a11`,`a01`,`a10`,`a00` (all or none).
// Feature files: a label column plus numeric feature columns.

#include "../core.hpp"
#include "../learners.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace utrust::cli {

using json = nlohmann::json;

inline constexpr const char* kToolVersion = "0.1.0";

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line_of;  ///< 1-based source line per row
    std::string source;

    std::optional<std::size_t> column(std::string_view name) const {
        for (std::size_t j = 0; j < header.size(); ++j)
            if (header[j] == name) return j;
        return std::nullopt;
    }

    std::size_t require_column(std::string_view name) const {
        if (auto j = column(name)) return *j;
        throw ValidationError(source + ": missing required column '" + std::string(name) + "'");
    }

    double number(std::size_t row, std::size_t col) const {
        const auto& cell = rows[row][col];
        double v = 0.0;
        const auto* first = cell.data();
        const auto* last = cell.data() + cell.size();
        if (first != last && *first == '+') ++first;
        const auto [ptr, ec] = std::from_chars(first, last, v);
        if (cell.empty() || ec != std::errc{} || ptr != last)
            throw ValidationError(source + ": line " + std::to_string(line_of[row]) + ", column '" + header[col] +
                                  "': not a number '" + cell + "'");
        return v;
    }

    std::vector<double> numeric_column(std::size_t col) const {
        std::vector<double> out;
        out.reserve(rows.size());
        for (std::size_t r = 0; r < rows.size(); ++r) out.push_back(number(r, col));
        return out;
    }

    std::vector<int> binary_column(std::size_t col) const {
        std::vector<int> out;
        out.reserve(rows.size());
        for (std::size_t r = 0; r < rows.size(); ++r) {
            const double v = number(r, col);
            if (v != 0.0 && v != 1.0)
                throw ValidationError(source + ": line " + std::to_string(line_of[r]) + ", column '" + header[col] +
                                      "': expected 0 or 1, got '" + rows[r][col] + "'");
            out.push_back(static_cast<int>(v));
        }
        return out;
    }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string> split(std::string_view line, char delim) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(delim, start);
        out.emplace_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

}  // namespace detail

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open '" + path.string() + "'");
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline Table parse_table(std::string_view text, std::string source = "<input>") {
    Table t;
    t.source = std::move(source);
    if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);
    char delim = ',';
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const auto end = text.find('\n', pos);
        const auto raw = text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
        pos = end == std::string_view::npos ? text.size() + 1 : end + 1;
        ++line_no;
        const auto line = detail::trim(raw);
        if (line.empty()) continue;
        if (t.header.empty()) {
            if (line.find(',') == std::string_view::npos && raw.find('\t') != std::string_view::npos) delim = '\t';
            t.header = detail::split(line, delim);
            continue;
        }
        auto fields = detail::split(line, delim);
        if (fields.size() != t.header.size())
            throw ValidationError(t.source + ": line " + std::to_string(line_no) + ": expected " +
                                  std::to_string(t.header.size()) + " fields, got " + std::to_string(fields.size()));
        t.rows.push_back(std::move(fields));
        t.line_of.push_back(line_no);
    }
    if (t.header.empty()) throw ValidationError(t.source + ": empty file");
    if (t.rows.empty()) throw ValidationError(t.source + ": no data rows");
    return t;
}

inline Table read_table(const std::filesystem::path& path) { return parse_table(read_file(path), path.string()); }

inline LabeledScores scores_from_table(const Table& t) {
    LabeledScores d;
    d.scores = t.numeric_column(t.require_column("score"));
    d.labels = t.binary_column(t.require_column("label"));
    if (auto j = t.column("group")) d.group = t.binary_column(*j);
    if (auto j = t.column("reference_score")) d.reference_scores = t.numeric_column(*j);
    if (auto j = t.column("age")) d.context["age"] = t.numeric_column(*j);
    const std::array<const char*, 4> coeff_names{"a11", "a01", "a10", "a00"};
    std::size_t present = 0;
    for (auto* c : coeff_names) present += t.column(c).has_value();
    if (present != 0 && present != 4)
        throw ValidationError(t.source + ": coefficient columns a11,a01,a10,a00 must appear together");
    if (present == 4) {
        const auto a11 = t.numeric_column(*t.column("a11"));
        const auto a01 = t.numeric_column(*t.column("a01"));
        const auto a10 = t.numeric_column(*t.column("a10"));
        const auto a00 = t.numeric_column(*t.column("a00"));
        std::vector<CostWeights> rows;
        for (std::size_t i = 0; i < a11.size(); ++i) rows.push_back({a11[i], a01[i], a10[i], a00[i]});
        d.coefficients = CostCoefficients::per_sample(std::move(rows));
    }
    for (std::size_t i = 0; i < d.size(); ++i)
        if (!utrust::detail::in_unit(d.scores[i]))
            throw ValidationError(t.source + ": line " + std::to_string(t.line_of[i]) +
                                  ", column 'score': out of range [0,1]");
    validate(d);
    return d;
}

inline LabeledScores read_scores(const std::filesystem::path& path) { return scores_from_table(read_table(path)); }

struct FeatureSet {
    FeatureMatrix features;
    std::vector<int> labels;
    std::optional<std::vector<double>> age;
};

/// Every column except the label column is a feature; `age`, when present,
/// is also exposed for contextual utilities.
inline FeatureSet features_from_table(const Table& t, std::string_view label_column = "label") {
    FeatureSet fs;
    const auto label_col = t.require_column(label_column);
    fs.labels = t.binary_column(label_col);
    std::vector<std::size_t> cols;
    for (std::size_t j = 0; j < t.header.size(); ++j)
        if (j != label_col) {
            cols.push_back(j);
            fs.features.names.push_back(t.header[j]);
        }
    fs.features.values.resize(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t r = 0; r < t.rows.size(); ++r)
        for (std::size_t k = 0; k < cols.size(); ++k) {
            const double v = t.number(r, cols[k]);
            if (!std::isfinite(v))
                throw ValidationError(t.source + ": line " + std::to_string(t.line_of[r]) + ", column '" +
                                      t.header[cols[k]] + "': non-finite value");
            fs.features.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(k)) = v;
        }
    if (auto j = t.column("age"); j && *j != label_col) fs.age = t.numeric_column(*j);
    return fs;
}

inline FeatureSet read_features(const std::filesystem::path& path, std::string_view label_column = "label") {
    return features_from_table(read_table(path), label_column);
}

// ============================================================================
// Output
// ============================================================================

/// 17 significant digits; round-trips every double.
inline std::string format_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

/// Writes a header plus rows of numbers / strings as CSV.
class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header) : header_(std::move(header)) {}

    CsvWriter& row(std::vector<std::string> cells) {
        rows_.push_back(std::move(cells));
        return *this;
    }

    std::string str() const {
        std::string out;
        auto emit = [&out](const std::vector<std::string>& cells) {
            for (std::size_t j = 0; j < cells.size(); ++j) {
                if (j) out += ',';
                out += cells[j];
            }
            out += '\n';
        };
        emit(header_);
        for (const auto& r : rows_) emit(r);
        return out;
    }

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << text;
}

inline void write_json(const std::filesystem::path& path, const json& doc) { write_text(path, doc.dump(2) + "\n"); }

inline std::string scores_to_csv(const LabeledScores& d) {
    std::vector<std::string> header{"score", "label"};
    if (d.group) header.push_back("group");
    if (d.reference_scores) header.push_back("reference_score");
    const bool age = d.context.count("age") > 0;
    if (age) header.push_back("age");
    const bool coeffs = d.coefficients && d.coefficients->contextual();
    if (coeffs) header.insert(header.end(), {"a11", "a01", "a10", "a00"});
    CsvWriter w(header);
    for (std::size_t i = 0; i < d.size(); ++i) {
        std::vector<std::string> r{format_number(d.scores[i]), std::to_string(d.labels[i])};
        if (d.group) r.push_back(std::to_string((*d.group)[i]));
        if (d.reference_scores) r.push_back(format_number((*d.reference_scores)[i]));
        if (age) r.push_back(format_number(d.context.at("age")[i]));
        if (coeffs) {
            const auto& c = d.coefficients->at(i);
            for (double v : {c.a11, c.a01, c.a10, c.a00}) r.push_back(format_number(v));
        }
        w.row(std::move(r));
    }
    return w.str();
}

/// FNV-1a 64-bit digest, hex.
inline std::string digest(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline std::string file_digest(const std::filesystem::path& path) { return "fnv1a64:" + digest(read_file(path)); }

/// Everything needed to reproduce a report byte for byte.
struct RunManifest {
    std::string command;
    json config = json::object();
    std::map<std::string, std::uint64_t> seeds;
    std::map<std::string, std::string> input_digests;
    std::string tool_version = kToolVersion;

    json to_json() const {
        return json{{"command", command},
                    {"config", config},
                    {"seeds", seeds},
                    {"input_digests", input_digests},
                    {"tool_version", tool_version}};
    }
};

inline json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

inline json curve_json(const Curve& c) {
    json arr = json::array();
    for (const auto& [x, y] : c) arr.push_back({x, y});
    return arr;
}

inline json report_json(const EvalReport& r) {
    json j;
    j["metrics"] = r.metrics;
    j["curves"] = json::object();
    for (const auto& [name, c] : r.curves) j["curves"][name] = curve_json(c);
    j["intervals"] = json::object();
    for (const auto& [name, iv] : r.intervals) j["intervals"][name] = {{"low", iv.low}, {"high", iv.high}, {"level", iv.level}};
    return j;
}

}  // namespace utrust::cli
