#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "arsc/errors.hpp"
#include "arsc/models.hpp"

namespace arsc::io {

using json = nlohmann::json;

/// FNV-1a, 64 bit.
inline std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

/// Hash of the canonical (key-sorted, compact) dump of a model document.
inline std::string model_hash(const json& doc) { return hex64(fnv1a64(doc.dump())); }

struct LoadedLq {
    LqModel model;
    json document;
    std::string hash;
};

struct LoadedFactor {
    FactorMarketModel model;
    json document;
    std::string hash;
};

namespace detail {

inline void require_keys(const json& j, const std::set<std::string>& required, const std::set<std::string>& optional,
                         const std::string& where) {
    if (!j.is_object()) throw ModelError(where + ": expected a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!required.count(it.key()) && !optional.count(it.key()))
            throw ModelError(where + ": unknown key '" + it.key() + "'");
    }
    for (const auto& k : required)
        if (!j.contains(k)) throw ModelError(where + ": missing key '" + k + "'");
}

inline double number(const json& j, const std::string& field) {
    if (!j.is_number()) throw ModelError("field '" + field + "': expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw ModelError("field '" + field + "': value is not finite");
    return v;
}

inline Matrix matrix(const json& j, const std::string& field) {
    if (!j.is_array() || j.empty() || !j[0].is_array())
        throw ModelError("field '" + field + "': expected a non-empty 2D array");
    const auto rows = j.size(), cols = j[0].size();
    if (cols == 0) throw ModelError("field '" + field + "': empty row");
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < rows; ++r) {
        if (!j[r].is_array() || j[r].size() != cols)
            throw ModelError("field '" + field + "': row " + std::to_string(r) + " has wrong length");
        for (std::size_t c = 0; c < cols; ++c)
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                number(j[r][c], field + "[" + std::to_string(r) + "][" + std::to_string(c) + "]");
    }
    return m;
}

inline Vector vector(const json& j, const std::string& field) {
    if (!j.is_array() || j.empty()) throw ModelError("field '" + field + "': expected a non-empty array");
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i)
        v[static_cast<Eigen::Index>(i)] = number(j[i], field + "[" + std::to_string(i) + "]");
    return v;
}

/// A constant matrix (2D array) or one matrix per grid node (3D array).
inline MatrixPath matrix_path(const json& j, const std::string& field, const TimeGrid& g) {
    if (j.is_array() && !j.empty() && j[0].is_array() && !j[0].empty() && j[0][0].is_array()) {
        if (j.size() != g.nodes())
            throw ModelError("field '" + field + "': time-varying path needs " + std::to_string(g.nodes()) +
                             " matrices, got " + std::to_string(j.size()));
        std::vector<Matrix> v;
        for (std::size_t i = 0; i < j.size(); ++i) {
            v.push_back(matrix(j[i], field + "@" + std::to_string(i)));
            if (v.back().rows() != v.front().rows() || v.back().cols() != v.front().cols())
                throw ModelError("field '" + field + "': shape changes along the path");
        }
        return MatrixPath(g, std::move(v));
    }
    return MatrixPath::constant(g, matrix(j, field));
}

inline ScalarPath scalar_path(const json& j, const std::string& field, const TimeGrid& g) {
    if (j.is_number()) return ScalarPath::constant(g, number(j, field));
    if (!j.is_array() || j.size() != g.nodes())
        throw ModelError("field '" + field + "': expected a number or an array of " + std::to_string(g.nodes()) +
                         " numbers");
    std::vector<double> v;
    for (std::size_t i = 0; i < j.size(); ++i) v.push_back(number(j[i], field + "[" + std::to_string(i) + "]"));
    return ScalarPath(g, std::move(v));
}

inline TimeGrid grid(const json& j) {
    const double h = number(j.at("horizon"), "horizon");
    const auto& s = j.at("steps");
    if (!s.is_number_integer() || s.get<long long>() < 1) throw ModelError("field 'steps': expected a positive integer");
    return TimeGrid(h, static_cast<std::size_t>(s.get<long long>()));
}

inline std::string line_column(const std::string& text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < text.size() && i + 1 < byte; ++i) {
        if (text[i] == '\n') ++line, col = 1;
        else ++col;
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

}  // namespace detail

inline json parse_text(const std::string& text, const std::string& source) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ModelError(source + ": malformed JSON at " + detail::line_column(text, e.byte) + ": " + e.what());
    }
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw ModelError("cannot open model file '" + p.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::string model_type(const json& doc) {
    if (!doc.is_object() || !doc.contains("type") || !doc["type"].is_string())
        throw ModelError("model: missing string key 'type' (\"lq\" or \"factor\")");
    return doc["type"].get<std::string>();
}

/// Strict LQ model document. With `steps_override` the coefficient paths are
/// linearly resampled onto the new grid.
inline LoadedLq parse_lq(const json& doc, std::optional<std::size_t> steps_override = {}) {
    detail::require_keys(doc, {"type", "horizon", "steps", "A", "B", "Sigma", "M", "N", "H", "Gamma", "x0"},
                         {"name", "description"}, "lq model");
    if (doc["type"] != "lq") throw ModelError("lq model: 'type' must be \"lq\"");
    const TimeGrid g = detail::grid(doc);
    LqModel m{detail::matrix_path(doc["A"], "A", g),     detail::matrix_path(doc["B"], "B", g),
              detail::matrix_path(doc["Sigma"], "Sigma", g), detail::matrix_path(doc["M"], "M", g),
              detail::matrix_path(doc["N"], "N", g),     detail::matrix(doc["H"], "H"),
              GammaMatrix(detail::matrix(doc["Gamma"], "Gamma")), detail::vector(doc["x0"], "x0")};
    if (steps_override && *steps_override != g.steps()) {
        const TimeGrid t(g.horizon(), *steps_override);
        m.A = m.A.resampled(t);
        m.B = m.B.resampled(t);
        m.Sigma = m.Sigma.resampled(t);
        m.M = m.M.resampled(t);
        m.N = m.N.resampled(t);
    }
    return {std::move(m), doc, model_hash(doc)};
}

inline LoadedFactor parse_factor(const json& doc, std::optional<std::size_t> steps_override = {}) {
    detail::require_keys(doc, {"type", "horizon", "steps", "a", "b", "A", "B", "Lambda", "Sigma", "r", "Gamma", "x0"},
                         {"name", "description"}, "factor model");
    if (doc["type"] != "factor") throw ModelError("factor model: 'type' must be \"factor\"");
    const TimeGrid g = detail::grid(doc);
    ScalarPath r = detail::scalar_path(doc["r"], "r", g);
    if (steps_override && *steps_override != g.steps()) r = r.resampled(TimeGrid(g.horizon(), *steps_override));
    FactorMarketModel m{detail::vector(doc["a"], "a"),
                        detail::vector(doc["b"], "b"),
                        detail::matrix(doc["A"], "A"),
                        detail::matrix(doc["B"], "B"),
                        detail::matrix(doc["Lambda"], "Lambda"),
                        detail::matrix(doc["Sigma"], "Sigma"),
                        std::move(r),
                        GammaMatrix(detail::matrix(doc["Gamma"], "Gamma")),
                        detail::vector(doc["x0"], "x0")};
    return {std::move(m), doc, model_hash(doc)};
}

inline LoadedLq load_lq(const std::filesystem::path& p, std::optional<std::size_t> steps = {}) {
    return parse_lq(parse_text(read_file(p), p.string()), steps);
}

inline LoadedFactor load_factor(const std::filesystem::path& p, std::optional<std::size_t> steps = {}) {
    return parse_factor(parse_text(read_file(p), p.string()), steps);
}

inline json to_json(const Matrix& m) {
    json out = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        out.push_back(std::move(row));
    }
    return out;
}

inline json to_json(const Vector& v) {
    json out = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
    return out;
}

inline json to_json(const TimeGrid& g) { return {{"horizon", g.horizon()}, {"steps", g.steps()}}; }

/// Shortest round-trip decimal form of a double (std::to_chars).
inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

/// CSV writer; the first line is a versioned schema comment.
class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& p, const std::string& schema, const std::vector<std::string>& columns)
        : out_(p, std::ios::binary) {
        if (!out_) throw std::runtime_error("cannot write '" + p.string() + "'");
        out_ << "# arsc-csv v1 " << schema << '\n';
        for (std::size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << columns[i];
        out_ << '\n';
    }

    using Cell = std::variant<double, long long, std::size_t, std::string>;

    void row(const std::vector<Cell>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ',';
            std::visit(
                [this](const auto& v) {
                    using T = std::decay_t<decltype(v)>;
                    if constexpr (std::is_same_v<T, double>) out_ << format_double(v);
                    else out_ << v;
                },
                cells[i]);
        }
        out_ << '\n';
    }

private:
    std::ofstream out_;
};

inline void write_json(const std::filesystem::path& p, const json& doc) {
    std::ofstream out(p, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + p.string() + "'");
    out << doc.dump(2) << '\n';
}

}  // namespace arsc::io
