#pragma once

#include <cmath>
#include <cstddef>
#include <type_traits>
#include <utility>
#include <vector>

#include "arsc/errors.hpp"
#include "arsc/grid.hpp"
#include "arsc/linalg.hpp"

namespace arsc {

namespace detail {

inline bool all_finite(double v) { return std::isfinite(v); }
inline bool all_finite(const Matrix& m) { return m.allFinite(); }
inline bool all_finite(const Vector& v) { return v.allFinite(); }

}  // namespace detail

/// Deterministic function of time sampled at the nodes of a TimeGrid.
/// Values between nodes are obtained by linear interpolation; at nodes the
/// stored sample is returned unchanged.
template <typename Value>
class Path {
public:
    using value_type = Value;

    Path(TimeGrid grid, std::vector<Value> values) : grid_(grid), values_(std::move(values)) {
        if (values_.size() != grid_.nodes()) {
            throw ModelError("Path: expected " + std::to_string(grid_.nodes()) + " samples, got " +
                             std::to_string(values_.size()));
        }
        for (std::size_t i = 0; i < values_.size(); ++i) {
            if (!detail::all_finite(values_[i])) {
                throw ModelError("Path: non-finite sample at index " + std::to_string(i));
            }
        }
    }

    static Path constant(TimeGrid grid, const Value& v) {
        return Path(grid, std::vector<Value>(grid.nodes(), v));
    }

    const TimeGrid& grid() const noexcept { return grid_; }
    std::size_t size() const noexcept { return values_.size(); }
    const Value& operator[](std::size_t i) const { return values_[i]; }
    const Value& front() const { return values_.front(); }
    const Value& back() const { return values_.back(); }
    const std::vector<Value>& values() const noexcept { return values_; }

    /// Linear interpolation; clamps outside [0, T].
    Value evaluate(double t) const {
        if (t <= 0.0) return values_.front();
        if (t >= grid_.horizon()) return values_.back();
        const double s = t / grid_.dt();
        auto i = static_cast<std::size_t>(s);
        if (i >= grid_.steps()) return values_.back();
        const double w = s - static_cast<double>(i);
        if (w == 0.0) return values_[i];
        return Value((1.0 - w) * values_[i] + w * values_[i + 1]);
    }

    /// Value at the midpoint of [t_i, t_{i+1}].
    Value midpoint(std::size_t i) const { return Value(0.5 * (values_[i] + values_[i + 1])); }

    /// Resample onto another grid over the same horizon.
    Path resampled(const TimeGrid& target) const {
        if (target.horizon() != grid_.horizon()) throw ModelError("Path: resampling requires equal horizons");
        std::vector<Value> out;
        out.reserve(target.nodes());
        for (std::size_t i = 0; i < target.nodes(); ++i) out.push_back(evaluate(target.time(i)));
        return Path(target, std::move(out));
    }

private:
    TimeGrid grid_;
    std::vector<Value> values_;
};

using MatrixPath = Path<Matrix>;
using VectorPath = Path<Vector>;
using ScalarPath = Path<double>;

}  // namespace arsc

namespace arsc {

/// Path with nodal derivatives; evaluates by cubic Hermite interpolation so
/// that ODE solutions fed into other ODEs keep fourth-order accuracy.
template <typename Value>
class HermitePath {
public:
    HermitePath(Path<Value> values, std::vector<Value> derivatives)
        : values_(std::move(values)), derivatives_(std::move(derivatives)) {
        if (derivatives_.size() != values_.size()) throw ModelError("HermitePath: derivative count mismatch");
    }

    const Path<Value>& values() const noexcept { return values_; }

    Value evaluate(double t) const {
        const auto& g = values_.grid();
        if (t <= 0.0) return values_.front();
        if (t >= g.horizon()) return values_.back();
        const double s = t / g.dt();
        auto i = static_cast<std::size_t>(s);
        if (i >= g.steps()) return values_.back();
        const double w = s - static_cast<double>(i);
        if (w == 0.0) return values_[i];
        const double h = g.dt();
        const double h00 = (1.0 + 2.0 * w) * (1.0 - w) * (1.0 - w);
        const double h10 = w * (1.0 - w) * (1.0 - w);
        const double h01 = w * w * (3.0 - 2.0 * w);
        const double h11 = w * w * (w - 1.0);
        return Value(h00 * values_[i] + h10 * h * derivatives_[i] + h01 * values_[i + 1] +
                     h11 * h * derivatives_[i + 1]);
    }

private:
    Path<Value> values_;
    std::vector<Value> derivatives_;
};

}  // namespace arsc
