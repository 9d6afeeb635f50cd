#pragma once

#include <cmath>
#include <cstddef>
#include <string>

#include "arsc/errors.hpp"

namespace arsc {

/// Uniform partition of [0, T] into `steps` intervals.
class TimeGrid {
public:
    TimeGrid(double horizon, std::size_t steps) : horizon_(horizon), steps_(steps) {
        if (!(horizon > 0.0) || !std::isfinite(horizon)) {
            throw ModelError("TimeGrid: horizon must be finite and > 0, got " + std::to_string(horizon));
        }
        if (steps < 1) throw ModelError("TimeGrid: steps must be >= 1");
        dt_ = horizon_ / static_cast<double>(steps_);
    }

    double horizon() const noexcept { return horizon_; }
    std::size_t steps() const noexcept { return steps_; }
    std::size_t nodes() const noexcept { return steps_ + 1; }
    double dt() const noexcept { return dt_; }

    /// Grid time t_i; the last node is pinned to the horizon.
    double time(std::size_t i) const noexcept {
        return i >= steps_ ? horizon_ : static_cast<double>(i) * dt_;
    }

    bool operator==(const TimeGrid& other) const noexcept {
        return horizon_ == other.horizon_ && steps_ == other.steps_;
    }

private:
    double horizon_;
    std::size_t steps_;
    double dt_;
};

}  // namespace arsc
