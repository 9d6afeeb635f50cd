#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "arsc/errors.hpp"

namespace arsc {

/// Heavy-tail rule: the largest 0.1% of the exponential weights (at least one)
/// carry more than 20% of their total.
inline constexpr double kHeavyTailFraction = 0.001;
inline constexpr double kHeavyTailShare = 0.20;

struct ExponentialMomentEstimate {
    double estimate = 0.0;
    double std_error = 0.0;
    double top_weight_share = 0.0;
    bool heavy_tail = false;
    std::size_t samples = 0;
};

/// Plug-in estimate of (1/s)·log E[exp(s·X)] with a delta-method standard
/// error, computed with a max shift so that no weight overflows.
inline ExponentialMomentEstimate log_mean_exp(std::span<const double> x, double s) {
    if (x.empty()) throw PreconditionError("log_mean_exp: empty sample");
    if (s == 0.0) throw PreconditionError("log_mean_exp: scale must be nonzero");
    // Pivot at the sample maximising s·x so every shifted weight is <= 1.
    std::size_t pivot = 0;
    for (std::size_t i = 1; i < x.size(); ++i)
        if (s * x[i] > s * x[pivot]) pivot = i;
    const double x_star = x[pivot];

    std::vector<double> w(x.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        w[i] = std::exp(s * (x[i] - x_star));
        sum += w[i];
    }
    const double n = static_cast<double>(x.size());
    const double mean = sum / n;
    double ss = 0.0;
    for (double wi : w) ss += (wi - mean) * (wi - mean);
    const double var = x.size() > 1 ? ss / (n - 1.0) : 0.0;

    ExponentialMomentEstimate out;
    out.samples = x.size();
    out.estimate = x_star + std::log(mean) / s;
    out.std_error = std::sqrt(var / n) / (mean * std::abs(s));

    const auto top = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(kHeavyTailFraction * n)));
    std::nth_element(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(top - 1), w.end(), std::greater<>());
    double top_sum = 0.0;
    for (std::size_t i = 0; i < top; ++i) top_sum += w[i];
    out.top_weight_share = top_sum / sum;
    out.heavy_tail = out.top_weight_share > kHeavyTailShare;
    return out;
}

struct MeanEstimate {
    double mean = 0.0;
    double std_error = 0.0;
};

inline MeanEstimate sample_mean(std::span<const double> x) {
    if (x.empty()) throw PreconditionError("sample_mean: empty sample");
    double sum = 0.0;
    for (double v : x) sum += v;
    const double n = static_cast<double>(x.size());
    const double m = sum / n;
    double ss = 0.0;
    for (double v : x) ss += (v - m) * (v - m);
    return {m, x.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0};
}

}  // namespace arsc
