#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace arsc {

/// Tail integrals S_i = ∫_{t_i}^{t_N} f dt of equally spaced samples f_0..f_N.
///
/// Composite Simpson is used whenever the number of remaining intervals is
/// even; an odd count takes Simpson's 3/8 rule on the first three intervals.
/// A single remaining interval uses the quadratic through the last three
/// samples. S_N = 0 exactly.
template <typename T>
std::vector<T> tail_integrals(std::span<const T> f, double h, const T& zero) {
    const std::size_t n = f.size();
    if (n == 0) throw std::invalid_argument("tail_integrals: empty sample");
    std::vector<T> s(n, zero);
    if (n == 1) return s;
    const std::size_t last = n - 1;
    if (n == 2) {
        s[0] = T(0.5 * h * (f[0] + f[1]));
        return s;
    }
    s[last - 1] = T(h / 12.0 * (-1.0 * f[last - 2] + 8.0 * f[last - 1] + 5.0 * f[last]));
    for (std::size_t m = 2; m <= last; ++m) {
        const std::size_t i = last - m;
        if (m % 2 == 0) {
            s[i] = T(s[i + 2] + h / 3.0 * (f[i] + 4.0 * f[i + 1] + f[i + 2]));
        } else {
            s[i] = T(s[i + 3] + 3.0 * h / 8.0 * (f[i] + 3.0 * f[i + 1] + 3.0 * f[i + 2] + f[i + 3]));
        }
    }
    return s;
}

inline std::vector<double> tail_integrals(std::span<const double> f, double h) {
    return tail_integrals<double>(f, h, 0.0);
}

inline double integrate(std::span<const double> f, double h) { return tail_integrals(f, h).front(); }

/// Simpson over the two-interval window [t_i, t_{i+2}].
template <typename T>
T simpson_window(const T& f0, const T& f1, const T& f2, double h) {
    return T(h / 3.0 * (f0 + 4.0 * f1 + f2));
}

}  // namespace arsc
