#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace arsc {

/// SplitMix64 finalizer; used to derive independent substream seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// (seed, stream) pair. Every draw of a simulation is a function of these two
/// values only, so per-path streams make results independent of scheduling.
struct RandomSource {
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;

    RandomSource substream(std::uint64_t index) const noexcept {
        return {seed, splitmix64(stream ^ splitmix64(index + 0x632be59bd9b4e019ULL))};
    }
};

/// xoshiro256** generator with a portable Box-Muller normal sampler.
class RandomStream {
public:
    explicit RandomStream(const RandomSource& src) noexcept {
        std::uint64_t x = splitmix64(src.seed) ^ splitmix64(src.stream + 0x2545f4914f6cdd1dULL);
        for (auto& s : state_) {
            x = splitmix64(x);
            s = x;
        }
    }

    std::uint64_t next() noexcept {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    /// Uniform on the open interval (0, 1).
    double uniform() noexcept { return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53; }

    double normal() noexcept {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double r = std::sqrt(-2.0 * std::log(uniform()));
        const double phi = 2.0 * std::numbers::pi * uniform();
        spare_ = r * std::sin(phi);
        has_spare_ = true;
        return r * std::cos(phi);
    }

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }

    std::uint64_t state_[4]{};
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace arsc
