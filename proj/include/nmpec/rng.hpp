// rng.hpp — splittable, reproducible random streams.

#pragma once

#include <complex>
#include <cstdint>
#include <random>

namespace nmpec {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Stream domains keep independent consumers of one master seed apart.
enum class StreamDomain : std::uint64_t {
    noisy_noise = 1,
    mitigated_noise = 2,
    mitigated_sampling = 3,
    ensemble_noise = 4,
    user = 5,
};

/// A random stream derived deterministically from (seed, domain, index).
class RandomStream {
public:
    RandomStream(std::uint64_t seed, StreamDomain domain, std::uint64_t index)
        : engine_(splitmix64(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(domain))) + index)) {}
    explicit RandomStream(std::uint64_t seed) : RandomStream(seed, StreamDomain::user, 0) {}

    double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
    double normal() { return normal_(engine_); }
    /// Circular complex normal with E|z|^2 = 1 and E[z^2] = 0.
    std::complex<double> complex_normal() {
        constexpr double s = 0.70710678118654752440;
        const double re = normal_(engine_);
        const double im = normal_(engine_);
        return {s * re, s * im};
    }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace nmpec
