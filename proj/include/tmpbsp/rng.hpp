#pragma once

#include <cstdint>
#include <random>

namespace tmpbsp {

/// splitmix64 finalizer, used to derive independent stream seeds.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d49b0ed831f35ULL;
    return z ^ (z >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t salt) {
    return mix64(base ^ mix64(salt));
}

/// Seeded random stream owned by exactly one consumer.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

    double uniform(double lo, double hi) {
        return std::uniform_real_distribution<double>(lo, hi)(engine_);
    }
    double gaussian() { return normal_(engine_); }
    /// Draws a seed for a derived child stream.
    std::uint64_t fork_seed() { return engine_(); }
    /// Zero-mean draw with the given variance; exact zero when var == 0.
    double gaussian_var(double var) {
        const double g = normal_(engine_);
        return var > 0.0 ? std::sqrt(var) * g : 0.0;
    }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace tmpbsp
