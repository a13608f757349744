#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace tiebreak::rng {

// Counter-based generator: every draw is a pure function of (seed, stream,
// counter), so per-subject draws are order-independent and parallelizable.

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t key(std::uint64_t seed, std::uint64_t counter, std::uint64_t stream = 0) {
    return splitmix64(splitmix64(splitmix64(seed) ^ stream) ^ counter);
}

// Uniform on (0, 1]; never returns 0 so it is safe under log().
inline double uniform01(std::uint64_t seed, std::uint64_t counter, std::uint64_t stream = 0) {
    const std::uint64_t bits = key(seed, counter, stream);
    return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
}

// Standard normal via Box-Muller; draw index j consumes counters 2j, 2j+1.
inline double normal(std::uint64_t seed, std::uint64_t counter, std::uint64_t stream = 0) {
    const double u1 = uniform01(seed, 2 * counter, stream);
    const double u2 = uniform01(seed, 2 * counter + 1, stream);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// Stateful convenience wrapper over the counter-based primitives.
class Stream {
public:
    explicit Stream(std::uint64_t seed, std::uint64_t stream = 0)
        : seed_(seed), stream_(stream) {}

    double uniform() { return uniform01(seed_, counter_++, stream_); }
    double normal() { return rng::normal(seed_, counter_++, stream_); }

    // Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        return key(seed_, counter_++, stream_) % n;
    }

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t counter_ = 0;
};

}  // namespace tiebreak::rng
