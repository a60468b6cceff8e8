#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace skamp {

// Counter-based generator built on the splitmix64 finalizer.  Every draw is a
// pure function of (key, counter), so parallel consumers can pull from
// disjoint counter ranges and get results that do not depend on scheduling or
// thread count.  Streams derive fresh keys from (seed, stream) so e.g. the
// matrix entries and the AMP initialization never share draws.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
        : key_(mix(seed + 0x9E3779B97F4A7C15ULL * (stream + 1))) {}

    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9E3779B97F4A7C15ULL;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t bits(std::uint64_t counter) const {
        return mix(key_ + 0x9E3779B97F4A7C15ULL * counter);
    }

    // Uniform on (0, 1]; never returns 0 so log() below is safe.
    double uniform(std::uint64_t counter) const {
        return static_cast<double>((bits(counter) >> 11) + 1) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller, one value per counter.
    double normal(std::uint64_t counter) const {
        const double u1 = uniform(2 * counter);
        const double u2 = uniform(2 * counter + 1);
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * std::numbers::pi * u2);
    }

    std::uint64_t key() const { return key_; }

private:
    std::uint64_t key_;
};

}  // namespace skamp
