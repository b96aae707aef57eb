#pragma once

// Portable seeded randomness. Streams are defined bit-for-bit so a seed gives
// the same scene on every platform and in any re-implementation:
//
//   seeding : state = splitmix64(seed); a zero state is replaced by the
//             splitmix64 increment 0x9E3779B97F4A7C15
//   next()  : x ^= x >> 12; x ^= x << 25; x ^= x >> 27;
//             return x * 0x2545F4914F6CDD1D            (xorshift64*)
//   uniform : (next() >> 11) * 2^-53, in [0, 1)
//   normal  : Box-Muller, u1 = 1 - uniform(), u2 = uniform(),
//             sqrt(-2 ln u1) * cos(2 pi u2)            (one draw per call)
//   poisson : count of unit-rate exponential gaps -ln(1 - uniform()) whose
//             running sum stays <= lambda

#include <cmath>
#include <cstdint>
#include <string_view>

namespace geocount {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// Derives an independent stream seed from a parent seed and a label.
inline constexpr std::uint64_t mix_seed(std::uint64_t seed, std::string_view label) {
    std::uint64_t h = 0xCBF29CE484222325ULL;  // FNV-1a
    for (char c : label) {
        h ^= static_cast<std::uint8_t>(c);
        h *= 0x100000001B3ULL;
    }
    return splitmix64(seed ^ splitmix64(h));
}

inline constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t value) {
    return splitmix64(seed ^ splitmix64(value + 0x632BE59BD9B4E019ULL));
}

class Xorshift64Star {
public:
    explicit constexpr Xorshift64Star(std::uint64_t seed) : state_(splitmix64(seed)) {
        if (state_ == 0) state_ = 0x9E3779B97F4A7C15ULL;
    }

    constexpr std::uint64_t next() {
        state_ ^= state_ >> 12;
        state_ ^= state_ << 25;
        state_ ^= state_ >> 27;
        return state_ * 0x2545F4914F6CDD1DULL;
    }

    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) {
        if (lo == hi) return lo;
        return lo + (hi - lo) * uniform();
    }

    /// Integer in [lo, hi] (inclusive); modulo bias is negligible for our spans.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        if (hi <= lo) return lo;
        const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
        return lo + static_cast<std::int64_t>(next() % span);
    }

    bool bernoulli(double p) { return uniform() < p; }

    double normal() {
        const double u1 = 1.0 - uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
    }

    std::int64_t poisson(double lambda) {
        if (!(lambda > 0.0)) return 0;
        std::int64_t k = 0;
        double t = -std::log(1.0 - uniform());
        while (t <= lambda) {
            ++k;
            t += -std::log(1.0 - uniform());
        }
        return k;
    }

private:
    std::uint64_t state_;
};

}  // namespace geocount
