#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace nlab::rng {

// SplitMix64 finalizer (Steele-Lea-Flood / Vigna).
inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

inline std::uint64_t hash_combine(std::uint64_t h, std::uint64_t v) {
    return mix64(h ^ (v + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2)));
}

inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ull;
    }
    return h;
}

/// Stream key for (seed, experiment name, trial, resample attempt): streams
/// are independent by construction, so trials can run in any order on any
/// number of threads and still draw identical variates.
inline std::uint64_t stream_id(std::uint64_t seed, std::string_view name, std::uint64_t trial,
                               std::uint64_t attempt = 0) {
    std::uint64_t h = mix64(seed + 0x9E3779B97F4A7C15ull);
    h = hash_combine(h, fnv1a(name));
    h = hash_combine(h, trial);
    h = hash_combine(h, attempt);
    return h;
}

/// Counter-based generator: output i is a pure function of (key, i).
class CounterRng {
  public:
    explicit CounterRng(std::uint64_t key) : key_(key) {}

    std::uint64_t next_u64() {
        counter_ += 0x9E3779B97F4A7C15ull;
        return mix64(key_ + counter_);
    }

    /// Uniform in (0,1).
    double next_unit() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller; the spare value is cached, so a
    /// stream consumed sequentially is fully deterministic.
    double next_gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = next_unit();
        const double u2 = next_unit();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

  private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace nlab::rng
