#pragma once

#include <cmath>
#include <cstdint>

namespace gasest::rng {

// Splittable counter-style streams built on the splitmix64 finalizer.
// A stream key is derived by folding ids into a seed; every (key, index)
// pair yields the same draw no matter which thread asks or in what order,
// which is what makes Monte-Carlo output independent of the thread count.

inline constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

inline constexpr std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
}

inline constexpr std::uint64_t derive(std::uint64_t key, std::uint64_t id) {
    return mix64(key ^ mix64(id * kGamma + 0xD1B54A32D192ED03ULL));
}

struct SplitMix64 {
    std::uint64_t state = 0;

    explicit constexpr SplitMix64(std::uint64_t seed) : state(seed) {}

    constexpr std::uint64_t next() {
        state += kGamma;
        return mix64(state);
    }

    // Uniform on (0, 1).
    double next_unit() {
        return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
    }
};

// Standard normal draw for (key, index), Box-Muller on a two-word substream.
inline double gaussian(std::uint64_t key, std::uint64_t index) {
    SplitMix64 s(derive(key, index));
    const double u1 = s.next_unit();
    const double u2 = s.next_unit();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

// Uniform draw on (0, 1) for (key, index).
inline double uniform(std::uint64_t key, std::uint64_t index) {
    SplitMix64 s(derive(key, index));
    return s.next_unit();
}

} // namespace gasest::rng
