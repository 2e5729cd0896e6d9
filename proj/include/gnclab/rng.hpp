#pragma once

#include <cmath>
#include <cstdint>

namespace gnclab {

// 64-bit finalizer with full avalanche (splitmix64 style).
inline std::uint64_t mix64(std::uint64_t x) {
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return x;
}

// Counter-based random stream: word(i) depends only on (seed, stream, i),
// so any worker partition of the index space sees identical values.
class CounterRng {
public:
    CounterRng(std::uint64_t seed, std::uint64_t stream)
        : base_(mix64(mix64(seed + 0x9e3779b97f4a7c15ULL) ^
                      mix64(stream + 0xd1b54a32d192ed03ULL))) {}

    std::uint64_t word(std::uint64_t index) const {
        return mix64(base_ + (index + 1) * 0x9e3779b97f4a7c15ULL);
    }

    // Uniform in (0,1), 53-bit resolution, never exactly 0 or 1.
    double unit(std::uint64_t index) const {
        return (static_cast<double>(word(index) >> 11) + 0.5) * 0x1.0p-53;
    }

    // Uniform integer in [0, n). n must be >= 1.
    std::uint64_t index(std::uint64_t idx, std::uint64_t n) const {
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(word(idx)) * n) >> 64);
    }

    // Standard normal from two counter words (Box-Muller, first output).
    double normal(std::uint64_t index) const {
        const double u1 = unit(2 * index);
        const double u2 = unit(2 * index + 1);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
    }

private:
    std::uint64_t base_;
};

// Sequential facade over CounterRng for call sites that do not need
// explicit indices. Consumption order is part of the output contract.
class StreamRng {
public:
    StreamRng(std::uint64_t seed, std::uint64_t stream) : rng_(seed, stream) {}

    std::uint64_t u64() { return rng_.word(next_++); }
    double unit() { return rng_.unit(next_++); }
    std::uint64_t index(std::uint64_t n) { return rng_.index(next_++, n); }

    double normal() {
        const double u1 = rng_.unit(next_++);
        const double u2 = rng_.unit(next_++);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
    }

    std::uint64_t cursor() const { return next_; }

private:
    CounterRng rng_;
    std::uint64_t next_ = 0;
};

}  // namespace gnclab
