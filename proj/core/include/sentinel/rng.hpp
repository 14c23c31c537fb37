#pragma once

#include <cstdint>

namespace sentinel {

// SplitMix64 (Steele, Lea, Flood 2014): 64-bit state, increment 0x9E3779B97F4A7C15,
// output mixer with shifts 30/27/31. Chosen over std engines because every
// language can reproduce it bit for bit.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed = 0) : state_(seed) {}

    std::uint64_t next();

    // Uniform on the open interval (0, 1): ((x >> 11) + 0.5) * 2^-53.
    double uniform01();

    // Uniform on the open interval (lo, hi).
    double uniform(double lo, double hi);

    // Standard normal via Box-Muller; the second variate is cached.
    double normal();

    std::uint64_t state() const { return state_; }

private:
    std::uint64_t state_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// Derives an independent stream seed from a base seed and a stream tag.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

}  // namespace sentinel
