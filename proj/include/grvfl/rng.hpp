#pragma once

#include <cstdint>
#include <utility>
#include <vector>

namespace grvfl {

/// One step of splitmix64 (Steele, Lea & Flood). Advances `state` and returns
/// the mixed output.
std::uint64_t splitmix64(std::uint64_t& state);

/// Derives an independent child seed from (master, tag). Used for per-view
/// feature maps, per-repeat splits and per-width grid seeds.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag);

/// xoshiro256** 1.0 (Blackman & Vigna, 2018). The 256-bit state is filled
/// from the seed with four splitmix64 steps. Every draw below is defined in
/// terms of next() only, so sequences are identical across platforms and
/// standard libraries.
class Rng {
  public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next();

    /// Uniform on [0, 1) with 53 random mantissa bits: (next() >> 11) * 2^-53.
    double uniform01();

    /// lo + (hi - lo) * uniform01().
    double uniform(double lo, double hi);

    /// Unbiased integer in [0, bound) by rejection of the short tail.
    std::uint64_t below(std::uint64_t bound);

    /// Standard normal via Box-Muller (cosine branch only, no caching).
    double normal();

  private:
    std::uint64_t s_[4];
};

/// Fisher-Yates shuffle driven by Rng::below.
template <typename T>
void shuffle(std::vector<T>& values, Rng& rng) {
    for (std::size_t i = values.size(); i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng.below(i));
        std::swap(values[i - 1], values[j]);
    }
}

}  // namespace grvfl
