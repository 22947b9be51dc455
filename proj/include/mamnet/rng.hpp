#pragma once

#include <array>
#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

namespace mamnet {

/// Seedable PRNG with purpose-tagged substreams.
///
/// The generator is xoshiro256**, seeded through SplitMix64 from the pair
/// (seed, FNV-1a hash of the purpose tag). Two Rng instances with the same
/// seed and tag produce bit-identical draw sequences; instances with
/// different tags are independent streams, so adding a new consumer never
/// shifts the draws seen by an existing one. Reproducibility is promised
/// within this implementation only, not across implementations.
class Rng {
public:
    Rng(std::uint64_t seed, std::string_view tag);

    std::uint64_t next();

    /// Uniform in [0, 1) with 53 random bits.
    double uniform();

    double uniform(double lo, double hi);

    /// Standard normal via Box-Muller; draws two uniforms per pair and
    /// caches the spare.
    double normal();

    /// Uniform integer in [0, n); n must be positive.
    std::size_t below(std::size_t n);

    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::swap(items[i - 1], items[below(i)]);
        }
    }

private:
    std::array<std::uint64_t, 4> state_{};
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace mamnet
