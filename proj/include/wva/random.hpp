#pragma once

#include <cstdint>

namespace wva {

// Counter-based randomness: every trial draws from a stream addressed by
// (seed, index), so serial and parallel sweeps produce identical bits.

namespace detail {

/// SplitMix64 finalizer.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

}  // namespace detail

/// Derive an independent sub-seed for a labeled consumer (sweep point,
/// restart, signal index...).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t label) {
    return detail::mix64(seed ^ detail::mix64(label + 1));
}

/// Small keyed generator for one trial's draws.
class TrialStream {
public:
    TrialStream(std::uint64_t seed, std::uint64_t trial_index)
        : state_(derive_seed(seed, trial_index)) {}

    std::uint64_t next_bits() {
        state_ += 0x9E3779B97F4A7C15ull;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return double(next_bits() >> 11) * 0x1.0p-53; }

private:
    std::uint64_t state_;
};

}  // namespace wva
