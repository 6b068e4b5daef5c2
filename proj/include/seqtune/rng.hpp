#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace seqtune {

/// Deterministic random source. All draws are derived from the raw mt19937_64
/// stream with fixed arithmetic, so a given seed produces the same values on
/// every platform and standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Uniform double in (0, 1]; never zero, safe under log().
    double uniform_pos() {
        return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller. Two uniform draws per value.
    double normal() {
        const double u1 = uniform_pos();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
    }

    /// Index in [0, n) drawn from the weights in probs (assumed to sum to ~1).
    /// Inverse-CDF scan in index order; any rounding residue goes to the last
    /// index.
    int categorical(const double* probs, int n) {
        const double u = uniform();
        double cum = 0.0;
        for (int i = 0; i < n; ++i) {
            cum += probs[i];
            if (u < cum) return i;
        }
        return n - 1;
    }

private:
    static constexpr double kPi = 3.14159265358979323846;
    std::mt19937_64 engine_;
};

}  // namespace seqtune
