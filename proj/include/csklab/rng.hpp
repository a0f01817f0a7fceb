#ifndef CSKLAB_RNG_HPP
#define CSKLAB_RNG_HPP

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>

namespace csk {

/// 64-bit avalanche mixer (splitmix64 finalizer). Stable across platforms.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Deterministic per-trial seed from (master_seed, trial_index).
inline std::uint64_t derive_trial_seed(std::uint64_t master_seed, std::uint64_t trial_index) {
    return mix64(mix64(master_seed) ^ mix64(trial_index + 0x736b6c61624aa5ULL));
}

/// Per-stream RNG. Gaussian variates come from an explicit Box-Muller so the
/// draw sequence does not depend on the standard library implementation.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform in [0, 1).
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    /// Standard normal.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double t = 2.0 * M_PI * u2;
        spare_ = r * std::sin(t);
        have_spare_ = true;
        return r * std::cos(t);
    }

    /// Zero-mean circularly-symmetric complex Gaussian with E[|z|^2] = variance.
    std::complex<double> complex_normal(double variance) {
        const double s = std::sqrt(variance / 2.0);
        const double re = s * normal();
        const double im = s * normal();
        return {re, im};
    }

    std::uint64_t raw() { return engine_(); }

  private:
    std::mt19937_64 engine_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace csk

#endif  // CSKLAB_RNG_HPP
