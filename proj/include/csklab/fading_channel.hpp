#ifndef CSKLAB_FADING_CHANNEL_HPP
#define CSKLAB_FADING_CHANNEL_HPP

#include <cmath>
#include <complex>
#include <span>
#include <stdexcept>
#include <vector>

#include "csklab/rng.hpp"

namespace csk {

enum class LinkRole { SourceDest, SourceRelay, RelayDest };

/// One block-fading coefficient, constant for exactly one symbol period.
struct LinkRealization {
    std::complex<double> h;
    LinkRole role = LinkRole::SourceDest;
    int relay_index = -1;  // -1 for the direct link
    double variance = 1.0; // E[|h|^2]
};

/// AWGN description. sigma2 = N0/2 is the per-complex-dimension variance.
/// n0 == 0 disables noise (the noiseless limit used in tests).
struct NoiseModel {
    double n0 = 1.0;

    explicit NoiseModel(double n0_in) : n0(n0_in) {
        if (!(n0 >= 0.0)) throw std::invalid_argument("NoiseModel: N0 must be >= 0");
    }
    static NoiseModel none() { return NoiseModel(0.0); }
    double sigma2() const { return n0 / 2.0; }
    bool enabled() const { return n0 > 0.0; }
};

/// Draw one zero-mean circularly-symmetric complex Gaussian coefficient with
/// E[|h|^2] = variance.
inline LinkRealization draw_channel(LinkRole role, int relay_index, double variance, Rng& rng) {
    if (!(variance > 0.0)) throw std::invalid_argument("draw_channel: variance must be > 0");
    return {rng.complex_normal(variance), role, relay_index, variance};
}

/// y_k = sqrt(power) * h * u_k + z_k, with z_k complex AWGN (per-dimension
/// variance N0/2). Writes into `out`, which must match `samples` in length.
inline void apply_link(std::span<const double> samples, std::complex<double> h, double power,
                       const NoiseModel& noise, Rng& rng, std::span<std::complex<double>> out) {
    if (!(power >= 0.0)) throw std::invalid_argument("apply_link: power must be >= 0");
    if (out.size() != samples.size()) throw std::invalid_argument("apply_link: output length mismatch");
    const std::complex<double> gain = std::sqrt(power) * h;
    if (noise.enabled()) {
        const double s = std::sqrt(noise.sigma2());
        for (std::size_t k = 0; k < samples.size(); ++k) {
            out[k] = gain * samples[k] + std::complex<double>(s * rng.normal(), s * rng.normal());
        }
    } else {
        for (std::size_t k = 0; k < samples.size(); ++k) out[k] = gain * samples[k];
    }
}

inline std::vector<std::complex<double>> apply_link(std::span<const double> samples,
                                                    std::complex<double> h, double power,
                                                    const NoiseModel& noise, Rng& rng) {
    std::vector<std::complex<double>> out(samples.size());
    apply_link(samples, h, power, noise, rng, out);
    return out;
}

}  // namespace csk

#endif  // CSKLAB_FADING_CHANNEL_HPP
