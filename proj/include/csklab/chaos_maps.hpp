#ifndef CSKLAB_CHAOS_MAPS_HPP
#define CSKLAB_CHAOS_MAPS_HPP

#include <cmath>
#include <cstddef>
#include <map>
#include <mutex>
#include <stdexcept>
#include <tuple>
#include <vector>

namespace csk {

enum class ChaosMap { Cpf, Pwl };

/// Chip generator selection. The PWL parameters are ignored for the CPF map.
struct MapKind {
    ChaosMap tag = ChaosMap::Cpf;
    int pwl_L = 3;
    double pwl_phi = 0.1;

    void validate() const {
        if (tag == ChaosMap::Pwl) {
            if (pwl_L < 1) throw std::invalid_argument("MapKind: pwl_L must be >= 1");
            if (!(pwl_phi > 0.0 && pwl_phi < 1.0))
                throw std::invalid_argument("MapKind: pwl_phi must lie in (0,1)");
        }
    }
};

/// Chebyshev order-2 map, x -> 1 - 2x^2.
inline double cpf_iterate(double x) {
    if (!(std::fabs(x) <= 1.0)) throw std::domain_error("cpf_iterate: |x| > 1");
    return 1.0 - 2.0 * x * x;
}

/// Piecewise-linear map: z = frac(L|x| + phi), x' = sign(x)(2z - 1).
/// sign(0) := +1 so the map is total.
inline double pwl_iterate(double x, int L, double phi) {
    if (!(std::fabs(x) <= 1.0)) throw std::domain_error("pwl_iterate: |x| > 1");
    if (L < 1) throw std::invalid_argument("pwl_iterate: L must be >= 1");
    if (!(phi > 0.0 && phi < 1.0)) throw std::invalid_argument("pwl_iterate: phi must lie in (0,1)");
    double z = std::fmod(static_cast<double>(L) * std::fabs(x) + phi, 1.0);
    const double sign = (x < 0.0) ? -1.0 : 1.0;
    return sign * (2.0 * z - 1.0);
}

inline double map_iterate(const MapKind& map, double x) {
    return map.tag == ChaosMap::Cpf ? cpf_iterate(x) : pwl_iterate(x, map.pwl_L, map.pwl_phi);
}

/// A finite run of chips. When normalized, the chips carry the per-map affine
/// transform (x - raw_mean) / raw_std; the raw chips all lie in [-1, 1].
struct ChaoticSequence {
    std::vector<double> chips;
    MapKind map;
    double seed_state = 0.0;
    bool normalized = false;
    double raw_mean = 0.0;
    double raw_std = 1.0;
};

struct SequenceStats {
    double mean = 0.0;
    double variance = 0.0;
};

namespace detail {

constexpr double kFixedPointTol = 1e-6;
constexpr std::size_t kCalibrationLength = 1'000'000;
constexpr std::size_t kDefaultBurnIn = 1000;
constexpr double kCalibrationSeed = 0.361847103846071;

inline void check_seed(const MapKind& map, double seed) {
    if (!(seed > -1.0 && seed < 1.0))
        throw std::invalid_argument("generate_sequence: seed_state must lie in (-1,1)");
    if (std::fabs(map_iterate(map, seed) - seed) < kFixedPointTol)
        throw std::invalid_argument("generate_sequence: seed_state is at/near a fixed point");
}

struct MapCalibration {
    double mean;
    double stddev;
};

/// Long-run raw-chip mean and standard deviation, from one fixed-seed
/// calibration run per map parameterization. Cached process-wide.
inline const MapCalibration& map_calibration(const MapKind& map) {
    static std::mutex mu;
    static std::map<std::tuple<int, int, double>, MapCalibration> cache;
    const auto key = std::make_tuple(static_cast<int>(map.tag), map.pwl_L, map.pwl_phi);
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;

    double x = kCalibrationSeed;
    for (std::size_t i = 0; i < kDefaultBurnIn; ++i) x = map_iterate(map, x);
    double sum = 0.0, sum2 = 0.0;
    for (std::size_t i = 0; i < kCalibrationLength; ++i) {
        x = map_iterate(map, x);
        sum += x;
        sum2 += x * x;
    }
    const double n = static_cast<double>(kCalibrationLength);
    const double mean = sum / n;
    const double var = sum2 / n - mean * mean;
    auto [ins, ok] = cache.emplace(key, MapCalibration{mean, std::sqrt(var)});
    return ins->second;
}

}  // namespace detail

/// Raw (unnormalized) chips after burn-in. All values lie in [-1, 1].
inline std::vector<double> generate_raw_chips(const MapKind& map, double seed_state,
                                              std::size_t length,
                                              std::size_t burn_in = detail::kDefaultBurnIn) {
    map.validate();
    detail::check_seed(map, seed_state);
    if (length == 0) throw std::invalid_argument("generate_raw_chips: length must be positive");
    std::vector<double> chips(length);
    double x = seed_state;
    for (std::size_t i = 0; i < burn_in; ++i) x = map_iterate(map, x);
    for (std::size_t i = 0; i < length; ++i) {
        x = map_iterate(map, x);
        chips[i] = x;
    }
    return chips;
}

/// Burned-in, affinely normalized chip run (zero mean, unit variance in the
/// long-run sense; the affine constants are per-map calibration constants).
inline ChaoticSequence generate_sequence(const MapKind& map, double seed_state, std::size_t length,
                                         std::size_t burn_in = detail::kDefaultBurnIn) {
    ChaoticSequence seq;
    seq.chips = generate_raw_chips(map, seed_state, length, burn_in);
    seq.map = map;
    seq.seed_state = seed_state;
    const auto& cal = detail::map_calibration(map);
    seq.raw_mean = cal.mean;
    seq.raw_std = cal.stddev;
    for (double& c : seq.chips) c = (c - cal.mean) / cal.stddev;
    seq.normalized = true;
    return seq;
}

/// Sample mean and biased sample variance of the chips.
inline SequenceStats sequence_stats(const ChaoticSequence& seq) {
    if (seq.chips.empty()) throw std::invalid_argument("sequence_stats: empty sequence");
    double sum = 0.0, sum2 = 0.0;
    for (double c : seq.chips) {
        sum += c;
        sum2 += c * c;
    }
    const double n = static_cast<double>(seq.chips.size());
    const double mean = sum / n;
    return {mean, sum2 / n - mean * mean};
}

/// Draws a valid map seed from an RNG stream, rejecting fixed points.
template <typename RngT>
double draw_map_seed(const MapKind& map, RngT& rng) {
    for (;;) {
        const double s = 2.0 * rng.uniform() - 1.0;
        if (!(s > -1.0 && s < 1.0)) continue;
        if (std::fabs(map_iterate(map, s) - s) < detail::kFixedPointTol) continue;
        return s;
    }
}

}  // namespace csk

#endif  // CSKLAB_CHAOS_MAPS_HPP
