#ifndef CSKLAB_ENERGY_STATS_HPP
#define CSKLAB_ENERGY_STATS_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include <boost/math/distributions/non_central_chi_squared.hpp>
#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include "csklab/df_relay_network.hpp"
#include "csklab/errors.hpp"

namespace csk {

struct FitError : NumericError {
    explicit FitError(const std::string& what) : NumericError(what) {}
};
struct FitNonConvergence : FitError {
    explicit FitNonConvergence(const std::string& what) : FitError(what) {}
};

/// Three-parameter generalized gamma family
///   p(a) = 2v / ((Omega/m)^m Gamma(m)) * a^(2mv-1) * exp(-m a^(2v) / Omega).
/// Special cases: m=v=1 Rayleigh-form, v=1 Nakagami-form, m=1 Weibull-form.
struct GeneralizedGammaParams {
    double v = 1.0;
    double m = 1.0;
    double omega = 1.0;
    double fit_ks = 0.0;
    std::size_t n_samples = 0;

    void validate() const {
        if (!(v > 0.0 && m > 0.0 && omega > 0.0))
            throw std::invalid_argument("GeneralizedGammaParams: v, m, omega must be > 0");
    }
};

/// Collected nonnegative realizations of alpha for one network configuration.
struct AlphaSample {
    std::vector<double> values;
    std::uint64_t config_fingerprint = 0;
};

inline std::uint64_t network_fingerprint(const NetworkConfig& cfg) {
    auto h = [](std::uint64_t acc, std::uint64_t x) { return mix64(acc ^ mix64(x)); };
    auto hd = [&](std::uint64_t acc, double x) {
        std::uint64_t bits;
        static_assert(sizeof(bits) == sizeof(x));
        std::memcpy(&bits, &x, sizeof(bits));
        return h(acc, bits);
    };
    std::uint64_t acc = 0x63736b6c6162ULL;
    acc = h(acc, static_cast<std::uint64_t>(cfg.n_relays));
    acc = hd(acc, cfg.p_s);
    for (double p : cfg.p_j) acc = hd(acc, p);
    acc = hd(acc, cfg.var_sd);
    acc = hd(acc, cfg.var_sr);
    acc = hd(acc, cfg.var_rd);
    acc = h(acc, static_cast<std::uint64_t>(cfg.beta));
    acc = h(acc, static_cast<std::uint64_t>(cfg.map.tag));
    acc = h(acc, static_cast<std::uint64_t>(cfg.map.pwl_L));
    acc = hd(acc, cfg.map.pwl_phi);
    acc = hd(acc, cfg.n0);
    return acc;
}

struct AlphaCollectOptions {
    bool freeze_channels_at_unity = false;  // test hook: h == 1 on every link
    std::size_t symbols_per_chip_run = 4096;
};

/// Draw n_bits realizations of alpha: independent channel gains times
/// consecutive chaotic bit energies.
inline AlphaSample collect_alpha(const NetworkConfig& cfg, std::size_t n_bits, Rng& rng,
                                 const AlphaCollectOptions& opt = {}) {
    cfg.validate();
    if (n_bits == 0) throw std::invalid_argument("collect_alpha: n_bits must be >= 1");
    AlphaSample sample;
    sample.values.reserve(n_bits);
    sample.config_fingerprint = network_fingerprint(cfg);

    std::size_t remaining = n_bits;
    while (remaining > 0) {
        const std::size_t n_sym = std::min(remaining, opt.symbols_per_chip_run);
        const double seed = draw_map_seed(cfg.map, rng);
        const ChaoticSequence chips =
            generate_sequence(cfg.map, seed, n_sym * static_cast<std::size_t>(cfg.beta));
        for (std::size_t l = 0; l < n_sym; ++l) {
            const double e_b = bit_energy(chips, l, cfg.beta);
            double gain = 0.0;
            if (opt.freeze_channels_at_unity) {
                gain = cfg.p_s;
                for (double p : cfg.p_j) gain += p;
            } else {
                gain = cfg.p_s * std::norm(rng.complex_normal(cfg.var_sd));
                for (double p : cfg.p_j) gain += p * std::norm(rng.complex_normal(cfg.var_rd));
            }
            sample.values.push_back(gain * e_b);
        }
        remaining -= n_sym;
    }
    return sample;
}

/// Generalized gamma density, evaluated in the log domain.
inline double ggamma_pdf(double alpha, const GeneralizedGammaParams& p) {
    p.validate();
    if (alpha < 0.0) return 0.0;
    if (alpha == 0.0) {
        const double exponent = 2.0 * p.m * p.v - 1.0;
        if (exponent > 0.0) return 0.0;
        if (exponent == 0.0) return 2.0 * p.v / (std::pow(p.omega / p.m, p.m) * std::tgamma(p.m));
        return std::numeric_limits<double>::infinity();
    }
    const double log_pdf = std::log(2.0 * p.v) - p.m * std::log(p.omega / p.m) - std::lgamma(p.m) +
                           (2.0 * p.m * p.v - 1.0) * std::log(alpha) -
                           p.m * std::exp(2.0 * p.v * std::log(alpha)) / p.omega;
    return std::exp(log_pdf);
}

/// Model CDF. alpha^(2v) is Gamma(m, Omega/m), so F(a) = P(m, m a^(2v)/Omega).
inline double ggamma_cdf(double alpha, const GeneralizedGammaParams& p) {
    p.validate();
    if (alpha <= 0.0) return 0.0;
    const double t = p.m * std::exp(2.0 * p.v * std::log(alpha)) / p.omega;
    if (!std::isfinite(t)) return 1.0;
    return boost::math::gamma_p(p.m, t);
}

/// E[alpha^k] = (Omega/m)^(k/(2v)) Gamma(m + k/(2v)) / Gamma(m).
inline double ggamma_moment(int k, const GeneralizedGammaParams& p) {
    p.validate();
    if (k < 1) throw std::invalid_argument("ggamma_moment: k must be >= 1");
    const double a = static_cast<double>(k) / (2.0 * p.v);
    return std::exp(a * std::log(p.omega / p.m) + std::lgamma(p.m + a) - std::lgamma(p.m));
}

namespace detail {

inline std::array<double, 3> sample_moments(std::span<const double> values) {
    double m1 = 0.0, m2 = 0.0, m3 = 0.0;
    for (double x : values) {
        m1 += x;
        m2 += x * x;
        m3 += x * x * x;
    }
    const double n = static_cast<double>(values.size());
    return {m1 / n, m2 / n, m3 / n};
}

// Scale-free log-moment-ratio residuals in (m, v).
inline std::array<double, 2> ggamma_residual(double m, double v, double log_r2, double log_r3) {
    const double a = 1.0 / (2.0 * v);
    const double lg0 = std::lgamma(m);
    const double lg1 = std::lgamma(m + a);
    const double lg2 = std::lgamma(m + 2.0 * a);
    const double lg3 = std::lgamma(m + 3.0 * a);
    return {lg2 + lg0 - 2.0 * lg1 - log_r2, lg3 + 2.0 * lg0 - 3.0 * lg1 - log_r3};
}

}  // namespace detail

/// Method-of-moments fit of the generalized gamma family (moments 1..3).
/// Deterministic: grid-search initialization over m, v in [0.1, 20] followed
/// by a damped 2-D Newton iteration on the log-parameters.
inline GeneralizedGammaParams fit_ggamma_moments(std::span<const double> values) {
    if (values.size() < 1000) throw FitError("fit_ggamma: need at least 10^3 samples");
    const auto [m1, m2, m3] = detail::sample_moments(values);
    const double var = m2 - m1 * m1;
    if (!(var > 0.0) || !(m1 > 0.0)) throw FitError("fit_ggamma: degenerate samples (zero variance)");
    const double log_r2 = std::log(m2 / (m1 * m1));
    const double log_r3 = std::log(m3 / (m1 * m1 * m1));

    // Grid-search initialization, 40x40 log-spaced.
    constexpr int kGrid = 40;
    const double lo = std::log(0.1), hi = std::log(20.0);
    std::vector<std::tuple<double, double, double>> starts;  // (residual, m, v)
    starts.reserve(kGrid * kGrid);
    for (int i = 0; i < kGrid; ++i) {
        const double m = std::exp(lo + (hi - lo) * i / (kGrid - 1));
        for (int j = 0; j < kGrid; ++j) {
            const double v = std::exp(lo + (hi - lo) * j / (kGrid - 1));
            const auto f = detail::ggamma_residual(m, v, log_r2, log_r3);
            starts.emplace_back(f[0] * f[0] + f[1] * f[1], m, v);
        }
    }
    std::sort(starts.begin(), starts.end());

    const auto newton = [&](double m0, double v0, double& m_out, double& v_out) -> bool {
        double lm = std::log(m0), lv = std::log(v0);
        for (int iter = 0; iter < 200; ++iter) {
            const auto f = detail::ggamma_residual(std::exp(lm), std::exp(lv), log_r2, log_r3);
            const double norm0 = std::max(std::fabs(f[0]), std::fabs(f[1]));
            if (norm0 < 1e-11) {
                m_out = std::exp(lm);
                v_out = std::exp(lv);
                return true;
            }
            const double h = 1e-7;
            const auto fm = detail::ggamma_residual(std::exp(lm + h), std::exp(lv), log_r2, log_r3);
            const auto fv = detail::ggamma_residual(std::exp(lm), std::exp(lv + h), log_r2, log_r3);
            const double j00 = (fm[0] - f[0]) / h, j01 = (fv[0] - f[0]) / h;
            const double j10 = (fm[1] - f[1]) / h, j11 = (fv[1] - f[1]) / h;
            const double det = j00 * j11 - j01 * j10;
            if (!(std::fabs(det) > 1e-300)) return false;
            const double dm = (f[0] * j11 - f[1] * j01) / det;
            const double dv = (f[1] * j00 - f[0] * j10) / det;
            double step = 1.0;
            bool accepted = false;
            for (int bt = 0; bt < 40; ++bt) {
                const double lmn = lm - step * dm, lvn = lv - step * dv;
                if (std::fabs(lmn) < 50.0 && std::fabs(lvn) < 50.0) {
                    const auto fn =
                        detail::ggamma_residual(std::exp(lmn), std::exp(lvn), log_r2, log_r3);
                    const double norm1 = std::max(std::fabs(fn[0]), std::fabs(fn[1]));
                    if (norm1 < norm0) {
                        lm = lmn;
                        lv = lvn;
                        accepted = true;
                        break;
                    }
                }
                step *= 0.5;
            }
            if (!accepted) return false;
        }
        return false;
    };

    double m_fit = 0.0, v_fit = 0.0;
    bool ok = false;
    for (std::size_t s = 0; s < std::min<std::size_t>(starts.size(), 8) && !ok; ++s)
        ok = newton(std::get<1>(starts[s]), std::get<2>(starts[s]), m_fit, v_fit);
    if (!ok) throw FitNonConvergence("fit_ggamma: moment-matching root-finder did not converge");

    const double a = 1.0 / (2.0 * v_fit);
    const double log_scale = std::log(m1) + std::lgamma(m_fit) - std::lgamma(m_fit + a);
    GeneralizedGammaParams p;
    p.v = v_fit;
    p.m = m_fit;
    p.omega = m_fit * std::exp(log_scale / a);
    p.n_samples = values.size();
    return p;
}

/// Sup-norm distance between the empirical CDF of sorted samples and a model CDF.
template <typename CdfFn>
double ks_statistic_sorted(std::span<const double> sorted, CdfFn&& cdf) {
    if (sorted.empty()) throw std::invalid_argument("ks_statistic: empty samples");
    const double n = static_cast<double>(sorted.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double f = cdf(sorted[i]);
        d = std::max(d, std::max(f - static_cast<double>(i) / n,
                                 static_cast<double>(i + 1) / n - f));
    }
    return d;
}

inline double ks_statistic(const AlphaSample& samples, const GeneralizedGammaParams& p) {
    std::vector<double> sorted(samples.values);
    std::sort(sorted.begin(), sorted.end());
    return ks_statistic_sorted(sorted, [&](double x) { return ggamma_cdf(x, p); });
}

/// fit_ggamma with the KS diagnostic populated.
inline GeneralizedGammaParams fit_ggamma(const AlphaSample& samples) {
    GeneralizedGammaParams p = fit_ggamma_moments(samples.values);
    p.fit_ks = ks_statistic(samples, p);
    return p;
}

// ---- Candidate comparison families (moment matched) ----------------------

struct RayleighParams {
    double sigma = 1.0;  // mode parameter; mean = sigma * sqrt(pi/2)
};

inline RayleighParams fit_rayleigh(std::span<const double> values) {
    const auto [m1, m2, m3] = detail::sample_moments(values);
    (void)m2;
    (void)m3;
    if (!(m1 > 0.0)) throw FitError("fit_rayleigh: nonpositive sample mean");
    return {m1 / std::sqrt(M_PI / 2.0)};
}

inline double rayleigh_cdf(double x, const RayleighParams& p) {
    if (x <= 0.0) return 0.0;
    return -std::expm1(-x * x / (2.0 * p.sigma * p.sigma));
}

struct NakagamiParams {
    double m = 1.0;
    double omega = 1.0;  // E[x^2]
};

inline NakagamiParams fit_nakagami(std::span<const double> values) {
    const auto [m1, m2, m3] = detail::sample_moments(values);
    (void)m3;
    if (!(m2 > 0.0) || !(m1 > 0.0)) throw FitError("fit_nakagami: degenerate samples");
    const double target = m1 / std::sqrt(m2);  // Gamma(m+1/2)/(Gamma(m) sqrt(m)), increasing in m
    const auto ratio = [](double m) {
        return std::exp(std::lgamma(m + 0.5) - std::lgamma(m) - 0.5 * std::log(m));
    };
    double lo = 1e-2, hi = 1e4;
    if (target >= ratio(hi)) return {hi, m2};
    if (target <= ratio(lo)) return {lo, m2};
    for (int i = 0; i < 200; ++i) {
        const double mid = std::sqrt(lo * hi);
        (ratio(mid) < target ? lo : hi) = mid;
    }
    return {std::sqrt(lo * hi), m2};
}

inline double nakagami_cdf(double x, const NakagamiParams& p) {
    if (x <= 0.0) return 0.0;
    return boost::math::gamma_p(p.m, p.m * x * x / p.omega);
}

struct RicianParams {
    double k = 0.0;      // K-factor nu^2 / (2 sigma^2)
    double sigma2 = 1.0; // per-dimension variance
    double nu = 0.0;
};

namespace detail {

inline double log_bessel_i(int order, double x) {
    if (x < 500.0) return std::log(boost::math::cyl_bessel_i(order, x));
    // Uniform asymptotic: I_n(x) ~ e^x / sqrt(2 pi x) * (1 - (4n^2-1)/(8x)).
    const double mu = 4.0 * order * order;
    return x - 0.5 * std::log(2.0 * M_PI * x) + std::log1p(-(mu - 1.0) / (8.0 * x));
}

// mean^2 / E[x^2] as a function of the Rician K-factor; increasing from pi/4 to 1.
inline double rician_moment_ratio(double k) {
    const double lb0 = log_bessel_i(0, k / 2.0);
    const double lb1 = log_bessel_i(1, k / 2.0);
    const double bracket = (1.0 + k) + k * std::exp(lb1 - lb0);
    return M_PI / (4.0 * (1.0 + k)) * std::exp(-k + 2.0 * lb0) * bracket * bracket;
}

}  // namespace detail

/// Mean/second-moment matched Rician with numerically inverted K-factor.
inline RicianParams fit_rician(std::span<const double> values) {
    const auto [m1, m2, m3] = detail::sample_moments(values);
    (void)m3;
    if (!(m2 > 0.0) || !(m1 > 0.0)) throw FitError("fit_rician: degenerate samples");
    const double target = m1 * m1 / m2;
    double k = 0.0;
    if (target > detail::rician_moment_ratio(0.0)) {
        double lo = 0.0, hi = 1000.0;
        if (target >= detail::rician_moment_ratio(hi)) {
            k = hi;
        } else {
            for (int i = 0; i < 200; ++i) {
                const double mid = 0.5 * (lo + hi);
                (detail::rician_moment_ratio(mid) < target ? lo : hi) = mid;
            }
            k = 0.5 * (lo + hi);
        }
    }
    RicianParams p;
    p.k = k;
    p.sigma2 = m2 / (2.0 * (1.0 + k));
    p.nu = std::sqrt(2.0 * p.sigma2 * k);
    return p;
}

inline double rician_cdf(double x, const RicianParams& p) {
    if (x <= 0.0) return 0.0;
    // x^2/sigma2 is noncentral chi-squared with 2 dof and noncentrality 2K.
    const boost::math::non_central_chi_squared dist(2.0, std::max(2.0 * p.k, 1e-12));
    return boost::math::cdf(dist, x * x / p.sigma2);
}

/// Side-by-side goodness of fit for the four candidate families.
struct FitReport {
    GeneralizedGammaParams ggamma;
    RayleighParams rayleigh;
    RicianParams rician;
    NakagamiParams nakagami;
    double ks_ggamma = 0.0;
    double ks_rayleigh = 0.0;
    double ks_rician = 0.0;
    double ks_nakagami = 0.0;
    std::size_t n_samples = 0;
};

inline FitReport compare_candidates(const AlphaSample& samples) {
    FitReport r;
    r.n_samples = samples.values.size();
    std::vector<double> sorted(samples.values);
    std::sort(sorted.begin(), sorted.end());
    r.ggamma = fit_ggamma_moments(samples.values);
    r.rayleigh = fit_rayleigh(samples.values);
    r.rician = fit_rician(samples.values);
    r.nakagami = fit_nakagami(samples.values);
    r.ks_ggamma = ks_statistic_sorted(sorted, [&](double x) { return ggamma_cdf(x, r.ggamma); });
    r.ggamma.fit_ks = r.ks_ggamma;
    r.ks_rayleigh = ks_statistic_sorted(sorted, [&](double x) { return rayleigh_cdf(x, r.rayleigh); });
    r.ks_rician = ks_statistic_sorted(sorted, [&](double x) { return rician_cdf(x, r.rician); });
    r.ks_nakagami = ks_statistic_sorted(sorted, [&](double x) { return nakagami_cdf(x, r.nakagami); });
    return r;
}

/// Freedman-Diaconis histogram (density normalized).
struct HistogramBin {
    double left = 0.0;
    double right = 0.0;
    double density = 0.0;
};

inline std::vector<HistogramBin> make_histogram(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("make_histogram: empty samples");
    std::vector<double> sorted(values.begin(), values.end());
    std::sort(sorted.begin(), sorted.end());
    const double q1 = sorted[sorted.size() / 4];
    const double q3 = sorted[(3 * sorted.size()) / 4];
    const double iqr = q3 - q1;
    const double lo = sorted.front(), hi = sorted.back();
    double width = 2.0 * iqr / std::cbrt(static_cast<double>(sorted.size()));
    if (!(width > 0.0)) width = (hi > lo) ? (hi - lo) : 1.0;
    const std::size_t n_bins = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil((hi - lo) / width)));
    std::vector<HistogramBin> bins(n_bins);
    const double n = static_cast<double>(sorted.size());
    for (std::size_t b = 0; b < n_bins; ++b) {
        bins[b].left = lo + width * static_cast<double>(b);
        bins[b].right = bins[b].left + width;
    }
    for (double x : sorted) {
        std::size_t b = static_cast<std::size_t>((x - lo) / width);
        if (b >= n_bins) b = n_bins - 1;
        bins[b].density += 1.0;
    }
    for (auto& b : bins) b.density /= n * width;
    return bins;
}

}  // namespace csk

#endif  // CSKLAB_ENERGY_STATS_HPP
