#ifndef CSKLAB_ANALYTIC_BER_HPP
#define CSKLAB_ANALYTIC_BER_HPP

#include <cmath>
#include <cstddef>
#include <sstream>
#include <stdexcept>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "csklab/energy_stats.hpp"
#include "csklab/errors.hpp"

namespace csk {

struct PadePoleError : NumericError {
    PadePoleError(const std::string& what, double where) : NumericError(what), location(where) {}
    double location;
};

/// Gaussian tail probability, Q(x) = 0.5 erfc(x / sqrt(2)).
inline double q_function(double x) {
    return 0.5 * std::erfc(x / std::sqrt(2.0));
}

/// Conditional BER at fixed alpha: Q(sqrt(2 alpha / N0)).
inline double conditional_ber(double alpha, double n0) {
    if (!(alpha >= 0.0)) throw std::invalid_argument("conditional_ber: alpha must be >= 0");
    if (!(n0 > 0.0)) throw std::invalid_argument("conditional_ber: n0 must be > 0");
    return q_function(std::sqrt(2.0 * alpha / n0));
}

enum class BerMethod { Simulated, Quadrature, MgfPade };

inline const char* to_string(BerMethod m) {
    switch (m) {
        case BerMethod::Simulated: return "simulated";
        case BerMethod::Quadrature: return "quadrature";
        case BerMethod::MgfPade: return "mgf_pade";
    }
    return "?";
}

struct BerPoint {
    double eb_n0_db = 0.0;
    double ber = 0.0;
    BerMethod method = BerMethod::Quadrature;
    // Diagnostics (meaning depends on method).
    double quad_error_estimate = 0.0;
    int series_terms = 0;
    int pade_l = 0;
    int pade_m = 0;
};

/// Average BER over the fitted alpha density: integral of Q(sqrt(2a/N0)) p(a) da
/// on [0, inf), via the substitution a = tan(u) on [0, pi/2).
inline BerPoint ber_quadrature(const GeneralizedGammaParams& p, double n0) {
    p.validate();
    if (!(n0 > 0.0)) throw std::invalid_argument("ber_quadrature: n0 must be > 0");
    const auto integrand = [&](double u) {
        const double t = std::tan(u);
        if (!std::isfinite(t)) return 0.0;
        const double pdf = ggamma_pdf(t, p);
        if (pdf == 0.0) return 0.0;
        const double jac = 1.0 + t * t;
        const double val = conditional_ber(t, n0) * pdf * jac;
        return std::isfinite(val) ? val : 0.0;
    };
    boost::math::quadrature::tanh_sinh<double> integrator;
    double err = 0.0, l1 = 0.0;
    const double ber = integrator.integrate(integrand, 0.0, M_PI / 2.0, 1e-10, &err, &l1);
    if (!(err < 1e-8)) {
        std::ostringstream os;
        os << "ber_quadrature: error estimate " << err << " exceeds 1e-8";
        throw NumericError(os.str());
    }
    BerPoint out;
    out.eb_n0_db = 10.0 * std::log10(ggamma_moment(1, p) / n0);
    out.ber = std::min(std::max(ber, 0.0), 0.5);
    out.method = BerMethod::Quadrature;
    out.quad_error_estimate = err;
    return out;
}

/// Truncated power series of the SNR MGF, M(eps) = E[exp(eps * gamma)] with
/// gamma = alpha / N0 and gamma_bar = E[alpha] / N0. Coefficients follow the
/// moment form gamma_bar^n Gamma(m + n/v) Gamma(m)^(n-1) / (n! Gamma(m + 1/v)^n)
/// where this series' v is twice the density's shape parameter (the density
/// distributes the energy variable, the moment form its square-root scale).
struct MgfSeries {
    std::vector<double> coefficients;  // c_n multiplying eps^n
    int n_terms = 0;
    double gamma_bar = 1.0;
    double m = 1.0;
    double v = 1.0;  // MGF-level shape, = 2 * (density v)
};

inline MgfSeries make_mgf_series(const GeneralizedGammaParams& p, double n0, int n_terms = 40) {
    p.validate();
    if (!(n0 > 0.0)) throw std::invalid_argument("make_mgf_series: n0 must be > 0");
    if (n_terms < 2) throw std::invalid_argument("make_mgf_series: n_terms must be >= 2");
    MgfSeries s;
    s.m = p.m;
    s.v = 2.0 * p.v;
    s.gamma_bar = ggamma_moment(1, p) / n0;
    const double lg_m = std::lgamma(p.m);
    const double lg_m1v = std::lgamma(p.m + 1.0 / s.v);
    s.coefficients.reserve(n_terms);
    for (int n = 0; n < n_terms; ++n) {
        const double log_c = static_cast<double>(n) * std::log(s.gamma_bar) -
                             std::lgamma(static_cast<double>(n) + 1.0) +
                             std::lgamma(s.m + static_cast<double>(n) / s.v) +
                             (static_cast<double>(n) - 1.0) * lg_m -
                             static_cast<double>(n) * lg_m1v;
        if (log_c > 690.0) break;  // keep coefficients finite in doubles
        s.coefficients.push_back(n == 0 ? 1.0 : std::exp(log_c));
    }
    s.n_terms = static_cast<int>(s.coefficients.size());
    return s;
}

namespace detail {

struct PadeRational {
    std::vector<double> p;  // numerator, degree L
    std::vector<double> q;  // denominator, degree M, q[0] == 1
};

/// [L/M] Pade table entry from series coefficients c_0..c_(L+M).
/// Throws NumericError if the denominator linear system is singular.
inline PadeRational pade_from_series(const std::vector<double>& c, int L, int M) {
    if (M < 1 || L < 0) throw std::invalid_argument("pade_from_series: need L >= 0, M >= 1");
    if (static_cast<int>(c.size()) < L + M + 1)
        throw std::invalid_argument("pade_from_series: L + M + 1 exceeds available terms");
    const auto coef = [&](int k) { return k < 0 ? 0.0 : c[static_cast<std::size_t>(k)]; };

    // Solve sum_{j=1..M} q_j c_{L+i-j} = -c_{L+i}, i = 1..M.
    std::vector<double> a(static_cast<std::size_t>(M) * M);
    std::vector<double> b(M);
    for (int i = 1; i <= M; ++i) {
        for (int j = 1; j <= M; ++j) a[(i - 1) * M + (j - 1)] = coef(L + i - j);
        b[i - 1] = -coef(L + i);
    }
    // Gaussian elimination with partial pivoting.
    std::vector<int> perm(M);
    for (int i = 0; i < M; ++i) perm[i] = i;
    for (int col = 0; col < M; ++col) {
        int piv = col;
        double best = std::fabs(a[col * M + col]);
        for (int r = col + 1; r < M; ++r) {
            const double m = std::fabs(a[r * M + col]);
            if (m > best) {
                best = m;
                piv = r;
            }
        }
        if (!(best > 1e-280)) throw NumericError("pade_from_series: singular linear system");
        if (piv != col) {
            for (int k = 0; k < M; ++k) std::swap(a[col * M + k], a[piv * M + k]);
            std::swap(b[col], b[piv]);
        }
        for (int r = col + 1; r < M; ++r) {
            const double f = a[r * M + col] / a[col * M + col];
            a[r * M + col] = 0.0;
            for (int k = col + 1; k < M; ++k) a[r * M + k] -= f * a[col * M + k];
            b[r] -= f * b[col];
        }
    }
    std::vector<double> q(M + 1, 0.0);
    q[0] = 1.0;
    for (int r = M - 1; r >= 0; --r) {
        double acc = b[r];
        for (int k = r + 1; k < M; ++k) acc -= a[r * M + k] * q[k + 1];
        q[r + 1] = acc / a[r * M + r];
    }
    std::vector<double> p(L + 1, 0.0);
    for (int k = 0; k <= L; ++k) {
        double acc = 0.0;
        for (int j = 0; j <= std::min(k, M); ++j) acc += q[j] * coef(k - j);
        p[k] = acc;
    }
    return {std::move(p), std::move(q)};
}

/// Evaluate poly with given coefficients at z; also returns the sum of
/// absolute terms for the pole/cancellation check. For |z| > 1 the reversed
/// polynomial in 1/z is used, scaled back, to avoid overflow.
inline void poly_eval(const std::vector<double>& c, double z, double& value, double& abs_sum) {
    value = 0.0;
    abs_sum = 0.0;
    if (std::fabs(z) <= 1.0) {
        for (std::size_t i = c.size(); i-- > 0;) value = value * z + c[i];
        double t = 1.0;
        for (double ci : c) {
            abs_sum += std::fabs(ci) * t;
            t *= std::fabs(z);
        }
    } else {
        const double w = 1.0 / z;
        for (std::size_t i = 0; i < c.size(); ++i) value = value * w + c[i];
        double t = 1.0;
        for (std::size_t i = c.size(); i-- > 0;) {
            abs_sum += std::fabs(c[i]) * t;
            t *= std::fabs(w);
        }
        // value and abs_sum now correspond to the polynomial divided by z^deg.
    }
}

/// Rational evaluation with consistent scaling of numerator and denominator.
inline double pade_eval(const PadeRational& r, double z) {
    double pv = 0.0, pa = 0.0, qv = 0.0, qa = 0.0;
    poly_eval(r.p, z, pv, pa);
    poly_eval(r.q, z, qv, qa);
    double scale = 1.0;  // accounts for different degrees in the reversed form
    if (std::fabs(z) > 1.0) {
        const int dp = static_cast<int>(r.p.size()) - 1;
        const int dq = static_cast<int>(r.q.size()) - 1;
        scale = std::pow(z, static_cast<double>(dp - dq));
    }
    if (!(std::fabs(qv) > 1e-13 * std::max(qa, 1e-300))) {
        std::ostringstream os;
        os << "pade_eval: evaluation near a pole at z = " << z;
        throw PadePoleError(os.str(), z);
    }
    return scale * pv / qv;
}

}  // namespace detail

/// Evaluate the [L/M] Pade reconstruction of the MGF series at eps <= 0.
/// Falls back to lower orders if the Pade system is singular; the order used
/// is written to *used_l / *used_m when provided.
inline double mgf_eval(double eps, const MgfSeries& series, int pade_l, int pade_m,
                       int* used_l = nullptr, int* used_m = nullptr) {
    if (!(eps <= 0.0)) throw std::invalid_argument("mgf_eval: eps must be <= 0");
    if (pade_l + pade_m + 1 > series.n_terms)
        throw std::invalid_argument("mgf_eval: L + M + 1 exceeds n_terms");
    if (eps == 0.0) {
        if (used_l) *used_l = pade_l;
        if (used_m) *used_m = pade_m;
        return 1.0;
    }
    // Work in the scale-normalized variable z = gamma_bar * eps, whose series
    // coefficients are the moment ratios; this keeps the Pade system well
    // scaled at high SNR.
    std::vector<double> b(series.coefficients.size());
    double g = 1.0;
    for (std::size_t n = 0; n < b.size(); ++n) {
        b[n] = series.coefficients[n] / g;
        g *= series.gamma_bar;
    }
    const double z = series.gamma_bar * eps;
    int L = pade_l, M = pade_m;
    while (true) {
        try {
            const auto r = detail::pade_from_series(b, L, M);
            const double val = detail::pade_eval(r, z);
            if (used_l) *used_l = L;
            if (used_m) *used_m = M;
            return val;
        } catch (const PadePoleError&) {
            throw;
        } catch (const NumericError&) {
            if (M <= 1) throw;
            --L;
            --M;
            if (L < 0) L = 0;
        }
    }
}

/// Average BER via the MGF identity BER = (1/pi) Int_0^(pi/2) M(-1/sin^2 t) dt,
/// with a 64-point Gauss-Legendre rule. The result is cross-checked against a
/// reduced-order Pade evaluation; disagreement or an out-of-range BER raises
/// NumericError rather than returning a silently wrong value.
inline BerPoint ber_mgf(const MgfSeries& series, int pade_l = 19, int pade_m = 20) {
    if (series.n_terms < 3) throw std::invalid_argument("ber_mgf: series too short");
    if (pade_l < 1 || pade_m < 2 || pade_l > pade_m)
        throw std::invalid_argument("ber_mgf: need 1 <= pade_l <= pade_m, pade_m >= 2");
    const auto ber_at_order = [&](int l, int m) {
        const auto integrand = [&](double theta) {
            const double s = std::sin(theta);
            return mgf_eval(-1.0 / (s * s), series, l, m, nullptr, nullptr);
        };
        return boost::math::quadrature::gauss<double, 64>::integrate(integrand, 0.0, M_PI / 2.0) /
               M_PI;
    };

    // The moment series behind M(eps) makes the [M-1/M] and [M/M] entries
    // bracket the limit; scan orders and keep the tightest bracket. High
    // orders can break down in double precision before converging, so the
    // best order is selected, not the largest.
    const int m_max = std::min(pade_m, (series.n_terms - 1) / 2);
    double best_gap = std::numeric_limits<double>::infinity();
    double best_value = 0.0;
    int best_m = 0;
    for (int m = 2; m <= m_max; ++m) {
        const int l = std::min(m - 1, pade_l);
        double lo = 0.0, hi = 0.0;
        try {
            lo = ber_at_order(l, m);
            hi = ber_at_order(m, m);
        } catch (const NumericError&) {
            continue;  // singular or pole-struck order; try the next one
        }
        if (!(lo >= -1e-9 && lo <= 0.5 + 1e-9) || !(hi >= -1e-9 && hi <= 0.5 + 1e-9)) continue;
        const double gap = std::fabs(hi - lo);
        if (gap < best_gap) {
            best_gap = gap;
            best_value = 0.5 * (lo + hi);
            best_m = m;
        }
    }
    if (!(best_gap < 2e-4)) {
        std::ostringstream os;
        os << "ber_mgf: Pade orders do not stabilize (best bracket " << best_gap
           << "); series not converged";
        throw NumericError(os.str());
    }
    BerPoint out;
    out.eb_n0_db = 10.0 * std::log10(series.gamma_bar);
    out.ber = std::min(std::max(best_value, 0.0), 0.5);
    out.method = BerMethod::MgfPade;
    out.series_terms = series.n_terms;
    out.pade_l = std::min(best_m - 1, pade_l);
    out.pade_m = best_m;
    return out;
}

}  // namespace csk

#endif  // CSKLAB_ANALYTIC_BER_HPP
