// Test-only numerical oracles, independent of the library implementation
// paths they are used to check.
#ifndef CSKLAB_TESTS_ORACLES_HPP
#define CSKLAB_TESTS_ORACLES_HPP

#include <algorithm>
#include <cmath>
#include <functional>

namespace oracles {

namespace detail {

inline double simpson(const std::function<double(double)>& f, double a, double b, double fa,
                      double fm, double fb) {
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

inline double adaptive_simpson_rec(const std::function<double(double)>& f, double a, double b,
                                   double fa, double fm, double fb, double whole, double tol,
                                   int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = simpson(f, a, m, fa, flm, fm);
    const double right = simpson(f, m, b, fm, frm, fb);
    if (depth <= 0 || std::fabs(left + right - whole) < 15.0 * tol)
        return left + right + (left + right - whole) / 15.0;
    return adaptive_simpson_rec(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1) +
           adaptive_simpson_rec(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1);
}

}  // namespace detail

/// Adaptive Simpson quadrature on a finite interval.
inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-12, int max_depth = 60) {
    const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
    const double whole = detail::simpson(f, a, b, fa, fm, fb);
    return detail::adaptive_simpson_rec(f, a, b, fa, fm, fb, whole, tol, max_depth);
}

/// Gaussian tail probability from its defining integral (truncated far tail).
inline double q_integral(double x) {
    const double hi = x + 42.0;
    return integrate(
        [](double u) { return std::exp(-u * u / 2.0) / std::sqrt(2.0 * M_PI); }, x, hi, 1e-14);
}

/// BPSK over Rayleigh fading (exponentially distributed SNR), closed form.
inline double rayleigh_bpsk_ber(double gamma_bar) {
    return 0.5 * (1.0 - std::sqrt(gamma_bar / (1.0 + gamma_bar)));
}

/// MGF of an exponential SNR with mean gamma_bar, by direct quadrature of
/// E[exp(eps * g)] (eps <= 0).
inline double exponential_mgf_quadrature(double eps, double gamma_bar) {
    // Integrate far enough that the truncated tail is < 1e-12.
    const double hi = gamma_bar * 40.0;
    return integrate(
        [&](double g) { return std::exp(eps * g) * std::exp(-g / gamma_bar) / gamma_bar; }, 0.0,
        hi, 1e-13);
}

/// CDF of the arcsine (Chebyshev invariant) density on [-1, 1].
inline double arcsine_cdf(double x) {
    return 0.5 + std::asin(std::clamp(x, -1.0, 1.0)) / M_PI;
}

}  // namespace oracles

#endif  // CSKLAB_TESTS_ORACLES_HPP
