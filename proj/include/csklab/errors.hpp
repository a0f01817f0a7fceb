#ifndef CSKLAB_ERRORS_HPP
#define CSKLAB_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace csk {

/// Failure of an analytic/numeric route (quadrature, series, Pade).
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid or inconsistent experiment configuration.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace csk

#endif  // CSKLAB_ERRORS_HPP
