#include "agdiff/special.hpp"

#include <cmath>
#include <stdexcept>

namespace agdiff::special {

namespace {

// Lanczos coefficients, g = 7, n = 9.
constexpr double kLanczosG = 7.0;
constexpr double kLanczos[9] = {
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
};

double lanczos_gamma(double x) {
    // Valid for x >= 0.5; reflection handles the rest.
    double a = kLanczos[0];
    const double t = x + kLanczosG - 0.5;
    for (int i = 1; i < 9; ++i) {
        a += kLanczos[i] / (x - 1.0 + i);
    }
    return std::sqrt(2.0 * M_PI) * std::pow(t, x - 0.5) * std::exp(-t) * a;
}

} // namespace

double gamma(double x) {
    if (!(x > 0.0)) {
        throw std::domain_error("gamma: argument must be positive");
    }
    if (x > 171.62) {
        throw std::overflow_error("gamma: argument too large for double");
    }
    if (x < 0.5) {
        // Reflection formula; x in (0, 0.5) so sin(pi x) > 0.
        return M_PI / (std::sin(M_PI * x) * lanczos_gamma(1.0 - x));
    }
    return lanczos_gamma(x);
}

double riesz_constant(int d, double s) {
    if (d < 1 || !(s > 0.0) || !(s < 0.5 * d)) {
        throw std::domain_error("riesz_constant: requires 0 < s < d/2");
    }
    return std::pow(M_PI, -0.5 * d) * std::pow(2.0, -2.0 * s) *
           gamma(0.5 * d - s) / gamma(s);
}

double hls_constant(int d, double s) {
    if (d < 1 || !(s > 0.0) || !(s < 0.5 * d)) {
        throw std::domain_error("hls_constant: requires 0 < s < d/2");
    }
    return std::pow(M_PI, 0.5 * (d - 2.0 * s)) * gamma(s) / gamma(s + 0.5 * d) *
           std::pow(gamma(0.5 * d) / gamma(static_cast<double>(d)),
                    -2.0 * s / d);
}

double sds_constant(int d, double s) {
    if (d < 1 || !(s > 0.0) || !(s < 0.5 * d)) {
        throw std::domain_error("sds_constant: requires 0 < s < d/2");
    }
    return std::pow(4.0 * M_PI, -s) * gamma(0.5 * d - s) / gamma(0.5 * d + s) *
           std::pow(gamma(0.5 * d) / gamma(static_cast<double>(d)),
                    -2.0 * s / d);
}

KernelConstants KernelConstants::make(int d, double s) {
    return KernelConstants{d, s, riesz_constant(d, s), hls_constant(d, s),
                           sds_constant(d, s)};
}

} // namespace agdiff::special
