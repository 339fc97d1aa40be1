#ifndef AGDIFF_SPECIAL_HPP
#define AGDIFF_SPECIAL_HPP

namespace agdiff::special {

/// Gamma function for real positive arguments.
/// Lanczos approximation, relative error below 1e-13 on [1e-3, 170].
/// Throws std::domain_error for x <= 0, std::overflow_error past ~171.6.
double gamma(double x);

/// Normalization c_{d,s} of the Riesz kernel K_s(x) = c_{d,s} |x|^{2s-d}.
/// Requires 0 < s < d/2.
double riesz_constant(int d, double s);

/// Optimal constant of the Hardy-Littlewood-Sobolev inequality.
/// Requires 0 < s < d/2.
double hls_constant(int d, double s);

/// Product S_{d,s} = c_{d,s} * H_{d,s}, computed from its own closed form.
double sds_constant(int d, double s);

/// The three kernel constants for one (d, s) pair.
struct KernelConstants {
    int d;
    double s;
    double c_ds;
    double h_ds;
    double s_ds;

    static KernelConstants make(int d, double s);
};

} // namespace agdiff::special

#endif
