#ifndef AGDIFF_ENERGY_HPP
#define AGDIFF_ENERGY_HPP

#include "agdiff/grid.hpp"
#include "agdiff/riesz.hpp"

namespace agdiff {

/// Pieces of the free energy F_s = h_m + quad + w_s.
struct EnergyBreakdown {
    double h_m = 0.0;   // (1/(m-1)) int rho^m
    double quad = 0.0;  // beta int rho^2
    double w_s = 0.0;   // interaction term, <= 0
    double total = 0.0;
};

EnergyBreakdown free_energy(const Density& rho, const Params& p,
                            const KernelWeights& W);

/// Variant reusing an already computed convolution K_s * rho.
EnergyBreakdown free_energy(const Density& rho, const Params& p,
                            const std::vector<double>& k_conv_rho);

/// F_0[rho] = (1/(m-1)) int rho^m - ((chi - 2 beta)/2) int rho^2.
double limit_energy(const Density& rho, const Params& p);

struct BoundReport {
    double theta = 0.0;
    double cbar = 0.0;
    double lhs = 0.0;  // (1/(2(m-1))) |rho|_m^m
    double rhs = 0.0;  // F_s[rho] + cbar
    double hls_lhs = 0.0;  // |W_s[rho]|
    double hls_rhs = 0.0;  // (chi/2) S_{d,s} M^{2-2theta} |rho|_m^{2theta}
    bool satisfied = false;
};

/// theta = (d-2s) m / (2 d (m-1)) for d = 1.
double theta_exponent(const Params& p);

/// The constant controlling the lower energy bound.
double cbar_constant(const Params& p);

/// Evaluates the lower bound on the entropy and the interaction chain.
/// A violation is reported, not thrown.
BoundReport lower_bound_check(const Density& rho, const Params& p,
                              const KernelWeights& W);

} // namespace agdiff

#endif
