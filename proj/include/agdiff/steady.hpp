#ifndef AGDIFF_STEADY_HPP
#define AGDIFF_STEADY_HPP

#include <cstdint>

#include "agdiff/energy.hpp"
#include "agdiff/grid.hpp"
#include "agdiff/riesz.hpp"

namespace agdiff {

struct SteadyState {
    Density rho;
    double c_s = 0.0;          // Lagrange multiplier
    std::size_t iterations = 0;
    double residual = 0.0;     // sup-norm of the last update
    double virial_residual = 0.0;
    double cs_consistency = 0.0;
    bool converged = false;
    bool collapsed = false;    // iterates vanished (beta >= chi/2, small s)
    EnergyBreakdown energy;
};

struct SteadyOptions {
    double tol = 1e-10;
    std::size_t max_iter = 60000;
    double damping = 0.5;  // mixing weight for the new iterate
};

/// Inverse of f(t) = (m/(m-1)) t^{m-1} + 2 beta t on t >= 0.
/// Closed form for beta = 0, safeguarded Newton otherwise.
double f_inverse(double v, double m, double beta);

/// C_s = -(2/M) F_s[rho] - (1/M) (m-2)/(m-1) int rho^m.
double multiplier(const Density& rho, const Params& p, const KernelWeights& W);
double multiplier(const Density& rho, const Params& p,
                  const std::vector<double>& k_conv_rho);

/// Second route to the multiplier, valid at the fixed point:
/// C_s = (1/(M(d-2s))) ((dm+2sm-2d)/(m-1) |rho|_m^m + 4 beta s |rho|_2^2).
double multiplier_alt(const Density& rho, const Params& p);

/// Damped fixed-point iteration on the stationarity relation
/// f(rho_new) = (chi K_s * rho - C_s)_+, mass-rescaled each sweep.
SteadyState fixed_point_solve(const Params& p, const Density& init,
                              const KernelWeights& W,
                              const SteadyOptions& opt = {});

/// The s = 0 limit profile: a centered box of height ((chi-2beta)/2)^{1/(m-2)}.
/// Requires beta < chi/2.
Density limit_profile(const Params& p, const Grid& grid);

/// Radius minimizing F_s over centered boxes, beta = 0 closed form.
double ball_radius(const Params& p);

/// Same radius for beta >= 0, from the algebraic optimality equation by
/// bisection.
double ball_radius_general(const Params& p);

/// F_s evaluated on the centered box family from the closed-form coefficients
/// C1 R^{-d(m-1)} + C2 R^{-d} - C3 R^{-(d-2s)}, d = 1.
double ball_energy(const Params& p, double radius);

struct BallCoefficients {
    double c1 = 0.0;
    double c2 = 0.0;
    double c3 = 0.0;
};
BallCoefficients ball_coefficients(const Params& p);

struct SteadyDiagnostics {
    double virial_residual = 0.0;       // | |rho|_m^m + beta |rho|_2^2 - (1-2s)(-W_s) |
    double virial_scale = 0.0;          // |W_s| reference
    double energy_identity_gap = 0.0;   // |F_s - closed-form value|
    double cs_consistency = 0.0;        // relative gap of the two C_s routes
    double height = 0.0;
    double support_radius = 0.0;
};

SteadyDiagnostics steady_diagnostics(const SteadyState& st, const Params& p,
                                     const KernelWeights& W);

} // namespace agdiff

#endif
