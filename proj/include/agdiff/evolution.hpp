#ifndef AGDIFF_EVOLUTION_HPP
#define AGDIFF_EVOLUTION_HPP

#include <optional>
#include <vector>

#include "agdiff/energy.hpp"
#include "agdiff/grid.hpp"
#include "agdiff/riesz.hpp"

namespace agdiff {

/// Velocity potential psi and the face velocities u_{i+1/2} = -(psi_{i+1}-psi_i)/dx.
/// Faces are the n-1 interior ones; the domain boundary carries zero flux.
struct VelocityField {
    std::vector<double> psi;
    std::vector<double> u;
};

struct Trajectory {
    std::vector<double> times;
    std::vector<Density> states;
    std::vector<EnergyBreakdown> energy_log;
    std::vector<double> dt_history;  // min/mean/max tracked by the caller
    std::size_t total_steps = 0;
    double min_dt = 0.0;
    double max_dt = 0.0;
};

struct EvolveOptions {
    double cfl_advective = 0.4;
    double cfl_parabolic = 0.2;
    double blowup_guard = 1e6;
    // Per-step energy-dissipation slack factor; violations are recorded.
    double energy_slack = 1e-8;
};

VelocityField velocity_potential(const Density& rho, const Params& p,
                                 const KernelWeights& W);
VelocityField velocity_potential(const Density& rho, const Params& p,
                                 const std::vector<double>& k_conv_rho);

/// Largest stable dt for the explicit upwind step at this state.
double cfl_dt(const Density& rho, const Params& p, const VelocityField& v,
              const EvolveOptions& opt = {});

/// One conservative upwind step. Throws on CFL violation.
Density step(const Density& rho, const Params& p, const KernelWeights& W,
             double dt, const EvolveOptions& opt = {});

/// Explicit time integration up to T, recording states at output_times
/// (plus t = 0 and t = T). energy_violations counts per-step increases of
/// the total energy beyond the slack.
struct EvolveResult {
    Trajectory traj;
    std::size_t energy_violations = 0;
    double max_energy_increase = 0.0;
    double max_mass_drift = 0.0;
};

EvolveResult evolve(const Params& p, const Density& rho0, double T,
                    const std::vector<double>& output_times,
                    const KernelWeights& W, const EvolveOptions& opt = {});

/// The s -> 0 local equation d_t rho = dxx(rho^m + (beta - chi/2) rho^2),
/// same conservative scheme with central flux of the pressure gradient.
/// Requires beta >= chi/2.
EvolveResult local_limit_evolve(const Params& p, const Density& rho0, double T,
                                const std::vector<double>& output_times,
                                const EvolveOptions& opt = {});

/// |LHS - RHS| of the weak formulation over the recorded trajectory, with
/// trapezoid time quadrature and the symmetrized double sum in space.
/// eta is the time window, supported inside (0, T).
double weak_residual(const Trajectory& traj, const TestFunction& phi,
                     const TestFunction& eta, const Params& p,
                     const KernelWeights& W);

/// Earliest recorded time at which the right-half profile fails radial
/// nonincreasingness beyond the noise floor.
std::optional<double> monotonicity_breach(const Trajectory& traj,
                                          double noise_floor = 1e-9);

} // namespace agdiff

#endif
