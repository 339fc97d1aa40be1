#include "agdiff/energy.hpp"

#include <cmath>
#include <stdexcept>

#include "agdiff/special.hpp"

namespace agdiff {

EnergyBreakdown free_energy(const Density& rho, const Params& p,
                            const KernelWeights& W) {
    if (!(rho.grid == W.grid())) {
        throw std::invalid_argument("free_energy: grid mismatch");
    }
    return free_energy(rho, p, W.convolve(rho));
}

EnergyBreakdown free_energy(const Density& rho, const Params& p,
                            const std::vector<double>& k_conv_rho) {
    EnergyBreakdown e;
    double pm = 0.0, p2 = 0.0;
    for (double v : rho.values) {
        pm += std::pow(v, p.m);
        p2 += v * v;
    }
    const double dx = rho.dx();
    e.h_m = pm * dx / (p.m - 1.0);
    e.quad = p.beta * p2 * dx;
    e.w_s = interaction_energy(rho, k_conv_rho, p.chi);
    e.total = e.h_m + e.quad + e.w_s;
    return e;
}

double limit_energy(const Density& rho, const Params& p) {
    double pm = 0.0, p2 = 0.0;
    for (double v : rho.values) {
        pm += std::pow(v, p.m);
        p2 += v * v;
    }
    const double dx = rho.dx();
    return pm * dx / (p.m - 1.0) - 0.5 * (p.chi - 2.0 * p.beta) * p2 * dx;
}

double theta_exponent(const Params& p) {
    return (1.0 - 2.0 * p.s) * p.m / (2.0 * (p.m - 1.0));
}

double cbar_constant(const Params& p) {
    const double theta = theta_exponent(p);
    const double sds = special::sds_constant(1, p.s);
    const double a = (p.m - 2.0 * theta) / p.m;
    const double b =
        std::pow(p.m / (4.0 * theta * (p.m - 1.0)), -2.0 * theta / (p.m - 2.0 * theta));
    const double c = std::pow(0.5 * p.chi * sds * std::pow(p.mass, 2.0 - 2.0 * theta),
                              p.m / (p.m - 2.0 * theta));
    return a * b * c;
}

BoundReport lower_bound_check(const Density& rho, const Params& p,
                              const KernelWeights& W) {
    BoundReport r;
    r.theta = theta_exponent(p);
    r.cbar = cbar_constant(p);
    const EnergyBreakdown e = free_energy(rho, p, W);
    const double lm = lp_norm(rho, p.m);
    r.lhs = std::pow(lm, p.m) / (2.0 * (p.m - 1.0));
    r.rhs = e.total + r.cbar;
    const double sds = special::sds_constant(1, p.s);
    r.hls_lhs = std::fabs(e.w_s);
    r.hls_rhs = 0.5 * p.chi * sds * std::pow(p.mass, 2.0 - 2.0 * r.theta) *
                std::pow(lm, 2.0 * r.theta);
    r.satisfied = r.lhs <= r.rhs && r.hls_lhs <= r.hls_rhs;
    return r;
}

} // namespace agdiff
