#include "agdiff/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace agdiff {

VelocityField velocity_potential(const Density& rho, const Params& p,
                                 const KernelWeights& W) {
    return velocity_potential(rho, p, W.convolve(rho));
}

VelocityField velocity_potential(const Density& rho, const Params& p,
                                 const std::vector<double>& k_conv_rho) {
    const std::size_t n = rho.size();
    VelocityField v;
    v.psi.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        v.psi[i] = p.m / (p.m - 1.0) * std::pow(rho.values[i], p.m - 1.0) +
                   2.0 * p.beta * rho.values[i] - p.chi * k_conv_rho[i];
    }
    v.u.resize(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        v.u[i] = -(v.psi[i + 1] - v.psi[i]) / rho.dx();
    }
    return v;
}

double cfl_dt(const Density& rho, const Params& p, const VelocityField& v,
              const EvolveOptions& opt) {
    double umax = 0.0;
    for (double u : v.u) umax = std::max(umax, std::fabs(u));
    double pmax = 0.0;
    for (double r : rho.values) {
        pmax = std::max(pmax, p.m * std::pow(r, p.m - 1.0) + 2.0 * p.beta * r);
    }
    const double dx = rho.dx();
    double dt = std::numeric_limits<double>::infinity();
    if (umax > 0.0) dt = std::min(dt, opt.cfl_advective * dx / umax);
    if (pmax > 0.0) dt = std::min(dt, opt.cfl_parabolic * dx * dx / pmax);
    return dt;
}

namespace {

Density upwind_step(const Density& rho, const VelocityField& v, double dt) {
    const std::size_t n = rho.size();
    const double dx = rho.dx();
    Density out(rho.grid);
    // Face fluxes, zero at the domain boundary.
    std::vector<double> flux(n + 1, 0.0);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        const double u = v.u[i];
        flux[i + 1] = u > 0.0 ? u * rho.values[i] : u * rho.values[i + 1];
    }
    for (std::size_t i = 0; i < n; ++i) {
        out.values[i] = rho.values[i] - dt / dx * (flux[i + 1] - flux[i]);
    }
    return out;
}

std::vector<double> make_checkpoints(double T, const std::vector<double>& output_times) {
    std::vector<double> cps;
    for (double t : output_times) {
        if (t > 0.0 && t < T) cps.push_back(t);
    }
    cps.push_back(T);
    std::sort(cps.begin(), cps.end());
    cps.erase(std::unique(cps.begin(), cps.end()), cps.end());
    return cps;
}

} // namespace

Density step(const Density& rho, const Params& p, const KernelWeights& W,
             double dt, const EvolveOptions& opt) {
    const VelocityField v = velocity_potential(rho, p, W);
    if (dt > cfl_dt(rho, p, v, opt) * (1.0 + 1e-12)) {
        throw std::runtime_error("step: dt violates the CFL restriction");
    }
    return upwind_step(rho, v, dt);
}

EvolveResult evolve(const Params& p, const Density& rho0, double T,
                    const std::vector<double>& output_times,
                    const KernelWeights& W, const EvolveOptions& opt) {
    p.validate();
    if (!(rho0.grid == W.grid())) {
        throw std::invalid_argument("evolve: grid mismatch");
    }
    EvolveResult res;
    Trajectory& traj = res.traj;
    Density rho = rho0;
    const double mass0 = moments(rho).mass;
    double t = 0.0;

    std::vector<double> conv = W.convolve(rho);
    EnergyBreakdown e = free_energy(rho, p, conv);
    traj.times.push_back(0.0);
    traj.states.push_back(rho);
    traj.energy_log.push_back(e);
    res.traj.min_dt = std::numeric_limits<double>::infinity();

    const std::vector<double> cps = make_checkpoints(T, output_times);
    std::size_t next_cp = 0;
    const double safety = 0.9;

    while (t < T - 1e-15 * T) {
        const VelocityField v = velocity_potential(rho, p, conv);
        double dt = safety * cfl_dt(rho, p, v, opt);
        if (!std::isfinite(dt)) dt = (T - t);
        bool at_cp = false;
        if (next_cp < cps.size() && t + dt >= cps[next_cp] - 1e-15) {
            dt = cps[next_cp] - t;
            at_cp = true;
        }
        rho = upwind_step(rho, v, dt);
        t += dt;
        ++traj.total_steps;
        traj.min_dt = std::min(traj.min_dt, dt);
        traj.max_dt = std::max(traj.max_dt, dt);

        conv = W.convolve(rho);
        const EnergyBreakdown e_new = free_energy(rho, p, conv);
        const double slack = opt.energy_slack * (1.0 + std::fabs(e.total));
        if (e_new.total > e.total + slack) {
            ++res.energy_violations;
            res.max_energy_increase =
                std::max(res.max_energy_increase, e_new.total - e.total);
        }
        e = e_new;

        if (sup_norm(rho) > opt.blowup_guard) {
            throw std::runtime_error("evolve: blow-up guard triggered");
        }
        res.max_mass_drift = std::max(
            res.max_mass_drift, std::fabs(moments(rho).mass - mass0));

        if (at_cp) {
            traj.times.push_back(t);
            traj.states.push_back(rho);
            traj.energy_log.push_back(e);
            ++next_cp;
        }
    }
    return res;
}

EvolveResult local_limit_evolve(const Params& p, const Density& rho0, double T,
                                const std::vector<double>& output_times,
                                const EvolveOptions& opt) {
    if (p.beta < 0.5 * p.chi) {
        throw std::domain_error(
            "local_limit_evolve: requires beta >= chi/2 (forward-backward "
            "regime excluded)");
    }
    const double beta_eff = p.beta - 0.5 * p.chi;
    EvolveResult res;
    Trajectory& traj = res.traj;
    Density rho = rho0;
    const double mass0 = moments(rho).mass;
    const std::size_t n = rho.size();
    const double dx = rho.dx();
    double t = 0.0;
    res.traj.min_dt = std::numeric_limits<double>::infinity();

    const auto record_energy = [&](const Density& r) {
        EnergyBreakdown e;
        double pm = 0.0, p2 = 0.0;
        for (double vv : r.values) {
            pm += std::pow(vv, p.m);
            p2 += vv * vv;
        }
        e.h_m = pm * dx / (p.m - 1.0);
        e.quad = beta_eff * p2 * dx;
        e.w_s = 0.0;
        e.total = e.h_m + e.quad;
        return e;
    };

    traj.times.push_back(0.0);
    traj.states.push_back(rho);
    traj.energy_log.push_back(record_energy(rho));

    const std::vector<double> cps = make_checkpoints(T, output_times);
    std::size_t next_cp = 0;

    std::vector<double> pressure(n);
    while (t < T - 1e-15 * T) {
        double dmax = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double r = rho.values[i];
            pressure[i] = std::pow(r, p.m) + beta_eff * r * r;
            dmax = std::max(dmax,
                            p.m * std::pow(r, p.m - 1.0) + 2.0 * beta_eff * r);
        }
        double dt = dmax > 0.0 ? opt.cfl_parabolic * dx * dx / dmax : (T - t);
        bool at_cp = false;
        if (next_cp < cps.size() && t + dt >= cps[next_cp] - 1e-15) {
            dt = cps[next_cp] - t;
            at_cp = true;
        }
        Density out(rho.grid);
        // Zero-flux boundary: pressure gradient vanishes at the outer faces.
        const double mu = dt / (dx * dx);
        for (std::size_t i = 0; i < n; ++i) {
            const double pl = i > 0 ? pressure[i - 1] : pressure[i];
            const double pr = i + 1 < n ? pressure[i + 1] : pressure[i];
            out.values[i] = rho.values[i] + mu * (pr - 2.0 * pressure[i] + pl);
        }
        rho = std::move(out);
        t += dt;
        ++traj.total_steps;
        traj.min_dt = std::min(traj.min_dt, dt);
        traj.max_dt = std::max(traj.max_dt, dt);
        res.max_mass_drift = std::max(
            res.max_mass_drift, std::fabs(moments(rho).mass - mass0));
        if (at_cp) {
            traj.times.push_back(t);
            traj.states.push_back(rho);
            traj.energy_log.push_back(record_energy(rho));
            ++next_cp;
        }
    }
    return res;
}

double weak_residual(const Trajectory& traj, const TestFunction& phi,
                     const TestFunction& eta, const Params& p,
                     const KernelWeights& W) {
    const std::size_t nt = traj.times.size();
    if (nt < 2) throw std::invalid_argument("weak_residual: trajectory too short");
    std::size_t in_support = 0;
    for (double t : traj.times) {
        if (eta.f(t) != 0.0) ++in_support;
    }
    if (in_support > 0 && in_support < 20) {
        throw std::invalid_argument(
            "weak_residual: fewer than 20 samples in supp(eta)");
    }

    std::vector<double> lhs_t(nt), rhs_t(nt);
    for (std::size_t k = 0; k < nt; ++k) {
        const Density& rho = traj.states[k];
        const double t = traj.times[k];
        double rho_phi = 0.0, diff = 0.0;
        for (std::size_t i = 0; i < rho.size(); ++i) {
            const double x = rho.grid.center(i);
            const double r = rho.values[i];
            rho_phi += r * phi.f(x);
            diff += phi.d2f(x) * (std::pow(r, p.m) + p.beta * r * r);
        }
        rho_phi *= rho.dx();
        diff *= rho.dx();
        lhs_t[k] = -rho_phi * eta.df(t);
        const double kernel_term =
            eta.f(t) != 0.0 ? symmetric_form(rho, phi, W) : 0.0;
        rhs_t[k] = eta.f(t) * (diff - 0.5 * p.chi * kernel_term);
    }
    double lhs = 0.0, rhs = 0.0;
    for (std::size_t k = 0; k + 1 < nt; ++k) {
        const double h = traj.times[k + 1] - traj.times[k];
        lhs += 0.5 * h * (lhs_t[k] + lhs_t[k + 1]);
        rhs += 0.5 * h * (rhs_t[k] + rhs_t[k + 1]);
    }
    return std::fabs(lhs - rhs);
}

std::optional<double> monotonicity_breach(const Trajectory& traj,
                                          double noise_floor) {
    for (std::size_t k = 0; k < traj.states.size(); ++k) {
        const Density& rho = traj.states[k];
        const std::size_t n = rho.size();
        const std::size_t half = n / 2;
        // Right half: radially nonincreasing means no later value may exceed
        // an earlier one beyond the noise floor.
        double suffix_max = 0.0;
        bool breach = false;
        for (std::size_t i = n; i-- > half;) {
            if (suffix_max > rho.values[i] + noise_floor) {
                breach = true;
                break;
            }
            suffix_max = std::max(suffix_max, rho.values[i]);
        }
        if (breach) return traj.times[k];
    }
    return std::nullopt;
}

} // namespace agdiff
