// End-to-end acceptance checks, one pass/fail line per criterion.
// Tolerances are pinned here; a failure exits nonzero.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <vector>

#include "agdiff/energy.hpp"
#include "agdiff/evolution.hpp"
#include "agdiff/grid.hpp"
#include "agdiff/jko.hpp"
#include "agdiff/riesz.hpp"
#include "agdiff/special.hpp"
#include "agdiff/steady.hpp"

using namespace agdiff;

namespace {

struct Criterion {
    int id;
    const char* name;
    double budget_seconds;
    bool (*run)(std::string& detail);
};

bool strictly_decreasing(const std::vector<double>& v) {
    for (std::size_t k = 1; k < v.size(); ++k) {
        if (!(v[k] < v[k - 1])) return false;
    }
    return true;
}

bool strictly_increasing(const std::vector<double>& v) {
    for (std::size_t k = 1; k < v.size(); ++k) {
        if (!(v[k] > v[k - 1])) return false;
    }
    return true;
}

TestFunction even_bump_fn() {
    return {
        [](double x) { return std::exp(-x * x); },
        [](double x) { return -2.0 * x * std::exp(-x * x); },
        [](double x) { return (4.0 * x * x - 2.0) * std::exp(-x * x); },
    };
}

// Converged states from the criterion 2 and 3 scans, reused by criterion 4.
struct ScanState {
    Params p;
    SteadyDiagnostics diag;
    double energy = 0.0;
    bool converged = false;
};
std::vector<ScanState> g_scan_states;

bool criterion1(std::string& detail) {
    bool ok = true;
    const double c = special::riesz_constant(1, 0.25);
    ok &= std::fabs(c - 0.3989422804) <= 1e-9;

    std::mt19937 rng(20260826);
    std::uniform_real_distribution<double> us(0.01, 0.49);
    double worst_sds = 0.0;
    for (int k = 0; k < 100; ++k) {
        const double s = us(rng);
        const double lhs = special::sds_constant(1, s);
        const double rhs =
            special::riesz_constant(1, s) * special::hls_constant(1, s);
        worst_sds = std::max(worst_sds, std::fabs(lhs - rhs) / std::fabs(lhs));
    }
    ok &= worst_sds <= 1e-11;

    std::uniform_real_distribution<double> ux(0.05, 0.95);
    double worst_refl = 0.0;
    for (int k = 0; k < 100; ++k) {
        const double x = ux(rng);
        const double lhs = special::gamma(x) * special::gamma(1.0 - x);
        const double rhs = M_PI / std::sin(M_PI * x);
        worst_refl = std::max(worst_refl, std::fabs(lhs - rhs) / std::fabs(rhs));
    }
    ok &= worst_refl <= 1e-10;

    char buf[128];
    std::snprintf(buf, sizeof buf, "c=%.10f sds_gap=%.1e refl_gap=%.1e", c,
                  worst_sds, worst_refl);
    detail = buf;
    return ok;
}

bool criterion2(std::string& detail) {
    bool ok = true;
    char buf[256];
    detail.clear();
    for (const double beta : {0.0, 0.2}) {
        Grid g(4.0, 2048);
        Params p{3.0, beta, 1.0, 0.25, 1.0};
        Density init = limit_profile(p, g);
        const double target = beta == 0.0 ? 0.5 : 0.3;
        std::vector<double> heights, l3_dist, height_gap;
        // The s = 0.25 run only warms up the continuation.
        for (const double s : {0.25, 0.2, 0.1, 0.05, 0.02}) {
            p.s = s;
            KernelWeights W(g, s);
            SteadyState st = fixed_point_solve(p, init, W);
            const SteadyDiagnostics d = steady_diagnostics(st, p, W);
            g_scan_states.push_back({p, d, st.energy.total, st.converged});
            if (!st.converged) ok = false;
            if (s < 0.25) {
                const Density lim = limit_profile(p, g);
                double l3 = 0.0;
                for (std::size_t i = 0; i < g.n_cells; ++i) {
                    const double dv = st.rho.values[i] - lim.values[i];
                    l3 += std::fabs(dv * dv * dv) * g.dx;
                }
                heights.push_back(d.height);
                l3_dist.push_back(std::cbrt(l3));
                height_gap.push_back(std::fabs(d.height - target));
            }
            init = st.rho;
        }
        if (beta == 0.0) {
            ok &= strictly_increasing(heights);
        } else {
            ok &= strictly_decreasing(heights);  // approaches 0.3 from above
        }
        ok &= strictly_decreasing(height_gap);
        ok &= height_gap.back() <= 0.05;
        ok &= strictly_decreasing(l3_dist);
        std::snprintf(buf, sizeof buf, "%sbeta=%.1f h(0.02)=%.4f L3=%.4f..%.4f ",
                      detail.c_str(), beta, heights.back(), l3_dist.front(),
                      l3_dist.back());
        detail = buf;
    }
    return ok;
}

bool criterion3(std::string& detail) {
    bool ok = true;
    Grid g(48.0, 4096);
    Density init = gaussian_density(g, 1.0, 0.0, 2.0);
    std::vector<double> sups, energies;
    for (const double s : {0.2, 0.1, 0.05}) {
        Params p{3.0, 0.6, 1.0, s, 1.0};
        KernelWeights W(g, s);
        SteadyState st = fixed_point_solve(p, init, W);
        const SteadyDiagnostics d = steady_diagnostics(st, p, W);
        g_scan_states.push_back({p, d, st.energy.total, st.converged});
        if (!st.converged) ok = false;
        sups.push_back(sup_norm(st.rho));
        energies.push_back(st.energy.total);
        init = st.rho;
    }
    ok &= strictly_decreasing(sups);
    ok &= strictly_increasing(energies);
    for (const double F : energies) ok &= F < 0.0;
    char buf[160];
    std::snprintf(buf, sizeof buf, "sup=%.4f..%.4f F=%.4f..%.4f", sups.front(),
                  sups.back(), energies.front(), energies.back());
    detail = buf;
    return ok;
}

bool criterion4(std::string& detail) {
    bool ok = !g_scan_states.empty();
    double worst_vir = 0.0, worst_cs = 0.0;
    for (const ScanState& st : g_scan_states) {
        if (!st.converged) ok = false;
        const double vir = st.diag.virial_residual / st.diag.virial_scale;
        worst_vir = std::max(worst_vir, vir);
        worst_cs = std::max(worst_cs, st.diag.cs_consistency);
        ok &= vir <= 1e-3;
        ok &= st.diag.cs_consistency <= 1e-3;
        ok &= st.energy < 0.0;
    }
    char buf[128];
    std::snprintf(buf, sizeof buf, "states=%zu worst_virial=%.2e worst_cs=%.2e",
                  g_scan_states.size(), worst_vir, worst_cs);
    detail = buf;
    return ok;
}

bool criterion5(std::string& detail) {
    const Params p{3.0, 0.0, 1.0, 0.25, 1.0};
    const double r_formula = ball_radius(p);
    // Numerical minimizer of C1 R^-2 - C3 R^-1/2 by golden-section search.
    const BallCoefficients c = ball_coefficients(p);
    const auto f = [&](double R) {
        return c.c1 / (R * R) - c.c3 / std::sqrt(R);
    };
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = 0.1, b = 10.0;
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    for (int k = 0; k < 200; ++k) {
        if (f(x1) < f(x2)) { b = x2; x2 = x1; x1 = b - gr * (b - a); }
        else { a = x1; x1 = x2; x2 = a + gr * (b - a); }
    }
    const double r_numeric = 0.5 * (a + b);
    const double gap = std::fabs(r_formula - r_numeric) / r_numeric;
    char buf[128];
    std::snprintf(buf, sizeof buf, "formula=%.6f numeric=%.6f gap=%.1e",
                  r_formula, r_numeric, gap);
    detail = buf;
    return gap <= 1e-3 && std::fabs(r_formula - 1.209) <= 1e-3;
}

bool criterion6(std::string& detail) {
    Grid g(4.0, 1024);
    Params p{3.0, 0.2, 1.0, 0.1, 1.0};
    KernelWeights W(g, p.s);
    Density rho0(g);
    {
        const Density a = gaussian_density(g, 0.5, -1.0, 0.3);
        const Density b = gaussian_density(g, 0.5, 1.0, 0.3);
        for (std::size_t i = 0; i < g.n_cells; ++i) {
            rho0.values[i] = a.values[i] + b.values[i];
        }
    }
    SteadyState st = fixed_point_solve(p, limit_profile(p, g), W);
    const EvolveResult res = evolve(p, rho0, 30.0, {}, W);
    double l1 = 0.0;
    for (std::size_t i = 0; i < g.n_cells; ++i) {
        l1 += std::fabs(res.traj.states.back().values[i] - st.rho.values[i]) *
              g.dx;
    }
    char buf[160];
    std::snprintf(buf, sizeof buf, "drift=%.1e violations=%zu final_L1=%.4f",
                  res.max_mass_drift, res.energy_violations, l1);
    detail = buf;
    return st.converged && res.max_mass_drift <= 1e-12 &&
           res.energy_violations == 0 && l1 <= 0.02;
}

bool criterion7(std::string& detail) {
    Grid g(4.0, 1024);
    std::vector<double> outs;
    for (int k = 1; k < 200; ++k) outs.push_back(k / 200.0);
    const auto breach_time = [&](const Density& rho0) {
        Params p{3.0, 0.0, 1.0, 0.1, moments(rho0).mass};
        KernelWeights W(g, p.s);
        const EvolveResult res = evolve(p, rho0, 1.0, outs, W);
        return monotonicity_breach(res.traj);
    };
    const auto tm = breach_time(mollified_counterexample(g, 0.1, 4.0));
    const auto ti = breach_time(box_density(g, 0.25, -1.5, 1.5));
    Params p{3.0, 0.0, 1.0, 0.1, 1.0};
    KernelWeights W(g, p.s);
    SteadyState st = fixed_point_solve(p, limit_profile(p, g), W);
    const auto tc = breach_time(st.rho);
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "mollifier=%.3f indicator=%.3f control=%s",
                  tm ? *tm : -1.0, ti ? *ti : -1.0, tc ? "breach" : "none");
    detail = buf;
    const auto in_window = [](const std::optional<double>& t) {
        return t && *t > 0.0 && *t <= 1.0;
    };
    return st.converged && in_window(tm) && in_window(ti) && !tc;
}

bool criterion8(std::string& detail) {
    Grid g(4.0, 2048);
    const Density rho = gaussian_density(g, 1.0, 0.0, 0.5);
    const TestFunction phi = even_bump_fn();
    double target = 0.0;
    for (std::size_t i = 0; i < g.n_cells; ++i) {
        target += rho.values[i] * rho.values[i] * phi.d2f(g.center(i)) * g.dx;
    }
    std::vector<double> errs;
    for (const double s : {0.1, 0.05, 0.02}) {
        KernelWeights W(g, s);
        errs.push_back(std::fabs(symmetric_form(rho, phi, W) - target));
    }
    char buf[128];
    std::snprintf(buf, sizeof buf, "err=%.3e %.3e %.3e", errs[0], errs[1],
                  errs[2]);
    detail = buf;
    return strictly_decreasing(errs);
}

bool criterion9(std::string& detail) {
    Grid g(8.0, 512);
    Params p{3.0, 0.6, 1.0, 0.1, 1.0};
    const Density rho0 = gaussian_density(g, 1.0, 0.0, 1.0);
    const EvolveResult lim = local_limit_evolve(p, rho0, 0.5, {});
    std::vector<double> dists;
    for (const double s : {0.1, 0.05, 0.02}) {
        Params ps = p;
        ps.s = s;
        KernelWeights W(g, s);
        const EvolveResult res = evolve(ps, rho0, 0.5, {}, W);
        double l2 = 0.0;
        for (std::size_t i = 0; i < g.n_cells; ++i) {
            const double d = res.traj.states.back().values[i] -
                             lim.traj.states.back().values[i];
            l2 += d * d * g.dx;
        }
        dists.push_back(std::sqrt(l2));
    }
    char buf[128];
    std::snprintf(buf, sizeof buf, "L2=%.3e %.3e %.3e", dists[0], dists[1],
                  dists[2]);
    detail = buf;
    return strictly_decreasing(dists);
}

bool criterion10(std::string& detail) {
    bool ok = true;
    // Per-step and telescoped minimizing-movement estimates on a 50-step run.
    Grid g(4.0, 1024);
    Params p{3.0, 0.2, 1.0, 0.25, 1.0};
    const double tau = 1e-3;
    const Quantile q0 =
        density_to_quantile(gaussian_density(g, 1.0, 0.0, 0.8), 128);
    const JkoRun run = jko_run(q0, p, tau, 50);
    ok &= run.records.size() == 51;
    for (std::size_t k = 1; k < run.records.size(); ++k) {
        const JkoRecord& r = run.records[k];
        const double step_lhs =
            r.free_energy + r.w2_inc * r.w2_inc / (2.0 * tau);
        ok &= step_lhs <= run.records[k - 1].free_energy + 1e-8;
        ok &= r.basic1_lhs <= r.basic1_rhs + 1e-8;
    }

    // Analytic Wasserstein distances.
    Grid gw(4.0, 4096);
    const Density a = box_density(gw, 1.0, 0.0, 1.0);
    const Density b = box_density(gw, 1.0, 1.0, 2.0);
    const Density c = box_density(gw, 0.5, -1.0, 1.0);
    const Density d = box_density(gw, 0.25, -2.0, 2.0);
    ok &= std::fabs(w2_distance(a, b) - 1.0) <= 1e-6;
    ok &= std::fabs(w2_distance(a, a)) <= 1e-6;
    ok &= std::fabs(w2_distance(c, d) - 1.0 / std::sqrt(3.0)) <= 1e-6;

    // Gradient vs central finite differences at random feasible points.
    std::mt19937 rng(9090);
    std::uniform_real_distribution<double> jitter(0.0, 0.02);
    const std::size_t K = 40;
    double worst_fd = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> q(K), prev(K);
        for (std::size_t k = 0; k < K; ++k) {
            const double base =
                -1.0 + 2.0 * (static_cast<double>(k) + 0.5) / K;
            q[k] = base + jitter(rng);
            prev[k] = base;
        }
        const std::vector<double> grad = jko_gradient(q, prev, p, tau);
        const double h = 1e-7;
        for (std::size_t k = 0; k < K; k += 7) {
            std::vector<double> qp = q, qm = q;
            qp[k] += h;
            qm[k] -= h;
            const double fd = (jko_objective(qp, prev, p, tau) -
                               jko_objective(qm, prev, p, tau)) /
                              (2.0 * h);
            const double rel = std::fabs(grad[k] - fd) /
                               std::max(1.0, std::fabs(grad[k]));
            worst_fd = std::max(worst_fd, rel);
        }
    }
    ok &= worst_fd <= 1e-5;
    char buf[128];
    std::snprintf(buf, sizeof buf, "F=%.5f..%.5f fd_gap=%.1e",
                  run.records.front().free_energy,
                  run.records.back().free_energy, worst_fd);
    detail = buf;
    return ok;
}

bool criterion11(std::string& detail) {
    Params p{3.0, 0.2, 1.0, 0.2, 1.0};
    const double T = 0.05;
    const TestFunction phi = even_bump_fn();
    const TestFunction eta = {
        [T](double t) {
            const double u = std::sin(M_PI * t / T);
            return u * u;
        },
        [T](double t) { return M_PI / T * std::sin(2.0 * M_PI * t / T); },
        [T](double t) {
            return 2.0 * M_PI * M_PI / (T * T) * std::cos(2.0 * M_PI * t / T);
        },
    };
    std::vector<double> residuals;
    for (const std::size_t n : {std::size_t{256}, std::size_t{512},
                                std::size_t{1024}}) {
        Grid g(4.0, n);
        KernelWeights W(g, p.s);
        const Density rho0 = gaussian_density(g, 1.0, 0.0, 0.8);
        std::vector<double> outs;
        for (int k = 1; k < 40; ++k) outs.push_back(T * k / 40.0);
        const EvolveResult res = evolve(p, rho0, T, outs, W);
        residuals.push_back(weak_residual(res.traj, phi, eta, p, W));
    }
    const double r1 = residuals[0] / residuals[1];
    const double r2 = residuals[1] / residuals[2];
    char buf[128];
    std::snprintf(buf, sizeof buf, "residual=%.2e %.2e %.2e ratios=%.2f %.2f",
                  residuals[0], residuals[1], residuals[2], r1, r2);
    detail = buf;
    return r1 >= 1.5 && r2 >= 1.5;
}

const Criterion kCriteria[] = {
    {1, "constants oracle", 1.0, criterion1},
    {2, "limit profile scan", 120.0, criterion2},
    {3, "vanishing regime", 120.0, criterion3},
    {4, "steady-state identities", 1.0, criterion4},
    {5, "ball-radius cross-check", 1.0, criterion5},
    {6, "evolution conservation and dissipation", 300.0, criterion6},
    {7, "monotonicity breach", 300.0, criterion7},
    {8, "kernel collapse", 60.0, criterion8},
    {9, "small-s evolution limit", 300.0, criterion9},
    {10, "minimizing-movement estimates", 300.0, criterion10},
    {11, "weak-form consistency", 180.0, criterion11},
};

} // namespace

int main() {
    int failures = 0;
    for (const Criterion& c : kCriteria) {
        const auto t0 = std::chrono::steady_clock::now();
        std::string detail;
        bool ok = false;
        try {
            ok = c.run(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
                .count();
        // The runtime budget is part of the criterion.
        if (secs > c.budget_seconds) ok = false;
        if (!ok) ++failures;
        std::printf("criterion %2d (%s): %s  [%.1fs]  %s\n", c.id, c.name,
                    ok ? "PASS" : "FAIL", secs, detail.c_str());
        std::fflush(stdout);
    }
    return failures == 0 ? 0 : 1;
}
