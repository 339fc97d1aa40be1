// Command-line driver: steady / evolve / jko / limit-scan / verify.
// Exit codes: 0 success, 1 numerical failure, 2 usage error.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <random>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "agdiff/energy.hpp"
#include "agdiff/evolution.hpp"
#include "agdiff/grid.hpp"
#include "agdiff/jko.hpp"
#include "agdiff/riesz.hpp"
#include "agdiff/special.hpp"
#include "agdiff/steady.hpp"

using namespace agdiff;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr const char* kVersion = "1.0.0";

struct Timer {
    std::chrono::steady_clock::time_point t0 =
        std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                             t0)
            .count();
    }
};

json params_json(const Params& p) {
    return {{"m", p.m}, {"beta", p.beta}, {"chi", p.chi},
            {"s", p.s}, {"mass", p.mass}};
}

json grid_json(const Grid& g) {
    return {{"L", g.half_width}, {"n", g.n_cells}, {"dx", g.dx}};
}

void write_json(const json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << j.dump(2) << '\n';
}

json meta_json(const Params& p, const Grid& g, const json& tolerances,
               std::uint64_t seed, const json& timings) {
    return {{"params", params_json(p)}, {"grid", grid_json(g)},
            {"tolerances", tolerances}, {"seed", seed},
            {"version", kVersion},     {"timings", timings}};
}

// Common numeric options shared by the model subcommands.
struct ModelOpts {
    Params p;
    double L = 4.0;
    std::size_t n = 1024;
};

void add_model_options(CLI::App* cmd, ModelOpts& o) {
    cmd->add_option("--m", o.p.m, "diffusion exponent m > 2");
    cmd->add_option("--beta", o.p.beta, "quadratic diffusion coefficient");
    cmd->add_option("--chi", o.p.chi, "aggregation strength");
    cmd->add_option("--s", o.p.s, "kernel order in (0, 1/2)");
    cmd->add_option("--mass", o.p.mass, "total mass");
    cmd->add_option("--L", o.L, "domain half width");
    cmd->add_option("--n", o.n, "number of cells");
}

Density steady_seed(const Params& p, const Grid& g) {
    if (p.beta < 0.5 * p.chi) return limit_profile(p, g);
    return gaussian_density(g, p.mass, 0.0, 0.125 * g.half_width);
}

int run_steady(const ModelOpts& o, const SteadyOptions& sopt,
               const std::string& out_csv, const std::string& diag_path,
               std::uint64_t seed) {
    Timer timer;
    o.p.validate();
    Grid g(o.L, o.n);
    KernelWeights W(g, o.p.s);
    const SteadyState st = fixed_point_solve(o.p, steady_seed(o.p, g), W, sopt);
    const SteadyDiagnostics d = steady_diagnostics(st, o.p, W);

    if (!out_csv.empty()) write_density_csv(st.rho, out_csv);
    json diag = {
        {"c_s", st.c_s},
        {"iterations", st.iterations},
        {"residual", st.residual},
        {"virial_residual", d.virial_residual / d.virial_scale},
        {"cs_consistency", d.cs_consistency},
        {"height", d.height},
        {"support_radius", d.support_radius},
        {"energy",
         {{"h_m", st.energy.h_m},
          {"quad", st.energy.quad},
          {"w_s", st.energy.w_s},
          {"total", st.energy.total}}},
        {"converged", st.converged},
        {"collapsed", st.collapsed},
    };
    if (!diag_path.empty()) write_json(diag, diag_path);

    json summary = {{"command", "steady"},
                    {"converged", st.converged},
                    {"diag", diag},
                    {"meta", meta_json(o.p, g,
                                       {{"tol", sopt.tol},
                                        {"max_iter", sopt.max_iter}},
                                       seed,
                                       {{"total_seconds", timer.seconds()}})}};
    std::printf("%s\n", summary.dump(2).c_str());
    return st.converged || st.collapsed ? 0 : 1;
}

Density evolve_preset_datum(const std::string& preset, const Grid& g,
                            Params& p) {
    if (preset == "two-bump") {
        p.beta = 0.2;
        p.s = 0.1;
        Density rho(g);
        const Density a = gaussian_density(g, 0.5 * p.mass, -1.0, 0.3);
        const Density b = gaussian_density(g, 0.5 * p.mass, 1.0, 0.3);
        for (std::size_t i = 0; i < g.n_cells; ++i) {
            rho.values[i] = a.values[i] + b.values[i];
        }
        return rho;
    }
    if (preset == "gaussian") {
        p.beta = 0.4;
        p.s = 0.08;
        return gaussian_density(g, p.mass, 0.0, 0.5);
    }
    if (preset == "mollifier") {
        p.beta = 0.0;
        p.s = 0.1;
        Density rho = mollified_counterexample(g, 0.1, 4.0);
        p.mass = moments(rho).mass;
        return rho;
    }
    if (preset == "indicator") {
        p.beta = 0.0;
        p.s = 0.1;
        Density rho = box_density(g, 0.25, -1.5, 1.5);
        p.mass = moments(rho).mass;
        return rho;
    }
    throw CLI::ValidationError("--preset", "unknown preset " + preset);
}

int run_evolve(const ModelOpts& base, const std::string& preset, double T,
               std::size_t n_outputs, const std::string& out_dir,
               std::uint64_t seed, const std::vector<std::string>& set_flags) {
    Timer timer;
    ModelOpts o = base;
    Grid g(o.L, o.n);
    Density rho0 = evolve_preset_datum(preset, g, o.p);
    // Explicit flags win over the preset's defaults.
    for (const std::string& f : set_flags) {
        if (f == "--beta") o.p.beta = base.p.beta;
        if (f == "--s") o.p.s = base.p.s;
        if (f == "--mass") o.p.mass = base.p.mass;
    }
    o.p.validate();
    KernelWeights W(g, o.p.s);

    std::vector<double> outs;
    for (std::size_t k = 1; k < n_outputs; ++k) {
        outs.push_back(T * static_cast<double>(k) /
                       static_cast<double>(n_outputs));
    }
    const EvolveResult res = evolve(o.p, rho0, T, outs, W);

    fs::create_directories(out_dir);
    for (std::size_t k = 0; k < res.traj.times.size(); ++k) {
        char name[64];
        std::snprintf(name, sizeof name, "state_%.6f.csv", res.traj.times[k]);
        write_density_csv(res.traj.states[k], (fs::path(out_dir) / name).string());
    }
    {
        std::ofstream e(fs::path(out_dir) / "energy.csv");
        e << "t,h_m,quad,w_s,total\n";
        e.precision(17);
        for (std::size_t k = 0; k < res.traj.times.size(); ++k) {
            const EnergyBreakdown& eb = res.traj.energy_log[k];
            e << res.traj.times[k] << ',' << eb.h_m << ',' << eb.quad << ','
              << eb.w_s << ',' << eb.total << '\n';
        }
    }
    const auto breach = monotonicity_breach(res.traj);
    json meta = meta_json(o.p, g, {{"energy_slack", EvolveOptions{}.energy_slack}},
                          seed, {{"total_seconds", timer.seconds()}});
    meta["preset"] = preset;
    meta["T"] = T;
    meta["dt"] = {{"min", res.traj.min_dt},
                  {"max", res.traj.max_dt},
                  {"steps", res.traj.total_steps}};
    meta["breach_time"] = breach ? json(*breach) : json(nullptr);
    meta["mass_drift"] = res.max_mass_drift;
    meta["energy_violations"] = res.energy_violations;
    write_json(meta, (fs::path(out_dir) / "meta.json").string());

    std::printf("%s\n", meta.dump(2).c_str());
    return res.energy_violations == 0 ? 0 : 1;
}

int run_jko(const ModelOpts& o, double tau, std::size_t steps, std::size_t K,
            const std::string& out_dir, std::uint64_t seed) {
    Timer timer;
    o.p.validate();
    Grid g(o.L, o.n);
    const Density rho0 = gaussian_density(g, o.p.mass, 0.0, 0.8);
    const Quantile q0 = density_to_quantile(rho0, K);
    const JkoRun run = jko_run(q0, o.p, tau, steps);

    fs::create_directories(fs::path(out_dir) / "states");
    for (std::size_t k = 0; k < run.states.size(); ++k) {
        char name[64];
        std::snprintf(name, sizeof name, "state_%04zu.csv", k);
        write_density_csv(quantile_to_density(run.states[k], g),
                          (fs::path(out_dir) / "states" / name).string());
    }
    {
        std::ofstream e(fs::path(out_dir) / "estimates.csv");
        e << "k,F_s,w2_inc,second_moment,basic1_lhs,basic1_rhs\n";
        e.precision(17);
        for (const JkoRecord& r : run.records) {
            e << r.k << ',' << r.free_energy << ',' << r.w2_inc << ','
              << r.second_moment << ',' << r.basic1_lhs << ',' << r.basic1_rhs
              << '\n';
        }
    }
    bool estimates_ok = true;
    for (const JkoRecord& r : run.records) {
        if (r.basic1_lhs > r.basic1_rhs + 1e-8) estimates_ok = false;
    }
    json meta = meta_json(o.p, g, {{"basic_estimate_slack", 1e-8}}, seed,
                          {{"total_seconds", timer.seconds()}});
    meta["tau"] = tau;
    meta["steps"] = steps;
    meta["K"] = K;
    meta["basic_estimate_ok"] = estimates_ok;
    write_json(meta, (fs::path(out_dir) / "meta.json").string());
    std::printf("%s\n", meta.dump(2).c_str());
    return estimates_ok ? 0 : 1;
}

int run_limit_scan(const std::string& preset, const std::string& out_dir,
                   std::uint64_t seed, unsigned jobs) {
    Timer timer;
    fs::create_directories(out_dir);
    if (preset == "fig4" || preset == "fig5") {
        ModelOpts o;
        o.p = Params{3.0, 0.0, 1.0, 0.1, 1.0};
        o.n = 1024;
        return run_evolve(o, preset == "fig4" ? "mollifier" : "indicator", 1.0,
                          200, out_dir, seed, {});
    }
    const double beta = preset == "fig1-left" ? 0.0
                        : preset == "fig1-right" ? 0.2
                                                 : -1.0;
    if (beta < 0.0) {
        throw CLI::ValidationError("--preset", "unknown preset " + preset);
    }
    const std::vector<double> ss{0.25, 0.15, 0.1, 0.05};
    Grid g(4.0, 2048);
    Params p{3.0, beta, 1.0, 0.25, 1.0};
    write_density_csv(limit_profile(p, g),
                      (fs::path(out_dir) / "limit_profile.csv").string());

    std::vector<SteadyState> states(ss.size());
    const auto solve_one = [&](std::size_t k) {
        Params pk = p;
        pk.s = ss[k];
        KernelWeights W(g, pk.s);
        states[k] = fixed_point_solve(pk, limit_profile(pk, g), W);
    };
    if (jobs > 1) {
        std::vector<std::future<void>> pool;
        for (std::size_t k = 0; k < ss.size(); ++k) {
            pool.push_back(std::async(std::launch::async, solve_one, k));
        }
        for (auto& f : pool) f.get();
    } else {
        for (std::size_t k = 0; k < ss.size(); ++k) solve_one(k);
    }

    json runs = json::array();
    bool ok = true;
    double prev_gap = std::numeric_limits<double>::infinity();
    const double target = std::pow(0.5 * (p.chi - 2.0 * beta), 1.0 / (p.m - 2.0));
    for (std::size_t k = 0; k < ss.size(); ++k) {
        char name[64];
        std::snprintf(name, sizeof name, "steady_s%.2f.csv", ss[k]);
        write_density_csv(states[k].rho, (fs::path(out_dir) / name).string());
        const double h = sup_norm(states[k].rho);
        // Heights approach the limit height as s decreases (scan is listed
        // with decreasing s, so the gap to the target shrinks along it).
        const double gap = std::fabs(h - target);
        ok &= states[k].converged && gap < prev_gap;
        prev_gap = gap;
        runs.push_back({{"s", ss[k]},
                        {"height", h},
                        {"converged", states[k].converged},
                        {"energy", states[k].energy.total}});
    }
    json summary = {{"command", "limit-scan"},
                    {"preset", preset},
                    {"target_height", target},
                    {"runs", runs},
                    {"checks_passed", ok},
                    {"meta", meta_json(p, g, json::object(), seed,
                                       {{"total_seconds", timer.seconds()}})}};
    write_json(summary, (fs::path(out_dir) / "meta.json").string());
    std::printf("%s\n", summary.dump(2).c_str());
    return ok ? 0 : 1;
}

// ---- verify: named invariant checks per module -----------------------------

struct Check {
    std::string name;
    double measured;
    double threshold;
    bool pass;
};

void check_leq(std::vector<Check>& out, const std::string& name,
               double measured, double threshold) {
    out.push_back({name, measured, threshold, measured <= threshold});
}

std::vector<Check> verify_special(std::mt19937& rng) {
    std::vector<Check> cs;
    check_leq(cs, "riesz_constant(1,0.25) oracle",
              std::fabs(special::riesz_constant(1, 0.25) - 0.3989422804), 1e-9);
    std::uniform_real_distribution<double> us(0.01, 0.49);
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
        const double s = us(rng);
        const double lhs = special::sds_constant(1, s);
        const double rhs =
            special::riesz_constant(1, s) * special::hls_constant(1, s);
        worst = std::max(worst, std::fabs(lhs - rhs) / std::fabs(lhs));
    }
    check_leq(cs, "S = c*H identity", worst, 1e-11);
    std::uniform_real_distribution<double> ux(0.05, 0.95);
    worst = 0.0;
    for (int k = 0; k < 100; ++k) {
        const double x = ux(rng);
        worst = std::max(worst,
                         std::fabs(special::gamma(x) * special::gamma(1.0 - x) -
                                   M_PI / std::sin(M_PI * x)) *
                             std::fabs(std::sin(M_PI * x)) / M_PI);
    }
    check_leq(cs, "gamma reflection identity", worst, 1e-10);
    return cs;
}

std::vector<Check> verify_grid(std::mt19937&) {
    std::vector<Check> cs;
    Grid g(4.0, 1024);
    const Density rho = gaussian_density(g, 1.0, 0.2, 0.5);
    check_leq(cs, "gaussian cell-average mass",
              std::fabs(moments(rho).mass - 1.0), 1e-10);
    const Density dil = dilate(rho, 1.7);
    check_leq(cs, "dilation mass invariance",
              std::fabs(moments(dil).mass - 1.0), 1e-10);
    const Density norm = normalize_to_class(dil, 2.0);
    check_leq(cs, "normalize_to_class mass",
              std::fabs(moments(norm).mass - 2.0) / 2.0, 1e-9);
    return cs;
}

std::vector<Check> verify_riesz(std::mt19937&) {
    std::vector<Check> cs;
    Grid g(4.0, 2048);
    KernelWeights W(g, 0.25);
    // (K_s * 1_[-1,1])(0) closed form: 2 c int_0^1 r^{2s-1} dr = c/s.
    const Density box = box_density(g, 1.0, -1.0, 1.0);
    const double at0 = W.convolve(box)[g.n_cells / 2];
    const double exact = special::riesz_constant(1, 0.25) / 0.25;
    check_leq(cs, "convolution closed form at 0", std::fabs(at0 - exact) / exact,
              1e-3);
    const double w = interaction_energy(box_density(g, 0.5, -1.0, 1.0), W, 1.0);
    check_leq(cs, "ball interaction energy", std::fabs(-w - 0.376126) / 0.376126,
              1e-3);
    // Truncated kernels converge to the exact one in the induced L1 sense.
    double prev = std::numeric_limits<double>::infinity();
    bool shrinking = true;
    for (const double eps : {g.dx, 0.5 * g.dx, 0.25 * g.dx}) {
        KernelWeights Wt(g, 0.25, eps);
        const auto a = W.convolve(box), b = Wt.convolve(box);
        double l1 = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            l1 += std::fabs(a[i] - b[i]) * g.dx;
        }
        shrinking &= l1 < prev;
        prev = l1;
    }
    cs.push_back({"truncated kernel L1 convergence", prev, 0.0, shrinking});
    return cs;
}

std::vector<Check> verify_energy(std::mt19937& rng) {
    std::vector<Check> cs;
    Grid g(4.0, 1024);
    Params p{3.0, 0.2, 1.0, 0.25, 1.0};
    KernelWeights W(g, p.s);
    check_leq(cs, "theta exponent m=3 s=0.25",
              std::fabs(theta_exponent(p) - 0.375), 1e-14);
    std::uniform_real_distribution<double> cen(-1.0, 1.0), wid(0.2, 0.8);
    bool hls_ok = true;
    for (int k = 0; k < 50; ++k) {
        const Density rho = gaussian_density(g, 1.0, cen(rng), wid(rng));
        const BoundReport r = lower_bound_check(rho, p, W);
        hls_ok &= r.hls_lhs <= r.hls_rhs * (1.0 + 1e-12);
    }
    cs.push_back({"HLS interaction bound on random densities", 0.0, 0.0,
                  hls_ok});
    return cs;
}

std::vector<Check> verify_steady(std::mt19937&) {
    std::vector<Check> cs;
    Grid g(4.0, 1024);
    Params p{3.0, 0.0, 1.0, 0.25, 1.0};
    KernelWeights W(g, p.s);
    const SteadyState st = fixed_point_solve(p, limit_profile(p, g), W);
    const SteadyDiagnostics d = steady_diagnostics(st, p, W);
    cs.push_back({"fixed point converged", st.converged ? 0.0 : 1.0, 0.0,
                  st.converged});
    check_leq(cs, "virial identity", d.virial_residual / d.virial_scale, 1e-3);
    check_leq(cs, "multiplier consistency", d.cs_consistency, 1e-3);
    check_leq(cs, "ball radius oracle", std::fabs(ball_radius(p) - 1.208994),
              1e-4);
    return cs;
}

std::vector<Check> verify_evolution(std::mt19937&) {
    std::vector<Check> cs;
    Grid g(4.0, 256);
    Params p{3.0, 0.2, 1.0, 0.2, 1.0};
    KernelWeights W(g, p.s);
    const Density rho0 = gaussian_density(g, 1.0, 0.0, 0.8);
    const EvolveResult res = evolve(p, rho0, 0.25, {}, W);
    check_leq(cs, "mass conservation", res.max_mass_drift, 1e-12);
    cs.push_back({"energy dissipation violations",
                  static_cast<double>(res.energy_violations), 0.0,
                  res.energy_violations == 0});
    cs.push_back({"gaussian run stays radially monotone", 0.0, 0.0,
                  !monotonicity_breach(res.traj)});
    return cs;
}

std::vector<Check> verify_jko(std::mt19937&) {
    std::vector<Check> cs;
    Grid g(4.0, 1024);
    Params p{3.0, 0.2, 1.0, 0.25, 1.0};
    const Density a = box_density(g, 0.5, -1.0, 1.0);
    const Density b = box_density(g, 0.25, -2.0, 2.0);
    check_leq(cs, "w2 dilation example",
              std::fabs(w2_distance(a, b) - 1.0 / std::sqrt(3.0)), 1e-6);
    const Quantile q0 =
        density_to_quantile(gaussian_density(g, 1.0, 0.0, 0.8), 96);
    const JkoRun run = jko_run(q0, p, 1e-3, 10);
    double worst = 0.0;
    for (const JkoRecord& r : run.records) {
        worst = std::max(worst, r.basic1_lhs - r.basic1_rhs);
    }
    check_leq(cs, "telescoped basic estimate", worst, 1e-8);
    return cs;
}

int run_verify(const std::string& only, std::uint64_t seed) {
    using Suite = std::vector<Check> (*)(std::mt19937&);
    const std::vector<std::pair<std::string, Suite>> suites = {
        {"special", verify_special}, {"grid", verify_grid},
        {"riesz", verify_riesz},     {"energy", verify_energy},
        {"steady", verify_steady},   {"evolution", verify_evolution},
        {"jko", verify_jko},
    };
    bool matched = false, all_ok = true;
    json report = json::array();
    for (const auto& [name, suite] : suites) {
        if (!only.empty() && only != name) continue;
        matched = true;
        std::mt19937 rng(static_cast<std::uint32_t>(seed));
        for (const Check& c : suite(rng)) {
            all_ok &= c.pass;
            report.push_back({{"module", name},
                              {"check", c.name},
                              {"measured", c.measured},
                              {"threshold", c.threshold},
                              {"pass", c.pass}});
            std::fprintf(stderr, "[%s] %-40s %.3e <= %.3e : %s\n", name.c_str(),
                         c.name.c_str(), c.measured, c.threshold,
                         c.pass ? "ok" : "FAIL");
        }
    }
    if (!matched) {
        throw CLI::ValidationError("--only", "unknown module " + only);
    }
    std::printf("%s\n", json{{"command", "verify"},
                             {"seed", seed},
                             {"version", kVersion},
                             {"checks", report},
                             {"all_passed", all_ok}}
                            .dump(2)
                            .c_str());
    return all_ok ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"1D aggregation-diffusion laboratory"};
    app.require_subcommand(1);
    app.set_config("--config", "", "TOML config file; explicit flags override");
    app.get_config_formatter_base()->valueSeparator('=');

    std::uint64_t seed = 12345;
    unsigned jobs = 1;
    app.add_option("--seed", seed, "seed for randomized checks")
        ->configurable(true);
    app.add_option("--jobs", jobs, "worker pool size for scans")
        ->configurable(true);

    // steady
    ModelOpts so;
    so.p = Params{3.0, 0.0, 1.0, 0.25, 1.0};
    SteadyOptions sopt;
    std::string steady_out, steady_diag;
    CLI::App* steady = app.add_subcommand("steady", "solve for a steady state");
    add_model_options(steady, so);
    steady->add_option("--tol", sopt.tol, "fixed-point residual tolerance");
    steady->add_option("--max-iter", sopt.max_iter, "iteration cap");
    steady->add_option("--out", steady_out, "profile CSV path");
    steady->add_option("--diag", steady_diag, "diagnostics JSON path");

    // evolve
    ModelOpts eo;
    eo.p = Params{3.0, 0.2, 1.0, 0.1, 1.0};
    std::string preset = "two-bump", evolve_out = "traj";
    double T = 1.0;
    std::size_t n_outputs = 50;
    CLI::App* evolve_cmd = app.add_subcommand("evolve", "explicit time integration");
    add_model_options(evolve_cmd, eo);
    evolve_cmd->add_option("--preset", preset,
                           "two-bump | gaussian | mollifier | indicator");
    evolve_cmd->add_option("--T", T, "final time");
    evolve_cmd->add_option("--outputs", n_outputs, "number of recorded times");
    evolve_cmd->add_option("--out", evolve_out, "trajectory directory");

    // jko
    ModelOpts jo;
    jo.p = Params{3.0, 0.2, 1.0, 0.25, 1.0};
    double tau = 1e-3;
    std::size_t steps = 50, K = 256;
    std::string jko_out = "jko_run";
    CLI::App* jko = app.add_subcommand("jko", "minimizing-movement scheme");
    add_model_options(jko, jo);
    jko->add_option("--tau", tau, "time step of the proximal scheme");
    jko->add_option("--steps", steps, "number of steps");
    jko->add_option("--K", K, "number of quantile particles");
    jko->add_option("--out", jko_out, "run directory");

    // limit-scan
    std::string scan_preset = "fig1-left", scan_out = "scan";
    CLI::App* scan = app.add_subcommand("limit-scan", "preset experiment scans");
    scan->add_option("--preset", scan_preset,
                     "fig1-left | fig1-right | fig4 | fig5");
    scan->add_option("--out", scan_out, "output directory");

    // verify
    std::string only;
    CLI::App* verify = app.add_subcommand("verify", "run the invariant suite");
    verify->add_option("--only", only, "restrict to one module");

    // Let --seed/--jobs appear after the subcommand name as well.
    for (CLI::App* sub : {steady, evolve_cmd, jko, scan, verify}) {
        sub->fallthrough();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (steady->parsed()) {
            return run_steady(so, sopt, steady_out, steady_diag, seed);
        }
        if (evolve_cmd->parsed()) {
            std::vector<std::string> set_flags;
            for (const char* f : {"--beta", "--s", "--mass"}) {
                if (evolve_cmd->count(f) > 0) set_flags.push_back(f);
            }
            return run_evolve(eo, preset, T, n_outputs, evolve_out, seed,
                              set_flags);
        }
        if (jko->parsed()) return run_jko(jo, tau, steps, K, jko_out, seed);
        if (scan->parsed()) return run_limit_scan(scan_preset, scan_out, seed, jobs);
        if (verify->parsed()) return run_verify(only, seed);
    } catch (const CLI::ValidationError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 2;
}
