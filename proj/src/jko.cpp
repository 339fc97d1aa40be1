#include "agdiff/jko.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "agdiff/special.hpp"

namespace agdiff {

Quantile density_to_quantile(const Density& rho, std::size_t K) {
    if (K < 2) throw std::invalid_argument("density_to_quantile: K < 2");
    const std::size_t n = rho.size();
    const double dx = rho.dx();
    std::vector<double> cum(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (rho.values[i] < 0.0) {
            throw std::invalid_argument("density_to_quantile: negative density");
        }
        cum[i + 1] = cum[i] + rho.values[i] * dx;
    }
    const double M = cum[n];
    if (!(M > 0.0)) throw std::invalid_argument("density_to_quantile: zero mass");

    Quantile Q;
    Q.mass = M;
    Q.q.resize(K);
    std::size_t cell = 0;
    for (std::size_t k = 0; k < K; ++k) {
        const double target = M * (static_cast<double>(k) + 0.5) / static_cast<double>(K);
        while (cell + 1 < n && cum[cell + 1] <= target) ++cell;
        while (rho.values[cell] <= 0.0 && cell + 1 < n) ++cell;
        Q.q[k] = rho.grid.left_edge(cell) + (target - cum[cell]) / rho.values[cell];
    }
    return Q;
}

Density quantile_to_density(const Quantile& Q, const Grid& grid) {
    const std::size_t K = Q.size();
    if (K < 2) throw std::invalid_argument("quantile_to_density: needs K >= 2");
    Density rho(grid);
    const double mu = Q.mass / static_cast<double>(K);
    const double dx = grid.dx;
    const std::size_t n = grid.n_cells;
    // Spread mass uniformly over an interval, clamped to the domain.
    const auto deposit = [&](double a, double b, double mass) {
        if (!(b > a)) return;
        const double h = mass / (b - a);
        a = std::max(a, -grid.half_width);
        b = std::min(b, grid.half_width);
        if (b <= a) return;
        const auto ia = static_cast<std::size_t>(
            std::clamp((a + grid.half_width) / dx, 0.0, static_cast<double>(n - 1)));
        const auto ib = static_cast<std::size_t>(
            std::clamp((b + grid.half_width) / dx, 0.0, static_cast<double>(n - 1)));
        for (std::size_t i = ia; i <= ib; ++i) {
            const double lo = std::max(a, grid.left_edge(i));
            const double hi = std::min(b, grid.left_edge(i + 1));
            if (hi > lo) rho.values[i] += h * (hi - lo) / dx;
        }
    };
    // Piecewise-linear CDF through the midpoint quantiles: one particle mass
    // per gap, half a mass on each extrapolated end gap.
    for (std::size_t k = 0; k + 1 < K; ++k) {
        deposit(Q.q[k], Q.q[k + 1], mu);
    }
    deposit(Q.q[0] - 0.5 * (Q.q[1] - Q.q[0]), Q.q[0], 0.5 * mu);
    deposit(Q.q[K - 1], Q.q[K - 1] + 0.5 * (Q.q[K - 1] - Q.q[K - 2]), 0.5 * mu);
    return rho;
}

double w2_quantile(const Quantile& a, const Quantile& b) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("w2_quantile: size mismatch");
    }
    if (std::fabs(a.mass - b.mass) > 1e-10 * std::max(a.mass, b.mass)) {
        throw std::invalid_argument("w2_quantile: mass mismatch");
    }
    double acc = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double d = a.q[k] - b.q[k];
        acc += d * d;
    }
    return std::sqrt(a.mass / static_cast<double>(a.size()) * acc);
}

double w2_distance(const Density& a, const Density& b, std::size_t K) {
    return w2_quantile(density_to_quantile(a, K), density_to_quantile(b, K));
}

double second_moment(const Quantile& Q) {
    double acc = 0.0;
    for (double x : Q.q) acc += x * x;
    return Q.mass / static_cast<double>(Q.size()) * acc;
}

namespace {

// Central blob widths used by the interaction self term: h_k spans from the
// midpoint below to the midpoint above, adjacent gap at the two ends.
struct SelfGap {
    std::size_t lo, hi;
    double fac;
};

SelfGap self_gap(std::size_t k, std::size_t K) {
    if (k == 0) return {0, 1, 1.0};
    if (k + 1 == K) return {K - 2, K - 1, 1.0};
    return {k - 1, k + 1, 0.5};
}

} // namespace

double quantile_free_energy(const std::vector<double>& q, const Params& p) {
    const std::size_t K = q.size();
    if (K < 3) throw std::invalid_argument("quantile_free_energy: K < 3");
    const double mu = p.mass / static_cast<double>(K);
    const double c = special::riesz_constant(1, p.s);

    double entropy = 0.0, quad = 0.0;
    for (std::size_t k = 0; k + 1 < K; ++k) {
        const double D = q[k + 1] - q[k];
        if (!(D > 0.0)) {
            throw std::invalid_argument("quantile_free_energy: non-increasing q");
        }
        entropy += std::pow(D, 1.0 - p.m);
        quad += 1.0 / D;
    }
    entropy *= std::pow(mu, p.m) / (p.m - 1.0);
    quad *= p.beta * mu * mu;

    double pair = 0.0;
    for (std::size_t k = 1; k < K; ++k) {
        for (std::size_t j = 0; j < k; ++j) {
            pair += std::pow(q[k] - q[j], 2.0 * p.s - 1.0);
        }
    }
    double self = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
        const SelfGap g = self_gap(k, K);
        const double h = (q[g.hi] - q[g.lo]) * g.fac;
        self += std::pow(h, 2.0 * p.s - 1.0);
    }
    self /= 2.0 * p.s * (2.0 * p.s + 1.0);
    const double w_s = -p.chi * c * mu * mu * (pair + self);

    return entropy + quad + w_s;
}

double jko_objective(const std::vector<double>& q,
                     const std::vector<double>& prev, const Params& p,
                     double tau) {
    const std::size_t K = q.size();
    if (prev.size() != K) throw std::invalid_argument("jko_objective: size mismatch");
    const double mu = p.mass / static_cast<double>(K);
    double prox = 0.0;
    for (std::size_t k = 0; k < K; ++k) {
        const double d = q[k] - prev[k];
        prox += d * d;
    }
    return quantile_free_energy(q, p) + mu / (2.0 * tau) * prox;
}

std::vector<double> jko_gradient(const std::vector<double>& q,
                                 const std::vector<double>& prev,
                                 const Params& p, double tau) {
    const std::size_t K = q.size();
    if (prev.size() != K) throw std::invalid_argument("jko_gradient: size mismatch");
    const double mu = p.mass / static_cast<double>(K);
    const double c = special::riesz_constant(1, p.s);
    std::vector<double> g(K, 0.0);

    const double em = std::pow(mu, p.m);
    for (std::size_t k = 0; k + 1 < K; ++k) {
        const double D = q[k + 1] - q[k];
        if (!(D > 0.0)) {
            throw std::invalid_argument("jko_gradient: non-increasing q");
        }
        // d/dD of the gap terms, distributed to the two endpoints.
        const double dH = -em * std::pow(D, -p.m) -
                          p.beta * mu * mu / (D * D);
        g[k + 1] += dH;
        g[k] -= dH;
    }

    const double wpref = -p.chi * c * mu * mu;
    const double ex = 2.0 * p.s - 1.0;
    for (std::size_t k = 1; k < K; ++k) {
        for (std::size_t j = 0; j < k; ++j) {
            const double d = wpref * ex * std::pow(q[k] - q[j], ex - 1.0);
            g[k] += d;
            g[j] -= d;
        }
    }
    const double spref = wpref / (2.0 * p.s * (2.0 * p.s + 1.0));
    for (std::size_t k = 0; k < K; ++k) {
        const SelfGap sg = self_gap(k, K);
        const double h = (q[sg.hi] - q[sg.lo]) * sg.fac;
        const double d = spref * ex * std::pow(h, ex - 1.0) * sg.fac;
        g[sg.hi] += d;
        g[sg.lo] -= d;
    }

    for (std::size_t k = 0; k < K; ++k) {
        g[k] += mu / tau * (q[k] - prev[k]);
    }
    return g;
}

std::vector<double> project_monotone(const std::vector<double>& q,
                                     double min_gap) {
    const std::size_t K = q.size();
    // Shift so the constraint becomes plain isotonicity, then PAVA.
    std::vector<double> z(K), w(K, 1.0);
    for (std::size_t k = 0; k < K; ++k) {
        z[k] = q[k] - static_cast<double>(k) * min_gap;
    }
    std::vector<double> val, wt;
    std::vector<std::size_t> len;
    val.reserve(K); wt.reserve(K); len.reserve(K);
    for (std::size_t k = 0; k < K; ++k) {
        val.push_back(z[k]);
        wt.push_back(1.0);
        len.push_back(1);
        while (val.size() > 1 && val[val.size() - 2] > val.back()) {
            const double merged =
                (wt[wt.size() - 2] * val[val.size() - 2] + wt.back() * val.back()) /
                (wt[wt.size() - 2] + wt.back());
            wt[wt.size() - 2] += wt.back();
            len[len.size() - 2] += len.back();
            val[val.size() - 2] = merged;
            val.pop_back(); wt.pop_back(); len.pop_back();
        }
    }
    std::vector<double> out(K);
    std::size_t pos = 0;
    for (std::size_t b = 0; b < val.size(); ++b) {
        for (std::size_t r = 0; r < len[b]; ++r, ++pos) {
            out[pos] = val[b] + static_cast<double>(pos) * min_gap;
        }
    }
    return out;
}

JkoStepResult jko_step(const Quantile& prev, const Params& p, double tau,
                       const JkoOptions& opt) {
    p.validate();
    const std::size_t K = prev.size();
    if (K < 3) throw std::invalid_argument("jko_step: K < 3");
    JkoStepResult res;
    std::vector<double> q = prev.q;
    double G = jko_objective(q, prev.q, p, tau);
    std::vector<double> grad = jko_gradient(q, prev.q, p, tau);

    double min_d = std::numeric_limits<double>::infinity();
    double gmax = 0.0;
    for (std::size_t k = 0; k + 1 < K; ++k) min_d = std::min(min_d, q[k + 1] - q[k]);
    for (double gv : grad) gmax = std::max(gmax, std::fabs(gv));
    double t = gmax > 0.0 ? 0.1 * min_d / gmax : 1.0;

    std::vector<double> q_old, g_old;
    for (std::size_t it = 0; it < opt.max_iter; ++it) {
        std::vector<double> cand(K);
        double Gc = 0.0;
        bool ok = false;
        for (int back = 0; back < 60; ++back) {
            for (std::size_t k = 0; k < K; ++k) cand[k] = q[k] - t * grad[k];
            cand = project_monotone(cand, opt.min_gap);
            Gc = jko_objective(cand, prev.q, p, tau);
            double dq2 = 0.0;
            for (std::size_t k = 0; k < K; ++k) {
                const double d = cand[k] - q[k];
                dq2 += d * d;
            }
            if (Gc <= G - 1e-4 * dq2 / t) { ok = true; break; }
            t *= 0.5;
            if (t < 1e-18) break;
        }
        if (!ok) {
            res.converged = true;  // no admissible descent left
            break;
        }
        double step_inf = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            step_inf = std::max(step_inf, std::fabs(cand[k] - q[k]));
        }
        q_old = std::move(q);
        g_old = std::move(grad);
        q = std::move(cand);
        G = Gc;
        grad = jko_gradient(q, prev.q, p, tau);
        res.iterations = it + 1;
        res.grad_norm = step_inf / t;
        if (step_inf / t <= opt.grad_tol) {
            res.converged = true;
            break;
        }
        // Barzilai-Borwein step, safeguarded.
        double sy = 0.0, yy = 0.0;
        for (std::size_t k = 0; k < K; ++k) {
            const double sk = q[k] - q_old[k];
            const double yk = grad[k] - g_old[k];
            sy += sk * yk;
            yy += yk * yk;
        }
        if (sy > 0.0 && yy > 0.0) {
            t = std::clamp(sy / yy, 1e-15, 1e6);
        } else {
            t *= 2.0;
        }
    }

    res.q.mass = prev.mass;
    res.q.q = q;
    res.objective = G;
    res.free_energy = quantile_free_energy(q, p);
    res.w2_inc = w2_quantile(res.q, prev);
    return res;
}

JkoRun jko_run(const Quantile& init, const Params& p, double tau,
               std::size_t steps, const JkoOptions& opt) {
    JkoRun run;
    run.states.push_back(init);
    const double f0 = quantile_free_energy(init.q, p);
    run.records.push_back(
        {0, f0, 0.0, second_moment(init), f0, f0});
    double dissip = 0.0;
    Quantile cur = init;
    for (std::size_t k = 1; k <= steps; ++k) {
        JkoStepResult st = jko_step(cur, p, tau, opt);
        dissip += st.w2_inc * st.w2_inc / (2.0 * tau);
        run.records.push_back({k, st.free_energy, st.w2_inc,
                               second_moment(st.q), st.free_energy + dissip, f0});
        cur = st.q;
        run.states.push_back(cur);
    }
    return run;
}

} // namespace agdiff
