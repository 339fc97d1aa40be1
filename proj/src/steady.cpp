#include "agdiff/steady.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "agdiff/special.hpp"

namespace agdiff {

double f_inverse(double v, double m, double beta) {
    if (v <= 0.0) return 0.0;
    if (beta == 0.0) {
        return std::pow((m - 1.0) * v / m, 1.0 / (m - 1.0));
    }
    const auto f = [&](double t) {
        return m / (m - 1.0) * std::pow(t, m - 1.0) + 2.0 * beta * t;
    };
    // Bracket: f is increasing, f(0) = 0 < v.
    double hi = std::min(v / (2.0 * beta), std::pow((m - 1.0) * v / m, 1.0 / (m - 1.0)));
    if (f(hi) < v) hi = std::max(v / (2.0 * beta), std::pow((m - 1.0) * v / m, 1.0 / (m - 1.0)));
    double lo = 0.0;
    double t = 0.5 * hi;
    for (int it = 0; it < 200; ++it) {
        const double ft = f(t) - v;
        if (ft > 0.0) hi = t; else lo = t;
        const double df = m * std::pow(t, m - 2.0) + 2.0 * beta;
        double tn = t - ft / df;
        if (!(tn > lo && tn < hi)) tn = 0.5 * (lo + hi);
        if (std::fabs(tn - t) <= 1e-13 * (1.0 + t)) return tn;
        t = tn;
    }
    return t;
}

double multiplier(const Density& rho, const Params& p, const KernelWeights& W) {
    return multiplier(rho, p, W.convolve(rho));
}

double multiplier(const Density& rho, const Params& p,
                  const std::vector<double>& k_conv_rho) {
    const EnergyBreakdown e = free_energy(rho, p, k_conv_rho);
    double pm = 0.0;
    for (double v : rho.values) pm += std::pow(v, p.m);
    pm *= rho.dx();
    return -2.0 / p.mass * e.total - (p.m - 2.0) / (p.m - 1.0) * pm / p.mass;
}

double multiplier_alt(const Density& rho, const Params& p) {
    const double lm = std::pow(lp_norm(rho, p.m), p.m);
    const double l2 = std::pow(lp_norm(rho, 2.0), 2.0);
    return ((p.m + 2.0 * p.s * p.m - 2.0) / (p.m - 1.0) * lm +
            4.0 * p.beta * p.s * l2) /
           (p.mass * (1.0 - 2.0 * p.s));
}

namespace {

double f_of(double t, double m, double beta) {
    return m / (m - 1.0) * std::pow(t, m - 1.0) + 2.0 * beta * t;
}

double df_of(double t, double m, double beta) {
    return m * std::pow(t, m - 2.0) + 2.0 * beta;
}

// Gaussian elimination with partial pivoting; A row-major n x n, b overwritten
// with the solution. Returns false on a (near-)singular pivot.
bool solve_dense(std::vector<double>& A, std::vector<double>& b,
                 std::size_t n) {
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r) {
            if (std::fabs(A[r * n + c]) > std::fabs(A[piv * n + c])) piv = r;
        }
        if (std::fabs(A[piv * n + c]) < 1e-300) return false;
        if (piv != c) {
            for (std::size_t k = c; k < n; ++k)
                std::swap(A[c * n + k], A[piv * n + k]);
            std::swap(b[c], b[piv]);
        }
        const double inv = 1.0 / A[c * n + c];
        for (std::size_t r = c + 1; r < n; ++r) {
            const double fac = A[r * n + c] * inv;
            if (fac == 0.0) continue;
            for (std::size_t k = c; k < n; ++k) A[r * n + k] -= fac * A[c * n + k];
            b[r] -= fac * b[c];
        }
    }
    for (std::size_t r = n; r-- > 0;) {
        double acc = b[r];
        for (std::size_t k = r + 1; k < n; ++k) acc -= A[r * n + k] * b[k];
        b[r] = acc / A[r * n + r];
    }
    return true;
}

// Sup norm of the semi-smooth stationarity residual
// G_i = f(rho_i) - (chi (K*rho)_i - cs)_+ over all cells.
double stationarity_residual(const Density& rho, const std::vector<double>& conv,
                             double cs, const Params& p) {
    double res = 0.0;
    for (std::size_t i = 0; i < rho.size(); ++i) {
        const double pot = p.chi * conv[i] - cs;
        const double g =
            f_of(rho.values[i], p.m, p.beta) - (pot > 0.0 ? pot : 0.0);
        res = std::max(res, std::fabs(g));
    }
    return res;
}

// Semi-smooth Newton on the stationarity system over the active set plus the
// mass constraint. The damped map stalls along nearly neutral shape modes for
// small s; Newton converges to the actual discrete fixed point. Active cells
// are few (the support), so the dense solve is cheap.
bool newton_polish(SteadyState& st, const Params& p, const KernelWeights& W,
                   std::vector<double>& conv, double mass_target) {
    Density rho = st.rho;
    const std::size_t n = rho.size();
    const double dx = rho.dx();
    double cs = multiplier(rho, p, conv);
    double res = stationarity_residual(rho, conv, cs, p);
    const double res_tol = 1e-10 * std::max(1.0, std::fabs(cs));

    for (int outer = 0; outer < 25; ++outer) {
        double massdef = 0.0;
        for (double v : rho.values) massdef += v;
        massdef = massdef * dx - mass_target;
        if (res <= res_tol && std::fabs(massdef) <= 1e-10 * mass_target) {
            st.rho = std::move(rho);
            st.residual = res;
            return true;
        }

        std::vector<std::size_t> act;
        std::vector<char> on_pos;
        for (std::size_t i = 0; i < n; ++i) {
            const double pot = p.chi * conv[i] - cs;
            if (rho.values[i] > 0.0 || pot > 0.0) {
                act.push_back(i);
                on_pos.push_back(pot > 0.0 ? 1 : 0);
            }
        }
        const std::size_t a = act.size();
        if (a == 0) return false;

        std::vector<double> A((a + 1) * (a + 1), 0.0), rhs(a + 1, 0.0);
        for (std::size_t k = 0; k < a; ++k) {
            const std::size_t i = act[k];
            const double pot = p.chi * conv[i] - cs;
            rhs[k] = -(f_of(rho.values[i], p.m, p.beta) -
                       (pot > 0.0 ? pot : 0.0));
            A[k * (a + 1) + k] = df_of(rho.values[i], p.m, p.beta);
            if (on_pos[k]) {
                for (std::size_t l = 0; l < a; ++l) {
                    A[k * (a + 1) + l] -= p.chi * W.weight(i, act[l]);
                }
                A[k * (a + 1) + a] = 1.0;
            }
        }
        for (std::size_t l = 0; l < a; ++l) A[a * (a + 1) + l] = dx;
        rhs[a] = -massdef;
        if (!solve_dense(A, rhs, a + 1)) return false;

        // Backtracking on the global residual, clipping at zero.
        bool accepted = false;
        double scale = 1.0;
        for (int ls = 0; ls < 10; ++ls, scale *= 0.5) {
            Density trial(rho.grid);
            for (std::size_t k = 0; k < a; ++k) {
                trial.values[act[k]] =
                    std::max(0.0, rho.values[act[k]] + scale * rhs[k]);
            }
            const double cs_t = cs + scale * rhs[a];
            std::vector<double> conv_t = W.convolve(trial);
            const double res_t = stationarity_residual(trial, conv_t, cs_t, p);
            if (res_t < res || res_t <= res_tol) {
                rho = std::move(trial);
                cs = cs_t;
                conv = std::move(conv_t);
                res = res_t;
                accepted = true;
                break;
            }
        }
        if (!accepted) return false;
    }
    return false;
}

// Minimizer of the dilation surrogate A l^{m-1} + B l - C l^{1-2s}, the exact
// free energy of the continuum dilation of the current iterate.
double dilation_lambda(const EnergyBreakdown& e, const Params& p) {
    const double A = e.h_m, B = e.quad, C = -e.w_s;
    if (!(C > 0.0)) return 1.0;
    double lam = 1.0;
    for (int k = 0; k < 100; ++k) {
        const double g1 = (p.m - 1.0) * A * std::pow(lam, p.m - 2.0) + B -
                          (1.0 - 2.0 * p.s) * C * std::pow(lam, -2.0 * p.s);
        const double g2 =
            (p.m - 1.0) * (p.m - 2.0) * A * std::pow(lam, p.m - 3.0) +
            2.0 * p.s * (1.0 - 2.0 * p.s) * C * std::pow(lam, -2.0 * p.s - 1.0);
        const double step = g1 / g2;
        lam -= step;
        if (!(lam > 0.0)) return 1.0;
        if (std::fabs(step) <= 1e-15 * lam) break;
    }
    return lam;
}

// Projection onto {rho >= 0, mass = M} in the plain l2 geometry.
void project_mass_simplex(std::vector<double>& y, double dx, double M) {
    double lo = -1e308, hi = 0.0;
    for (double v : y) hi = std::max(hi, v);
    lo = hi - M / dx - 1.0;
    for (int it = 0; it < 200; ++it) {
        const double nu = 0.5 * (lo + hi);
        double mass = 0.0;
        for (double v : y) mass += std::max(v - nu, 0.0);
        if (mass * dx > M) lo = nu; else hi = nu;
    }
    const double nu = 0.5 * (lo + hi);
    for (double& v : y) v = std::max(v - nu, 0.0);
}

// Projected gradient descent on the discrete free energy with a periodic
// dilation line search. The stationarity system alone is nearly degenerate
// for small s (many non-minimizing near-solutions); descending the energy
// selects the minimizing one.
void descend_energy(SteadyState& st, const Params& p, const KernelWeights& W,
                    std::size_t max_iter) {
    const Grid& g = st.rho.grid;
    const double dx = g.dx;
    std::vector<double> conv = W.convolve(st.rho);
    double F = free_energy(st.rho, p, conv).total;
    double t = 1e-2;
    double window_best = F;
    std::size_t since_check = 0;
    for (std::size_t it = 0; it < max_iter; ++it) {
        std::vector<double> y(st.rho.size());
        for (std::size_t i = 0; i < y.size(); ++i) {
            const double grad = f_of(st.rho.values[i], p.m, p.beta) -
                                p.chi * conv[i];
            y[i] = st.rho.values[i] - t * grad;
        }
        project_mass_simplex(y, dx, p.mass);
        Density trial(g, std::move(y));
        std::vector<double> conv_t = W.convolve(trial);
        const double Ft = free_energy(trial, p, conv_t).total;
        if (Ft <= F) {
            st.rho = std::move(trial);
            conv = std::move(conv_t);
            F = Ft;
            t *= 1.3;
        } else {
            t *= 0.5;
            if (t < 1e-14) break;
        }
        if (it % 100 == 99) {
            const double lam = dilation_lambda(free_energy(st.rho, p, conv), p);
            if (std::fabs(lam - 1.0) > 1e-13) {
                try {
                    Density d = dilate(st.rho, lam);
                    std::vector<double> conv_d = W.convolve(d);
                    const double Fd = free_energy(d, p, conv_d).total;
                    if (Fd < F) {
                        st.rho = std::move(d);
                        conv = std::move(conv_d);
                        F = Fd;
                    }
                } catch (const std::runtime_error&) {
                }
            }
        }
        if (++since_check >= 300) {
            if (window_best - F <= 1e-14 * std::fabs(F)) break;
            window_best = F;
            since_check = 0;
        }
        st.iterations += 1;
    }
}

} // namespace

SteadyState fixed_point_solve(const Params& p, const Density& init,
                              const KernelWeights& W, const SteadyOptions& opt) {
    p.validate();
    if (!(init.grid == W.grid())) {
        throw std::invalid_argument("fixed_point_solve: grid mismatch");
    }
    SteadyState st;
    st.rho = normalize_to_class(init, p.mass);
    const double init_sup = sup_norm(st.rho);
    double omega = opt.damping;
    double prev_residual = std::numeric_limits<double>::infinity();

    std::vector<double> conv = W.convolve(st.rho);
    if (p.beta < 0.5 * p.chi) {
        // Idempotence: accept an input already meeting the convergence gates
        // so a restart from a converged state is a no-op.
        const double cs0 = multiplier(st.rho, p, conv);
        st.residual = stationarity_residual(st.rho, conv, cs0, p);
        const double lam0 = dilation_lambda(free_energy(st.rho, p, conv), p);
        if (st.residual <= 5e-3 * std::max(1.0, std::fabs(cs0)) &&
            std::fabs(lam0 - 1.0) <= 5e-4) {
            st.converged = true;
            st.c_s = cs0;
            st.energy = free_energy(st.rho, p, conv);
            const double alt = multiplier_alt(st.rho, p);
            st.cs_consistency = std::fabs(st.c_s - alt);
            const double lmm = std::pow(lp_norm(st.rho, p.m), p.m);
            const double l22 = std::pow(lp_norm(st.rho, 2.0), 2.0);
            st.virial_residual = std::fabs(
                lmm + p.beta * l22 - (1.0 - 2.0 * p.s) * (-st.energy.w_s));
            return st;
        }
    }
    const double dx = st.rho.dx();
    // Fills tilde = f^{-1}((chi K*rho - cs)_+) and returns its mass.
    const auto rebuild = [&](Density& tilde, double cs) {
        double mass = 0.0;
        for (std::size_t i = 0; i < tilde.size(); ++i) {
            const double rhs = p.chi * conv[i] - cs;
            tilde.values[i] = rhs > 0.0 ? f_inverse(rhs, p.m, p.beta) : 0.0;
            mass += tilde.values[i];
        }
        return mass * dx;
    };
    for (std::size_t it = 0; it < opt.max_iter; ++it) {
        // Multiplier matching the mass constraint exactly; the energy-based
        // formula seeds the root find. Mass is strictly decreasing in cs, and
        // a pure rescale cannot repair it, so matching here is what rules out
        // spurious rescaled fixed points.
        double cs = multiplier(st.rho, p, conv);
        Density tilde(st.rho.grid);
        double mass = rebuild(tilde, cs);
        if (mass > 0.0) {
            double lo = cs, hi = cs, mlo = mass, mhi = mass;
            while (mlo < p.mass) {
                lo -= std::max(1.0, std::fabs(lo));
                mlo = rebuild(tilde, lo);
            }
            while (mhi > p.mass) {
                hi += std::max(1.0, std::fabs(hi));
                mhi = rebuild(tilde, hi);
            }
            for (int k = 0; k < 200 && hi - lo > 1e-14 * (1.0 + std::fabs(cs));
                 ++k) {
                // Newton step on mass(cs), bisection fallback.
                double slope = 0.0;
                for (std::size_t i = 0; i < tilde.size(); ++i) {
                    const double t = tilde.values[i];
                    if (t > 0.0) {
                        slope -= 1.0 / (p.m * std::pow(t, p.m - 2.0) +
                                        2.0 * p.beta);
                    }
                }
                slope *= dx;
                double next = cs - (mass - p.mass) / slope;
                if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
                cs = next;
                mass = rebuild(tilde, cs);
                if (mass > p.mass) lo = cs; else hi = cs;
                if (std::fabs(mass - p.mass) <= 1e-13 * p.mass) break;
            }
        }
        if (!(mass > 0.0) || sup_norm(tilde) < 1e-12 * init_sup) {
            st.collapsed = true;
            st.iterations = it;
            break;
        }
        double residual = 0.0;
        Density next(st.rho.grid);
        for (std::size_t i = 0; i < next.size(); ++i) {
            next.values[i] =
                (1.0 - omega) * st.rho.values[i] + omega * tilde.values[i];
            residual = std::max(residual,
                                std::fabs(tilde.values[i] - st.rho.values[i]));
        }
        if (residual > prev_residual && omega > 0.05) omega *= 0.5;
        prev_residual = residual;
        st.rho = std::move(next);
        conv = W.convolve(st.rho);
        st.residual = residual;
        st.iterations = it + 1;
        if (residual <= opt.tol) {
            st.converged = true;
            break;
        }
        // The map is nearly neutral along global shape modes for small s, so
        // a small update does not mean a small distance to the fixed point.
        // Hand over to the descent and Newton stages once in their basin.
        if (residual <= 1e-6 || it + 1 >= 2000) break;
    }
    if (!st.collapsed && p.beta < 0.5 * p.chi) {
        // Aggregation-dominated regime: a minimizer exists. Descend the
        // energy to select it, then alternate the Newton stationarity solve
        // with dilation re-centering until both are stationary.
        descend_energy(st, p, W, 30000);
        conv = W.convolve(st.rho);
        // The exact stationarity solution and the dilation-balanced state
        // differ by an irreducible discretization gap, so the alternation
        // cycles once that gap is reached; detect the cycle and keep the
        // dilation-balanced member, whose scaling identities are exact.
        double prev_gap = std::numeric_limits<double>::infinity();
        for (int round = 0; round < 8; ++round) {
            if (!newton_polish(st, p, W, conv, p.mass)) break;
            conv = W.convolve(st.rho);
            const double lam = dilation_lambda(free_energy(st.rho, p, conv), p);
            const double gap = std::fabs(lam - 1.0);
            if (gap <= 1e-6) break;
            try {
                st.rho = dilate(st.rho, lam);
                conv = W.convolve(st.rho);
            } catch (const std::runtime_error&) {
                break;  // support cannot be rescaled further
            }
            if (gap >= 0.9 * prev_gap) break;
            prev_gap = gap;
        }
        conv = W.convolve(st.rho);
        // Stationarity holds up to the discretization gap at the support
        // edge; the dilation balance holds up to the resample noise floor.
        const double cs_now = multiplier(st.rho, p, conv);
        st.residual = stationarity_residual(st.rho, conv, cs_now, p);
        const double lam = dilation_lambda(free_energy(st.rho, p, conv), p);
        if (st.residual <= 5e-3 * std::max(1.0, std::fabs(cs_now)) &&
            std::fabs(lam - 1.0) <= 5e-4) {
            st.converged = true;
        }
    }
    if (!st.collapsed && p.beta >= 0.5 * p.chi) {
        if (newton_polish(st, p, W, conv, p.mass)) {
            st.converged = true;
            conv = W.convolve(st.rho);
        } else if (conv = W.convolve(st.rho); !st.converged) {
            // Fall back to the plain damped iteration.
            for (std::size_t it = st.iterations; it < opt.max_iter; ++it) {
                const double prev_cs = multiplier(st.rho, p, conv);
                Density tilde(st.rho.grid);
                double mass = rebuild(tilde, prev_cs);
                if (!(mass > 0.0)) { st.collapsed = true; break; }
                tilde = normalize_to_class(tilde, p.mass);
                double residual = 0.0;
                for (std::size_t i = 0; i < tilde.size(); ++i) {
                    const double nv = (1.0 - omega) * st.rho.values[i] +
                                      omega * tilde.values[i];
                    residual = std::max(
                        residual, std::fabs(tilde.values[i] - st.rho.values[i]));
                    st.rho.values[i] = nv;
                }
                conv = W.convolve(st.rho);
                st.residual = residual;
                st.iterations = it + 1;
                if (residual <= opt.tol) { st.converged = true; break; }
            }
        }
    }

    st.c_s = multiplier(st.rho, p, conv);
    st.energy = free_energy(st.rho, p, conv);
    const double cs_alt = multiplier_alt(st.rho, p);
    st.cs_consistency = std::fabs(st.c_s - cs_alt);
    const double lm = std::pow(lp_norm(st.rho, p.m), p.m);
    const double l2 = std::pow(lp_norm(st.rho, 2.0), 2.0);
    st.virial_residual =
        std::fabs(lm + p.beta * l2 - (1.0 - 2.0 * p.s) * (-st.energy.w_s));
    return st;
}

Density limit_profile(const Params& p, const Grid& grid) {
    const double gamma = 0.5 * (p.chi - 2.0 * p.beta);
    if (!(gamma > 0.0)) {
        throw std::domain_error("limit_profile: requires beta < chi/2");
    }
    const double height = std::pow(gamma, 1.0 / (p.m - 2.0));
    const double radius = 0.5 * p.mass * std::pow(gamma, -1.0 / (p.m - 2.0));
    if (radius > grid.half_width) {
        throw std::runtime_error("limit_profile: support exceeds the grid");
    }
    return box_density(grid, height, -radius, radius);
}

BallCoefficients ball_coefficients(const Params& p) {
    using special::gamma;
    BallCoefficients c;
    c.c1 = std::pow(p.mass, p.m) * std::pow(2.0, 1.0 - p.m) / (p.m - 1.0);
    c.c2 = 0.5 * p.beta * p.mass * p.mass;
    c.c3 = p.chi * p.mass * p.mass * gamma(p.s + 0.5) * gamma(0.5 - p.s) /
           (8.0 * std::sqrt(M_PI) * gamma(p.s + 1.0) * gamma(1.5 + p.s));
    return c;
}

double ball_energy(const Params& p, double radius) {
    const BallCoefficients c = ball_coefficients(p);
    return c.c1 * std::pow(radius, -(p.m - 1.0)) + c.c2 / radius -
           c.c3 * std::pow(radius, -(1.0 - 2.0 * p.s));
}

double ball_radius(const Params& p) {
    if (p.beta != 0.0) {
        throw std::domain_error(
            "ball_radius: closed form requires beta = 0; use ball_radius_general");
    }
    using special::gamma;
    const double omega1 = 2.0;  // unit-ball volume in 1D
    const double num = 2.0 * std::sqrt(M_PI) * std::pow(p.mass, p.m - 2.0) *
                       gamma(p.s + 1.0) * gamma(1.5 + p.s);
    const double den = p.chi * std::pow(omega1, p.m - 2.0) * gamma(p.s + 0.5) *
                       gamma(1.5 - p.s);
    return std::pow(num / den, 1.0 / (2.0 * p.s + p.m - 2.0));
}

double ball_radius_general(const Params& p) {
    const BallCoefficients c = ball_coefficients(p);
    const double alpha = p.m - 1.0;
    const double delta = 1.0 - 2.0 * p.s;
    const auto h = [&](double r) {
        return -alpha * c.c1 - c.c2 * std::pow(r, alpha - 1.0) +
               delta * c.c3 * std::pow(r, alpha - delta);
    };
    double lo = 1e-8, hi = 1.0;
    while (h(hi) < 0.0) {
        hi *= 2.0;
        if (hi > 1e12) throw std::runtime_error("ball_radius_general: no bracket");
    }
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (h(mid) < 0.0) lo = mid; else hi = mid;
    }
    return 0.5 * (lo + hi);
}

SteadyDiagnostics steady_diagnostics(const SteadyState& st, const Params& p,
                                     const KernelWeights& W) {
    SteadyDiagnostics d;
    const EnergyBreakdown e = free_energy(st.rho, p, W);
    const double lm = std::pow(lp_norm(st.rho, p.m), p.m);
    const double l2 = std::pow(lp_norm(st.rho, 2.0), 2.0);
    d.virial_scale = std::fabs(e.w_s);
    d.virial_residual = std::fabs(lm + p.beta * l2 - (1.0 - 2.0 * p.s) * (-e.w_s));
    const double f_closed = -((p.m - 2.0 + 2.0 * p.s) / (p.m - 1.0) * lm +
                              2.0 * p.s * p.beta * l2) /
                            (1.0 - 2.0 * p.s);
    d.energy_identity_gap = std::fabs(e.total - f_closed);
    const double cs_alt = multiplier_alt(st.rho, p);
    const double cs = multiplier(st.rho, p, W);
    d.cs_consistency = std::fabs(cs - cs_alt) / std::max(1e-300, std::fabs(cs));
    d.height = sup_norm(st.rho);
    const double thresh = 1e-10 * std::max(1.0, d.height);
    for (std::size_t i = 0; i < st.rho.size(); ++i) {
        if (st.rho.values[i] > thresh) {
            d.support_radius = std::max(
                d.support_radius, std::fabs(st.rho.grid.center(i)) + 0.5 * st.rho.dx());
        }
    }
    return d;
}

} // namespace agdiff
