#ifndef AGDIFF_JKO_HPP
#define AGDIFF_JKO_HPP

#include <cstddef>
#include <vector>

#include "agdiff/grid.hpp"

namespace agdiff {

/// Midpoint quantiles q_k = Q(M (k+1/2)/K), k = 0..K-1, strictly increasing.
/// Each point carries mass M/K; in this representation the 1D Wasserstein
/// distance is a plain weighted l2 distance.
struct Quantile {
    double mass = 0.0;
    std::vector<double> q;

    std::size_t size() const { return q.size(); }
};

Quantile density_to_quantile(const Density& rho, std::size_t K);

/// Reconstruction spreading each point's mass uniformly over its quantile
/// gap, matching the piecewise representation of quantile_free_energy.
Density quantile_to_density(const Quantile& Q, const Grid& grid);

/// W2 distance between equal-mass quantile vectors of equal length.
double w2_quantile(const Quantile& a, const Quantile& b);

/// W2 distance between densities via K-point quantile sampling.
double w2_distance(const Density& a, const Density& b, std::size_t K = 4096);

double second_moment(const Quantile& Q);

/// Free energy of the piecewise particle representation: gaps D_k carry
/// uniform density (M/K)/D_k; the interaction self term models each point as
/// a uniform blob over its central gap.
double quantile_free_energy(const std::vector<double>& q, const Params& p);

/// Objective of one minimizing-movement step,
/// G(q) = F(q) + (M/(2 tau K)) sum (q_k - prev_k)^2, and its gradient.
double jko_objective(const std::vector<double>& q,
                     const std::vector<double>& prev, const Params& p,
                     double tau);
std::vector<double> jko_gradient(const std::vector<double>& q,
                                 const std::vector<double>& prev,
                                 const Params& p, double tau);

/// Euclidean projection onto {q : q_{k+1} - q_k >= min_gap} by pool-adjacent-
/// violators on the shifted coordinates.
std::vector<double> project_monotone(const std::vector<double>& q,
                                     double min_gap);

struct JkoOptions {
    std::size_t max_iter = 2000;
    double grad_tol = 1e-9;   // sup-norm of the projected step, scaled by 1/t
    double min_gap = 1e-12;
};

struct JkoStepResult {
    Quantile q;
    double objective = 0.0;    // F + W2^2/(2 tau) at the accepted point
    double free_energy = 0.0;
    double w2_inc = 0.0;
    std::size_t iterations = 0;
    double grad_norm = 0.0;
    bool converged = false;
};

/// Projected gradient with Barzilai-Borwein steps and a monotone line search.
/// Descent is enforced against the start value F(prev), so every accepted
/// step satisfies F(q) + W2^2/(2 tau) <= F(prev).
JkoStepResult jko_step(const Quantile& prev, const Params& p, double tau,
                       const JkoOptions& opt = {});

struct JkoRecord {
    std::size_t k = 0;
    double free_energy = 0.0;
    double w2_inc = 0.0;
    double second_moment = 0.0;
    double basic1_lhs = 0.0;  // F(rho_k) + sum_{j<=k} W2_j^2 / (2 tau)
    double basic1_rhs = 0.0;  // F(rho_0)
};

struct JkoRun {
    std::vector<JkoRecord> records;
    std::vector<Quantile> states;  // including the initial one
};

JkoRun jko_run(const Quantile& init, const Params& p, double tau,
               std::size_t steps, const JkoOptions& opt = {});

} // namespace agdiff

#endif
