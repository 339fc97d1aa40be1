#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "agdiff/grid.hpp"
#include "agdiff/jko.hpp"
#include "agdiff/steady.hpp"

using namespace agdiff;

TEST_CASE("quantile round trip") {
    Grid g(4.0, 1024);
    Density rho = gaussian_density(g, 1.0, 0.3, 0.5);
    const std::size_t K = 512;
    Quantile Q = density_to_quantile(rho, K);
    CHECK(Q.mass == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::is_sorted(Q.q.begin(), Q.q.end()));
    Density back = quantile_to_density(Q, g);
    CHECK(moments(back).mass == doctest::Approx(1.0).epsilon(1e-12));
    double l1 = 0.0;
    for (std::size_t i = 0; i < g.n_cells; ++i) {
        l1 += std::fabs(back.values[i] - rho.values[i]) * g.dx;
    }
    CHECK(l1 <= 2.0 * (1.0 / K + sup_norm(rho) * g.dx));
}

TEST_CASE("w2 analytic examples") {
    Grid g(4.0, 4096);
    // Pure translation by 1.
    Density a = box_density(g, 1.0, 0.0, 1.0);
    Density b = box_density(g, 1.0, 1.0, 2.0);
    CHECK(w2_distance(a, b) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(w2_distance(a, a) == doctest::Approx(0.0).epsilon(1e-12));
    // Dilation by 2: monotone map T(x) = 2x, squared cost 1/3.
    Density c = box_density(g, 0.5, -1.0, 1.0);
    Density d = box_density(g, 0.25, -2.0, 2.0);
    CHECK(w2_distance(c, d) ==
          doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-6));

    Density heavy = box_density(g, 1.0, -1.0, 1.0);
    CHECK_THROWS_AS(w2_distance(a, heavy), std::invalid_argument);
}

TEST_CASE("w2 triangle inequality on random triples") {
    Grid g(4.0, 512);
    std::mt19937 rng(321);
    std::uniform_real_distribution<double> cen(-1.0, 1.0);
    std::uniform_real_distribution<double> wid(0.2, 0.8);
    const auto unit_bump = [&](double c0, double w0) {
        Density d = gaussian_density(g, 1.0, c0, w0);
        const double scale = 1.0 / moments(d).mass;
        for (auto& v : d.values) v *= scale;
        return d;
    };
    for (int trial = 0; trial < 20; ++trial) {
        Density a = unit_bump(cen(rng), wid(rng));
        Density b = unit_bump(cen(rng), wid(rng));
        Density c = unit_bump(cen(rng), wid(rng));
        const double ab = w2_distance(a, b), bc = w2_distance(b, c),
                     ac = w2_distance(a, c);
        CHECK(ac <= ab + bc + 1e-9);
    }
}

TEST_CASE("monotone projection") {
    const std::vector<double> sorted{0.0, 1.0, 2.0, 3.5};
    const std::vector<double> same = project_monotone(sorted, 0.0);
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        CHECK(same[i] == doctest::Approx(sorted[i]).epsilon(1e-15));
    }
    const std::vector<double> viol{1.0, 0.0, 2.0, 1.5};
    const std::vector<double> fixed = project_monotone(viol, 0.0);
    CHECK(fixed[0] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(fixed[1] == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(fixed[2] == doctest::Approx(1.75).epsilon(1e-14));
    CHECK(fixed[3] == doctest::Approx(1.75).epsilon(1e-14));
    const std::vector<double> gapped = project_monotone(viol, 0.1);
    for (std::size_t i = 0; i + 1 < gapped.size(); ++i) {
        CHECK(gapped[i + 1] - gapped[i] >= 0.1 - 1e-14);
    }
    // Projection is idempotent.
    const std::vector<double> again = project_monotone(fixed, 0.0);
    for (std::size_t i = 0; i < fixed.size(); ++i) {
        CHECK(again[i] == doctest::Approx(fixed[i]).epsilon(1e-14));
    }
}

TEST_CASE("gradient matches central finite differences") {
    Params p{3.0, 0.2, 1.0, 0.25, 1.0};
    const std::size_t K = 40;
    const double tau = 1e-2;
    std::mt19937 rng(9090);
    std::uniform_real_distribution<double> jitter(0.0, 0.02);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> q(K), prev(K);
        for (std::size_t k = 0; k < K; ++k) {
            const double base = -1.0 + 2.0 * (static_cast<double>(k) + 0.5) / K;
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
            const double scale = std::max(1.0, std::fabs(grad[k]));
            CHECK(std::fabs(grad[k] - fd) / scale <= 1e-5);
        }
    }
}

TEST_CASE("single jko step decreases the energy") {
    Grid g(4.0, 1024);
    Params p{3.0, 0.0, 1.0, 0.25, 1.0};
    Quantile q0 = density_to_quantile(limit_profile(p, g), 128);
    const double f0 = quantile_free_energy(q0.q, p);
    JkoStepResult st = jko_step(q0, p, 1e-3);
    CHECK(st.free_energy < f0);
    CHECK(st.free_energy + st.w2_inc * st.w2_inc / (2.0 * 1e-3) <= f0 + 1e-8);
    CHECK(st.q.mass == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(std::is_sorted(st.q.q.begin(), st.q.q.end()));
}

TEST_CASE("tiny tau pins the iterate") {
    Grid g(4.0, 1024);
    Params p{3.0, 0.2, 1.0, 0.25, 1.0};
    Quantile q0 = density_to_quantile(gaussian_density(g, 1.0, 0.0, 0.6), 96);
    JkoStepResult st = jko_step(q0, p, 1e-9);
    CHECK(st.w2_inc <= 1e-5);
}

TEST_CASE("jko run estimates") {
    Grid g(4.0, 1024);
    Params p{3.0, 0.2, 1.0, 0.25, 1.0};
    Quantile q0 = density_to_quantile(gaussian_density(g, 1.0, 0.0, 0.8), 96);

    JkoRun empty = jko_run(q0, p, 1e-3, 0);
    CHECK(empty.states.size() == 1);
    CHECK(empty.records.size() == 1);

    JkoRun run = jko_run(q0, p, 1e-3, 10);
    REQUIRE(run.records.size() == 11);
    for (std::size_t k = 1; k < run.records.size(); ++k) {
        // Telescoped estimate and per-step monotonicity.
        CHECK(run.records[k].basic1_lhs <= run.records[k].basic1_rhs + 1e-8);
        CHECK(run.records[k].free_energy <=
              run.records[k - 1].free_energy + 1e-8);
    }
    // Center of mass preserved for even data and even energy.
    double com = 0.0;
    for (double x : run.states.back().q) com += x;
    com /= static_cast<double>(run.states.back().size());
    CHECK(std::fabs(com) <= 1e-8);
}
