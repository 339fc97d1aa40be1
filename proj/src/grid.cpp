#include "agdiff/grid.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace agdiff {

Grid::Grid(double half_width_, std::size_t n_cells_)
    : half_width(half_width_), n_cells(n_cells_) {
    if (!(half_width > 0.0)) {
        throw std::invalid_argument("Grid: half_width must be positive");
    }
    if (n_cells == 0 || n_cells % 2 != 0) {
        throw std::invalid_argument("Grid: n_cells must be even and positive");
    }
    dx = 2.0 * half_width / static_cast<double>(n_cells);
}

void Params::validate() const {
    if (!(m > 2.0)) throw std::invalid_argument("Params: m must exceed 2");
    if (!(beta >= 0.0)) throw std::invalid_argument("Params: beta must be >= 0");
    if (!(chi > 0.0)) throw std::invalid_argument("Params: chi must be positive");
    if (!(s > 0.0 && s < 0.5)) {
        throw std::invalid_argument("Params: s must lie in (0, 1/2)");
    }
    if (!(mass > 0.0)) throw std::invalid_argument("Params: mass must be positive");
}

Density::Density(const Grid& g, std::vector<double> v)
    : grid(g), values(std::move(v)) {
    if (values.size() != grid.n_cells) {
        throw std::invalid_argument("Density: value count does not match grid");
    }
}

Moments moments(const Density& rho) {
    Moments out;
    const double dx = rho.dx();
    double m0 = 0.0, m1 = 0.0, m2 = 0.0;
    for (std::size_t i = 0; i < rho.size(); ++i) {
        const double x = rho.grid.center(i);
        const double w = rho.values[i] * dx;
        m0 += w;
        m1 += x * w;
        m2 += x * x * w;
    }
    out.mass = m0;
    out.second_moment = m2;
    if (m0 == 0.0) {
        out.zero_mass = true;
        out.center_of_mass = 0.0;
    } else {
        out.center_of_mass = m1 / m0;
    }
    return out;
}

double lp_norm(const Density& rho, double p) {
    if (!(p >= 1.0)) throw std::invalid_argument("lp_norm: p must be >= 1");
    double acc = 0.0;
    for (double v : rho.values) acc += std::pow(std::fabs(v), p);
    return std::pow(acc * rho.dx(), 1.0 / p);
}

double sup_norm(const Density& rho) {
    double m = 0.0;
    for (double v : rho.values) m = std::max(m, std::fabs(v));
    return m;
}

namespace {

// Integral of the piecewise-constant density over [a, b] (clamped to the
// domain; the density is zero outside).
double integrate_pc(const Density& rho, double a, double b) {
    const Grid& g = rho.grid;
    const double L = g.half_width;
    a = std::max(a, -L);
    b = std::min(b, L);
    if (b <= a) return 0.0;
    const double dx = g.dx;
    const auto cell_of = [&](double x) {
        auto i = static_cast<long>(std::floor((x + L) / dx));
        return std::clamp<long>(i, 0, static_cast<long>(g.n_cells) - 1);
    };
    const long ia = cell_of(a), ib = cell_of(b);
    if (ia == ib) return rho.values[static_cast<std::size_t>(ia)] * (b - a);
    double acc = rho.values[static_cast<std::size_t>(ia)] *
                 (g.left_edge(static_cast<std::size_t>(ia) + 1) - a);
    for (long i = ia + 1; i < ib; ++i) {
        acc += rho.values[static_cast<std::size_t>(i)] * dx;
    }
    acc += rho.values[static_cast<std::size_t>(ib)] *
           (b - g.left_edge(static_cast<std::size_t>(ib)));
    return acc;
}

// Resample x -> rho(lambda x) scaled by `amp` onto the same grid.
Density resample_scaled(const Density& rho, double lambda, double amp) {
    const Grid& g = rho.grid;
    Density out(g);
    for (std::size_t i = 0; i < g.n_cells; ++i) {
        const double a = lambda * g.left_edge(i);
        const double b = lambda * g.left_edge(i + 1);
        out.values[i] = amp * integrate_pc(rho, a, b) / (lambda * g.dx);
    }
    return out;
}

} // namespace

Density dilate(const Density& rho, double lambda) {
    if (!(lambda > 0.0)) throw std::invalid_argument("dilate: lambda must be positive");
    // rho_lambda(x) = lambda rho(lambda x): cell average is
    // (1/dx) int_a^b lambda rho(lambda x) dx = (1/dx) int_{la}^{lb} rho.
    Density out = resample_scaled(rho, lambda, lambda);
    // Mass escaping past the domain boundary signals support overflow.
    const double m_in = moments(rho).mass;
    if (std::fabs(moments(out).mass - m_in) > 1e-10 * std::max(m_in, 1e-300)) {
        throw std::runtime_error("dilate: dilated support exceeds the grid");
    }
    return out;
}

Density normalize_to_class(const Density& rho, double M) {
    if (!(M > 0.0)) throw std::invalid_argument("normalize_to_class: M must be positive");
    const Moments mo = moments(rho);
    if (mo.zero_mass || mo.mass <= 0.0) {
        throw std::runtime_error("normalize_to_class: zero-mass input");
    }
    const double lambda = mo.mass / M;
    Density scaled = rho;
    if (lambda != 1.0) {
        // rho(lambda x) has mass mass/lambda = M.
        scaled = resample_scaled(rho, lambda, 1.0);
        if (std::fabs(moments(scaled).mass - M) > 1e-10 * M) {
            throw std::runtime_error("normalize_to_class: rescaled support exceeds the grid");
        }
    }
    // Integer-cell shift toward zero center of mass.
    const Moments ms = moments(scaled);
    const auto shift = static_cast<long>(std::llround(ms.center_of_mass / scaled.dx()));
    if (shift != 0) {
        Density shifted(scaled.grid);
        const long n = static_cast<long>(scaled.size());
        for (long i = 0; i < n; ++i) {
            const long j = i + shift;
            shifted.values[static_cast<std::size_t>(i)] =
                (j >= 0 && j < n) ? scaled.values[static_cast<std::size_t>(j)] : 0.0;
        }
        scaled = std::move(shifted);
    }
    return scaled;
}

namespace {

// Bump mollifier phi(x) = C exp(-1/(1-x^2)) on (-1,1), unit mass.
// Cumulative integral tabulated once on a fine mesh.
struct BumpTable {
    static constexpr int kN = 20000;
    std::vector<double> cdf; // cdf[j] = int_{-1}^{-1+j*h} phi
    double h;

    BumpTable() : cdf(kN + 1, 0.0), h(2.0 / kN) {
        auto raw = [](double x) {
            const double t = 1.0 - x * x;
            return t > 0.0 ? std::exp(-1.0 / t) : 0.0;
        };
        double acc = 0.0;
        for (int j = 0; j < kN; ++j) {
            const double a = -1.0 + j * h;
            // Simpson on each subinterval.
            acc += h / 6.0 * (raw(a) + 4.0 * raw(a + 0.5 * h) + raw(a + h));
            cdf[j + 1] = acc;
        }
        const double norm = acc;
        for (auto& c : cdf) c /= norm;
    }

    // int_{-1}^{x} phi
    double eval(double x) const {
        if (x <= -1.0) return 0.0;
        if (x >= 1.0) return 1.0;
        const double u = (x + 1.0) / h;
        const auto j = static_cast<int>(u);
        const double w = u - j;
        return cdf[j] * (1.0 - w) + cdf[j + 1] * w;
    }
};

const BumpTable& bump_table() {
    static const BumpTable table;
    return table;
}

} // namespace

Density mollified_counterexample(const Grid& grid, double eps, double alpha) {
    if (!(eps > 0.0)) throw std::invalid_argument("mollified_counterexample: eps must be positive");
    if (!(alpha > 3.0)) {
        throw std::invalid_argument("mollified_counterexample: requires alpha > d + 2 = 3");
    }
    if (1.0 + eps > grid.half_width) {
        throw std::invalid_argument("mollified_counterexample: support exceeds the grid");
    }
    const BumpTable& tab = bump_table();
    const double amp = std::pow(eps, alpha);
    Density out(grid);
    for (std::size_t i = 0; i < grid.n_cells; ++i) {
        // Spike phi_eps by exact cell averages of the tabulated CDF.
        const double a = grid.left_edge(i), b = grid.left_edge(i + 1);
        const double spike = (tab.eval(b / eps) - tab.eval(a / eps)) / grid.dx;
        // Plateau (phi_eps * 1_{[-1,1]})(x) sampled at the cell center.
        const double x = grid.center(i);
        const double plateau = tab.eval((x + 1.0) / eps) - tab.eval((x - 1.0) / eps);
        out.values[i] = spike + amp * plateau;
    }
    return out;
}

Density density_from_antiderivative(const Grid& grid,
                                    double (*F)(double, const void*),
                                    const void* ctx) {
    Density out(grid);
    for (std::size_t i = 0; i < grid.n_cells; ++i) {
        out.values[i] =
            (F(grid.left_edge(i + 1), ctx) - F(grid.left_edge(i), ctx)) / grid.dx;
    }
    return out;
}

Density gaussian_density(const Grid& grid, double mass, double center, double sigma) {
    Density out(grid);
    const double inv = 1.0 / (std::sqrt(2.0) * sigma);
    for (std::size_t i = 0; i < grid.n_cells; ++i) {
        const double a = grid.left_edge(i), b = grid.left_edge(i + 1);
        out.values[i] = mass * 0.5 *
                        (std::erf((b - center) * inv) - std::erf((a - center) * inv)) /
                        grid.dx;
    }
    return out;
}

Density box_density(const Grid& grid, double height, double a, double b) {
    Density out(grid);
    for (std::size_t i = 0; i < grid.n_cells; ++i) {
        const double lo = std::max(a, grid.left_edge(i));
        const double hi = std::min(b, grid.left_edge(i + 1));
        out.values[i] = hi > lo ? height * (hi - lo) / grid.dx : 0.0;
    }
    return out;
}

void write_density_csv(const Density& rho, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << "x,rho\n";
    out.precision(17);
    for (std::size_t i = 0; i < rho.size(); ++i) {
        out << rho.grid.center(i) << ',' << rho.values[i] << '\n';
    }
}

Density read_density_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string line;
    std::getline(in, line); // header
    std::vector<double> xs, vs;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        double x, v;
        char comma;
        if (ss >> x >> comma >> v) {
            xs.push_back(x);
            vs.push_back(v);
        }
    }
    if (xs.size() < 2) throw std::runtime_error("density csv too short: " + path);
    const double dx = xs[1] - xs[0];
    const double L = -(xs.front() - 0.5 * dx);
    Grid g(L, xs.size());
    return Density(g, std::move(vs));
}

} // namespace agdiff
