#ifndef AGDIFF_GRID_HPP
#define AGDIFF_GRID_HPP

#include <cstddef>
#include <string>
#include <vector>

namespace agdiff {

/// Uniform symmetric 1D mesh on [-L, L] with an even number of cells.
struct Grid {
    double half_width = 0.0;
    std::size_t n_cells = 0;
    double dx = 0.0;

    Grid() = default;
    Grid(double half_width, std::size_t n_cells);

    double center(std::size_t i) const {
        return -half_width + (static_cast<double>(i) + 0.5) * dx;
    }
    double left_edge(std::size_t i) const {
        return -half_width + static_cast<double>(i) * dx;
    }

    bool operator==(const Grid& other) const {
        return half_width == other.half_width && n_cells == other.n_cells;
    }
};

/// Model parameters. d is fixed to 1 here.
struct Params {
    double m = 3.0;     // diffusion exponent, m > 2
    double beta = 0.0;  // quadratic diffusion coefficient, beta >= 0
    double chi = 1.0;   // aggregation strength, chi > 0
    double s = 0.25;    // kernel order, 0 < s < 1/2
    double mass = 1.0;  // total mass M > 0

    void validate() const;
};

/// Nonnegative cell-averaged density on a Grid.
struct Density {
    Grid grid;
    std::vector<double> values;

    Density() = default;
    Density(const Grid& g, std::vector<double> v);
    explicit Density(const Grid& g) : grid(g), values(g.n_cells, 0.0) {}

    double dx() const { return grid.dx; }
    std::size_t size() const { return values.size(); }
};

struct Moments {
    double mass = 0.0;
    double center_of_mass = 0.0;
    double second_moment = 0.0;
    bool zero_mass = false;
};

Moments moments(const Density& rho);

/// (sum |rho_i|^p dx)^(1/p), p >= 1.
double lp_norm(const Density& rho, double p);

double sup_norm(const Density& rho);

/// Mass-invariant dilation rho_lambda(x) = lambda * rho(lambda x), resampled
/// by exact integration of the piecewise-constant source over target cells.
/// Throws if the dilated support does not fit in the grid.
Density dilate(const Density& rho, double lambda);

/// Pure spatial rescaling x -> lambda x with lambda = mass(rho)/M, so the
/// result has mass M, then an integer-cell shift to re-center the mass.
Density normalize_to_class(const Density& rho, double M);

/// Initial datum phi_eps(x) + eps^alpha (phi_eps * 1_{B(0,1)})(x) with phi
/// the unit-mass bump mollifier supported in [-1, 1]. Requires alpha > 3.
Density mollified_counterexample(const Grid& grid, double eps, double alpha);

/// Density with exact cell averages of f given its antiderivative F.
Density density_from_antiderivative(const Grid& grid, double (*F)(double, const void*), const void* ctx);

/// Gaussian of given mass/center/width, sampled by exact cell averages (erf).
Density gaussian_density(const Grid& grid, double mass, double center, double sigma);

/// Indicator-type density height * 1_{[a,b]} with exact partial-cell averages.
Density box_density(const Grid& grid, double height, double a, double b);

void write_density_csv(const Density& rho, const std::string& path);
Density read_density_csv(const std::string& path);

} // namespace agdiff

#endif
