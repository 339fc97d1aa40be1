#ifndef AGDIFF_RIESZ_HPP
#define AGDIFF_RIESZ_HPP

#include <functional>
#include <memory>
#include <vector>

#include "agdiff/grid.hpp"

namespace agdiff {

/// Smooth test function with analytic first and second derivatives.
struct TestFunction {
    std::function<double(double)> f;
    std::function<double(double)> df;
    std::function<double(double)> d2f;
};

/// Cell-integrated Riesz kernel weights for one (grid, s, eps) triple.
/// The weights are Toeplitz on a uniform grid: w(i,j) depends only on |i-j|,
/// so only the first row is stored. w(i,j) = c_{1,s} int_{cell j} |x_i - y|^{2s-1} dy,
/// evaluated from the exact antiderivative (the diagonal cell included; the
/// singularity is integrable for s > 0). If eps > 0 the kernel is replaced by
/// c_{1,s} eps^{2s-1} on |r| <= eps.
class KernelWeights {
  public:
    KernelWeights(const Grid& grid, double s, double eps = 0.0);
    ~KernelWeights();
    KernelWeights(const KernelWeights&) = delete;
    KernelWeights& operator=(const KernelWeights&) = delete;
    KernelWeights(KernelWeights&&) noexcept;
    KernelWeights& operator=(KernelWeights&&) noexcept;

    const Grid& grid() const { return grid_; }
    double s() const { return s_; }
    double eps() const { return eps_; }
    double c_ds() const { return c_ds_; }

    double weight(std::size_t i, std::size_t j) const {
        return row_[i > j ? i - j : j - i];
    }
    const std::vector<double>& first_row() const { return row_; }

    /// (K_s * rho)(x_i) = sum_j w(i,j) rho_j, exact for piecewise-constant rho.
    /// Uses an FFT-accelerated Toeplitz product on large grids; identical to
    /// the direct row sum up to roundoff.
    std::vector<double> convolve(const Density& rho) const;
    std::vector<double> convolve_direct(const Density& rho) const;

  private:
    Grid grid_;
    double s_ = 0.0;
    double eps_ = 0.0;
    double c_ds_ = 0.0;
    std::vector<double> row_;
    struct FftPlan;
    mutable std::unique_ptr<FftPlan> fft_;
};

KernelWeights build_weights(const Grid& grid, double s, double eps = 0.0);

/// W_s[rho] = -(chi/2) sum_{ij} w_{ij} rho_i rho_j dx.
double interaction_energy(const Density& rho, const KernelWeights& W, double chi);
double interaction_energy(const Density& rho, const std::vector<double>& k_conv_rho,
                          double chi);

/// I_s(rho; phi) = (d-2s) c_{d,s} double sum of
/// (phi'(x)-phi'(y))(x-y)|x-y|^{2s-3} rho(x) rho(y), with the diagonal block
/// integrated exactly against the second-order Taylor model of phi'.
double symmetric_form(const Density& rho, const TestFunction& phi,
                      const KernelWeights& W);

/// Alternative route through the identity
/// I_s(rho; phi) = -2 int rho phi' (K_s * rho)' dx, discretized with central
/// differences of the convolved potential.
double symmetric_form_via_potential(const Density& rho, const TestFunction& phi,
                                    const KernelWeights& W);

} // namespace agdiff

#endif
