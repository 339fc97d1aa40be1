#include "agdiff/riesz.hpp"

#include <cmath>
#include <complex>
#include <mutex>
#include <stdexcept>

#include <fftw3.h>

#include "agdiff/special.hpp"

namespace agdiff {

namespace {

// Antiderivative of the (possibly eps-truncated) 1D kernel |u|^{2s-1},
// as a signed function of u. For eps > 0 the kernel equals eps^{2s-1} on
// |u| <= eps.
double kernel_antiderivative(double u, double s, double eps) {
    const double a = std::fabs(u);
    double g;
    if (a <= eps) {
        g = std::pow(eps, 2.0 * s - 1.0) * a;
    } else {
        g = (std::pow(a, 2.0 * s) - std::pow(eps, 2.0 * s)) / (2.0 * s) +
            (eps > 0.0 ? std::pow(eps, 2.0 * s) : 0.0);
    }
    return u >= 0.0 ? g : -g;
}

// Even second antiderivative of the truncated kernel: J'' = kernel on u >= 0,
// J(0) = J'(0) = 0.
double kernel_antiderivative2(double u, double s, double eps) {
    const double a = std::fabs(u);
    const double p = 2.0 * s;
    if (eps == 0.0) {
        return std::pow(a, p + 1.0) / (p * (p + 1.0));
    }
    if (a <= eps) {
        return 0.5 * std::pow(eps, p - 1.0) * a * a;
    }
    const double ep = std::pow(eps, p);
    return 0.5 * ep * eps +
           (std::pow(a, p + 1.0) - ep * eps) / (p * (p + 1.0)) +
           (ep - ep / p) * (a - eps);
}

constexpr std::size_t kFftThreshold = 128;

} // namespace

struct KernelWeights::FftPlan {
    std::size_t padded = 0;
    fftw_plan forward = nullptr;
    fftw_plan backward = nullptr;
    std::vector<std::complex<double>> kernel_hat;

    ~FftPlan() {
        if (forward) fftw_destroy_plan(forward);
        if (backward) fftw_destroy_plan(backward);
    }
};

KernelWeights::KernelWeights(const Grid& grid, double s, double eps)
    : grid_(grid), s_(s), eps_(eps) {
    if (!(s > 0.0 && s < 0.5)) {
        throw std::domain_error("KernelWeights: requires 0 < s < 1/2");
    }
    if (!(eps >= 0.0)) {
        throw std::domain_error("KernelWeights: eps must be nonnegative");
    }
    c_ds_ = special::riesz_constant(1, s);
    const std::size_t n = grid.n_cells;
    const double dx = grid.dx;
    // Cell-averaged weights: w(i,j) = (c/dx) double integral of the kernel
    // over the cell pair, via second differences of the second antiderivative.
    // Averaging over cell i (rather than sampling its center) keeps the
    // near-diagonal kernel mass exact, which controls the small-s defect of
    // the discrete steady-state identities.
    row_.resize(n);
    const auto J = [s, eps](double u) { return kernel_antiderivative2(u, s, eps); };
    row_[0] = c_ds_ * 2.0 * J(dx) / dx;
    for (std::size_t k = 1; k < n; ++k) {
        const double u = static_cast<double>(k) * dx;
        row_[k] = c_ds_ * (J(u + dx) - 2.0 * J(u) + J(u - dx)) / dx;
    }
}

KernelWeights::~KernelWeights() = default;
KernelWeights::KernelWeights(KernelWeights&&) noexcept = default;
KernelWeights& KernelWeights::operator=(KernelWeights&&) noexcept = default;

std::vector<double> KernelWeights::convolve_direct(const Density& rho) const {
    if (!(rho.grid == grid_)) {
        throw std::invalid_argument("convolve: grid mismatch");
    }
    const std::size_t n = grid_.n_cells;
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            acc += row_[i > j ? i - j : j - i] * rho.values[j];
        }
        out[i] = acc;
    }
    return out;
}

std::vector<double> KernelWeights::convolve(const Density& rho) const {
    if (!(rho.grid == grid_)) {
        throw std::invalid_argument("convolve: grid mismatch");
    }
    const std::size_t n = grid_.n_cells;
    if (n < kFftThreshold) return convolve_direct(rho);

    if (!fft_) {
        auto plan = std::make_unique<FftPlan>();
        const std::size_t p = 2 * n;
        plan->padded = p;
        std::vector<double> circ(p, 0.0);
        circ[0] = row_[0];
        for (std::size_t k = 1; k < n; ++k) {
            circ[k] = row_[k];
            circ[p - k] = row_[k];
        }
        plan->kernel_hat.resize(p / 2 + 1);
        std::vector<double> work(p, 0.0);
        std::vector<std::complex<double>> spec(p / 2 + 1);
        plan->forward = fftw_plan_dft_r2c_1d(
            static_cast<int>(p), work.data(),
            reinterpret_cast<fftw_complex*>(spec.data()),
            FFTW_ESTIMATE | FFTW_UNALIGNED);
        plan->backward = fftw_plan_dft_c2r_1d(
            static_cast<int>(p), reinterpret_cast<fftw_complex*>(spec.data()),
            work.data(), FFTW_ESTIMATE | FFTW_UNALIGNED);
        std::copy(circ.begin(), circ.end(), work.begin());
        fftw_execute_dft_r2c(plan->forward, work.data(),
                             reinterpret_cast<fftw_complex*>(spec.data()));
        plan->kernel_hat = spec;
        fft_ = std::move(plan);
    }

    const std::size_t p = fft_->padded;
    std::vector<double> work(p, 0.0);
    std::copy(rho.values.begin(), rho.values.end(), work.begin());
    std::vector<std::complex<double>> spec(p / 2 + 1);
    fftw_execute_dft_r2c(fft_->forward, work.data(),
                         reinterpret_cast<fftw_complex*>(spec.data()));
    for (std::size_t k = 0; k < spec.size(); ++k) spec[k] *= fft_->kernel_hat[k];
    fftw_execute_dft_c2r(fft_->backward,
                         reinterpret_cast<fftw_complex*>(spec.data()),
                         work.data());
    std::vector<double> out(n);
    const double scale = 1.0 / static_cast<double>(p);
    for (std::size_t i = 0; i < n; ++i) out[i] = work[i] * scale;
    return out;
}

KernelWeights build_weights(const Grid& grid, double s, double eps) {
    return KernelWeights(grid, s, eps);
}

double interaction_energy(const Density& rho, const KernelWeights& W, double chi) {
    return interaction_energy(rho, W.convolve(rho), chi);
}

double interaction_energy(const Density& rho, const std::vector<double>& k_conv_rho,
                          double chi) {
    double acc = 0.0;
    for (std::size_t i = 0; i < rho.size(); ++i) {
        acc += rho.values[i] * k_conv_rho[i];
    }
    return -0.5 * chi * acc * rho.dx();
}

double symmetric_form(const Density& rho, const TestFunction& phi,
                      const KernelWeights& W) {
    if (!(rho.grid == W.grid())) {
        throw std::invalid_argument("symmetric_form: grid mismatch");
    }
    const Grid& g = rho.grid;
    const std::size_t n = g.n_cells;
    const double s = W.s();
    const double dx = g.dx;

    // V[k]: exact double cell integral of |x-y|^{2s-1} over a cell pair at
    // offset k, from the second antiderivative u^{2s+1}/(2s(2s+1)). The
    // smooth factor (phi'(x)-phi'(y))/(x-y) is evaluated at cell centers;
    // on the diagonal it degenerates to phi''.
    const auto J = [s](double u) {
        return std::pow(u, 2.0 * s + 1.0) / (2.0 * s * (2.0 * s + 1.0));
    };
    std::vector<double> V(n);
    V[0] = 2.0 * J(dx);
    for (std::size_t k = 1; k < n; ++k) {
        V[k] = J(static_cast<double>(k + 1) * dx) -
               2.0 * J(static_cast<double>(k) * dx) +
               J(static_cast<double>(k - 1) * dx);
    }

    std::vector<double> dphi(n), x(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = g.center(i);
        dphi[i] = phi.df(x[i]);
    }

    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (rho.values[i] == 0.0) continue;
        acc += phi.d2f(x[i]) * rho.values[i] * rho.values[i] * V[0];
        double inner = 0.0;
        for (std::size_t j = i + 1; j < n; ++j) {
            if (rho.values[j] == 0.0) continue;
            inner += (dphi[i] - dphi[j]) / (x[i] - x[j]) * rho.values[j] *
                     V[j - i];
        }
        acc += 2.0 * rho.values[i] * inner;
    }
    return (1.0 - 2.0 * s) * W.c_ds() * acc;
}

double symmetric_form_via_potential(const Density& rho, const TestFunction& phi,
                                    const KernelWeights& W) {
    const std::vector<double> pot = W.convolve(rho);
    const Grid& g = rho.grid;
    const std::size_t n = g.n_cells;
    double acc = 0.0;
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double dpot = (pot[i + 1] - pot[i - 1]) / (2.0 * g.dx);
        acc += rho.values[i] * phi.df(g.center(i)) * dpot;
    }
    return -2.0 * acc * g.dx;
}

} // namespace agdiff
