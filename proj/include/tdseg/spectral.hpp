#pragma once

#include <memory>
#include <span>
#include <vector>

#include "tdseg/field.hpp"

namespace tdseg {

/// Gaussian heat kernel in frequency space.
///
/// Convolving with G_dt(x) = (1/(4*pi*dt)) * exp(-|x|^2/(4*dt)) multiplies
/// Fourier mode xi by exp(-|xi|^2 * dt). The symbol is built exactly in
/// frequency space, so mass conservation (symbol at zero frequency == 1) and
/// the heat semigroup property hold to machine precision, with no kernel
/// truncation radius to tune.
class KernelSpec {
public:
    KernelSpec(const Grid& grid, double dt);

    const Grid& grid() const { return grid_; }
    double dt() const { return dt_; }

    /// Symbol value for the signed integer mode pair (kx, ky):
    /// exp(-(xi_x^2 + xi_y^2) * dt) with xi = 2*pi*k/l per axis. On the
    /// default 2*pi-wide domain the wavenumbers are integers.
    double symbol(int kx, int ky) const;

    /// Half-spectrum layout used by the real-to-complex transform:
    /// ny rows of (nx/2 + 1) values, row ky in FFT order.
    std::span<const double> half_spectrum() const { return half_spectrum_; }
    int half_width() const { return grid_.nx / 2 + 1; }

private:
    Grid grid_;
    double dt_ = 0.0;
    std::vector<double> half_spectrum_;
};

/// Builds the heat-kernel symbol for a grid; throws if dt <= 0.
KernelSpec make_kernel(const Grid& grid, double dt);

/// Reusable FFT workspace for one grid shape.
///
/// Construction plans the forward/inverse real transforms once; execution
/// allocates per-call scratch, so a single plan may run concurrently on
/// distinct fields (the per-phase convolutions of one solver iteration).
/// Plan construction itself is serialized internally.
class ConvolutionPlan {
public:
    explicit ConvolutionPlan(KernelSpec kernel);
    ~ConvolutionPlan();

    ConvolutionPlan(ConvolutionPlan&&) noexcept;
    ConvolutionPlan& operator=(ConvolutionPlan&&) noexcept;
    ConvolutionPlan(const ConvolutionPlan&) = delete;
    ConvolutionPlan& operator=(const ConvolutionPlan&) = delete;

    const KernelSpec& kernel() const;
    const Grid& grid() const;

    /// G_dt * u under periodic boundary conditions.
    ScalarField operator()(const ScalarField& u) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Convenience wrapper for plan(u).
ScalarField convolve(const ConvolutionPlan& plan, const ScalarField& u);

/// Reference periodic convolution by direct O(N^2) summation.
///
/// The kernel is the periodized Gaussian sampled on the grid, re-normalized
/// so its discrete transform has symbol(0) = 1. This is an independent route
/// to the same operator and is used to cross-check the FFT path; it agrees
/// to ~1e-10 whenever the Gaussian is resolved by the grid (dt not too small)
/// and guards against grids larger than 4096 pixels.
ScalarField convolve_direct(const Grid& grid, double dt, const ScalarField& u);

} // namespace tdseg
