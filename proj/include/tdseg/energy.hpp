#pragma once

#include <span>
#include <vector>

#include "tdseg/field.hpp"
#include "tdseg/spectral.hpp"

namespace tdseg {

/// Fidelity value assigned to every pixel of an empty phase. Far above any
/// attainable squared distance on normalized images (g <= channels), so an
/// empty phase never wins a threshold and drops out of the iteration.
inline constexpr double kEmptyPhasePenalty = 1e30;

/// Per-phase means and areas of an image over a partition.
struct PhaseStats {
    int nphases = 0;
    int channels = 0;
    std::vector<double> means;       ///< nphases * channels, NaN for empty phases
    std::vector<double> areas;       ///< integral of each indicator
    std::vector<std::uint8_t> empty; ///< 1 where the phase occupies no pixel

    std::span<const double> mean(int i) const {
        return {means.data() + static_cast<std::size_t>(i) * channels,
                static_cast<std::size_t>(channels)};
    }
};

/// Pointwise squared distance to each phase mean, one field per phase
/// (phase-major storage). Empty phases hold kEmptyPhasePenalty everywhere.
struct FidelityField {
    Grid grid;
    int nphases = 0;
    std::vector<double> values;

    std::span<const double> phase(int i) const {
        const std::size_t n = static_cast<std::size_t>(grid.npixels());
        return {values.data() + i * n, n};
    }
    double* phase_data(int i) {
        return values.data() + i * static_cast<std::size_t>(grid.npixels());
    }
};

/// Split of the total approximate energy.
///
/// total = fidelity_total + lambda * perimeter_total, where perimeter_total
/// sums the per-phase boundary-length estimates (each interface therefore
/// appears once per adjacent phase).
struct EnergyBreakdown {
    double fidelity_total = 0.0;
    double perimeter_total = 0.0;
    double lambda = 0.0;
    double total = 0.0;
    std::vector<double> per_phase_perimeter;
};

/// Area-weighted phase means: C_i = integral(u_i * f) / integral(u_i).
/// Empty phases are flagged and their mean left NaN.
PhaseStats phase_stats(const ImageField& f, const Partition& u);

/// g_i(x) = sum over channels of (C_i,c - f_c(x))^2.
FidelityField fidelity(const ImageField& f, const PhaseStats& stats);

/// Boundary length estimate per phase: sqrt(pi/dt) * integral(u_i * (1 - G*u_i)),
/// using that the other phases sum to 1 - u_i. Clamped at zero (the integrand
/// can ring at ~1e-13 below zero in floating point).
std::vector<double> perimeter_estimate(const Partition& u, const ConvolutionPlan& plan);

/// Total approximate energy from precomputed parts; conv[i] must be G*u_i.
EnergyBreakdown energy_from_parts(const Partition& u, const FidelityField& g,
                                  std::span<const ScalarField> conv, double dt,
                                  double lambda);

/// Total approximate energy of a partition (runs the n convolutions itself).
EnergyBreakdown total_energy(const ImageField& f, const Partition& u,
                             const PhaseStats& stats, const ConvolutionPlan& plan,
                             double lambda);

} // namespace tdseg
