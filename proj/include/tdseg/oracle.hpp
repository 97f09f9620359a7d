#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>

#include "tdseg/field.hpp"
#include "tdseg/image_io.hpp"

namespace tdseg {

/// Synthetic test image with known ground truth.
struct Phantom {
    ImageField image;
    LabelMap truth;
    int nphases = 0;
    double noise_sigma = 0.0;
    std::string description;
};

enum class PhantomKind { TwoLevel, FourQuadrant, Disks };
PhantomKind phantom_kind_from_string(std::string_view name);
std::string to_string(PhantomKind kind);

/// Literal evaluation of the approximate segmentation energy: per-phase means
/// and fidelity by direct loops, the perimeter term as the full double sum
/// over ordered phase pairs with convolve_direct. Reference implementation
/// only; grids above 4096 pixels are rejected.
double brute_energy(const ImageField& f, const Partition& u, double dt, double lambda);

/// Nearest-mean pixel assignment, ties to the lowest phase index. NaN means
/// (empty phases) are treated as unreachable.
LabelMap lloyd_assign(const ImageField& f, std::span<const double> means, int nphases);

/// Deterministic phantom; Gaussian noise of the given sigma is added per
/// channel (unclipped). size is the grid edge, at least 16.
Phantom make_phantom(PhantomKind kind, int size, double noise_sigma, std::uint64_t seed);

/// Fraction of mismatched pixels minimized over all phase relabelings
/// (at most 8 phases).
double misclassification_rate(const LabelMap& result, const LabelMap& truth);

} // namespace tdseg
