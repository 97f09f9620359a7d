#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace tdseg {

/// Uniform periodic grid over [0, lx) x [0, ly).
///
/// The physical extent along x is fixed at 2*pi regardless of pixel count;
/// ly follows the aspect ratio so cells stay square (hx == hy). This keeps
/// the diffusion time dt meaningful across resolutions: the same dt probes
/// the same physical length scale on a 128^2 and a 512^2 image.
struct Grid {
    int nx = 0;      ///< samples along x (image width)
    int ny = 0;      ///< samples along y (image height)
    double lx = 0.0; ///< physical extent along x
    double ly = 0.0; ///< physical extent along y

    Grid() = default;
    Grid(int nx_, int ny_, double lx_, double ly_);

    /// Grid for an nx-by-ny image: lx = 2*pi, ly = 2*pi*ny/nx.
    static Grid for_image(int nx_, int ny_);

    double hx() const { return lx / nx; }
    double hy() const { return ly / ny; }
    double cell_area() const { return hx() * hy(); }
    double area() const { return lx * ly; }
    std::int64_t npixels() const { return static_cast<std::int64_t>(nx) * ny; }

    bool operator==(const Grid&) const = default;
};

/// One real value per grid sample, row-major (y outer, x inner).
class ScalarField {
public:
    ScalarField() = default;
    explicit ScalarField(const Grid& grid, double fill = 0.0);
    ScalarField(const Grid& grid, std::vector<double> values);

    const Grid& grid() const { return grid_; }
    std::size_t size() const { return values_.size(); }

    double& operator[](std::size_t i) { return values_[i]; }
    double operator[](std::size_t i) const { return values_[i]; }
    double& at(int ix, int iy) { return values_[idx(ix, iy)]; }
    double at(int ix, int iy) const { return values_[idx(ix, iy)]; }

    double* data() { return values_.data(); }
    const double* data() const { return values_.data(); }
    std::span<const double> values() const { return values_; }

private:
    std::size_t idx(int ix, int iy) const {
        return static_cast<std::size_t>(iy) * grid_.nx + ix;
    }

    Grid grid_;
    std::vector<double> values_;
};

/// Vector-valued image on a grid; channels interleaved per pixel.
class ImageField {
public:
    ImageField() = default;
    ImageField(const Grid& grid, int channels, double fill = 0.0);
    ImageField(const Grid& grid, int channels, std::vector<double> values);

    const Grid& grid() const { return grid_; }
    int channels() const { return channels_; }
    std::size_t size() const { return values_.size(); }

    double& at(int ix, int iy, int c) { return values_[idx(ix, iy, c)]; }
    double at(int ix, int iy, int c) const { return values_[idx(ix, iy, c)]; }

    /// Channel values of one pixel, by flat pixel index.
    std::span<const double> pixel(std::int64_t p) const {
        return {values_.data() + p * channels_, static_cast<std::size_t>(channels_)};
    }

    double* data() { return values_.data(); }
    const double* data() const { return values_.data(); }
    std::span<const double> values() const { return values_; }

private:
    std::size_t idx(int ix, int iy, int c) const {
        return (static_cast<std::size_t>(iy) * grid_.nx + ix) * channels_ + c;
    }

    Grid grid_;
    int channels_ = 0;
    std::vector<double> values_;
};

/// An n-phase partition of the grid into disjoint regions.
///
/// Stored as one label per pixel, which makes the two structural invariants
/// hold by construction: every pixel belongs to exactly one phase, and each
/// phase indicator is exactly 0 or 1. indicator(i) materialises the binary
/// field u_i when a convolution needs it.
class Partition {
public:
    Partition() = default;
    Partition(const Grid& grid, int nphases, std::vector<std::uint8_t> labels);

    const Grid& grid() const { return grid_; }
    int nphases() const { return nphases_; }

    std::uint8_t label(std::int64_t p) const { return labels_[p]; }
    std::uint8_t label(int ix, int iy) const {
        return labels_[static_cast<std::size_t>(iy) * grid_.nx + ix];
    }
    std::span<const std::uint8_t> labels() const { return labels_; }

    /// Binary indicator field of phase i.
    ScalarField indicator(int i) const;

    /// Number of pixels carrying label i.
    std::int64_t phase_pixels(int i) const;

    bool operator==(const Partition&) const = default;

private:
    Grid grid_;
    int nphases_ = 0;
    std::vector<std::uint8_t> labels_;
};

/// Midpoint quadrature: hx*hy * sum of samples. Exact for the piecewise
/// constant integrands used throughout.
double integrate(const ScalarField& field);

/// Build a partition from per-pixel labels; throws if any label >= nphases.
Partition partition_from_labels(const Grid& grid, std::span<const std::uint8_t> labels,
                                int nphases);

/// Normalized L2 difference (1/|domain|) * integral of sum_i |u_i^a - u_i^b|^2.
/// For binary partitions this is twice the area fraction where labels differ,
/// so the value lies in [0, 2].
double symmetric_difference_measure(const Partition& a, const Partition& b);

} // namespace tdseg
