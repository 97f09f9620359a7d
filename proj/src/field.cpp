#include "tdseg/field.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace tdseg {

Grid::Grid(int nx_, int ny_, double lx_, double ly_) : nx(nx_), ny(ny_), lx(lx_), ly(ly_) {
    if (nx < 2 || ny < 2)
        throw std::invalid_argument("Grid: nx and ny must be >= 2");
    if (!(lx > 0.0) || !(ly > 0.0))
        throw std::invalid_argument("Grid: physical extents must be positive");
}

Grid Grid::for_image(int nx_, int ny_) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    if (nx_ < 2 || ny_ < 2)
        throw std::invalid_argument("Grid: nx and ny must be >= 2");
    return Grid(nx_, ny_, two_pi, two_pi * ny_ / nx_);
}

ScalarField::ScalarField(const Grid& grid, double fill)
    : grid_(grid), values_(static_cast<std::size_t>(grid.npixels()), fill) {}

ScalarField::ScalarField(const Grid& grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
    if (values_.size() != static_cast<std::size_t>(grid.npixels()))
        throw std::invalid_argument("ScalarField: value count does not match grid");
}

ImageField::ImageField(const Grid& grid, int channels, double fill)
    : grid_(grid), channels_(channels),
      values_(static_cast<std::size_t>(grid.npixels()) * channels, fill) {
    if (channels < 1)
        throw std::invalid_argument("ImageField: channels must be >= 1");
}

ImageField::ImageField(const Grid& grid, int channels, std::vector<double> values)
    : grid_(grid), channels_(channels), values_(std::move(values)) {
    if (channels < 1)
        throw std::invalid_argument("ImageField: channels must be >= 1");
    if (values_.size() != static_cast<std::size_t>(grid.npixels()) * channels)
        throw std::invalid_argument("ImageField: value count does not match grid");
}

Partition::Partition(const Grid& grid, int nphases, std::vector<std::uint8_t> labels)
    : grid_(grid), nphases_(nphases), labels_(std::move(labels)) {
    if (nphases < 2 || nphases > 255)
        throw std::invalid_argument("Partition: nphases must be in [2, 255]");
    if (labels_.size() != static_cast<std::size_t>(grid.npixels()))
        throw std::invalid_argument("Partition: label count does not match grid");
    for (std::uint8_t l : labels_)
        if (l >= nphases)
            throw std::invalid_argument("Partition: label " + std::to_string(int(l)) +
                                        " out of range for " + std::to_string(nphases) +
                                        " phases");
}

ScalarField Partition::indicator(int i) const {
    ScalarField u(grid_, 0.0);
    const std::size_t n = labels_.size();
    for (std::size_t p = 0; p < n; ++p)
        if (labels_[p] == i) u[p] = 1.0;
    return u;
}

std::int64_t Partition::phase_pixels(int i) const {
    std::int64_t count = 0;
    for (std::uint8_t l : labels_)
        if (l == i) ++count;
    return count;
}

double integrate(const ScalarField& field) {
    double sum = 0.0;
    for (std::size_t p = 0; p < field.size(); ++p) sum += field[p];
    return field.grid().cell_area() * sum;
}

Partition partition_from_labels(const Grid& grid, std::span<const std::uint8_t> labels,
                                int nphases) {
    return Partition(grid, nphases, std::vector<std::uint8_t>(labels.begin(), labels.end()));
}

double symmetric_difference_measure(const Partition& a, const Partition& b) {
    if (a.grid() != b.grid() || a.nphases() != b.nphases())
        throw std::invalid_argument("symmetric_difference_measure: shape mismatch");
    std::int64_t changed = 0;
    const auto la = a.labels(), lb = b.labels();
    for (std::size_t p = 0; p < la.size(); ++p) changed += (la[p] != lb[p]);
    // Each differing pixel contributes |1-0|^2 + |0-1|^2 = 2.
    return 2.0 * changed * a.grid().cell_area() / a.grid().area();
}

} // namespace tdseg
