#include "tdseg/energy.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace tdseg {

PhaseStats phase_stats(const ImageField& f, const Partition& u) {
    if (f.grid() != u.grid())
        throw std::invalid_argument("phase_stats: image/partition grid mismatch");

    const int n = u.nphases();
    const int d = f.channels();
    PhaseStats stats;
    stats.nphases = n;
    stats.channels = d;
    stats.means.assign(static_cast<std::size_t>(n) * d, 0.0);
    stats.areas.assign(n, 0.0);
    stats.empty.assign(n, 0);

    // Single fixed-order pass over pixels keeps energies bit-reproducible.
    std::vector<std::int64_t> counts(n, 0);
    const auto labels = u.labels();
    for (std::size_t p = 0; p < labels.size(); ++p) {
        const int l = labels[p];
        ++counts[l];
        const auto px = f.pixel(static_cast<std::int64_t>(p));
        double* m = stats.means.data() + static_cast<std::size_t>(l) * d;
        for (int c = 0; c < d; ++c) m[c] += px[c];
    }
    const double cell = f.grid().cell_area();
    for (int i = 0; i < n; ++i) {
        stats.areas[i] = counts[i] * cell;
        double* m = stats.means.data() + static_cast<std::size_t>(i) * d;
        if (counts[i] > 0) {
            for (int c = 0; c < d; ++c) m[c] /= static_cast<double>(counts[i]);
        } else {
            stats.empty[i] = 1;
            for (int c = 0; c < d; ++c) m[c] = std::numeric_limits<double>::quiet_NaN();
        }
    }
    return stats;
}

FidelityField fidelity(const ImageField& f, const PhaseStats& stats) {
    if (stats.channels != f.channels())
        throw std::invalid_argument("fidelity: channel mismatch with stats");

    const int n = stats.nphases;
    const int d = f.channels();
    const std::size_t npix = static_cast<std::size_t>(f.grid().npixels());
    FidelityField g{f.grid(), n, std::vector<double>(npix * n)};
    for (int i = 0; i < n; ++i) {
        double* gi = g.phase_data(i);
        if (stats.empty[i]) {
            std::fill(gi, gi + npix, kEmptyPhasePenalty);
            continue;
        }
        const auto mean = stats.mean(i);
        const double* fv = f.data();
        for (std::size_t p = 0; p < npix; ++p) {
            double acc = 0.0;
            for (int c = 0; c < d; ++c) {
                const double diff = mean[c] - fv[p * d + c];
                acc += diff * diff;
            }
            gi[p] = acc;
        }
    }
    return g;
}

namespace {

// sqrt(pi/dt) * integral of u_i * (1 - conv_i), clamped at zero.
std::vector<double> perimeter_from_conv(const Partition& u,
                                        std::span<const ScalarField> conv, double dt) {
    const int n = u.nphases();
    const double factor = std::sqrt(std::numbers::pi / dt);
    const double cell = u.grid().cell_area();
    const auto labels = u.labels();
    std::vector<double> acc(n, 0.0);
    for (std::size_t p = 0; p < labels.size(); ++p)
        acc[labels[p]] += 1.0 - conv[labels[p]][p];
    std::vector<double> per(n);
    for (int i = 0; i < n; ++i) per[i] = std::max(0.0, factor * cell * acc[i]);
    return per;
}

} // namespace

std::vector<double> perimeter_estimate(const Partition& u, const ConvolutionPlan& plan) {
    if (plan.grid() != u.grid())
        throw std::invalid_argument("perimeter_estimate: kernel grid mismatch");
    std::vector<ScalarField> conv;
    conv.reserve(u.nphases());
    for (int i = 0; i < u.nphases(); ++i) conv.push_back(plan(u.indicator(i)));
    return perimeter_from_conv(u, conv, plan.kernel().dt());
}

EnergyBreakdown energy_from_parts(const Partition& u, const FidelityField& g,
                                  std::span<const ScalarField> conv, double dt,
                                  double lambda) {
    if (g.grid != u.grid() || g.nphases != u.nphases())
        throw std::invalid_argument("energy_from_parts: fidelity shape mismatch");
    if (static_cast<int>(conv.size()) != u.nphases())
        throw std::invalid_argument("energy_from_parts: one convolution per phase required");
    if (lambda < 0.0)
        throw std::invalid_argument("energy_from_parts: lambda must be >= 0");

    EnergyBreakdown e;
    e.lambda = lambda;

    // An empty phase has u_i == 0 everywhere, so summing g over each pixel's
    // own label keeps the sentinel fidelity out of the sum automatically.
    const auto labels = u.labels();
    double fid = 0.0;
    for (std::size_t p = 0; p < labels.size(); ++p) fid += g.phase(labels[p])[p];
    e.fidelity_total = fid * u.grid().cell_area();

    e.per_phase_perimeter = perimeter_from_conv(u, conv, dt);
    for (double per : e.per_phase_perimeter) e.perimeter_total += per;
    e.total = e.fidelity_total + lambda * e.perimeter_total;
    return e;
}

EnergyBreakdown total_energy(const ImageField& f, const Partition& u,
                             const PhaseStats& stats, const ConvolutionPlan& plan,
                             double lambda) {
    if (f.grid() != u.grid() || plan.grid() != u.grid())
        throw std::invalid_argument("total_energy: grid mismatch");
    const FidelityField g = fidelity(f, stats);
    std::vector<ScalarField> conv;
    conv.reserve(u.nphases());
    for (int i = 0; i < u.nphases(); ++i) conv.push_back(plan(u.indicator(i)));
    return energy_from_parts(u, g, conv, plan.kernel().dt(), lambda);
}

} // namespace tdseg
