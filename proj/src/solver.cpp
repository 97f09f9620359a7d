#include "tdseg/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "tdseg/rng.hpp"

namespace tdseg {

InitStrategy init_strategy_from_string(std::string_view name) {
    if (name == "stripes") return InitStrategy::Stripes;
    if (name == "circles") return InitStrategy::Circles;
    if (name == "random") return InitStrategy::Random;
    if (name == "kmeans") return InitStrategy::KMeans;
    throw std::invalid_argument("unknown init strategy '" + std::string(name) + "'");
}

std::string to_string(InitStrategy strategy) {
    switch (strategy) {
        case InitStrategy::Stripes: return "stripes";
        case InitStrategy::Circles: return "circles";
        case InitStrategy::Random: return "random";
        case InitStrategy::KMeans: return "kmeans";
    }
    return "?";
}

std::string to_string(StopReason reason) {
    switch (reason) {
        case StopReason::ToleranceMet: return "tolerance-met";
        case StopReason::MaxIter: return "max-iter";
        case StopReason::DecayViolationAbort: return "decay-violation-abort";
    }
    return "?";
}

void SolverConfig::validate() const {
    if (nphases < 2) throw std::invalid_argument("SolverConfig: nphases must be >= 2");
    if (!(dt > 0.0)) throw std::invalid_argument("SolverConfig: dt must be positive");
    if (lambda < 0.0) throw std::invalid_argument("SolverConfig: lambda must be >= 0");
    if (tau < 0.0) throw std::invalid_argument("SolverConfig: tau must be >= 0");
    if (max_iter < 1) throw std::invalid_argument("SolverConfig: max_iter must be >= 1");
}

namespace {

std::vector<std::uint8_t> stripes_labels(const Grid& grid, int n) {
    std::vector<std::uint8_t> labels(grid.npixels());
    for (int y = 0; y < grid.ny; ++y) {
        const int band = std::min(n - 1, y * n / grid.ny);
        std::fill_n(labels.begin() + static_cast<std::size_t>(y) * grid.nx, grid.nx,
                    static_cast<std::uint8_t>(band));
    }
    return labels;
}

// n-1 disjoint disks over a background phase: one centered disk for n == 2,
// otherwise disks on a ring around the domain center.
std::vector<std::uint8_t> circles_labels(const Grid& grid, int n) {
    const int ndisks = n - 1;
    const double cx0 = grid.lx / 2.0, cy0 = grid.ly / 2.0;
    const double lmin = std::min(grid.lx, grid.ly);
    std::vector<double> cx(ndisks), cy(ndisks);
    double radius;
    if (ndisks == 1) {
        cx[0] = cx0;
        cy[0] = cy0;
        radius = lmin / 6.0;
    } else {
        const double ring = lmin / 4.0;
        for (int j = 0; j < ndisks; ++j) {
            const double angle = 2.0 * std::numbers::pi * j / ndisks;
            cx[j] = cx0 + ring * std::cos(angle);
            cy[j] = cy0 + ring * std::sin(angle);
        }
        // Keep neighbors disjoint with a 20% gap.
        radius = std::min(0.10 * lmin, 0.8 * ring * std::sin(std::numbers::pi / ndisks));
    }
    std::vector<std::uint8_t> labels(grid.npixels(), 0);
    for (int y = 0; y < grid.ny; ++y) {
        for (int x = 0; x < grid.nx; ++x) {
            const double px = x * grid.hx(), py = y * grid.hy();
            for (int j = 0; j < ndisks; ++j) {
                const double dx = px - cx[j], dy = py - cy[j];
                if (dx * dx + dy * dy <= radius * radius) {
                    labels[static_cast<std::size_t>(y) * grid.nx + x] =
                        static_cast<std::uint8_t>(j + 1);
                    break;
                }
            }
        }
    }
    return labels;
}

std::vector<std::uint8_t> random_labels(const Grid& grid, int n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<std::uint8_t> labels(grid.npixels());
    for (auto& l : labels) l = static_cast<std::uint8_t>(rng.uniform_int(n));
    return labels;
}

std::vector<std::uint8_t> kmeans_labels(const ImageField& f, int n, std::uint64_t seed) {
    const int d = f.channels();
    const std::int64_t npix = f.grid().npixels();
    Rng rng(seed);

    std::vector<double> means(static_cast<std::size_t>(n) * d);
    for (int i = 0; i < n; ++i) {
        const std::int64_t p = rng.uniform_int(static_cast<int>(npix));
        const auto px = f.pixel(p);
        std::copy(px.begin(), px.end(), means.begin() + static_cast<std::size_t>(i) * d);
    }

    std::vector<std::uint8_t> labels(npix, 0);
    std::vector<double> sums(static_cast<std::size_t>(n) * d);
    std::vector<std::int64_t> counts(n);
    for (int round = 0; round < 50; ++round) {
        bool changed = false;
        for (std::int64_t p = 0; p < npix; ++p) {
            const auto px = f.pixel(p);
            int best = 0;
            double best_dist = std::numeric_limits<double>::infinity();
            for (int i = 0; i < n; ++i) {
                double dist = 0.0;
                for (int c = 0; c < d; ++c) {
                    const double diff = means[static_cast<std::size_t>(i) * d + c] - px[c];
                    dist += diff * diff;
                }
                if (dist < best_dist) {
                    best_dist = dist;
                    best = i;
                }
            }
            if (labels[p] != best) {
                labels[p] = static_cast<std::uint8_t>(best);
                changed = true;
            }
        }
        if (!changed) break;
        std::fill(sums.begin(), sums.end(), 0.0);
        std::fill(counts.begin(), counts.end(), 0);
        for (std::int64_t p = 0; p < npix; ++p) {
            const auto px = f.pixel(p);
            double* s = sums.data() + static_cast<std::size_t>(labels[p]) * d;
            for (int c = 0; c < d; ++c) s[c] += px[c];
            ++counts[labels[p]];
        }
        for (int i = 0; i < n; ++i)
            if (counts[i] > 0)
                for (int c = 0; c < d; ++c)
                    means[static_cast<std::size_t>(i) * d + c] =
                        sums[static_cast<std::size_t>(i) * d + c] / counts[i];
    }
    return labels;
}

// One convolution per phase. Sequential on purpose: plan execution is safe
// to run concurrently on distinct fields, but at these sizes per-iteration
// thread spawning costs more than the transforms themselves, and a fixed
// order keeps results bit-reproducible trivially.
std::vector<ScalarField> convolve_indicators(const Partition& u, const ConvolutionPlan& plan) {
    std::vector<ScalarField> conv;
    conv.reserve(u.nphases());
    for (int i = 0; i < u.nphases(); ++i) conv.push_back(plan(u.indicator(i)));
    return conv;
}

ScoreField scores_from_parts(const FidelityField& g, std::span<const ScalarField> conv,
                             double dt, double lambda) {
    const std::size_t npix = static_cast<std::size_t>(g.grid.npixels());
    ScoreField scores{g.grid, g.nphases, std::vector<double>(npix * g.nphases)};
    const double weight = 2.0 * lambda * std::sqrt(std::numbers::pi / dt);
    for (int i = 0; i < g.nphases; ++i) {
        const auto gi = g.phase(i);
        const ScalarField& ci = conv[i];
        double* out = scores.values.data() + i * npix;
        for (std::size_t p = 0; p < npix; ++p) out[p] = gi[p] + weight * (1.0 - ci[p]);
    }
    return scores;
}

} // namespace

Partition initialize(const Grid& grid, const SolverConfig& config) {
    config.validate();
    switch (config.init) {
        case InitStrategy::Stripes:
            return Partition(grid, config.nphases, stripes_labels(grid, config.nphases));
        case InitStrategy::Circles:
            return Partition(grid, config.nphases, circles_labels(grid, config.nphases));
        case InitStrategy::Random:
            return Partition(grid, config.nphases,
                             random_labels(grid, config.nphases, config.seed));
        case InitStrategy::KMeans:
            throw std::invalid_argument("kmeans initialization needs image data");
    }
    throw std::invalid_argument("unknown init strategy");
}

Partition initialize(const ImageField& f, const SolverConfig& config) {
    if (config.init == InitStrategy::KMeans) {
        config.validate();
        return Partition(f.grid(), config.nphases,
                         kmeans_labels(f, config.nphases, config.seed));
    }
    return initialize(f.grid(), config);
}

ScoreField compute_scores(const ImageField& f, const Partition& u, const PhaseStats& stats,
                          const ConvolutionPlan& plan, const SolverConfig& config) {
    if (f.grid() != u.grid() || plan.grid() != u.grid())
        throw std::invalid_argument("compute_scores: grid mismatch");
    const FidelityField g = fidelity(f, stats);
    const std::vector<ScalarField> conv = convolve_indicators(u, plan);
    return scores_from_parts(g, conv, config.dt, config.lambda);
}

Partition threshold(const ScoreField& scores) {
    const std::size_t npix = static_cast<std::size_t>(scores.grid.npixels());
    std::vector<std::uint8_t> labels(npix, 0);
    for (std::size_t p = 0; p < npix; ++p) {
        int best = 0;
        double best_score = scores.values[p];
        for (int i = 1; i < scores.nphases; ++i) {
            const double s = scores.values[i * npix + p];
            if (s < best_score) { // strict: ties stay with the lowest index
                best_score = s;
                best = i;
            }
        }
        labels[p] = static_cast<std::uint8_t>(best);
    }
    return Partition(scores.grid, scores.nphases, std::move(labels));
}

SolveResult solve(const ImageField& f, const SolverConfig& config, const ReportSink& sink) {
    return solve(f, config, initialize(f, config), sink);
}

SolveResult solve(const ImageField& f, const SolverConfig& config, Partition initial,
                  const ReportSink& sink) {
    config.validate();
    if (initial.grid() != f.grid() || initial.nphases() != config.nphases)
        throw std::invalid_argument("solve: initial partition does not match image/config");
    using clock = std::chrono::steady_clock;

    const Grid& grid = f.grid();
    const ConvolutionPlan plan(make_kernel(grid, config.dt));

    SolveResult result;
    Partition u = std::move(initial);
    Partition previous = u;

    double e_k = 0.0;
    std::int64_t changed = 0;
    double prev_total = 0.0;
    std::vector<bool> was_empty(config.nphases, false);

    for (int k = 0;; ++k) {
        const auto t0 = clock::now();

        const PhaseStats stats = phase_stats(f, u);
        for (int i = 0; i < config.nphases; ++i) {
            if (stats.empty[i] && !was_empty[i]) {
                std::cerr << "tdseg: phase " << i << " became empty at iteration " << k
                          << " and drops out\n";
                was_empty[i] = true;
            }
        }

        const FidelityField g = fidelity(f, stats);
        const std::vector<ScalarField> conv = convolve_indicators(u, plan);
        const EnergyBreakdown energy =
            energy_from_parts(u, g, conv, config.dt, config.lambda);

        const bool decay_violated =
            config.assert_decay && k > 0 &&
            energy.total > prev_total + 1e-9 * (1.0 + std::abs(prev_total));

        const bool stop_tolerance = k > 0 && e_k <= config.tau;
        const bool stop_max_iter = k >= config.max_iter;

        Partition u_next = u;
        std::int64_t changed_next = 0;
        double e_next = 0.0;
        if (!decay_violated && !stop_tolerance && !stop_max_iter) {
            const ScoreField scores = scores_from_parts(g, conv, config.dt, config.lambda);
            u_next = threshold(scores);
            const auto la = u.labels(), lb = u_next.labels();
            for (std::size_t p = 0; p < la.size(); ++p) changed_next += (la[p] != lb[p]);
            e_next = 2.0 * changed_next * grid.cell_area() / grid.area();
        }

        IterationReport report;
        report.k = k;
        report.energy = energy;
        report.e_k = e_k;
        report.means = stats.means;
        report.changed_pixels = changed;
        report.wall_seconds = std::chrono::duration<double>(clock::now() - t0).count();
        result.reports.push_back(report);
        if (sink) sink(report);

        if (decay_violated) {
            result.stop_reason = StopReason::DecayViolationAbort;
            result.violation = DecayViolation{k, prev_total, energy.total, previous};
            break;
        }
        if (stop_tolerance) {
            result.converged = true;
            result.stop_reason = StopReason::ToleranceMet;
            break;
        }
        if (stop_max_iter) {
            result.stop_reason = StopReason::MaxIter;
            break;
        }

        previous = std::move(u);
        u = std::move(u_next);
        e_k = e_next;
        changed = changed_next;
        prev_total = energy.total;
    }

    result.final = std::move(u);
    return result;
}

} // namespace tdseg
