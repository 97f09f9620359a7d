#include "tdseg/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <numeric>
#include <stdexcept>

#include "tdseg/energy.hpp" // kEmptyPhasePenalty only; no energy routines
#include "tdseg/rng.hpp"
#include "tdseg/spectral.hpp"

namespace tdseg {

PhantomKind phantom_kind_from_string(std::string_view name) {
    if (name == "two-level") return PhantomKind::TwoLevel;
    if (name == "four-quadrant") return PhantomKind::FourQuadrant;
    if (name == "disks") return PhantomKind::Disks;
    throw std::invalid_argument("unknown phantom kind '" + std::string(name) + "'");
}

std::string to_string(PhantomKind kind) {
    switch (kind) {
        case PhantomKind::TwoLevel: return "two-level";
        case PhantomKind::FourQuadrant: return "four-quadrant";
        case PhantomKind::Disks: return "disks";
    }
    return "?";
}

double brute_energy(const ImageField& f, const Partition& u, double dt, double lambda) {
    const Grid& grid = f.grid();
    if (grid != u.grid())
        throw std::invalid_argument("brute_energy: grid mismatch");
    if (grid.npixels() > 4096)
        throw std::invalid_argument("brute_energy: grid too large (limit 4096 pixels)");
    if (lambda < 0.0 || !(dt > 0.0))
        throw std::invalid_argument("brute_energy: bad parameters");

    const int n = u.nphases();
    const int d = f.channels();
    const std::int64_t npix = grid.npixels();
    const double cell = grid.cell_area();

    std::vector<double> means(static_cast<std::size_t>(n) * d, 0.0);
    std::vector<std::int64_t> counts(n, 0);
    for (std::int64_t p = 0; p < npix; ++p) {
        const int l = u.label(p);
        ++counts[l];
        for (int c = 0; c < d; ++c) means[static_cast<std::size_t>(l) * d + c] += f.pixel(p)[c];
    }
    for (int i = 0; i < n; ++i)
        if (counts[i] > 0)
            for (int c = 0; c < d; ++c) means[static_cast<std::size_t>(i) * d + c] /= counts[i];

    double fidelity_sum = 0.0;
    for (std::int64_t p = 0; p < npix; ++p) {
        const int l = u.label(p);
        double dist = 0.0;
        for (int c = 0; c < d; ++c) {
            const double diff = means[static_cast<std::size_t>(l) * d + c] - f.pixel(p)[c];
            dist += diff * diff;
        }
        fidelity_sum += dist;
    }

    std::vector<ScalarField> conv;
    conv.reserve(n);
    for (int i = 0; i < n; ++i) conv.push_back(convolve_direct(grid, dt, u.indicator(i)));

    double pair_sum = 0.0;
    for (int i = 0; i < n; ++i) {
        const ScalarField ui = u.indicator(i);
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            double acc = 0.0;
            for (std::int64_t p = 0; p < npix; ++p) acc += ui[p] * conv[j][p];
            pair_sum += acc;
        }
    }
    return cell * fidelity_sum +
           lambda * std::sqrt(std::numbers::pi / dt) * cell * pair_sum;
}

LabelMap lloyd_assign(const ImageField& f, std::span<const double> means, int nphases) {
    const int d = f.channels();
    if (static_cast<int>(means.size()) != nphases * d)
        throw std::invalid_argument("lloyd_assign: means size must be nphases * channels");

    LabelMap map;
    map.width = f.grid().nx;
    map.height = f.grid().ny;
    map.labels.resize(f.grid().npixels());
    for (std::int64_t p = 0; p < f.grid().npixels(); ++p) {
        const auto px = f.pixel(p);
        int best = 0;
        double best_dist = std::numeric_limits<double>::infinity();
        for (int i = 0; i < nphases; ++i) {
            double dist = 0.0;
            for (int c = 0; c < d; ++c) {
                const double diff = means[static_cast<std::size_t>(i) * d + c] - px[c];
                dist += diff * diff;
            }
            if (std::isnan(dist)) dist = kEmptyPhasePenalty;
            if (dist < best_dist) {
                best_dist = dist;
                best = i;
            }
        }
        map.labels[p] = static_cast<std::uint8_t>(best);
    }
    return map;
}

namespace {

struct Region {
    int label = 0;
    double level[3] = {0, 0, 0};
};

Phantom build_phantom(PhantomKind kind, int size, double sigma, std::uint64_t seed,
                      int nphases, int channels,
                      const std::function<int(double, double, const Grid&)>& label_of,
                      const double levels[][3]) {
    const Grid grid = Grid::for_image(size, size);
    LabelMap truth;
    truth.width = size;
    truth.height = size;
    truth.labels.resize(grid.npixels());

    ImageField image(grid, channels);
    Rng rng(seed);
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            const int l = label_of(x * grid.hx(), y * grid.hy(), grid);
            truth.labels[static_cast<std::size_t>(y) * size + x] = static_cast<std::uint8_t>(l);
            for (int c = 0; c < channels; ++c)
                image.at(x, y, c) = levels[l][c] + (sigma > 0.0 ? sigma * rng.normal() : 0.0);
        }
    }

    Phantom phantom{std::move(image), std::move(truth), nphases, sigma, {}};
    phantom.description = to_string(kind) + " phantom, " + std::to_string(size) + "x" +
                          std::to_string(size) + ", sigma=" + std::to_string(sigma);
    return phantom;
}

} // namespace

Phantom make_phantom(PhantomKind kind, int size, double noise_sigma, std::uint64_t seed) {
    if (size < 16) throw std::invalid_argument("make_phantom: size must be >= 16");
    if (noise_sigma < 0.0) throw std::invalid_argument("make_phantom: sigma must be >= 0");

    switch (kind) {
        case PhantomKind::TwoLevel: {
            // A disk and a rectangle on a dark background.
            static const double levels[][3] = {{0.0}, {1.0}};
            auto label_of = [](double x, double y, const Grid& g) {
                const double dx = x - 0.62 * g.lx, dy = y - 0.38 * g.ly;
                const double r = 0.18 * std::min(g.lx, g.ly);
                if (dx * dx + dy * dy <= r * r) return 1;
                if (x >= 0.15 * g.lx && x <= 0.45 * g.lx && y >= 0.55 * g.ly && y <= 0.85 * g.ly)
                    return 1;
                return 0;
            };
            return build_phantom(kind, size, noise_sigma, seed, 2, 1, label_of, levels);
        }
        case PhantomKind::FourQuadrant: {
            // RGB quadrants with equal pairwise color distances.
            static const double levels[][3] = {
                {1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1, 1, 1}};
            auto label_of = [](double x, double y, const Grid& g) {
                const int right = x >= g.lx / 2.0;
                const int bottom = y >= g.ly / 2.0;
                return bottom * 2 + right;
            };
            return build_phantom(kind, size, noise_sigma, seed, 4, 3, label_of, levels);
        }
        case PhantomKind::Disks: {
            // Two gray disks of different levels on a dark background.
            static const double levels[][3] = {{0.0}, {0.5}, {1.0}};
            auto label_of = [](double x, double y, const Grid& g) {
                const double lmin = std::min(g.lx, g.ly);
                double dx = x - 0.30 * g.lx, dy = y - 0.30 * g.ly;
                if (dx * dx + dy * dy <= 0.16 * 0.16 * lmin * lmin) return 1;
                dx = x - 0.70 * g.lx;
                dy = y - 0.65 * g.ly;
                if (dx * dx + dy * dy <= 0.20 * 0.20 * lmin * lmin) return 2;
                return 0;
            };
            return build_phantom(kind, size, noise_sigma, seed, 3, 1, label_of, levels);
        }
    }
    throw std::invalid_argument("make_phantom: unknown kind");
}

double misclassification_rate(const LabelMap& result, const LabelMap& truth) {
    if (result.width != truth.width || result.height != truth.height)
        throw std::invalid_argument("misclassification_rate: dimension mismatch");

    int n = 0;
    for (std::uint8_t l : result.labels) n = std::max(n, l + 1);
    for (std::uint8_t l : truth.labels) n = std::max(n, l + 1);
    if (n > 8)
        throw std::invalid_argument("misclassification_rate: more than 8 phases");
    if (n == 0) return 0.0;

    // Confusion counts first, then exhaustive search over relabelings.
    std::vector<std::int64_t> confusion(static_cast<std::size_t>(n) * n, 0);
    const std::size_t npix = result.labels.size();
    for (std::size_t p = 0; p < npix; ++p)
        ++confusion[static_cast<std::size_t>(result.labels[p]) * n + truth.labels[p]];

    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::int64_t best = 0;
    do {
        std::int64_t matches = 0;
        for (int r = 0; r < n; ++r) matches += confusion[static_cast<std::size_t>(r) * n + perm[r]];
        best = std::max(best, matches);
    } while (std::next_permutation(perm.begin(), perm.end()));

    return 1.0 - static_cast<double>(best) / static_cast<double>(npix);
}

} // namespace tdseg
