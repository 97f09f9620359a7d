#include <doctest.h>

#include <cmath>
#include <numbers>

#include "helpers.hpp"
#include "tdseg/energy.hpp"
#include "tdseg/oracle.hpp"

using namespace tdseg;
namespace tt = tdseg::test;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST_CASE("phase_stats") {
    SUBCASE("constant image gives the constant as every mean") {
        const Grid g = Grid::for_image(16, 16);
        const ImageField f(g, 1, 0.3);
        Rng rng(21);
        const PhaseStats stats = phase_stats(f, tt::random_partition(g, 3, rng));
        for (int i = 0; i < 3; ++i)
            if (!stats.empty[i])
                CHECK(stats.mean(i)[0] == doctest::Approx(0.3).epsilon(1e-14));
    }
    SUBCASE("aligned two-phase image recovers exact means") {
        const Grid g = Grid::for_image(8, 8);
        ImageField f(g, 1);
        std::vector<std::uint8_t> labels(64);
        for (int y = 0; y < 8; ++y)
            for (int x = 0; x < 8; ++x) {
                const bool left = x < 4;
                labels[y * 8 + x] = left ? 0 : 1;
                f.at(x, y, 0) = left ? 1.0 : 0.0;
            }
        const PhaseStats stats = phase_stats(f, partition_from_labels(g, labels, 2));
        CHECK(stats.mean(0)[0] == 1.0);
        CHECK(stats.mean(1)[0] == 0.0);
    }
    SUBCASE("hand-computed area-weighted mean") {
        const Grid g = Grid::for_image(4, 4);
        ImageField f(g, 1, 0.9);
        std::vector<std::uint8_t> labels(16, 1);
        for (int y = 0; y < 4; ++y)
            for (int x = 0; x < 2; ++x) {
                labels[y * 4 + x] = 0;
                f.at(x, y, 0) = (x + y) % 2 ? 0.2 : 0.4; // equal counts of each
            }
        const PhaseStats stats = phase_stats(f, partition_from_labels(g, labels, 2));
        CHECK(stats.mean(0)[0] == doctest::Approx(0.3).epsilon(1e-14));
    }
    SUBCASE("areas and empty flags") {
        const Grid g = Grid::for_image(10, 10);
        Rng rng(8);
        const ImageField f = tt::random_image(g, 1, rng);
        std::vector<std::uint8_t> labels(100);
        for (std::size_t p = 0; p < 100; ++p) labels[p] = p % 2; // phase 2 never used
        const PhaseStats stats = phase_stats(f, partition_from_labels(g, labels, 3));
        double area_sum = 0.0;
        for (double a : stats.areas) area_sum += a;
        CHECK(area_sum == doctest::Approx(g.area()).epsilon(1e-10));
        CHECK(stats.empty[2] == 1);
        CHECK(std::isnan(stats.mean(2)[0]));
        CHECK(stats.areas[2] == 0.0);
    }
}

TEST_CASE("fidelity") {
    const Grid g = Grid::for_image(6, 6);

    SUBCASE("zero where the image equals the mean") {
        const ImageField f(g, 1, 0.3);
        PhaseStats stats;
        stats.nphases = 1;
        stats.channels = 1;
        stats.means = {0.3};
        stats.areas = {g.area()};
        stats.empty = {0};
        const FidelityField fid = fidelity(f, stats);
        for (std::size_t p = 0; p < 36; ++p) CHECK(fid.phase(0)[p] == 0.0);
    }
    SUBCASE("scalar squared distance") {
        ImageField f(g, 1, 0.8);
        f.at(0, 0, 0) = 0.3; // mean of phase 0 once alone
        std::vector<std::uint8_t> labels(36, 1);
        labels[0] = 0;
        const FidelityField fid = fidelity(f, phase_stats(f, partition_from_labels(g, labels, 2)));
        CHECK(fid.phase(0)[1] == doctest::Approx(0.25).epsilon(1e-14)); // (0.3 - 0.8)^2
    }
    SUBCASE("vector squared distance") {
        ImageField f(g, 3, 1.0);
        PhaseStats stats;
        stats.nphases = 1;
        stats.channels = 3;
        stats.means = {0.0, 0.0, 0.0};
        stats.areas = {g.area()};
        stats.empty = {0};
        const FidelityField fid = fidelity(f, stats);
        CHECK(fid.phase(0)[7] == doctest::Approx(3.0).epsilon(1e-14));
    }
    SUBCASE("nonnegative everywhere, sentinel on empty phases") {
        Rng rng(31);
        const ImageField f = tt::random_image(g, 3, rng);
        std::vector<std::uint8_t> labels(36, 0);
        const Partition u = partition_from_labels(g, labels, 2); // phase 1 empty
        const FidelityField fid = fidelity(f, phase_stats(f, u));
        for (std::size_t p = 0; p < 36; ++p) {
            CHECK(fid.phase(0)[p] >= 0.0);
            CHECK(fid.phase(1)[p] == kEmptyPhasePenalty);
        }
    }
}

TEST_CASE("perimeter_estimate") {
    SUBCASE("single occupied phase has no boundary") {
        const Grid g = Grid::for_image(32, 32);
        const ConvolutionPlan plan(make_kernel(g, 0.05));
        std::vector<std::uint8_t> labels(g.npixels(), 0);
        const auto per = perimeter_estimate(partition_from_labels(g, labels, 2), plan);
        CHECK(per[0] <= 1e-10);
        CHECK(per[0] >= 0.0);
        CHECK(per[1] == 0.0);
    }
    SUBCASE("disk of radius 1 has perimeter 2*pi") {
        const int n = 256;
        const Grid g = Grid::for_image(n, n);
        std::vector<std::uint8_t> labels(g.npixels(), 0);
        for (int y = 0; y < n; ++y)
            for (int x = 0; x < n; ++x) {
                const double dx = x * g.hx() - kPi, dy = y * g.hy() - kPi;
                if (dx * dx + dy * dy <= 1.0) labels[y * n + x] = 1;
            }
        const Partition u = partition_from_labels(g, labels, 2);
        const ConvolutionPlan plan(make_kernel(g, 0.005));
        const auto per = perimeter_estimate(u, plan);
        CHECK(per[1] == doctest::Approx(2 * kPi).epsilon(0.03));
        CHECK(per[0] == doctest::Approx(2 * kPi).epsilon(0.03)); // same interface
    }
    SUBCASE("vertical split has two interfaces under periodicity") {
        const int n = 128;
        const Grid g = Grid::for_image(n, n);
        std::vector<std::uint8_t> labels(g.npixels(), 0);
        for (int y = 0; y < n; ++y)
            for (int x = 0; x < n / 2; ++x) labels[y * n + x] = 1;
        const ConvolutionPlan plan(make_kernel(g, 0.01));
        const auto per = perimeter_estimate(partition_from_labels(g, labels, 2), plan);
        CHECK(per[0] == doctest::Approx(2 * 2 * kPi).epsilon(0.03));
        CHECK(per[1] == doctest::Approx(2 * 2 * kPi).epsilon(0.03));
    }
    SUBCASE("(1 - u_i) route equals the explicit pair sum") {
        const Grid g = Grid::for_image(32, 32);
        Rng rng(19);
        const Partition u = tt::random_partition(g, 4, rng);
        const double dt = 0.3;
        const ConvolutionPlan plan(make_kernel(g, dt));
        const auto per = perimeter_estimate(u, plan);

        std::vector<ScalarField> conv;
        for (int j = 0; j < 4; ++j) conv.push_back(plan(u.indicator(j)));
        for (int i = 0; i < 4; ++i) {
            double pair_sum = 0.0;
            const ScalarField ui = u.indicator(i);
            for (int j = 0; j < 4; ++j) {
                if (j == i) continue;
                ScalarField prod(g);
                for (std::size_t p = 0; p < prod.size(); ++p) prod[p] = ui[p] * conv[j][p];
                pair_sum += integrate(prod);
            }
            pair_sum *= std::sqrt(kPi / dt);
            CHECK(per[i] == doctest::Approx(pair_sum).epsilon(1e-10));
            CHECK(per[i] >= 0.0);
        }
    }
}

TEST_CASE("total_energy") {
    SUBCASE("lambda = 0 reduces to the within-cluster sum of squares") {
        const Grid g = Grid::for_image(16, 16);
        Rng rng(23);
        const ImageField f = tt::random_image(g, 1, rng);
        // Exact k-means assignment against two fixed centers.
        std::vector<std::uint8_t> labels(g.npixels());
        for (std::int64_t p = 0; p < g.npixels(); ++p)
            labels[p] = std::abs(f.data()[p] - 0.25) <= std::abs(f.data()[p] - 0.75) ? 0 : 1;
        const Partition u = partition_from_labels(g, labels, 2);
        const PhaseStats stats = phase_stats(f, u);
        const ConvolutionPlan plan(make_kernel(g, 0.4));
        const EnergyBreakdown e = total_energy(f, u, stats, plan, 0.0);

        double wcss = 0.0; // independent evaluation
        for (std::int64_t p = 0; p < g.npixels(); ++p) {
            const double diff = f.data()[p] - stats.mean(labels[p])[0];
            wcss += diff * diff;
        }
        wcss *= g.cell_area();
        CHECK(e.fidelity_total == doctest::Approx(wcss).epsilon(1e-12));
        CHECK(e.total == doctest::Approx(wcss).epsilon(1e-12));
    }
    SUBCASE("constant image in a single occupied phase has zero energy") {
        const Grid g = Grid::for_image(16, 16);
        const ImageField f(g, 1, 0.5);
        std::vector<std::uint8_t> labels(g.npixels(), 0);
        const Partition u = partition_from_labels(g, labels, 2);
        const ConvolutionPlan plan(make_kernel(g, 0.1));
        const EnergyBreakdown e = total_energy(f, u, phase_stats(f, u), plan, 0.02);
        CHECK(std::abs(e.total) <= 1e-10);
    }
    SUBCASE("agrees with the brute-force evaluation") {
        const Grid g = Grid::for_image(8, 8);
        Rng rng(29);
        for (int trial = 0; trial < 5; ++trial) {
            const ImageField f = tt::random_image(g, 1, rng);
            const Partition u = tt::random_partition(g, 2, rng);
            const double dt = 2.0, lambda = 0.01 + 0.03 * rng.uniform();
            const ConvolutionPlan plan(make_kernel(g, dt));
            const EnergyBreakdown e = total_energy(f, u, phase_stats(f, u), plan, lambda);
            const double ref = brute_energy(f, u, dt, lambda);
            CHECK(e.total == doctest::Approx(ref).epsilon(1e-9));
        }
    }
    SUBCASE("invariant under phase relabeling") {
        const Grid g = Grid::for_image(16, 16);
        Rng rng(37);
        const ImageField f = tt::random_image(g, 3, rng);
        const Partition u = tt::random_partition(g, 3, rng);
        std::vector<std::uint8_t> permuted(u.labels().begin(), u.labels().end());
        const int perm[3] = {2, 0, 1};
        for (auto& l : permuted) l = static_cast<std::uint8_t>(perm[l]);
        const Partition v = partition_from_labels(g, permuted, 3);
        const ConvolutionPlan plan(make_kernel(g, 0.3));
        const EnergyBreakdown eu = total_energy(f, u, phase_stats(f, u), plan, 0.02);
        const EnergyBreakdown ev = total_energy(f, v, phase_stats(f, v), plan, 0.02);
        CHECK(eu.total == doctest::Approx(ev.total).epsilon(1e-12));
        CHECK(eu.fidelity_total == doctest::Approx(ev.fidelity_total).epsilon(1e-12));
        CHECK(eu.perimeter_total == doctest::Approx(ev.perimeter_total).epsilon(1e-12));
    }
    SUBCASE("phase means minimize the fidelity term") {
        const Grid g = Grid::for_image(12, 12);
        Rng rng(41);
        const ImageField f = tt::random_image(g, 1, rng);
        const Partition u = tt::random_partition(g, 2, rng);
        const ConvolutionPlan plan(make_kernel(g, 0.5));
        PhaseStats stats = phase_stats(f, u);
        const double at_means = total_energy(f, u, stats, plan, 0.0).fidelity_total;
        for (double shift : {-0.1, 0.05, 0.2}) {
            PhaseStats perturbed = stats;
            for (double& m : perturbed.means) m += shift;
            CHECK(total_energy(f, u, perturbed, plan, 0.0).fidelity_total >= at_means);
        }
    }
    SUBCASE("breakdown is consistent and nonnegative") {
        const Grid g = Grid::for_image(16, 16);
        Rng rng(43);
        const ImageField f = tt::random_image(g, 1, rng);
        const Partition u = tt::random_partition(g, 3, rng);
        const double lambda = 0.015;
        const ConvolutionPlan plan(make_kernel(g, 0.2));
        const EnergyBreakdown e = total_energy(f, u, phase_stats(f, u), plan, lambda);
        CHECK(e.fidelity_total >= 0.0);
        CHECK(e.perimeter_total >= 0.0);
        CHECK(e.total == doctest::Approx(e.fidelity_total + lambda * e.perimeter_total)
                             .epsilon(1e-12));
        double per_sum = 0.0;
        for (double p : e.per_phase_perimeter) {
            CHECK(p >= 0.0);
            per_sum += p;
        }
        CHECK(e.perimeter_total == doctest::Approx(per_sum).epsilon(1e-12));
    }
}
