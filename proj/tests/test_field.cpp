#include <doctest.h>

#include <cmath>
#include <numbers>

#include "helpers.hpp"
#include "tdseg/field.hpp"

using namespace tdseg;
namespace tt = tdseg::test;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST_CASE("grid geometry") {
    const Grid g = Grid::for_image(128, 64);
    CHECK(g.lx == doctest::Approx(2 * kPi).epsilon(1e-15));
    CHECK(g.ly == doctest::Approx(kPi).epsilon(1e-15));
    CHECK(g.hx() == doctest::Approx(g.hy()).epsilon(1e-15)); // square cells
    CHECK(g.npixels() == 128 * 64);

    CHECK_THROWS_AS(Grid::for_image(1, 64), std::invalid_argument);
    CHECK_THROWS_AS(Grid(4, 4, 0.0, 1.0), std::invalid_argument);
}

TEST_CASE("integrate is the cell-area-weighted sum") {
    const Grid g = Grid::for_image(16, 16);

    CHECK(integrate(ScalarField(g, 1.0)) ==
          doctest::Approx(4 * kPi * kPi).epsilon(1e-12));
    CHECK(integrate(ScalarField(g, 0.0)) == 0.0);

    // Indicator of the left half-domain: exact cell count times cell area.
    ScalarField half(g, 0.0);
    for (int y = 0; y < g.ny; ++y)
        for (int x = 0; x < g.nx / 2; ++x) half.at(x, y) = 1.0;
    CHECK(integrate(half) == doctest::Approx(2 * kPi * kPi).epsilon(1e-12));
}

TEST_CASE("integrate is linear and monotone") {
    const Grid g = Grid::for_image(24, 18);
    Rng rng(42);
    const ScalarField u = tt::random_field(g, rng), v = tt::random_field(g, rng);

    ScalarField combo(g);
    for (std::size_t p = 0; p < u.size(); ++p) combo[p] = 2.5 * u[p] - 0.5 * v[p];
    CHECK(integrate(combo) ==
          doctest::Approx(2.5 * integrate(u) - 0.5 * integrate(v)).epsilon(1e-12));

    ScalarField w = u;
    for (std::size_t p = 0; p < w.size(); ++p) w[p] += 0.25;
    CHECK(integrate(w) >= integrate(u));
}

TEST_CASE("partition_from_labels") {
    const Grid g = Grid::for_image(4, 4);

    SUBCASE("all-zero labels") {
        std::vector<std::uint8_t> labels(16, 0);
        const Partition u = partition_from_labels(g, labels, 2);
        for (std::size_t p = 0; p < 16; ++p) {
            CHECK(u.indicator(0)[p] == 1.0);
            CHECK(u.indicator(1)[p] == 0.0);
        }
    }
    SUBCASE("checkerboard gives complementary indicators") {
        std::vector<std::uint8_t> labels(16);
        for (int y = 0; y < 4; ++y)
            for (int x = 0; x < 4; ++x) labels[y * 4 + x] = static_cast<std::uint8_t>((x + y) % 2);
        const Partition u = partition_from_labels(g, labels, 2);
        const ScalarField u0 = u.indicator(0), u1 = u.indicator(1);
        for (std::size_t p = 0; p < 16; ++p) CHECK(u0[p] == 1.0 - u1[p]);
    }
    SUBCASE("label out of range") {
        std::vector<std::uint8_t> labels(16, 0);
        labels[5] = 3;
        CHECK_THROWS_AS(partition_from_labels(g, labels, 2), std::invalid_argument);
    }
}

TEST_CASE("partition of unity holds exactly") {
    const Grid g = Grid::for_image(17, 23);
    Rng rng(7);
    const Partition u = tt::random_partition(g, 4, rng);
    std::vector<double> sum(g.npixels(), 0.0);
    for (int i = 0; i < u.nphases(); ++i) {
        const ScalarField ui = u.indicator(i);
        for (std::size_t p = 0; p < sum.size(); ++p) {
            CHECK((ui[p] == 0.0 || ui[p] == 1.0));
            sum[p] += ui[p];
        }
    }
    for (double s : sum) CHECK(s == 1.0);
}

TEST_CASE("symmetric_difference_measure") {
    const Grid g = Grid::for_image(8, 8);
    std::vector<std::uint8_t> base(64, 0);
    const Partition a = partition_from_labels(g, base, 2);

    SUBCASE("identical partitions") {
        CHECK(symmetric_difference_measure(a, a) == 0.0);
    }
    SUBCASE("differing on exactly half the domain") {
        std::vector<std::uint8_t> flipped = base;
        for (int y = 0; y < 8; ++y)
            for (int x = 0; x < 4; ++x) flipped[y * 8 + x] = 1;
        const Partition b = partition_from_labels(g, flipped, 2);
        CHECK(symmetric_difference_measure(a, b) == doctest::Approx(1.0).epsilon(1e-12));
    }
    SUBCASE("phase count mismatch") {
        const Partition b = partition_from_labels(g, base, 3);
        CHECK_THROWS_AS(symmetric_difference_measure(a, b), std::invalid_argument);
    }
    SUBCASE("symmetric, zero iff identical, bounded by 2") {
        Rng rng(3);
        for (int trial = 0; trial < 10; ++trial) {
            const Partition x = tt::random_partition(g, 3, rng);
            const Partition y = tt::random_partition(g, 3, rng);
            const double d = symmetric_difference_measure(x, y);
            CHECK(d == symmetric_difference_measure(y, x));
            CHECK(d >= 0.0);
            CHECK(d <= 2.0);
            CHECK((d == 0.0) == (x == y));
        }
    }
}
