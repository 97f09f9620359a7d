#pragma once

#include <unistd.h>

#include <filesystem>
#include <string>
#include <vector>

#include "tdseg/field.hpp"
#include "tdseg/rng.hpp"

namespace tdseg::test {

/// Unique scratch directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& tag) {
    static std::uint64_t counter = 0;
    auto dir = std::filesystem::temp_directory_path() /
               ("tdseg_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(dir);
    return dir;
}

inline ScalarField random_field(const Grid& grid, Rng& rng, double lo = 0.0, double hi = 1.0) {
    ScalarField u(grid);
    for (std::size_t p = 0; p < u.size(); ++p) u[p] = lo + (hi - lo) * rng.uniform();
    return u;
}

inline ImageField random_image(const Grid& grid, int channels, Rng& rng) {
    ImageField f(grid, channels);
    for (std::size_t i = 0; i < f.size(); ++i) f.data()[i] = rng.uniform();
    return f;
}

inline Partition random_partition(const Grid& grid, int nphases, Rng& rng) {
    std::vector<std::uint8_t> labels(grid.npixels());
    for (auto& l : labels) l = static_cast<std::uint8_t>(rng.uniform_int(nphases));
    return Partition(grid, nphases, std::move(labels));
}

} // namespace tdseg::test
