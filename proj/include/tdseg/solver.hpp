#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "tdseg/energy.hpp"
#include "tdseg/field.hpp"
#include "tdseg/spectral.hpp"

namespace tdseg {

enum class InitStrategy { Stripes, Circles, Random, KMeans };

/// Parses "stripes" | "circles" | "random" | "kmeans"; throws on anything else.
InitStrategy init_strategy_from_string(std::string_view name);
std::string to_string(InitStrategy strategy);

struct SolverConfig {
    int nphases = 2;
    double dt = 0.01;
    double lambda = 0.003;
    double tau = 0.0;   ///< stop once the normalized change e_k falls to tau
    int max_iter = 500;
    InitStrategy init = InitStrategy::Circles;
    std::uint64_t seed = 0;
    bool assert_decay = true;

    void validate() const; // throws std::invalid_argument
};

/// Per-phase threshold scores phi_i = g_i + (2*lambda*sqrt(pi/dt)) * (1 - G*u_i),
/// phase-major storage.
struct ScoreField {
    Grid grid;
    int nphases = 0;
    std::vector<double> values;

    std::span<const double> phase(int i) const {
        const std::size_t n = static_cast<std::size_t>(grid.npixels());
        return {values.data() + i * n, n};
    }
};

struct IterationReport {
    int k = 0;
    EnergyBreakdown energy;      ///< evaluated at the current iterate and its means
    double e_k = 0.0;            ///< normalized L2 change from the previous iterate (0 at k=0)
    std::vector<double> means;   ///< nphases * channels
    std::int64_t changed_pixels = 0;
    double wall_seconds = 0.0;
};

enum class StopReason { ToleranceMet, MaxIter, DecayViolationAbort };
std::string to_string(StopReason reason);

/// Filled when the monotone-decay check fails; indicates an implementation
/// bug, never a data condition. Holds the offending step and the iterate the
/// energy rose from so both sides can be dumped.
struct DecayViolation {
    int k = 0;
    double energy_before = 0.0;
    double energy_after = 0.0;
    Partition previous;
};

struct SolveResult {
    Partition final;
    std::vector<IterationReport> reports;
    bool converged = false;
    StopReason stop_reason = StopReason::MaxIter;
    std::optional<DecayViolation> violation;

    /// Number of thresholding updates performed.
    int iterations() const { return reports.empty() ? 0 : reports.back().k; }
};

using ReportSink = std::function<void(const IterationReport&)>;

/// Initial partition without image data (throws for the kmeans strategy).
Partition initialize(const Grid& grid, const SolverConfig& config);

/// Initial partition; kmeans clusters the pixel values with the config seed.
Partition initialize(const ImageField& f, const SolverConfig& config);

/// Threshold scores for one linearization step. Runs exactly nphases
/// convolutions.
ScoreField compute_scores(const ImageField& f, const Partition& u, const PhaseStats& stats,
                          const ConvolutionPlan& plan, const SolverConfig& config);

/// Pointwise argmin over phases; ties go to the lowest phase index so every
/// pixel lands in exactly one phase.
Partition threshold(const ScoreField& scores);

/// Full linearize-threshold iteration until the change measure reaches tau or
/// max_iter updates have run. Emits one IterationReport per iterate (including
/// the initial one) to the optional sink.
SolveResult solve(const ImageField& f, const SolverConfig& config, const ReportSink& sink = {});

/// As above but starting from a caller-supplied partition instead of the
/// configured init strategy.
SolveResult solve(const ImageField& f, const SolverConfig& config, Partition initial,
                  const ReportSink& sink = {});

} // namespace tdseg
