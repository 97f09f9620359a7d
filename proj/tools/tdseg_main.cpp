// Command-line driver: segment images, generate phantoms, run parameter
// sweeps and benchmarks. See README.md for usage.

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "tdseg/image_io.hpp"
#include "tdseg/oracle.hpp"
#include "tdseg/solver.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// sysexits-style codes, stable across releases.
constexpr int kExitOk = 0;
constexpr int kExitMaxIter = 2;
constexpr int kExitUsage = 64;
constexpr int kExitSoftware = 70;
constexpr int kExitIo = 74;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string format_short(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", v);
    return buf;
}

std::vector<double> parse_double_list(const std::string& text, const std::string& flag) {
    std::vector<double> values;
    std::size_t start = 0;
    while (start <= text.size()) {
        const std::size_t comma = text.find(',', start);
        const std::string token =
            text.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
        if (!token.empty()) {
            try {
                std::size_t used = 0;
                const double v = std::stod(token, &used);
                if (used != token.size()) throw std::invalid_argument(token);
                values.push_back(v);
            } catch (const std::exception&) {
                throw UsageError("invalid value '" + token + "' for " + flag);
            }
        }
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    if (values.empty()) throw UsageError("empty value list for " + flag);
    return values;
}

std::vector<int> parse_int_list(const std::string& text, const std::string& flag) {
    std::vector<int> values;
    for (double v : parse_double_list(text, flag)) {
        if (v != static_cast<int>(v)) throw UsageError("non-integer value for " + flag);
        values.push_back(static_cast<int>(v));
    }
    return values;
}

// Flags shared by segment and sweep.
struct RunOptions {
    std::string input;
    std::string output_dir = "tdseg_out";
    int phases = 2;
    std::string dt = "0.01";
    std::string lambda = "0.003";
    double tau = 0.0;
    int max_iter = 500;
    std::string init = "circles";
    std::uint64_t seed = 0;
    std::string assert_decay = "on";
    std::string truth; // optional label-map PNG for misclassification scoring
};

void add_run_flags(CLI::App* cmd, RunOptions& opt) {
    cmd->add_option("--input", opt.input, "input image (PGM/PPM/PNG)")->required();
    cmd->add_option("--output-dir", opt.output_dir, "output directory");
    cmd->add_option("--phases", opt.phases, "number of phases");
    cmd->add_option("--dt", opt.dt, "diffusion time (sweep accepts a comma list)");
    cmd->add_option("--lambda", opt.lambda, "perimeter weight (sweep accepts a comma list)");
    cmd->add_option("--tau", opt.tau, "stopping tolerance on the change measure");
    cmd->add_option("--max-iter", opt.max_iter, "iteration cap");
    cmd->add_option("--init", opt.init, "initialization: stripes|circles|random|kmeans");
    cmd->add_option("--seed", opt.seed, "seed for random/kmeans init");
    cmd->add_option("--assert-decay", opt.assert_decay, "monotone-energy check: on|off")
        ->check(CLI::IsMember({"on", "off"}));
    cmd->add_option("--truth", opt.truth, "ground-truth label map for scoring");
}

tdseg::SolverConfig solver_config(const RunOptions& opt, double dt, double lambda) {
    tdseg::SolverConfig config;
    config.nphases = opt.phases;
    config.dt = dt;
    config.lambda = lambda;
    config.tau = opt.tau;
    config.max_iter = opt.max_iter;
    config.init = tdseg::init_strategy_from_string(opt.init);
    config.seed = opt.seed;
    config.assert_decay = opt.assert_decay == "on";
    return config;
}

json config_json(const RunOptions& opt, const tdseg::SolverConfig& config) {
    return {
        {"input", opt.input},
        {"output_dir", opt.output_dir},
        {"phases", config.nphases},
        {"dt", config.dt},
        {"lambda", config.lambda},
        {"tau", config.tau},
        {"max_iter", config.max_iter},
        {"init", tdseg::to_string(config.init)},
        {"seed", config.seed},
        {"assert_decay", config.assert_decay},
    };
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw tdseg::io_error("write failed for '" + path.string() + "'");
}

struct RunResult {
    tdseg::SolveResult solve;
    double wall_seconds = 0.0;
    std::optional<double> misclassification;
};

// One full segmentation run with all file outputs into out_dir.
RunResult run_segmentation(const RunOptions& opt, double dt, double lambda,
                           const fs::path& out_dir) {
    const tdseg::SolverConfig config = solver_config(opt, dt, lambda);
    config.validate();

    const tdseg::RawImage raw = tdseg::load_image(opt.input);
    const tdseg::ImageField f = tdseg::normalize(raw);

    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw tdseg::io_error("cannot create '" + out_dir.string() + "'");

    std::string csv = "k,fidelity,perimeter,total,e_k,wall_ms\n";
    const auto t0 = std::chrono::steady_clock::now();
    RunResult run;
    run.solve = tdseg::solve(f, config, [&](const tdseg::IterationReport& r) {
        char wall[32];
        std::snprintf(wall, sizeof wall, "%.3f", r.wall_seconds * 1e3);
        csv += std::to_string(r.k) + "," + format_double(r.energy.fidelity_total) + "," +
               format_double(r.energy.perimeter_total) + "," + format_double(r.energy.total) +
               "," + format_double(r.e_k) + "," + wall + "\n";
    });
    run.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const auto palette = tdseg::default_palette(config.nphases);
    tdseg::LabelMap labels{raw.width, raw.height,
                           {run.solve.final.labels().begin(), run.solve.final.labels().end()}};

    std::vector<std::string> files;

    tdseg::write_label_map(labels, palette, (out_dir / "labels.png").string());
    files.push_back("labels.png");
    tdseg::write_contour_overlay(raw, labels, (out_dir / "overlay.png").string());
    files.push_back("overlay.png");
    for (int i = 0; i < config.nphases; ++i) {
        const std::string name = "phase_" + std::to_string(i) + ".pgm";
        tdseg::write_phase_mask(labels, i, (out_dir / name).string());
        files.push_back(name);
    }
    write_text(out_dir / "energy.csv", csv);
    files.push_back("energy.csv");

    if (run.solve.stop_reason == tdseg::StopReason::DecayViolationAbort) {
        // Diagnostic dump of both iterates around the violation.
        const tdseg::DecayViolation& v = *run.solve.violation;
        tdseg::LabelMap prev{raw.width, raw.height,
                             {v.previous.labels().begin(), v.previous.labels().end()}};
        tdseg::write_label_map(prev, palette, (out_dir / "decay_violation_prev.png").string());
        tdseg::write_label_map(labels, palette, (out_dir / "decay_violation_curr.png").string());
    }

    if (!opt.truth.empty()) {
        const tdseg::LabelMap truth = tdseg::load_label_map(opt.truth, palette);
        run.misclassification = tdseg::misclassification_rate(labels, truth);
    }

    json manifest = config_json(opt, config);
    manifest["files"] = files;
    manifest["iterations"] = run.solve.iterations();
    manifest["converged"] = run.solve.converged;
    manifest["stop_reason"] = tdseg::to_string(run.solve.stop_reason);
    manifest["wall_seconds"] = run.wall_seconds;
    manifest["final_energy"] = {
        {"fidelity", run.solve.reports.back().energy.fidelity_total},
        {"perimeter", run.solve.reports.back().energy.perimeter_total},
        {"total", run.solve.reports.back().energy.total},
    };
    if (run.misclassification) manifest["misclassification"] = *run.misclassification;
    write_text(out_dir / "manifest.json", manifest.dump(2) + "\n");

    return run;
}

int cmd_segment(const RunOptions& opt) {
    const double dt = parse_double_list(opt.dt, "--dt").at(0);
    const double lambda = parse_double_list(opt.lambda, "--lambda").at(0);
    const RunResult run = run_segmentation(opt, dt, lambda, opt.output_dir);

    if (run.solve.stop_reason == tdseg::StopReason::DecayViolationAbort) {
        const auto& v = *run.solve.violation;
        std::cerr << "tdseg: energy increased at iteration " << v.k << " ("
                  << format_double(v.energy_before) << " -> " << format_double(v.energy_after)
                  << "); diagnostic label maps written\n";
        return kExitSoftware;
    }
    std::cout << (run.solve.converged ? "converged" : "stopped") << " after "
              << run.solve.iterations() << " iterations, final energy "
              << format_short(run.solve.reports.back().energy.total) << "\n";
    if (run.misclassification)
        std::cout << "misclassification " << format_short(*run.misclassification) << "\n";
    return run.solve.converged ? kExitOk : kExitMaxIter;
}

int cmd_phantom(const std::string& kind, int size, double sigma, std::uint64_t seed,
                const std::string& output_dir) {
    const tdseg::Phantom phantom =
        tdseg::make_phantom(tdseg::phantom_kind_from_string(kind), size, sigma, seed);

    std::error_code ec;
    fs::create_directories(output_dir, ec);
    if (ec) throw tdseg::io_error("cannot create '" + output_dir + "'");

    const fs::path dir(output_dir);
    tdseg::write_image(tdseg::quantize(phantom.image), (dir / "phantom.png").string());
    tdseg::write_label_map(phantom.truth, tdseg::default_palette(phantom.nphases),
                           (dir / "truth.png").string());

    const json manifest = {
        {"kind", kind},
        {"size", size},
        {"sigma", sigma},
        {"seed", seed},
        {"phases", phantom.nphases},
        {"description", phantom.description},
        {"files", {"phantom.png", "truth.png"}},
    };
    write_text(dir / "manifest.json", manifest.dump(2) + "\n");
    std::cout << phantom.description << " -> " << output_dir << "\n";
    return kExitOk;
}

int cmd_sweep(const RunOptions& opt) {
    const std::vector<double> lambdas = parse_double_list(opt.lambda, "--lambda");
    const std::vector<double> dts = parse_double_list(opt.dt, "--dt");

    std::error_code ec;
    fs::create_directories(opt.output_dir, ec);
    if (ec) throw tdseg::io_error("cannot create '" + opt.output_dir + "'");

    std::string summary =
        "lambda,dt,iterations,converged,final_fidelity,final_perimeter,final_total,"
        "misclassification\n";
    bool all_converged = true;
    for (const double dt : dts) {
        for (const double lambda : lambdas) {
            const std::string point = "lam" + format_short(lambda) + "_dt" + format_short(dt);
            const RunResult run =
                run_segmentation(opt, dt, lambda, fs::path(opt.output_dir) / point);
            if (run.solve.stop_reason == tdseg::StopReason::DecayViolationAbort)
                return kExitSoftware;
            all_converged = all_converged && run.solve.converged;
            const auto& energy = run.solve.reports.back().energy;
            summary += format_short(lambda) + "," + format_short(dt) + "," +
                       std::to_string(run.solve.iterations()) + "," +
                       (run.solve.converged ? "1" : "0") + "," +
                       format_double(energy.fidelity_total) + "," +
                       format_double(energy.perimeter_total) + "," +
                       format_double(energy.total) + "," +
                       (run.misclassification ? format_double(*run.misclassification) : "") +
                       "\n";
            std::cout << point << ": " << run.solve.iterations() << " iterations, perimeter "
                      << format_short(energy.perimeter_total) << "\n";
        }
    }
    write_text(fs::path(opt.output_dir) / "summary.csv", summary);
    return all_converged ? kExitOk : kExitMaxIter;
}

int cmd_bench(const std::string& sizes_text, int phases, double dt, double lambda,
              std::uint64_t seed, int reps, const std::string& output_dir) {
    const std::vector<int> sizes = parse_int_list(sizes_text, "--size");
    if (reps < 5) throw UsageError("--reps must be at least 5");

    std::error_code ec;
    fs::create_directories(output_dir, ec);
    if (ec) throw tdseg::io_error("cannot create '" + output_dir + "'");

    std::string csv = "size,pixels,reps,mean_iter_ms\n";
    for (const int size : sizes) {
        const tdseg::Phantom phantom =
            tdseg::make_phantom(tdseg::PhantomKind::FourQuadrant, size, 0.2, seed);
        tdseg::SolverConfig config;
        config.nphases = phases;
        config.dt = dt;
        config.lambda = lambda;
        config.assert_decay = false; // benchmark profile
        const tdseg::ConvolutionPlan plan(tdseg::make_kernel(phantom.image.grid(), config.dt));

        tdseg::Partition u = tdseg::initialize(phantom.image, config);
        const auto iteration = [&] {
            const tdseg::PhaseStats stats = tdseg::phase_stats(phantom.image, u);
            u = tdseg::threshold(tdseg::compute_scores(phantom.image, u, stats, plan, config));
        };
        iteration();
        iteration(); // warm plan, caches and allocator

        const auto t0 = std::chrono::steady_clock::now();
        for (int r = 0; r < reps; ++r) iteration();
        const double mean_ms =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() * 1e3 /
            reps;

        char row[128];
        std::snprintf(row, sizeof row, "%d,%lld,%d,%.3f\n", size,
                      static_cast<long long>(phantom.image.grid().npixels()), reps, mean_ms);
        csv += row;
        std::cout << size << "x" << size << ": " << mean_ms << " ms/iteration\n";
    }
    write_text(fs::path(output_dir) / "bench.csv", csv);
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-phase piecewise-constant segmentation by threshold dynamics"};
    app.require_subcommand(1);

    RunOptions segment_opt;
    CLI::App* segment = app.add_subcommand("segment", "segment an image");
    add_run_flags(segment, segment_opt);

    std::string phantom_kind = "four-quadrant", phantom_dir = "tdseg_out";
    int phantom_size = 256;
    double phantom_sigma = 0.2;
    std::uint64_t phantom_seed = 0;
    CLI::App* phantom = app.add_subcommand("phantom", "generate a synthetic test image");
    phantom->add_option("--kind", phantom_kind, "two-level|four-quadrant|disks");
    phantom->add_option("--size", phantom_size, "grid edge (>= 16)");
    phantom->add_option("--sigma", phantom_sigma, "Gaussian noise level");
    phantom->add_option("--seed", phantom_seed, "noise seed");
    phantom->add_option("--output-dir", phantom_dir, "output directory");

    RunOptions sweep_opt;
    CLI::App* sweep = app.add_subcommand("sweep", "run a lambda/dt parameter sweep");
    add_run_flags(sweep, sweep_opt);

    std::string bench_sizes = "128,256,512", bench_dir = "tdseg_out";
    int bench_phases = 4, bench_reps = 7;
    double bench_dt = 0.01, bench_lambda = 0.003;
    std::uint64_t bench_seed = 0;
    CLI::App* bench = app.add_subcommand("bench", "measure per-iteration wall time");
    bench->add_option("--size", bench_sizes, "comma-separated grid edges");
    bench->add_option("--phases", bench_phases, "number of phases");
    bench->add_option("--dt", bench_dt, "diffusion time");
    bench->add_option("--lambda", bench_lambda, "perimeter weight");
    bench->add_option("--seed", bench_seed, "phantom seed");
    bench->add_option("--reps", bench_reps, "timed repetitions per size (>= 5)");
    bench->add_option("--output-dir", bench_dir, "output directory");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (segment->parsed()) return cmd_segment(segment_opt);
        if (phantom->parsed())
            return cmd_phantom(phantom_kind, phantom_size, phantom_sigma, phantom_seed,
                               phantom_dir);
        if (sweep->parsed()) return cmd_sweep(sweep_opt);
        if (bench->parsed())
            return cmd_bench(bench_sizes, bench_phases, bench_dt, bench_lambda, bench_seed,
                             bench_reps, bench_dir);
        return kExitUsage;
    } catch (const UsageError& e) {
        std::cerr << "tdseg: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "tdseg: " << e.what() << "\n";
        return kExitUsage;
    } catch (const tdseg::io_error& e) {
        std::cerr << "tdseg: " << e.what() << "\n";
        return kExitIo;
    } catch (const tdseg::unsupported_format_error& e) {
        std::cerr << "tdseg: " << e.what() << "\n";
        return kExitIo;
    } catch (const tdseg::corrupt_file_error& e) {
        std::cerr << "tdseg: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "tdseg: internal error: " << e.what() << "\n";
        return kExitSoftware;
    }
}
