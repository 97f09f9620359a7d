#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "helpers.hpp"

namespace fs = std::filesystem;

namespace {

std::string cli_binary() {
    const char* bin = std::getenv("TDSEG_BIN");
    REQUIRE_MESSAGE(bin != nullptr, "TDSEG_BIN must point at the tdseg executable");
    return bin;
}

int run_cli(const std::string& args, std::string* output = nullptr) {
    const std::string command = cli_binary() + " " + args + " 2>&1";
    FILE* pipe = popen(command.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::string text;
    char buf[512];
    while (std::fgets(buf, sizeof buf, pipe)) text += buf;
    const int status = pclose(pipe);
    if (output) *output = text;
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<std::vector<std::string>> read_csv(const fs::path& path) {
    std::vector<std::vector<std::string>> rows;
    std::ifstream in(path);
    std::string line;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (!line.empty() && line.back() == ',') cells.push_back("");
        rows.push_back(cells);
    }
    return rows;
}

// energy.csv minus the wall_ms column, which is outside the determinism contract.
std::string csv_without_wall(const fs::path& path) {
    std::string out;
    for (const auto& row : read_csv(path)) {
        for (std::size_t i = 0; i + 1 < row.size(); ++i) out += row[i] + ",";
        out += "\n";
    }
    return out;
}

} // namespace

TEST_CASE("phantom command") {
    const auto dir = tdseg::test::temp_dir("cli_phantom");

    SUBCASE("writes deterministic outputs") {
        const std::string flags = "phantom --kind two-level --size 64 --sigma 0.2 --seed 7";
        CHECK(run_cli(flags + " --output-dir " + (dir / "a").string()) == 0);
        CHECK(run_cli(flags + " --output-dir " + (dir / "b").string()) == 0);
        for (const char* name : {"phantom.png", "truth.png", "manifest.json"}) {
            CHECK(fs::exists(dir / "a" / name));
            CHECK(read_file(dir / "a" / name) == read_file(dir / "b" / name));
        }
    }
    SUBCASE("noiseless phantom") {
        CHECK(run_cli("phantom --kind disks --size 32 --sigma 0 --output-dir " +
                      (dir / "c").string()) == 0);
        CHECK(fs::exists(dir / "c" / "phantom.png"));
    }
    SUBCASE("bad flags exit 64") {
        CHECK(run_cli("phantom --kind bogus --output-dir " + (dir / "d").string()) == 64);
        CHECK(run_cli("phantom --size 8 --output-dir " + (dir / "e").string()) == 64);
    }
    fs::remove_all(dir);
}

TEST_CASE("segment command") {
    const auto dir = tdseg::test::temp_dir("cli_segment");
    REQUIRE(run_cli("phantom --kind two-level --size 96 --sigma 0.2 --seed 3 --output-dir " +
                    (dir / "ph").string()) == 0);
    const std::string input = (dir / "ph" / "phantom.png").string();
    const std::string truth = (dir / "ph" / "truth.png").string();

    SUBCASE("segments a noisy phantom and reports convergence") {
        std::string output;
        const int code =
            run_cli("segment --input " + input + " --phases 2 --dt 0.03 --lambda 0.01 " +
                        "--truth " + truth + " --output-dir " + (dir / "s1").string(),
                    &output);
        CHECK(code == 0);
        CHECK(output.find("converged") != std::string::npos);

        for (const char* name :
             {"labels.png", "overlay.png", "phase_0.pgm", "phase_1.pgm", "energy.csv",
              "manifest.json"})
            CHECK(fs::exists(dir / "s1" / name));

        const auto rows = read_csv(dir / "s1" / "energy.csv");
        REQUIRE(rows.size() >= 2);
        CHECK(rows[0] == std::vector<std::string>{"k", "fidelity", "perimeter", "total", "e_k",
                                                  "wall_ms"});
        double prev = 1e300;
        for (std::size_t i = 1; i < rows.size(); ++i) {
            const double total = std::stod(rows[i][3]);
            CHECK(total <= prev + 1e-9 * (1.0 + std::abs(prev)));
            prev = total;
        }

        const std::string manifest = read_file(dir / "s1" / "manifest.json");
        CHECK(manifest.find("\"converged\": true") != std::string::npos);
        CHECK(manifest.find("\"misclassification\"") != std::string::npos);
        CHECK(manifest.find("\"stop_reason\": \"tolerance-met\"") != std::string::npos);
    }
    SUBCASE("same flags and seed give identical outputs") {
        const std::string flags = "segment --input " + input +
                                  " --phases 2 --dt 0.03 --lambda 0.01 --init circles --seed 5";
        CHECK(run_cli(flags + " --output-dir " + (dir / "r1").string()) == 0);
        CHECK(run_cli(flags + " --output-dir " + (dir / "r2").string()) == 0);
        CHECK(read_file(dir / "r1" / "labels.png") == read_file(dir / "r2" / "labels.png"));
        CHECK(csv_without_wall(dir / "r1" / "energy.csv") ==
              csv_without_wall(dir / "r2" / "energy.csv"));
    }
    SUBCASE("four phases on a quadrant phantom") {
        REQUIRE(run_cli("phantom --kind four-quadrant --size 96 --sigma 0.2 --seed 5 "
                        "--output-dir " +
                        (dir / "ph4").string()) == 0);
        const int code = run_cli("segment --input " + (dir / "ph4" / "phantom.png").string() +
                                 " --phases 4 --dt 0.01 --lambda 0.003 --truth " +
                                 (dir / "ph4" / "truth.png").string() + " --output-dir " +
                                 (dir / "s4p").string());
        CHECK(code == 0);
        for (int i = 0; i < 4; ++i)
            CHECK(fs::exists(dir / "s4p" / ("phase_" + std::to_string(i) + ".pgm")));

        const std::string manifest = read_file(dir / "s4p" / "manifest.json");
        const auto pos = manifest.find("\"misclassification\": ");
        REQUIRE(pos != std::string::npos);
        CHECK(std::stod(manifest.substr(pos + 21)) < 0.01);
    }
    SUBCASE("missing input exits 74") {
        CHECK(run_cli("segment --input " + (dir / "nope.png").string() + " --output-dir " +
                      (dir / "s2").string()) == 74);
    }
    SUBCASE("bad flag values exit 64") {
        CHECK(run_cli("segment --input " + input + " --init bogus --output-dir " +
                      (dir / "s3").string()) == 64);
        CHECK(run_cli("segment --input " + input + " --phases 1 --output-dir " +
                      (dir / "s4").string()) == 64);
        CHECK(run_cli("segment", nullptr) == 64); // --input is required
    }
    fs::remove_all(dir);
}

TEST_CASE("sweep command") {
    const auto dir = tdseg::test::temp_dir("cli_sweep");
    REQUIRE(run_cli("phantom --kind two-level --size 96 --sigma 0.2 --seed 3 --output-dir " +
                    (dir / "ph").string()) == 0);
    const std::string input = (dir / "ph" / "phantom.png").string();
    const std::string truth = (dir / "ph" / "truth.png").string();

    SUBCASE("lambda sweep orders perimeters") {
        const int code = run_cli("sweep --input " + input +
                                 " --phases 2 --dt 0.03 --lambda 0.001,0.01,0.025 --truth " +
                                 truth + " --output-dir " + (dir / "sw").string());
        CHECK(code == 0);
        for (const char* point : {"lam0.001_dt0.03", "lam0.01_dt0.03", "lam0.025_dt0.03"})
            CHECK(fs::exists(dir / "sw" / point / "labels.png"));

        const auto rows = read_csv(dir / "sw" / "summary.csv");
        REQUIRE(rows.size() == 4);
        double per_low = 0, per_mid = 0, per_high = 0;
        for (std::size_t i = 1; i < rows.size(); ++i) {
            const double lambda = std::stod(rows[i][0]);
            const double perimeter = std::stod(rows[i][5]);
            if (lambda == 0.001) per_low = perimeter;
            if (lambda == 0.01) per_mid = perimeter;
            if (lambda == 0.025) per_high = perimeter;
        }
        CHECK(per_high <= per_mid);
        CHECK(per_mid <= per_low);
    }
    SUBCASE("single point behaves like segment") {
        CHECK(run_cli("sweep --input " + input +
                      " --phases 2 --dt 0.03 --lambda 0.01 --output-dir " +
                      (dir / "single").string()) == 0);
        CHECK(fs::exists(dir / "single" / "summary.csv"));
        CHECK(fs::exists(dir / "single" / "lam0.01_dt0.03" / "energy.csv"));
    }
    SUBCASE("empty sweep list exits 64") {
        CHECK(run_cli("sweep --input " + input + " --lambda \"\" --output-dir " +
                      (dir / "e").string()) == 64);
    }
    fs::remove_all(dir);
}

TEST_CASE("bench command") {
    const auto dir = tdseg::test::temp_dir("cli_bench");

    SUBCASE("writes one row per size") {
        CHECK(run_cli("bench --size 32,48 --phases 3 --reps 5 --output-dir " +
                      (dir / "b").string()) == 0);
        const auto rows = read_csv(dir / "b" / "bench.csv");
        REQUIRE(rows.size() == 3);
        CHECK(rows[0] == std::vector<std::string>{"size", "pixels", "reps", "mean_iter_ms"});
        CHECK(rows[1][0] == "32");
        CHECK(rows[2][0] == "48");
    }
    SUBCASE("tiny sizes exit 64") {
        CHECK(run_cli("bench --size 8 --output-dir " + (dir / "c").string()) == 64);
    }
    fs::remove_all(dir);
}

TEST_CASE("top-level usage errors") {
    CHECK(run_cli("") == 64);
    CHECK(run_cli("frobnicate") == 64);
    std::string output;
    CHECK(run_cli("--help", &output) == 0);
    CHECK(output.find("segment") != std::string::npos);
}
