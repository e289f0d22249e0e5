#pragma once

// Small on-disk benchmark built from oracle systems, for harness-level tests.

#include <filesystem>
#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "oracles.hpp"
#include "sysid/data.hpp"
#include "sysid/harness.hpp"
#include "sysid/synthetic.hpp"

namespace fixture {

namespace fs = std::filesystem;

inline Eigen::VectorXd staircase(std::size_t n, std::uint64_t seed, std::size_t hold, double lo, double hi) {
    const Eigen::VectorXd levels = oracle::uniform(n / hold + 1, seed, lo, hi);
    Eigen::VectorXd u(static_cast<Eigen::Index>(n));
    for (std::size_t t = 0; t < n; ++t) u[static_cast<Eigen::Index>(t)] = levels[static_cast<Eigen::Index>(t / hold)];
    return u;
}

/// Writes tanks.csv (cascaded_tanks) and drive_low/high.csv (ced) plus manifest.json under `dir`.
inline fs::path write_mini_benchmark(const fs::path& dir) {
    fs::create_directories(dir);
    sysid::CascadedTanksOde tanks;
    tanks.h1_0 = 1.0;
    tanks.h2_0 = 1.0;
    const auto t = sysid::generate_synthetic({tanks, 0.01, 1}, staircase(700, 2, 15, 0.5, 2.5), 1.0);
    sysid::write_csv(dir / "tanks.csv", t);

    for (auto [name, seed] : {std::pair{"drive_low", 3}, std::pair{"drive_high", 4}}) {
        const auto d = sysid::generate_synthetic({sysid::DuffingRk4{1.0, 0.8, 1.0, 0.5}, 0.005, 9},
                                                 oracle::gaussian(300, static_cast<std::uint64_t>(seed)), 0.2);
        sysid::write_csv(dir / (std::string(name) + ".csv"), d);
    }

    const nlohmann::json manifest = {
        {"format_version", 1},
        {"sources", nlohmann::json::array()},
        {"benchmarks",
         {{{"benchmark_id", "cascaded_tanks"},
           {"sample_time", 1.0},
           {"report_unit", "V"},
           {"report_scale", 1},
           {"train", {{"file", "tanks.csv"}, {"rows", {0, 450}}}},
           {"tests", {{{"name", "test"}, {"source", {{"file", "tanks.csv"}, {"rows", {450, 700}}}}}}}},
          {{"benchmark_id", "ced"},
           {"sample_time", 0.2},
           {"report_unit", "ticks/s"},
           {"report_scale", 1},
           {"train", {{{"file", "drive_low.csv"}, {"rows", {0, 200}}}, {{"file", "drive_high.csv"}, {"rows", {0, 200}}}}},
           {"tests",
            {{{"name", "test1"}, {"source", {{"file", "drive_low.csv"}, {"rows", {200, 300}}}}},
             {{"name", "test2"}, {"source", {{"file", "drive_high.csv"}, {"rows", {200, 300}}}}}}}}}}};
    std::ofstream(dir / "manifest.json") << manifest.dump(2);
    return dir / "manifest.json";
}

/// A quick grid over both mini benchmarks with reduced training budgets.
inline sysid::RunConfig quick_config(const fs::path& manifest, const fs::path& out, int workers) {
    sysid::RunConfig c;
    c.manifest = manifest;
    c.benchmarks = {sysid::BenchmarkId::cascaded_tanks, sysid::BenchmarkId::ced};
    c.models = {"lti_ss", "lti_arx", "pnarx", "gp_narx", "mlp_narx", "mlp_fir", "gru"};
    c.overrides = {
        {"lti_ss", {{"pem_steps", 100}}},
        {"lti_arx", {{"n_y", 2}, {"n_u", 2}}},
        {"pnarx", {{"n_y", 2}, {"n_u", 2}, {"max_degree", 4}}},
        {"gp_narx", {{"n_y", 2}, {"n_u", 2}, {"restarts", 2}, {"steps", 40}, {"max_rows", 150}}},
        {"mlp_narx", {{"n_y", 2}, {"n_u", 2}, {"hidden_sizes", {2, 5}}, {"restarts", 2}, {"iterations", 300}}},
        {"mlp_fir", {{"look_backs", {5}}, {"hidden_sizes", {4}}, {"restarts", 2}, {"epochs", 20}, {"length", 40}, {"stride", 20}, {"washout", 5}}},
        {"gru", {{"look_backs", {1}}, {"hidden_sizes", {3}}, {"restarts", 2}, {"epochs", 20}, {"length", 40}, {"stride", 20}, {"washout", 5}}},
    };
    c.seed = 20240601;
    c.output_dir = out;
    c.workers = workers;
    return c;
}

}  // namespace fixture
