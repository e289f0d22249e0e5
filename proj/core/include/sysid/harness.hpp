#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "sysid/manifest.hpp"
#include "sysid/model.hpp"
#include "sysid/report.hpp"

namespace sysid {

/// Model identifiers in table order.
inline constexpr std::array<std::string_view, 10> kModelIds = {
    "lti_ss", "lti_arx", "pnarx", "gp_narx", "mlp_narx", "mlp_fir", "rnn", "gru", "lstm", "olstm"};

bool is_model_id(std::string_view id);

inline constexpr int kRunConfigVersion = 1;

struct RunConfig {
    int format_version = kRunConfigVersion;
    std::filesystem::path manifest;
    std::vector<BenchmarkId> benchmarks;
    std::vector<std::string> models;
    nlohmann::json overrides = nlohmann::json::object();  // { model_id: { key: value } }
    std::optional<std::uint64_t> seed;
    double val_fraction = 0.2;
    std::size_t burn_in = 0;
    std::filesystem::path output_dir = "runs";
    int workers = 1;
    bool resume = false;
    std::string lag_policy = "table";  // "table" or "aic"
    std::vector<std::string> inject_blowup;  // "benchmark/model" cells whose test inputs get a NaN

    /// Throws ConfigError for unknown model ids or override keys, a missing seed, or bad ranges.
    void validate() const;
};

/// Relative paths inside the document resolve against `base_dir`.
RunConfig parse_run_config(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
RunConfig load_run_config(const std::filesystem::path& path);
nlohmann::json to_json(const RunConfig& config);

/// Rejects override keys the model does not understand.
void check_overrides(std::string_view model_id, const nlohmann::json& overrides);

struct CellFit {
    AnyModel model;
    nlohmann::json hyperparameters = nlohmann::json::object();
};

/// Fits one model id on training material only.
CellFit fit_cell(BenchmarkId benchmark, std::string_view model_id, const TrainingData& data,
                 const nlohmann::json& overrides, std::uint64_t seed, std::string_view lag_policy = "table",
                 int workers = 1);

/// Largest lag the model's regressor can use, for split length checks.
int required_lag(BenchmarkId benchmark, std::string_view model_id, const nlohmann::json& overrides,
                 std::string_view lag_policy);

/// Records which stage touched which data. Thread safe.
class AccessLog {
public:
    struct Event {
        std::string cell;
        std::string what;
    };

    void record(std::string cell, std::string what);
    std::vector<Event> events() const;

private:
    mutable std::mutex mutex_;
    std::vector<Event> events_;
};

/// Runs the benchmark x model grid. Each cell sees only its train/validation data while
/// fitting; test records are loaded afterwards, one at a time, for simulation and RMSE.
/// Cell failures are written into that cell's report. Reports are persisted under
/// output_dir/reports as each cell finishes and indexed in output_dir/index.jsonl.
/// Returned in (benchmark, model) table order.
std::vector<EvalReport> run_benchmark(const RunConfig& config, AccessLog* log = nullptr);

std::string cell_name(BenchmarkId benchmark, std::string_view model_id);

/// Loads every report under output_dir/reports, in table order.
std::vector<EvalReport> load_reports(const std::filesystem::path& output_dir);

}  // namespace sysid
