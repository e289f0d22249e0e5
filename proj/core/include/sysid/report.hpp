#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace sysid {

struct TestScore {
    std::string name;
    double rmse = 0.0;          // physical units
    double display_rmse = 0.0;  // rmse * report_scale
    bool failed = false;
    std::optional<std::size_t> blowup_index;
    std::string error;
};

/// Outcome of one (benchmark, model) grid cell.
struct EvalReport {
    std::string benchmark;
    std::string model;
    std::string report_unit;
    double report_scale = 1.0;
    std::vector<TestScore> scores;
    nlohmann::json hyperparameters = nlohmann::json::object();
    double train_seconds = 0.0;
    std::uint64_t seed = 0;
    std::string failure;  // cell-level failure (fit error); empty on success
    std::string version;

    bool failed() const { return !failure.empty(); }
    const TestScore* score(const std::string& test_name) const {
        for (const auto& s : scores) {
            if (s.name == test_name) return &s;
        }
        return nullptr;
    }
};

}  // namespace sysid
