#pragma once

#include <filesystem>

#include <nlohmann/json.hpp>

#include "sysid/model.hpp"
#include "sysid/report.hpp"

namespace sysid {

inline constexpr int kModelFormatVersion = 1;
inline constexpr int kReportFormatVersion = 1;

nlohmann::json to_json(const Normalizer& normalizer);
Normalizer normalizer_from_json(const nlohmann::json& j);

/// Every double is written with round-trip precision, so save -> load is exact.
nlohmann::json model_to_json(const AnyModel& model);
AnyModel model_from_json(const nlohmann::json& j);

void save_model(const std::filesystem::path& path, const AnyModel& model);
AnyModel load_model(const std::filesystem::path& path);

nlohmann::json report_to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& j);

void save_report(const std::filesystem::path& path, const EvalReport& report);
EvalReport load_report(const std::filesystem::path& path);

/// Reads a whole text file; throws DataError when it cannot be opened.
std::string read_text_file(const std::filesystem::path& path);
/// Writes through a temporary file and rename, so readers never see a partial file.
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace sysid
