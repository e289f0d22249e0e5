#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "sysid/report.hpp"

namespace sysid {

enum class TableFormat { csv, markdown };

/// Three significant digits in fixed notation ("6.96", "0.413", "0.100").
std::string format_display(double value);

/// Models as rows, benchmark test sets as columns, both in the reference table order.
/// Only rows and columns present in `reports` appear; missing cells are "-", failed
/// simulations "fail". Output depends only on the report contents.
std::string emit_table(const std::vector<EvalReport>& reports, TableFormat format);

void write_table(const std::filesystem::path& path, const std::vector<EvalReport>& reports, TableFormat format);

}  // namespace sysid
