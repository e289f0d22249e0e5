#pragma once

#include <string>
#include <vector>

namespace sysid {

struct SelftestResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

/// Quick invariant checks on synthetic data (a few seconds).
std::vector<SelftestResult> run_selftest();

}  // namespace sysid
