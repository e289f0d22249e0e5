#pragma once

#include "sysid/common.hpp"

namespace sysid {

/// sqrt(mean((y - y_hat)^2)) over indices >= burn_in.
double compute_rmse(const Eigen::Ref<const Vector>& y, const Eigen::Ref<const Vector>& y_hat,
                    std::size_t burn_in = 0);

struct AicScore {
    double value = 0.0;
    bool floored = false;  // rss was zero and got floored at kAicRssFloor
};

inline constexpr double kAicRssFloor = 1e-300;

/// N ln(rss / N) + 2k.
AicScore compute_aic(double rss, std::size_t n, std::size_t k);

}  // namespace sysid
