#include "sysid/metrics.hpp"

#include <cmath>

namespace sysid {

double compute_rmse(const Eigen::Ref<const Vector>& y, const Eigen::Ref<const Vector>& y_hat, std::size_t burn_in) {
    if (y.size() != y_hat.size()) {
        throw Error("compute_rmse: length mismatch (" + std::to_string(y.size()) + " vs " +
                    std::to_string(y_hat.size()) + ")");
    }
    const auto n = static_cast<std::size_t>(y.size());
    if (burn_in >= n) throw Error("compute_rmse: burn_in must be smaller than the series length");
    const auto count = static_cast<Eigen::Index>(n - burn_in);
    return std::sqrt((y.tail(count) - y_hat.tail(count)).squaredNorm() / static_cast<double>(count));
}

AicScore compute_aic(double rss, std::size_t n, std::size_t k) {
    if (n == 0) throw Error("compute_aic: sample count must be positive");
    if (!(rss >= 0.0) || !std::isfinite(rss)) throw Error("compute_aic: residual sum of squares must be >= 0");
    AicScore s;
    if (rss <= 0.0) {
        rss = kAicRssFloor;
        s.floored = true;
    }
    const double nd = static_cast<double>(n);
    s.value = nd * std::log(rss / nd) + 2.0 * static_cast<double>(k);
    return s;
}

}  // namespace sysid
