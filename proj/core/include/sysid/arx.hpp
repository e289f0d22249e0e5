#pragma once

#include <vector>

#include "sysid/data.hpp"

namespace sysid {

/// Linear ARX. `alpha` acts on the zscore-normalized regressor [H_row, 1].
struct ArxModel {
    LagStructure lags;
    Vector alpha;
    Normalizer normalizer;

    /// One-step prediction in normalized coordinates from a normalized regressor row (no bias entry).
    double predict_normalized(const Eigen::Ref<const Vector>& row) const;

    /// Difference-equation coefficients in physical units:
    /// y_t = sum a[k] y_{t-1-k} + sum b[k] u_{t-k} + bias.
    struct Physical {
        std::vector<double> a;
        std::vector<double> b;
        double bias = 0.0;
    };
    Physical physical() const;
};

/// Least-squares ARX fit (QR) on zscore-normalized data; the normalizer comes from `train`.
ArxModel fit_arx(const TimeSeries& train, const LagStructure& lags);
ArxModel fit_arx(const TimeSeries& train, const LagStructure& lags, const Normalizer& normalizer);

/// RSS below this fraction of the target energy counts as a perfect fit when scoring AIC,
/// so exact fits tie and the parameter penalty decides.
inline constexpr double kPerfectFitRelativeRss = 1e-20;

struct LagSelectionOptions {
    int max_lag = LagStructure::kMaxLag;
    bool ced_override = false;  // return (10, 10) without searching
    int workers = 1;
};

struct LagScore {
    LagStructure lags;
    double aic = 0.0;
};

struct LagSelection {
    LagStructure lags;
    double aic = 0.0;
    bool overridden = false;
    std::vector<LagScore> scores;  // every candidate that fitted, grid order
};

/// Exhaustive AIC search over n_y in 0..max_lag, n_u in 1..max_lag. Every candidate is
/// scored on the same validation rows (t >= max_lag) with one-step residuals.
/// Ties: smaller n_y + n_u, then smaller n_y.
LagSelection select_lags_aic(const TimeSeries& train, const TimeSeries& validation,
                             const LagSelectionOptions& options = {});

/// Lag structures used per benchmark (n_y, n_u): Silverbox (10, 10), W-H (15, 8),
/// EMPS (5, 16), CT (8, 9), CED (10, 10).
LagStructure default_lags(BenchmarkId id);

}  // namespace sysid
