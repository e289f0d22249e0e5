#pragma once

#include <vector>

#include "sysid/data.hpp"

namespace sysid {

/// Training range of one regressor column. Columns with min == max are inactive
/// (left out of the expansion; the global bias absorbs them).
struct ColumnRange {
    double min = -1.0;
    double max = 1.0;
    bool active = true;
};

inline constexpr int kMaxPolyDegree = 7;

/// Legendre polynomial P_n(x) by the three-term recurrence.
double legendre(int n, double x);

/// Per-column (min, max) of a regressor matrix without bias column.
std::vector<ColumnRange> column_ranges(const Eigen::Ref<const Matrix>& H);

/// Maps each active column to [-1, 1] with its range and emits P_1..P_degree of it,
/// column by column, then one constant column. No clipping outside the range.
/// `H` excludes the bias column.
Matrix legendre_features(const Eigen::Ref<const Matrix>& H, int degree, const std::vector<ColumnRange>& ranges);

struct PolyNarxModel {
    LagStructure lags;
    int degree = 1;
    std::vector<ColumnRange> ranges;
    Vector alpha;
    Normalizer normalizer;

    std::size_t feature_count() const;
    double predict_normalized(const Eigen::Ref<const Vector>& row) const;
};

struct PolyNarxFit {
    PolyNarxModel model;
    std::vector<double> aic_by_degree;  // index 0 is degree 1; NaN where the fit failed
};

/// Least squares at a fixed degree on zscore-normalized training data.
PolyNarxModel fit_pnarx_degree(const TimeSeries& train, const LagStructure& lags, int degree,
                               const Normalizer& normalizer);

/// Fits degrees 1..max_degree and keeps the AIC minimizer on validation one-step residuals.
PolyNarxFit fit_pnarx(const TimeSeries& train, const TimeSeries& validation, const LagStructure& lags,
                      int max_degree = kMaxPolyDegree);

}  // namespace sysid
