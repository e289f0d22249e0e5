#include "sysid/pnarx.hpp"

#include <cmath>
#include <limits>

#include "sysid/arx.hpp"
#include "sysid/linalg.hpp"
#include "sysid/metrics.hpp"

namespace sysid {

double legendre(int n, double x) {
    if (n == 0) return 1.0;
    double prev = 1.0;
    double cur = x;
    for (int k = 1; k < n; ++k) {
        const double next = ((2.0 * k + 1.0) * x * cur - k * prev) / (k + 1.0);
        prev = cur;
        cur = next;
    }
    return cur;
}

std::vector<ColumnRange> column_ranges(const Eigen::Ref<const Matrix>& H) {
    std::vector<ColumnRange> ranges(static_cast<std::size_t>(H.cols()));
    for (Eigen::Index j = 0; j < H.cols(); ++j) {
        auto& r = ranges[static_cast<std::size_t>(j)];
        r.min = H.col(j).minCoeff();
        r.max = H.col(j).maxCoeff();
        r.active = r.min < r.max;
    }
    return ranges;
}

Matrix legendre_features(const Eigen::Ref<const Matrix>& H, int degree, const std::vector<ColumnRange>& ranges) {
    if (degree < 1 || degree > kMaxPolyDegree) throw ConfigError("legendre_features: degree must be in 1..7");
    if (ranges.size() != static_cast<std::size_t>(H.cols())) {
        throw Error("legendre_features: one range per regressor column required");
    }
    Eigen::Index active = 0;
    for (std::size_t j = 0; j < ranges.size(); ++j) {
        if (!ranges[j].active) continue;
        if (!(ranges[j].min < ranges[j].max)) {
            throw NumericalError("legendre_features: degenerate range on an active column", j);
        }
        ++active;
    }
    Matrix P(H.rows(), degree * active + 1);
    Eigen::Index col = 0;
    for (std::size_t j = 0; j < ranges.size(); ++j) {
        const auto& r = ranges[j];
        if (!r.active) continue;
        const double centre = 0.5 * (r.max + r.min);
        const double half = 0.5 * (r.max - r.min);
        for (Eigen::Index i = 0; i < H.rows(); ++i) {
            const double x = (H(i, static_cast<Eigen::Index>(j)) - centre) / half;
            double prev = 1.0;
            double cur = x;
            P(i, col) = cur;
            for (int k = 1; k < degree; ++k) {
                const double next = ((2.0 * k + 1.0) * x * cur - k * prev) / (k + 1.0);
                prev = cur;
                cur = next;
                P(i, col + k) = cur;
            }
        }
        col += degree;
    }
    P.col(col).setOnes();
    return P;
}

std::size_t PolyNarxModel::feature_count() const {
    std::size_t active = 0;
    for (const auto& r : ranges) active += r.active ? 1 : 0;
    return static_cast<std::size_t>(degree) * active + 1;
}

double PolyNarxModel::predict_normalized(const Eigen::Ref<const Vector>& row) const {
    const Matrix features = legendre_features(row.transpose(), degree, ranges);
    return features.row(0).dot(alpha);
}

PolyNarxModel fit_pnarx_degree(const TimeSeries& train, const LagStructure& lags, int degree,
                               const Normalizer& normalizer) {
    const Regression r = build_hankel(normalizer.apply(train), lags);
    const auto H = r.H.leftCols(lags.width());
    PolyNarxModel m;
    m.lags = lags;
    m.degree = degree;
    m.normalizer = normalizer;
    m.ranges = column_ranges(H);
    m.alpha = solve_least_squares_qr(legendre_features(H, degree, m.ranges), r.targets);
    return m;
}

PolyNarxFit fit_pnarx(const TimeSeries& train, const TimeSeries& validation, const LagStructure& lags,
                      int max_degree) {
    if (max_degree < 1 || max_degree > kMaxPolyDegree) throw ConfigError("fit_pnarx: max_degree must be in 1..7");
    const Normalizer norm = fit_normalizer(train, Normalizer::Mode::zscore);
    const Regression val = build_hankel(norm.apply(validation), lags);
    const auto H_val = val.H.leftCols(lags.width());
    const double rss_floor =
        kPerfectFitRelativeRss * std::max(val.targets.squaredNorm(), std::numeric_limits<double>::min());

    PolyNarxFit fit;
    double best_aic = std::numeric_limits<double>::infinity();
    bool found = false;
    for (int degree = 1; degree <= max_degree; ++degree) {
        double aic = std::numeric_limits<double>::quiet_NaN();
        try {
            PolyNarxModel m = fit_pnarx_degree(train, lags, degree, norm);
            const double rss = (legendre_features(H_val, degree, m.ranges) * m.alpha - val.targets).squaredNorm();
            if (std::isfinite(rss)) {
                aic = compute_aic(std::max(rss, rss_floor), static_cast<std::size_t>(val.targets.size()),
                                  m.feature_count())
                          .value;
                if (aic < best_aic) {
                    best_aic = aic;
                    fit.model = std::move(m);
                    found = true;
                }
            }
        } catch (const NumericalError&) {
        }
        fit.aic_by_degree.push_back(aic);
    }
    if (!found) throw Error("fit_pnarx: no polynomial degree could be fitted");
    return fit;
}

}  // namespace sysid
