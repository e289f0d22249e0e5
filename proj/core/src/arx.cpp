#include "sysid/arx.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <tuple>

#include "sysid/linalg.hpp"
#include "sysid/metrics.hpp"
#include "sysid/parallel.hpp"

namespace sysid {

double ArxModel::predict_normalized(const Eigen::Ref<const Vector>& row) const {
    return alpha.head(lags.width()).dot(row) + alpha[lags.width()];
}

ArxModel::Physical ArxModel::physical() const {
    const auto& n = normalizer;
    Physical p;
    double a_sum = 0.0;
    double b_sum = 0.0;
    for (int k = 0; k < lags.n_y; ++k) {
        p.a.push_back(alpha[k]);
        a_sum += alpha[k];
    }
    for (int k = 0; k < lags.n_u; ++k) {
        const double b = alpha[lags.n_y + k] * n.y_scale / n.u_scale;
        p.b.push_back(b);
        b_sum += b;
    }
    p.bias = n.y_scale * alpha[lags.width()] + n.y_mean * (1.0 - a_sum) - b_sum * n.u_mean;
    return p;
}

ArxModel fit_arx(const TimeSeries& train, const LagStructure& lags, const Normalizer& normalizer) {
    ArxModel m;
    m.lags = lags;
    m.normalizer = normalizer;
    const Regression r = build_hankel(normalizer.apply(train), lags);
    m.alpha = solve_least_squares_qr(r.H, r.targets);
    return m;
}

ArxModel fit_arx(const TimeSeries& train, const LagStructure& lags) {
    return fit_arx(train, lags, fit_normalizer(train, Normalizer::Mode::zscore));
}

LagStructure default_lags(BenchmarkId id) {
    switch (id) {
        case BenchmarkId::silverbox: return {10, 10};
        case BenchmarkId::wiener_hammerstein: return {15, 8};
        case BenchmarkId::emps: return {5, 16};
        case BenchmarkId::cascaded_tanks: return {8, 9};
        case BenchmarkId::ced: return {10, 10};
    }
    return {10, 10};
}

namespace {

// Regression rows restricted to t >= first_row so every candidate sees the same targets.
Regression aligned_hankel(const TimeSeries& ts, const LagStructure& lags, int first_row) {
    Regression full = build_hankel(ts, lags);
    const Eigen::Index skip = first_row - lags.p();
    Regression r;
    r.H = full.H.bottomRows(full.H.rows() - skip);
    r.targets = full.targets.tail(full.targets.size() - skip);
    return r;
}

}  // namespace

LagSelection select_lags_aic(const TimeSeries& train, const TimeSeries& validation,
                             const LagSelectionOptions& options) {
    LagSelection sel;
    if (options.ced_override) {
        sel.lags = {10, 10};
        sel.overridden = true;
        return sel;
    }
    const int max_lag = options.max_lag;
    if (max_lag < 1 || max_lag > LagStructure::kMaxLag) throw ConfigError("select_lags_aic: max_lag out of range");
    if (static_cast<int>(validation.size()) <= max_lag + 1) {
        throw DataError("select_lags_aic: validation record shorter than the largest candidate lag");
    }

    const Normalizer norm = fit_normalizer(train, Normalizer::Mode::zscore);
    const TimeSeries val_n = norm.apply(validation);

    std::vector<LagStructure> grid;
    for (int ny = 0; ny <= max_lag; ++ny) {
        for (int nu = 1; nu <= max_lag; ++nu) grid.push_back({ny, nu});
    }
    const Eigen::Index n_val = static_cast<Eigen::Index>(validation.size()) - max_lag;
    const double energy = val_n.y.tail(n_val).squaredNorm();
    const double rss_floor = kPerfectFitRelativeRss * std::max(energy, std::numeric_limits<double>::min());

    std::vector<std::optional<double>> aic(grid.size());
    parallel_for(grid.size(), options.workers, [&](std::size_t i) {
        try {
            const ArxModel m = fit_arx(train, grid[i], norm);
            const Regression r = aligned_hankel(val_n, grid[i], max_lag);
            const double rss = (r.H * m.alpha - r.targets).squaredNorm();
            if (!std::isfinite(rss)) return;
            aic[i] = compute_aic(std::max(rss, rss_floor), static_cast<std::size_t>(n_val),
                                 static_cast<std::size_t>(grid[i].width() + 1))
                         .value;
        } catch (const Error&) {
            // candidate could not be fitted on this record; it simply drops out
        }
    });

    std::optional<std::size_t> best;
    auto key = [&](std::size_t i) {
        return std::make_tuple(*aic[i], grid[i].width(), grid[i].n_y);
    };
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!aic[i]) continue;
        sel.scores.push_back({grid[i], *aic[i]});
        if (!best || key(i) < key(*best)) best = i;
    }
    if (!best) throw Error("select_lags_aic: every candidate lag structure failed to fit");
    sel.lags = grid[*best];
    sel.aic = *aic[*best];
    return sel;
}

}  // namespace sysid
