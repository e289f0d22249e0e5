#include "sysid/narx.hpp"

#include <cmath>

namespace sysid {

const LagStructure& lags_of(const NarxModel& model) {
    return std::visit([](const auto& m) -> const LagStructure& { return m.lags; }, model);
}

const Normalizer& normalizer_of(const NarxModel& model) {
    return std::visit([](const auto& m) -> const Normalizer& { return m.normalizer; }, model);
}

std::string_view kind_of(const NarxModel& model) {
    static constexpr std::string_view names[] = {"arx", "pnarx", "gp_narx", "mlp_narx"};
    return names[model.index()];
}

namespace {

template <typename Fn>
Vector run_recursion(const NarxModel& model, const Vector& u, const Vector& y_seed, bool feed_back, Fn&& measured_y) {
    const LagStructure& lags = lags_of(model);
    const Normalizer& norm = normalizer_of(model);
    const auto n = u.size();
    const Eigen::Index p = lags.p();
    if (n < p) throw Error("simulate_narx: input shorter than the lag horizon");

    const Vector u_n = norm.apply_u(u);
    Vector y_n = Vector::Zero(n);
    for (Eigen::Index t = 0; t < p; ++t) y_n[t] = norm.apply_y(y_seed[t]);
    Vector out(n);
    out.head(p) = y_seed.head(p);
    Vector row(lags.width());
    std::visit(
        [&](const auto& m) {
            for (Eigen::Index t = p; t < n; ++t) {
                fill_regressor(y_n, u_n, static_cast<std::size_t>(t), lags, row);
                const double pred = m.predict_normalized(row);
                if (!std::isfinite(pred)) throw SimulationError(static_cast<std::size_t>(t));
                out[t] = norm.invert_y(pred);
                if (!std::isfinite(out[t])) throw SimulationError(static_cast<std::size_t>(t));
                y_n[t] = feed_back ? pred : norm.apply_y(measured_y(t));
            }
        },
        model);
    return out;
}

}  // namespace

Vector simulate_narx(const NarxModel& model, const Vector& u, const Vector& y_init) {
    if (y_init.size() != lags_of(model).p()) {
        throw Error("simulate_narx: y_init must hold exactly max(n_y, n_u) = " + std::to_string(lags_of(model).p()) +
                    " samples");
    }
    return run_recursion(model, u, y_init, true, [](Eigen::Index) { return 0.0; });
}

Vector one_step_predict(const NarxModel& model, const TimeSeries& data) {
    if (data.u.size() != data.y.size()) throw Error("one_step_predict: u and y lengths differ");
    return run_recursion(model, data.u, data.y, false, [&](Eigen::Index t) { return data.y[t]; });
}

}  // namespace sysid
