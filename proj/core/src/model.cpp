#include "sysid/model.hpp"

namespace sysid {

std::string_view kind_of(const AnyModel& model) {
    static constexpr std::string_view names[] = {"state_space", "arx", "pnarx", "gp_narx", "mlp_narx", "recurrent"};
    return names[model.index()];
}

namespace {

template <typename T>
Vector simulate_one(const T& m, const TimeSeries& data) {
    if constexpr (std::is_same_v<T, StateSpaceModel>) {
        return simulate_ss(m, data.u);
    } else if constexpr (std::is_same_v<T, RecurrentModel>) {
        return simulate_rnn(m, data.u);
    } else {
        const auto p = m.lags.p();
        if (data.y.size() < p) throw DataError("simulate_model: record shorter than the lag horizon");
        return simulate_narx(NarxModel{m}, data.u, data.y.head(p));
    }
}

}  // namespace

Vector simulate_model(const AnyModel& model, const TimeSeries& data) {
    return std::visit([&](const auto& m) { return simulate_one(m, data); }, model);
}

}  // namespace sysid
