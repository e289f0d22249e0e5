#pragma once

#include <string_view>
#include <variant>

#include "sysid/arx.hpp"
#include "sysid/gp_narx.hpp"
#include "sysid/mlp_narx.hpp"
#include "sysid/pnarx.hpp"

namespace sysid {

using NarxModel = std::variant<ArxModel, PolyNarxModel, GpNarxModel, MlpNarxModel>;

const LagStructure& lags_of(const NarxModel& model);
const Normalizer& normalizer_of(const NarxModel& model);
std::string_view kind_of(const NarxModel& model);  // "arx", "pnarx", "gp_narx", "mlp_narx"

/// Free-run simulation in physical units. The first p = max(n_y, n_u) outputs are
/// copied from y_init; afterwards lagged outputs come from the model's own predictions
/// and lagged inputs from `u`. Throws SimulationError at the first non-finite prediction.
Vector simulate_narx(const NarxModel& model, const Vector& u, const Vector& y_init);

/// One-step-ahead predictions from measured lagged outputs, physical units. The first
/// p entries are copied from the measurement.
Vector one_step_predict(const NarxModel& model, const TimeSeries& data);

}  // namespace sysid
