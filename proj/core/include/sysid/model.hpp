#pragma once

#include <string>
#include <string_view>
#include <variant>

#include "sysid/lti.hpp"
#include "sysid/narx.hpp"
#include "sysid/recurrent.hpp"

namespace sysid {

/// Any fitted model the toolkit can persist and simulate.
using AnyModel = std::variant<StateSpaceModel, ArxModel, PolyNarxModel, GpNarxModel, MlpNarxModel, RecurrentModel>;

/// "state_space", "arx", "pnarx", "gp_narx", "mlp_narx" or "recurrent".
std::string_view kind_of(const AnyModel& model);

/// Free-run simulation on a record. State-space and recurrent models start from a zero
/// state; AR-family models take their initial outputs from the first p samples of `data.y`.
Vector simulate_model(const AnyModel& model, const TimeSeries& data);

}  // namespace sysid
