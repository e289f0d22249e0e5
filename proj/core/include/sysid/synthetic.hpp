#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "sysid/data.hpp"

namespace sysid {

/// y_t = sum_k a[k-1] y_{t-k} + sum_j b[j] u_{t-input_delay-j}
struct KnownArx {
    std::vector<double> a;
    std::vector<double> b;
    int input_delay = 1;
};

/// Poles radius * exp(+-i angle): y_t = 2 r cos(angle) y_{t-1} - r^2 y_{t-2} + gain u_{t-1}
struct LinearSecondOrder {
    double radius = 0.9;
    double angle = 0.2;
    double gain = 1.0;
};

/// m x'' + c x' + k x + k3 x^3 = u (zero-order hold), y = x.
struct DuffingRk4 {
    double mass = 1.0;
    double damping = 0.5;
    double stiffness = 1.0;
    double cubic_stiffness = 1.0;
};

/// Two gravity-drained tanks in series with overflow at `level_max`:
///   h1' = -k1 sqrt(h1) + k4 u,  h2' = k2 sqrt(h1) - k3 sqrt(h2),  y = h2.
struct CascadedTanksOde {
    double k1 = 0.5;
    double k2 = 0.5;
    double k3 = 0.5;
    double k4 = 0.5;
    double h1_0 = 0.0;
    double h2_0 = 0.0;
    double level_max = 10.0;
};

using SystemParameters = std::variant<KnownArx, LinearSecondOrder, DuffingRk4, CascadedTanksOde>;

struct SyntheticSystemSpec {
    SystemParameters system;
    double noise_std = 0.0;  // additive white output noise
    std::uint64_t seed = 0;
    bool allow_unstable = false;
};

inline constexpr int kIntegratorSubsteps = 10;

/// Simulates the oracle system on `input`. Deterministic given the seed.
/// Throws ConfigError for an unstable linear spec unless allow_unstable is set.
TimeSeries generate_synthetic(const SyntheticSystemSpec& spec, const Vector& input, double sample_time);

/// Largest pole magnitude of the autoregressive part.
double arx_spectral_radius(const std::vector<double>& a);

}  // namespace sysid
