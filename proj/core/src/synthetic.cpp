#include "sysid/synthetic.hpp"

#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>

namespace sysid {

double arx_spectral_radius(const std::vector<double>& a) {
    if (a.empty()) return 0.0;
    const auto n = static_cast<Eigen::Index>(a.size());
    Matrix companion = Matrix::Zero(n, n);
    for (Eigen::Index k = 0; k < n; ++k) companion(0, k) = a[static_cast<std::size_t>(k)];
    for (Eigen::Index k = 1; k < n; ++k) companion(k, k - 1) = 1.0;
    return companion.eigenvalues().cwiseAbs().maxCoeff();
}

namespace {

Vector simulate_arx(const KnownArx& s, const Vector& u) {
    const Eigen::Index n = u.size();
    Vector y = Vector::Zero(n);
    for (Eigen::Index t = 0; t < n; ++t) {
        double v = 0.0;
        for (std::size_t k = 1; k <= s.a.size(); ++k) {
            if (t - static_cast<Eigen::Index>(k) >= 0) v += s.a[k - 1] * y[t - static_cast<Eigen::Index>(k)];
        }
        for (std::size_t j = 0; j < s.b.size(); ++j) {
            const Eigen::Index idx = t - s.input_delay - static_cast<Eigen::Index>(j);
            if (idx >= 0) v += s.b[j] * u[idx];
        }
        y[t] = v;
    }
    return y;
}

template <typename Deriv>
Eigen::Vector2d rk4_step(const Deriv& f, const Eigen::Vector2d& x, double u, double h) {
    const Eigen::Vector2d k1 = f(x, u);
    const Eigen::Vector2d k2 = f(x + 0.5 * h * k1, u);
    const Eigen::Vector2d k3 = f(x + 0.5 * h * k2, u);
    const Eigen::Vector2d k4 = f(x + h * k3, u);
    return x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

Vector simulate_duffing(const DuffingRk4& s, const Vector& u, double dt) {
    if (!(s.mass > 0.0)) throw ConfigError("duffing: mass must be positive");
    auto f = [&](const Eigen::Vector2d& x, double force) {
        const double acc = (force - s.damping * x[1] - s.stiffness * x[0] - s.cubic_stiffness * x[0] * x[0] * x[0]) / s.mass;
        return Eigen::Vector2d(x[1], acc);
    };
    const double h = dt / kIntegratorSubsteps;
    Eigen::Vector2d x = Eigen::Vector2d::Zero();
    Vector y(u.size());
    for (Eigen::Index t = 0; t < u.size(); ++t) {
        y[t] = x[0];
        for (int k = 0; k < kIntegratorSubsteps; ++k) x = rk4_step(f, x, u[t], h);
    }
    return y;
}

Vector simulate_tanks(const CascadedTanksOde& s, const Vector& u, double dt) {
    if (s.h1_0 < 0.0 || s.h2_0 < 0.0) throw ConfigError("cascaded tanks: initial levels must be >= 0");
    if (s.k1 < 0.0 || s.k2 < 0.0 || s.k3 < 0.0 || s.k4 < 0.0) {
        throw ConfigError("cascaded tanks: flow coefficients must be >= 0");
    }
    auto clamp = [&](Eigen::Vector2d x) {
        return Eigen::Vector2d(std::clamp(x[0], 0.0, s.level_max), std::clamp(x[1], 0.0, s.level_max));
    };
    auto f = [&](const Eigen::Vector2d& x, double inflow) {
        const double q1 = std::sqrt(std::max(x[0], 0.0));
        const double q2 = std::sqrt(std::max(x[1], 0.0));
        return Eigen::Vector2d(-s.k1 * q1 + s.k4 * inflow, s.k2 * q1 - s.k3 * q2);
    };
    const double h = dt / kIntegratorSubsteps;
    Eigen::Vector2d x(s.h1_0, s.h2_0);
    Vector y(u.size());
    for (Eigen::Index t = 0; t < u.size(); ++t) {
        y[t] = x[1];
        for (int k = 0; k < kIntegratorSubsteps; ++k) x = clamp(rk4_step(f, x, u[t], h));
    }
    return y;
}

const char* kind_name(const SystemParameters& p) {
    switch (p.index()) {
        case 0: return "known_arx";
        case 1: return "linear_second_order";
        case 2: return "duffing_rk4";
        default: return "cascaded_tanks_ode";
    }
}

}  // namespace

TimeSeries generate_synthetic(const SyntheticSystemSpec& spec, const Vector& input, double sample_time) {
    if (!(sample_time > 0.0)) throw ConfigError("sample_time must be positive");
    if (!input.allFinite()) throw DataError("synthetic input contains non-finite samples");

    Vector y = std::visit(
        [&](const auto& s) -> Vector {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, KnownArx>) {
                if (s.input_delay < 0) throw ConfigError("known_arx: input_delay must be >= 0");
                if (!spec.allow_unstable && arx_spectral_radius(s.a) >= 1.0) {
                    throw ConfigError("known_arx: unstable spec (pole magnitude >= 1)");
                }
                return simulate_arx(s, input);
            } else if constexpr (std::is_same_v<S, LinearSecondOrder>) {
                if (!spec.allow_unstable && std::abs(s.radius) >= 1.0) {
                    throw ConfigError("linear_second_order: unstable spec (pole magnitude >= 1)");
                }
                KnownArx arx{{2.0 * s.radius * std::cos(s.angle), -s.radius * s.radius}, {s.gain}, 1};
                return simulate_arx(arx, input);
            } else if constexpr (std::is_same_v<S, DuffingRk4>) {
                return simulate_duffing(s, input, sample_time);
            } else {
                return simulate_tanks(s, input, sample_time);
            }
        },
        spec.system);

    if (spec.noise_std > 0.0) {
        std::mt19937_64 rng(spec.seed);
        std::normal_distribution<double> noise(0.0, spec.noise_std);
        for (Eigen::Index t = 0; t < y.size(); ++t) y[t] += noise(rng);
    }

    TimeSeries ts;
    ts.name = kind_name(spec.system);
    ts.u = input;
    ts.y = std::move(y);
    ts.sample_time = sample_time;
    return ts;
}

}  // namespace sysid
