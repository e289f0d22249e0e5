#include "sysid/selftest.hpp"

#include <cmath>
#include <cstdio>
#include <functional>
#include <random>

#include "sysid/arx.hpp"
#include "sysid/gp_narx.hpp"
#include "sysid/lti.hpp"
#include "sysid/metrics.hpp"
#include "sysid/narx.hpp"
#include "sysid/pnarx.hpp"
#include "sysid/recurrent.hpp"
#include "sysid/serialize.hpp"
#include "sysid/synthetic.hpp"

namespace sysid {

namespace {

std::string num(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.3e", v);
    return buf;
}

Vector random_input(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> d;
    Vector u(static_cast<Eigen::Index>(n));
    for (auto& v : u) v = d(rng);
    return u;
}

SelftestResult arx_recovery() {
    SyntheticSystemSpec spec{KnownArx{{0.5}, {1.0}, 1}};
    const TimeSeries ts = generate_synthetic(spec, random_input(400, 1), 1.0);
    const ArxModel m = fit_arx(ts, {1, 2});
    const auto p = m.physical();
    const double coef_err = std::max({std::abs(p.a[0] - 0.5), std::abs(p.b[0]), std::abs(p.b[1] - 1.0)});
    const Vector sim = simulate_narx(m, ts.u, ts.y.head(2));
    const double sim_err = (sim - ts.y).cwiseAbs().maxCoeff();
    return {"arx exact recovery", coef_err < 1e-8 && sim_err < 1e-10,
            "coef err " + num(coef_err) + ", simulation err " + num(sim_err)};
}

SelftestResult rmse_hand() {
    Vector y(2), yh(2);
    y << 0.0, 0.0;
    yh << 3.0, 4.0;
    const double err = std::abs(compute_rmse(y, yh) - std::sqrt(12.5));
    return {"rmse hand value", err < 1e-12, "err " + num(err)};
}

SelftestResult gp_scalar_nlml() {
    Matrix H = Matrix::Zero(1, 1);
    Vector y = Vector::Ones(1);
    const double v = gp_nlml({0.0, 0.0, 0.0}, H, y).value;
    const double expect = 0.25 + 0.5 * std::log(2.0) + 0.5 * std::log(2.0 * M_PI);
    return {"gp nlml one point", std::abs(v - expect) < 1e-4, "nlml " + num(v)};
}

SelftestResult lstm_fused_layout() {
    const RecurrentModel lstm = init_recurrent(CellKind::lstm, 3, 4, 11);
    const RecurrentModel olstm = lstm_to_olstm(lstm);
    const Vector u = random_input(200, 5);
    const double err = (simulate_rnn(lstm, u) - simulate_rnn(olstm, u)).cwiseAbs().maxCoeff();
    return {"olstm equals lstm", err < 1e-12, "max diff " + num(err)};
}

SelftestResult ss_linearity() {
    StateSpaceModel m;
    m.A = Matrix(2, 2);
    m.A << 0.5, 0.2, -0.1, 0.7;
    m.B = Vector::Ones(2);
    m.C = Vector::Ones(2);
    m.D = 0.3;
    const Vector u1 = random_input(100, 2);
    const Vector u2 = random_input(100, 3);
    const Vector lhs = simulate_ss(m, 2.0 * u1 + u2);
    const Vector rhs = 2.0 * simulate_ss(m, u1) + simulate_ss(m, u2);
    const double err = (lhs - rhs).cwiseAbs().maxCoeff();
    return {"state-space linearity", err < 1e-12, "max diff " + num(err)};
}

SelftestResult legendre_endpoint() {
    double err = 0.0;
    for (int k = 1; k <= kMaxPolyDegree; ++k) err = std::max(err, std::abs(legendre(k, 1.0) - 1.0));
    return {"legendre endpoint", err < 1e-14, "max err " + num(err)};
}

SelftestResult persistence_roundtrip() {
    SyntheticSystemSpec spec{LinearSecondOrder{}, 0.01, 4};
    const TimeSeries ts = generate_synthetic(spec, random_input(300, 4), 1.0);
    const AnyModel m = fit_arx(ts, {2, 2});
    const AnyModel back = model_from_json(nlohmann::json::parse(model_to_json(m).dump()));
    const double err = (simulate_model(m, ts) - simulate_model(back, ts)).cwiseAbs().maxCoeff();
    return {"model persistence round trip", err == 0.0, "max diff " + num(err)};
}

}  // namespace

std::vector<SelftestResult> run_selftest() {
    const std::vector<std::function<SelftestResult()>> checks = {
        arx_recovery, rmse_hand, gp_scalar_nlml, lstm_fused_layout, ss_linearity, legendre_endpoint,
        persistence_roundtrip};
    std::vector<SelftestResult> out;
    for (const auto& check : checks) {
        try {
            out.push_back(check());
        } catch (const std::exception& e) {
            out.push_back({"(check threw)", false, e.what()});
        }
    }
    return out;
}

}  // namespace sysid
