#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "sysid/metrics.hpp"
#include "sysid/recurrent.hpp"
#include "sysid/synthetic.hpp"

using namespace sysid;

namespace {

constexpr CellKind kKinds[] = {CellKind::fir, CellKind::rnn, CellKind::gru, CellKind::lstm, CellKind::olstm};

RecurrentModel zero_model(CellKind kind, int n_u, int n_h, double readout_bias = 0.0) {
    RecurrentModel m;
    m.kind = kind;
    m.n_u = n_u;
    m.n_h = n_h;
    m.params = Vector::Zero(static_cast<Eigen::Index>(RecurrentModel::parameter_count(kind, n_u, n_h)));
    m.params[m.params.size() - 1] = readout_bias;
    return m;
}

RecurrentModel random_model(CellKind kind, int n_u, int n_h, std::uint64_t seed) {
    RecurrentModel m = zero_model(kind, n_u, n_h);
    m.params = oracle::uniform(static_cast<std::size_t>(m.params.size()), seed);
    return m;
}

TimeSeries random_normalized(std::size_t n, std::uint64_t seed) {
    return TimeSeries{"r", oracle::gaussian(n, seed), oracle::gaussian(n, seed + 1), 1.0};
}

// y_t = 0.5 y_{t-1} + 0.5 u_t, unit static gain
TimeSeries first_order(std::size_t n, std::uint64_t seed) {
    return generate_synthetic({KnownArx{{0.5}, {0.5}, 0}, 0.0, 0}, oracle::gaussian(n, seed), 1.0);
}

double output_std(const Vector& y) { return std::sqrt((y.array() - y.mean()).square().mean()); }

}  // namespace

TEST(CellForward, ZeroLstmGates) {
    const auto m = zero_model(CellKind::lstm, 2, 3, 0.7);
    const auto out = cell_forward(m, CellState::zeros(m), Vector::Ones(2));
    EXPECT_EQ(out.state.c, Vector::Zero(3));
    EXPECT_EQ(out.state.h, Vector::Zero(3));
    EXPECT_EQ(out.y, 0.7);

    CellState s = CellState::zeros(m);
    s.c = (Vector(3) << 1.0, -2.0, 0.5).finished();
    const auto o2 = cell_forward(m, s, Vector::Ones(2));
    // forget gate 0.5, input gate 0.5 on a zero candidate, output gate 0.5
    EXPECT_EQ(o2.state.c, 0.5 * s.c);
    for (int i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(o2.state.h[i], 0.5 * std::tanh(0.5 * s.c[i]));
}

TEST(CellForward, ZeroGruHalvesState) {
    const auto m = zero_model(CellKind::gru, 1, 4);
    CellState s = CellState::zeros(m);
    s.h = (Vector(4) << 1, -2, 3, 0.25).finished();
    const auto out = cell_forward(m, s, Vector::Constant(1, 5.0));
    EXPECT_EQ(out.state.h, 0.5 * s.h);
}

TEST(CellForward, OlstmEqualsLstm) {
    std::mt19937 rng(3);
    for (int draw = 0; draw < 100; ++draw) {
        const int n_u = 1 + static_cast<int>(rng() % 3), n_h = 1 + static_cast<int>(rng() % 5);
        const auto lstm = random_model(CellKind::lstm, n_u, n_h, rng());
        const auto olstm = lstm_to_olstm(lstm);
        ASSERT_EQ(olstm.params.size(), lstm.params.size());
        CellState s = CellState::zeros(lstm);
        s.h = oracle::uniform(n_h, rng());
        s.c = oracle::uniform(n_h, rng());
        const Vector x = oracle::gaussian(n_u, rng());
        const auto a = cell_forward(lstm, s, x), b = cell_forward(olstm, s, x);
        EXPECT_LE((a.state.h - b.state.h).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_LE((a.state.c - b.state.c).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_LE(std::abs(a.y - b.y), 1e-12);
    }
}

TEST(RecurrentModel, ParameterCounts) {
    for (int n_u : {1, 3}) {
        for (int n_h : {1, 4}) {
            EXPECT_EQ(RecurrentModel::parameter_count(CellKind::lstm, n_u, n_h),
                      RecurrentModel::parameter_count(CellKind::olstm, n_u, n_h));
            // fir: no recurrent weights
            EXPECT_EQ(RecurrentModel::parameter_count(CellKind::fir, n_u, n_h), static_cast<std::size_t>(n_h * n_u + 2 * n_h + 1));
        }
    }
    auto bad = zero_model(CellKind::gru, 2, 2);
    bad.params.conservativeResize(bad.params.size() - 1);
    EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(SimulateRnn, FirIdentityAndConstantOutput) {
    // y = w tanh(eps u_t) with w = 1/eps: the identity map up to O(eps^2)
    auto fir = zero_model(CellKind::fir, 2, 1);
    const double eps = 1e-5;
    fir.params[0] = eps;
    fir.params[3] = 1.0 / eps;  // layout W (1x2), b, w, c
    const Vector u = oracle::uniform(50, 2);
    const Vector y = simulate_rnn(fir, u);
    EXPECT_EQ(y[0], 0.0);  // before the look-back window fills: y_mean
    EXPECT_LE((y.tail(49) - u.tail(49)).cwiseAbs().maxCoeff(), 1e-9);

    auto zero = zero_model(CellKind::gru, 1, 3, 0.3);
    zero.normalizer.y_mean = 2.0;
    zero.normalizer.y_scale = 10.0;
    EXPECT_LE((simulate_rnn(zero, u) - Vector::Constant(50, 5.0)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Bptt, GradientsMatchFiniteDifferences) {
    std::mt19937 rng(7);
    for (auto kind : kKinds) {
        for (int trial = 0; trial < 4; ++trial) {
            const int n_u = 1 + static_cast<int>(rng() % 3), n_h = 1 + static_cast<int>(rng() % 4);
            const auto m = random_model(kind, n_u, n_h, rng());
            const auto w = make_windows(random_normalized(20 + n_u - 1, rng()), n_u, {8, 5, 2});
            Vector g;
            sequence_loss(m, w, {}, &g);
            const Vector fd = oracle::five_point_gradient(
                [&](const Vector& p) {
                    RecurrentModel q = m;
                    q.params = p;
                    return sequence_loss(q, w);
                },
                m.params);
            EXPECT_LE(oracle::relative_error(g, fd), 1e-5) << to_string(kind) << " trial " << trial;
        }
    }
}

TEST(Windows, TailSegmentAndShapes) {
    const auto w = make_windows(random_normalized(300, 1), 3, {128, 64, 16});
    ASSERT_EQ(w.inputs.cols(), 298);
    EXPECT_EQ(w.segments.back().begin + w.segments.back().length, 298);
    EXPECT_EQ(w.segments.front().begin, 0);
    EXPECT_EQ(w.inputs(0, 0), random_normalized(300, 1).u[2]);
    EXPECT_EQ(w.inputs(2, 0), random_normalized(300, 1).u[0]);
}

TEST(Bptt, FirIgnoresSegmentOrder) {
    const auto m = random_model(CellKind::fir, 3, 4, 5);
    const auto w = make_windows(random_normalized(200, 6), 3, {20, 10, 4});
    std::vector<std::size_t> ids(w.segments.size());
    std::iota(ids.begin(), ids.end(), 0);
    Vector g1, g2;
    const double a = sequence_loss(m, w, ids, &g1);
    std::reverse(ids.begin(), ids.end());
    std::shuffle(ids.begin(), ids.end(), std::mt19937(8));
    const double b = sequence_loss(m, w, ids, &g2);
    EXPECT_NEAR(a, b, 1e-12 * a);
    EXPECT_LE((g1 - g2).norm(), 1e-12 * g1.norm());
}

TEST(Bptt, WashoutTargetsDoNotMatter) {
    for (auto kind : kKinds) {
        const auto m = random_model(kind, 2, 3, 9);
        auto w = make_windows(random_normalized(121, 10), 2, {12, 12, 4});  // non-overlapping windows
        const double before = sequence_loss(m, w);
        for (const auto& s : w.segments) w.targets.segment(s.begin, 4).array() += 3.0;
        EXPECT_EQ(sequence_loss(m, w), before) << to_string(kind);
    }
}

TEST(SimulateRnn, LongRunsStayFinite) {
    const Vector u = oracle::gaussian(100000, 12, 3.0);
    for (auto kind : kKinds) {
        const auto m = random_model(kind, 3, 8, 13);
        const Vector y = simulate_rnn(m, u);
        EXPECT_TRUE(y.allFinite()) << to_string(kind);
    }
}

TEST(Bptt, TrainsFirstOrderSystem) {
    // separate records from rest, so the zero initial state is exact for validation too
    const auto train = first_order(900, 14), val = first_order(300, 140);
    for (auto kind : {CellKind::gru, CellKind::rnn}) {
        RecurrentSearch s;
        s.kind = kind;
        s.look_backs = {1};
        s.hidden_sizes = {2};
        s.restarts = 2;
        s.epochs = 600;
        s.lr = 1e-2;
        s.batch_size = 4;
        s.seed = 15;
        const auto fit = bptt_train(train, val, s);
        const double rmse = compute_rmse(val.y, simulate_rnn(fit.model, val.u));
        EXPECT_LE(rmse, 0.05 * output_std(val.y)) << to_string(kind);
    }
}

TEST(Bptt, SeededTrainingIsReproducible) {
    const auto ts = first_order(400, 16);
    RecurrentSearch s;
    s.kind = CellKind::lstm;
    s.look_backs = {1, 2};
    s.hidden_sizes = {2};
    s.restarts = 2;
    s.epochs = 5;
    s.seed = 17;
    const auto a = bptt_train(ts.slice(0, 300), ts.slice(300, 100), s);
    s.workers = 3;
    const auto b = bptt_train(ts.slice(0, 300), ts.slice(300, 100), s);
    EXPECT_EQ(a.model.params, b.model.params);
    EXPECT_EQ(a.model.n_u, b.model.n_u);
    EXPECT_EQ(default_epochs(9999), 20000);
    EXPECT_EQ(default_epochs(10000), 10000);
}
