#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "sysid/gp_narx.hpp"
#include "sysid/narx.hpp"
#include "sysid/synthetic.hpp"

using namespace sysid;

namespace {

double se(const Vector& a, const Vector& b, double sf2, double ell) {
    return sf2 * std::exp(-(a - b).squaredNorm() / (2 * ell * ell));
}

Matrix random_rows(int n, int d, std::uint64_t seed) {
    return Eigen::Map<const Matrix>(oracle::uniform(static_cast<std::size_t>(n * d), seed, -2, 2).data(), n, d);
}

GpNarxModel model_on(const Matrix& H, const Vector& y, GpHyperparams hp) {
    GpNarxModel m;
    m.lags = {1, static_cast<int>(H.cols()) - 1};
    m.hyper = hp;
    m.H_train = H;
    m.targets = y;
    m.rebuild_cache();
    return m;
}

}  // namespace

TEST(GpNlml, OnePointHandValue) {
    const auto r = gp_nlml({0.0, 0.0, 0.0}, Matrix::Zero(1, 2), Vector::Ones(1));
    EXPECT_NEAR(r.value, 0.25 + 0.5 * std::log(2.0) + 0.5 * std::log(2 * std::numbers::pi), 1e-8);
    EXPECT_NEAR(r.value, 1.5155, 1e-4);
}

TEST(GpNlml, ZeroTargetsLeaveOnlyComplexityTerm) {
    const Matrix H = random_rows(6, 2, 3);
    const GpHyperparams hp{std::log(0.1), std::log(1.5), std::log(0.8)};
    Matrix S(6, 6);
    for (int i = 0; i < 6; ++i) {
        for (int j = 0; j < 6; ++j) S(i, j) = se(H.row(i), H.row(j), 1.5, 0.8) + (i == j ? 0.1 : 0.0);
    }
    const double expected = 0.5 * std::log(S.determinant()) + 3.0 * std::log(2 * std::numbers::pi);
    EXPECT_NEAR(gp_nlml(hp, H, Vector::Zero(6)).value, expected, 1e-8);
}

TEST(GpNlml, GradientMatchesFiniteDifferences) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const int n = 5 + static_cast<int>(seed * 7 % 46);
        const Matrix H = random_rows(n, 3, seed);
        const Vector y = oracle::gaussian(n, seed + 40);
        const Vector theta = oracle::uniform(3, seed + 80, -1.5, 1.0);
        const auto hp = GpHyperparams::unpack(theta);
        const Vector g = gp_nlml_grad(hp, H, y);
        const Vector fd = oracle::five_point_gradient(
            [&](const Vector& t) { return gp_nlml(GpHyperparams::unpack(t), H, y).value; }, theta, 1e-3);
        EXPECT_LE(oracle::relative_error(g, fd), 1e-5) << "seed " << seed << " n " << n;
    }
}

TEST(GpPredict, ThreePointHandProblem) {
    Matrix H(3, 1);
    H << 0.0, 1.0, 3.0;
    const Vector y = (Vector(3) << 1.0, -2.0, 0.5).finished();
    const GpHyperparams hp{std::log(0.5), 0.0, 0.0};
    const auto m = model_on(H, y, hp);
    Eigen::Matrix3d S;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) S(i, j) = se(H.row(i), H.row(j), 1.0, 1.0) + (i == j ? 0.5 : 0.0);
    }
    const Eigen::Vector3d alpha = oracle::inverse3(S) * y;
    const Vector q = Vector::Constant(1, 0.4);
    double expected = 0.0;
    for (int i = 0; i < 3; ++i) expected += se(q, H.row(i), 1.0, 1.0) * alpha[i];
    EXPECT_NEAR(gp_predict_mean(m, q), expected, 1e-6 * (1 + std::abs(expected)));
}

TEST(GpPredict, InterpolatesAtNoiseFloor) {
    const Matrix H = random_rows(12, 2, 5);
    const Vector y = oracle::gaussian(12, 6);
    const auto m = model_on(H, y, {std::log(1e-6), 0.0, std::log(0.4)});
    for (int i = 0; i < 12; ++i) EXPECT_NEAR(gp_predict_mean(m, H.row(i).transpose()), y[i], 1e-4);
    EXPECT_NEAR(gp_predict_mean(m, Vector::Constant(2, 100.0)), 0.0, 1e-10);
}

TEST(GpPredict, CacheSolvesSystem) {
    const Matrix H = random_rows(20, 3, 9);
    const Vector y = oracle::gaussian(20, 10);
    const auto m = model_on(H, y, {std::log(0.01), 0.3, 0.1});
    Matrix S = se_kernel(H, H, m.hyper);
    S.diagonal().array() += m.hyper.noise_var() + m.jitter;
    EXPECT_LE((S * m.alpha - y).norm(), 1e-8 * y.norm());
}

TEST(FitGp, NoiselessLinearData) {
    const auto ts = generate_synthetic({LinearSecondOrder{0.7, 0.5, 1.0}, 0.0, 0}, oracle::gaussian(400, 11), 1.0);
    const auto train = ts.slice(0, 300), val = ts.slice(300, 100);
    GpOptions o;
    o.restarts = 3;
    o.steps = 500;
    o.lr = 5e-2;
    const auto fit = fit_gp_narx(train, val, {2, 2}, o);
    EXPECT_FALSE(fit.truncated);
    EXPECT_LE(fit.model.hyper.noise_var(), 1e-4);
    const Vector pred = one_step_predict(NarxModel{fit.model}, train);
    const Vector resid = (train.y - pred).tail(train.y.size() - 2);
    const double std_y = std::sqrt((train.y.array() - train.y.mean()).square().mean());
    EXPECT_LE(resid.cwiseAbs().maxCoeff(), 1e-4 * std_y * 10);
    EXPECT_LE(std::sqrt(resid.squaredNorm() / resid.size()), 1e-4 * std_y);
}

TEST(FitGp, TruncationThreshold) {
    GpOptions o;
    o.restarts = 1;
    o.steps = 2;
    const auto small = generate_synthetic({LinearSecondOrder{}, 0.1, 1}, oracle::gaussian(1200, 12), 1.0);
    const auto a = fit_gp_narx(small.slice(0, 902), small.slice(902, 200), {2, 2}, o);
    EXPECT_FALSE(a.truncated);
    EXPECT_EQ(a.model.H_train.rows(), 900);
    const auto b = fit_gp_narx(small.slice(0, 1100), small.slice(1100, 100), {2, 2}, o);
    EXPECT_TRUE(b.truncated);
    EXPECT_EQ(b.model.H_train.rows(), 1000);
}

TEST(FitGp, SeededRestartsAreDeterministic) {
    const auto ts = generate_synthetic({DuffingRk4{}, 0.01, 2}, oracle::gaussian(300, 13), 0.1);
    GpOptions o;
    o.restarts = 2;
    o.steps = 30;
    o.seed = 42;
    const auto a = fit_gp_narx(ts.slice(0, 200), ts.slice(200, 100), {2, 2}, o);
    o.workers = 2;
    const auto b = fit_gp_narx(ts.slice(0, 200), ts.slice(200, 100), {2, 2}, o);
    EXPECT_EQ(a.model.hyper.pack(), b.model.hyper.pack());
    EXPECT_EQ(a.model.alpha, b.model.alpha);
}
