#include "sysid/mlp_narx.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <random>

#include "sysid/adam.hpp"
#include "sysid/metrics.hpp"
#include "sysid/narx.hpp"
#include "sysid/parallel.hpp"

namespace sysid {

double MlpNarxModel::predict_normalized(const Eigen::Ref<const Vector>& row) const {
    return w2.dot((W1 * row + b1).array().tanh().matrix()) + b2;
}

Vector MlpNarxModel::pack() const {
    const Eigen::Index h = W1.rows();
    const Eigen::Index d = W1.cols();
    Vector p(h * (d + 2) + 1);
    p.head(h * d) = Eigen::Map<const Vector>(W1.data(), h * d);
    p.segment(h * d, h) = b1;
    p.segment(h * d + h, h) = w2;
    p[h * (d + 2)] = b2;
    return p;
}

void MlpNarxModel::unpack(const Vector& p) {
    const Eigen::Index h = W1.rows();
    const Eigen::Index d = W1.cols();
    if (p.size() != h * (d + 2) + 1) throw Error("MlpNarxModel::unpack: parameter length mismatch");
    W1 = Eigen::Map<const Matrix>(p.data(), h, d);
    b1 = p.segment(h * d, h);
    w2 = p.segment(h * d + h, h);
    b2 = p[h * (d + 2)];
}

double mlp_loss(const Vector& p, int hidden, const Eigen::Ref<const Matrix>& H,
                const Eigen::Ref<const Vector>& targets, Vector* grad) {
    const Eigen::Index h = hidden;
    const Eigen::Index d = H.cols();
    const Eigen::Index n = H.rows();
    if (p.size() != h * (d + 2) + 1) throw Error("mlp_loss: parameter length mismatch");
    const Eigen::Map<const Matrix> W1(p.data(), h, d);
    const auto b1 = p.segment(h * d, h);
    const auto w2 = p.segment(h * d + h, h);
    const double b2 = p[h * (d + 2)];

    Matrix Z = H * W1.transpose();  // n x h
    Z.rowwise() += b1.transpose();
    const Matrix A = Z.array().tanh().matrix();
    const Vector err = (A * w2).array() + b2 - targets.array();
    const double loss = err.squaredNorm() / static_cast<double>(n);
    if (grad == nullptr) return loss;

    const Vector e = (2.0 / static_cast<double>(n)) * err;
    // dL/dZ = e w2' .* (1 - A^2)
    const Matrix dZ = ((e * w2.transpose()).array() * (1.0 - A.array().square())).matrix();
    grad->resize(p.size());
    Eigen::Map<Matrix>(grad->data(), h, d) = dZ.transpose() * H;
    grad->segment(h * d, h) = dZ.colwise().sum().transpose();
    grad->segment(h * d + h, h) = A.transpose() * e;
    (*grad)[h * (d + 2)] = e.sum();
    return loss;
}

MlpNarxModel init_mlp(const LagStructure& lags, int hidden, std::uint64_t seed) {
    if (hidden < 1) throw ConfigError("init_mlp: hidden size must be >= 1");
    std::mt19937_64 rng(seed);
    const double in_bound = 1.0 / std::sqrt(static_cast<double>(lags.width()));
    const double out_bound = 1.0 / std::sqrt(static_cast<double>(hidden));
    std::uniform_real_distribution<double> in_dist(-in_bound, in_bound);
    std::uniform_real_distribution<double> out_dist(-out_bound, out_bound);
    MlpNarxModel m;
    m.lags = lags;
    m.W1.resize(hidden, lags.width());
    for (Eigen::Index j = 0; j < m.W1.cols(); ++j) {
        for (Eigen::Index i = 0; i < m.W1.rows(); ++i) m.W1(i, j) = in_dist(rng);
    }
    m.b1.resize(hidden);
    for (auto& v : m.b1) v = in_dist(rng);
    m.w2.resize(hidden);
    for (auto& v : m.w2) v = out_dist(rng);
    m.b2 = out_dist(rng);
    return m;
}

MlpNarxFit fit_mlp_narx(const TimeSeries& train, const TimeSeries& validation, const LagStructure& lags,
                        const MlpOptions& options) {
    if (options.hidden_sizes.empty() || options.restarts < 1) {
        throw ConfigError("fit_mlp_narx: need at least one hidden size and one restart");
    }
    const Normalizer norm = fit_normalizer(train, Normalizer::Mode::zscore);
    const Regression tr = build_hankel(norm.apply(train), lags);
    const Matrix H = tr.H.leftCols(lags.width());
    const Vector y_init = validation.y.head(lags.p());

    MlpNarxFit fit;
    for (int hidden : options.hidden_sizes) {
        for (int r = 0; r < options.restarts; ++r) {
            MlpRun run;
            run.hidden = hidden;
            run.restart = r;
            fit.runs.push_back(run);
        }
    }
    std::vector<MlpNarxModel> models(fit.runs.size());
    parallel_for(fit.runs.size(), options.workers, [&](std::size_t i) {
        MlpRun& run = fit.runs[i];
        const auto seed = derive_seed(options.seed, {static_cast<std::uint64_t>(run.hidden),
                                                     static_cast<std::uint64_t>(run.restart)});
        MlpNarxModel m = init_mlp(lags, run.hidden, seed);
        m.normalizer = norm;
        Vector params = m.pack();
        AdamState adam = AdamState::zeros(params.size(), options.lr);
        Vector grad;
        try {
            for (int it = 0; it < options.iterations; ++it) {
                run.train_loss = mlp_loss(params, run.hidden, H, tr.targets, &grad);
                adam_update(adam, params, grad);
            }
            m.unpack(params);
            run.train_loss = mlp_loss(params, run.hidden, H, tr.targets);
            if (!std::isfinite(run.train_loss)) throw NumericalError("fit_mlp_narx: non-finite loss", 0);
            const Vector sim = simulate_narx(NarxModel{m}, validation.u, y_init);
            run.validation_rmse = compute_rmse(validation.y, sim);
        } catch (const NumericalError&) {
            run.failed = true;
            return;
        } catch (const SimulationError&) {
            run.failed = true;
            return;
        }
        models[i] = std::move(m);
    });

    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < fit.runs.size(); ++i) {
        if (fit.runs[i].failed) continue;
        if (!best || fit.runs[i].validation_rmse < fit.runs[*best].validation_rmse) best = i;
    }
    if (!best) throw Error("fit_mlp_narx: every training run diverged");
    fit.model = std::move(models[*best]);
    return fit;
}

}  // namespace sysid
