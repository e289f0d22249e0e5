#include "sysid/gp_narx.hpp"

#include <cmath>
#include <limits>
#include <optional>
#include <numbers>
#include <random>

#include "sysid/adam.hpp"
#include "sysid/linalg.hpp"
#include "sysid/parallel.hpp"

namespace sysid {

double GpHyperparams::noise_var() const { return std::exp(log_noise_var); }
double GpHyperparams::signal_var() const { return std::exp(log_signal_var); }
double GpHyperparams::lengthscale() const { return std::exp(log_lengthscale); }

Vector GpHyperparams::pack() const {
    Vector t(3);
    t << log_noise_var, log_signal_var, log_lengthscale;
    return t;
}

GpHyperparams GpHyperparams::unpack(const Vector& theta) {
    if (theta.size() != 3) throw Error("GpHyperparams: expected three log-hyperparameters");
    return {theta[0], theta[1], theta[2]};
}

namespace {

Matrix squared_distances(const Eigen::Ref<const Matrix>& A, const Eigen::Ref<const Matrix>& B) {
    const Vector a2 = A.rowwise().squaredNorm();
    const Vector b2 = B.rowwise().squaredNorm();
    Matrix d = -2.0 * A * B.transpose();
    d.colwise() += a2;
    d.rowwise() += b2.transpose();
    return d.cwiseMax(0.0);
}

void check_hyper(const GpHyperparams& hp) {
    if (!std::isfinite(hp.log_noise_var) || !std::isfinite(hp.log_signal_var) || !std::isfinite(hp.log_lengthscale)) {
        throw Error("gp: hyperparameters must be finite and positive");
    }
}

}  // namespace

Matrix se_kernel(const Eigen::Ref<const Matrix>& A, const Eigen::Ref<const Matrix>& B, const GpHyperparams& hp) {
    const double ell2 = hp.lengthscale() * hp.lengthscale();
    return hp.signal_var() * (squared_distances(A, B).array() / (-2.0 * ell2)).exp().matrix();
}

GpNlml gp_nlml(const GpHyperparams& hp, const Eigen::Ref<const Matrix>& H, const Eigen::Ref<const Vector>& y,
               bool with_grad) {
    check_hyper(hp);
    const Eigen::Index n = H.rows();
    if (y.size() != n || n == 0) throw Error("gp_nlml: H and y must have the same non-zero row count");

    const Matrix d2 = squared_distances(H, H);
    const double ell2 = hp.lengthscale() * hp.lengthscale();
    const Matrix K = hp.signal_var() * (d2.array() / (-2.0 * ell2)).exp().matrix();
    Matrix S = K;
    S.diagonal().array() += hp.noise_var();
    const JitteredCholesky jc = jittered_cholesky_solve(S, y);

    GpNlml out;
    out.jitter = jc.jitter;
    out.value = 0.5 * y.dot(jc.solve.alpha) + 0.5 * jc.solve.logdet +
                0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
    if (!with_grad) return out;

    // jitter = c * trace(S) / n = c (sigma_f^2 + sigma_n^2)
    const double c = jc.jitter / (hp.signal_var() + hp.noise_var());
    const auto& L = jc.solve.lower;
    const Matrix Linv = L.triangularView<Eigen::Lower>().solve(Matrix::Identity(n, n));
    Matrix W = Linv.transpose() * Linv;  // S^-1
    W.noalias() -= jc.solve.alpha * jc.solve.alpha.transpose();

    out.grad.resize(3);
    out.grad[0] = 0.5 * W.trace() * hp.noise_var() * (1.0 + c);
    out.grad[1] = 0.5 * ((W.array() * K.array()).sum() + W.trace() * c * hp.signal_var());
    out.grad[2] = 0.5 * (W.array() * K.array() * d2.array()).sum() / ell2;
    return out;
}

Vector gp_nlml_grad(const GpHyperparams& hp, const Eigen::Ref<const Matrix>& H, const Eigen::Ref<const Vector>& y) {
    return gp_nlml(hp, H, y, true).grad;
}

void GpNarxModel::rebuild_cache() {
    check_hyper(hyper);
    Matrix S = se_kernel(H_train, H_train, hyper);
    S.diagonal().array() += hyper.noise_var();
    JitteredCholesky jc = jittered_cholesky_solve(S, targets);
    alpha = std::move(jc.solve.alpha);
    lower = std::move(jc.solve.lower);
    jitter = jc.jitter;
}

double GpNarxModel::predict_normalized(const Eigen::Ref<const Vector>& row) const {
    return gp_predict_mean(*this, row);
}

double gp_predict_mean(const GpNarxModel& model, const Eigen::Ref<const Vector>& row) {
    if (model.alpha.size() != model.H_train.rows()) throw Error("gp_predict_mean: predictive cache not built");
    const Matrix k = se_kernel(row.transpose(), model.H_train, model.hyper);
    return k.row(0).dot(model.alpha);
}

GpNarxFit fit_gp_narx(const TimeSeries& train, const TimeSeries& validation, const LagStructure& lags,
                      const GpOptions& options) {
    if (options.restarts < 1 || options.max_rows < 1) throw ConfigError("fit_gp_narx: restarts and max_rows must be >= 1");
    const Normalizer norm = fit_normalizer(train, Normalizer::Mode::zscore);
    const Regression tr = build_hankel(norm.apply(train), lags);
    const Regression val = build_hankel(norm.apply(validation), lags);
    const Eigen::Index width = lags.width();

    GpNarxFit fit;
    Eigen::Index rows = tr.H.rows();
    if (rows > options.max_rows) {
        rows = options.max_rows;
        fit.truncated = true;
    }
    const Matrix H = tr.H.topLeftCorner(rows, width);
    const Vector y = tr.targets.head(rows);
    const Matrix H_val = val.H.leftCols(width);

    const double y_var = std::max((y.array() - y.mean()).square().mean(), 1e-12);
    const double log_floor = std::log(options.noise_floor);

    std::vector<GpNarxModel> models(static_cast<std::size_t>(options.restarts));
    fit.restarts.resize(models.size());
    parallel_for(models.size(), options.workers, [&](std::size_t r) {
        std::mt19937_64 rng(derive_seed(options.seed, {r}));
        std::uniform_real_distribution<double> spread(-options.init_spread, options.init_spread);
        GpHyperparams hp;
        hp.log_noise_var = std::max(std::log(0.1 * y_var) + spread(rng), log_floor);
        hp.log_signal_var = std::log(y_var) + spread(rng);
        hp.log_lengthscale = 0.5 * std::log(static_cast<double>(width)) + spread(rng);

        GpRestart& info = fit.restarts[r];
        Vector theta = hp.pack();
        AdamState adam = AdamState::zeros(3, options.lr);
        bool any_step = false;
        try {
            for (int step = 0; step < options.steps; ++step) {
                const GpNlml f = gp_nlml(GpHyperparams::unpack(theta), H, y, true);
                info.final_nlml = f.value;
                Vector next = theta;
                adam_update(adam, next, f.grad);
                next[0] = std::max(next[0], log_floor);
                theta = next;
                any_step = true;
            }
        } catch (const NumericalError&) {
            if (!any_step) {
                info.failed = true;
                return;
            }
        }
        GpNarxModel m;
        m.lags = lags;
        m.normalizer = norm;
        m.hyper = GpHyperparams::unpack(theta);
        m.H_train = H;
        m.targets = y;
        try {
            m.rebuild_cache();
        } catch (const NumericalError&) {
            info.failed = true;
            return;
        }
        const Vector pred = se_kernel(H_val, H, m.hyper) * m.alpha;
        info.hyper = m.hyper;
        info.validation_rmse = std::sqrt((pred - val.targets).squaredNorm() / static_cast<double>(pred.size()));
        if (!std::isfinite(info.validation_rmse)) {
            info.failed = true;
            return;
        }
        models[r] = std::move(m);
    });

    std::optional<std::size_t> best;
    for (std::size_t r = 0; r < models.size(); ++r) {
        if (fit.restarts[r].failed) continue;
        if (!best || fit.restarts[r].validation_rmse < fit.restarts[*best].validation_rmse) best = r;
    }
    if (!best) throw Error("fit_gp_narx: every restart failed");
    fit.model = std::move(models[*best]);
    return fit;
}

}  // namespace sysid
