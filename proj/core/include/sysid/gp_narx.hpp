#pragma once

#include <cstdint>
#include <vector>

#include "sysid/data.hpp"

namespace sysid {

/// Squared-exponential hyperparameters, held as logs for unconstrained optimization.
/// Packed order: [log noise variance, log signal variance, log lengthscale].
struct GpHyperparams {
    double log_noise_var = 0.0;
    double log_signal_var = 0.0;
    double log_lengthscale = 0.0;

    double noise_var() const;
    double signal_var() const;
    double lengthscale() const;

    Vector pack() const;
    static GpHyperparams unpack(const Vector& theta);
};

/// Covariance matrix sigma_f^2 exp(-|a_i - b_j|^2 / (2 ell^2)).
Matrix se_kernel(const Eigen::Ref<const Matrix>& A, const Eigen::Ref<const Matrix>& B, const GpHyperparams& hp);

struct GpNlml {
    double value = 0.0;
    Vector grad;     // w.r.t. the packed log-hyperparameters, empty unless requested
    double jitter = 0.0;
};

/// Negative log marginal likelihood
///   1/2 y' S^-1 y + 1/2 log|S| + N/2 log(2 pi),  S = K(H, H) + sigma_n^2 I + jitter I.
/// The jitter scales with trace(S)/N and is included in the gradient.
GpNlml gp_nlml(const GpHyperparams& hp, const Eigen::Ref<const Matrix>& H, const Eigen::Ref<const Vector>& y,
               bool with_grad = false);
Vector gp_nlml_grad(const GpHyperparams& hp, const Eigen::Ref<const Matrix>& H, const Eigen::Ref<const Vector>& y);

/// Zero-mean GP regression on normalized regressors (rows of H_train, no bias column).
struct GpNarxModel {
    LagStructure lags;
    Normalizer normalizer;
    GpHyperparams hyper;
    Matrix H_train;
    Vector targets;

    // predictive cache: S alpha = targets with S = K + (sigma_n^2 + jitter) I
    Vector alpha;
    Matrix lower;
    double jitter = 0.0;

    void rebuild_cache();
    double predict_normalized(const Eigen::Ref<const Vector>& row) const;
};

/// Predictive mean k(row, H_train) alpha in normalized output coordinates.
double gp_predict_mean(const GpNarxModel& model, const Eigen::Ref<const Vector>& row);

struct GpOptions {
    int max_rows = 1000;     // truncate to the first max_rows Hankel rows
    int restarts = 5;
    int steps = 1000;
    double lr = 1e-2;
    double noise_floor = 1e-8;  // lower bound on sigma_n^2, normalized units
    double init_spread = 2.0;   // log-uniform initialization in [e^-s, e^s] times a data scale
    std::uint64_t seed = 0;
    int workers = 1;
};

struct GpRestart {
    GpHyperparams hyper;
    double final_nlml = 0.0;
    double validation_rmse = 0.0;  // one-step, normalized units
    bool failed = false;
};

struct GpNarxFit {
    GpNarxModel model;
    std::vector<GpRestart> restarts;
    bool truncated = false;
};

GpNarxFit fit_gp_narx(const TimeSeries& train, const TimeSeries& validation, const LagStructure& lags,
                      const GpOptions& options = {});

}  // namespace sysid
