#pragma once

#include <cstdint>
#include <vector>

#include "sysid/data.hpp"

namespace sysid {

/// Single hidden layer, tanh activation: y = w2 . tanh(W1 x + b1) + b2.
struct MlpNarxModel {
    LagStructure lags;
    Normalizer normalizer;
    Matrix W1;  // hidden x width
    Vector b1;
    Vector w2;
    double b2 = 0.0;

    int hidden_size() const { return static_cast<int>(W1.rows()); }
    double predict_normalized(const Eigen::Ref<const Vector>& row) const;

    /// Flat layout [vec(W1) column-major, b1, w2, b2].
    Vector pack() const;
    void unpack(const Vector& params);
    static std::size_t parameter_count(int hidden, int width) {
        return static_cast<std::size_t>(hidden) * static_cast<std::size_t>(width + 2) + 1;
    }
};

/// Mean squared one-step error of a flat parameter vector on rows of H (no bias column).
double mlp_loss(const Vector& params, int hidden, const Eigen::Ref<const Matrix>& H,
                const Eigen::Ref<const Vector>& targets, Vector* grad = nullptr);

struct MlpOptions {
    std::vector<int> hidden_sizes{2, 5, 7, 10};
    int restarts = 5;
    int iterations = 20000;
    double lr = 1e-3;
    std::uint64_t seed = 0;
    int workers = 1;
};

struct MlpRun {
    int hidden = 0;
    int restart = 0;
    double train_loss = 0.0;
    double validation_rmse = 0.0;  // free-run, physical units
    bool failed = false;
};

struct MlpNarxFit {
    MlpNarxModel model;
    std::vector<MlpRun> runs;
};

/// Weights uniform in +-1/sqrt(fan_in), seeded per (hidden size, restart).
MlpNarxModel init_mlp(const LagStructure& lags, int hidden, std::uint64_t seed);

/// Full-batch ADAM on the one-step loss for each hidden size and restart; keeps the
/// network with the best validation free-run RMSE.
MlpNarxFit fit_mlp_narx(const TimeSeries& train, const TimeSeries& validation, const LagStructure& lags,
                        const MlpOptions& options = {});

}  // namespace sysid
