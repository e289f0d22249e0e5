#pragma once

#include <optional>

#include "sysid/data.hpp"
#include "sysid/manifest.hpp"

namespace sysid {

/// Discrete-time SISO state-space model
///   x_{t+1} = A x_t + B (u_t - u_mean)
///   y_t     = C x_t + D (u_t - u_mean) + y_mean
struct StateSpaceModel {
    Matrix A;
    Vector B;
    Vector C;  // stored as a column; used as a row
    double D = 0.0;
    double u_mean = 0.0;
    double y_mean = 0.0;

    int n_x() const { return static_cast<int>(A.rows()); }
    double spectral_radius() const;
    bool stable() const { return spectral_radius() < 1.0; }
    void validate() const;

    /// Markov parameter C A^{k-1} B for k >= 1, D for k == 0.
    double markov(int k) const;
};

/// Free-run output in physical units. x0 defaults to zero. Throws SimulationError
/// at the first non-finite state or output.
Vector simulate_ss(const StateSpaceModel& model, const Vector& u, const std::optional<Vector>& x0 = std::nullopt);

struct SubspaceOptions {
    int arx_order = 0;        // 0 selects max(20, 5 n_x)
    double rank_tol = 1e-10;  // relative singular value threshold
};

/// High-order ARX -> impulse response -> Hankel SVD (Ho-Kalman) realization of
/// order n_x. `train` must already be mean-removed; the returned model has zero means.
StateSpaceModel subspace_init(const TimeSeries& train, int n_x, const SubspaceOptions& options = {});

struct PemOptions {
    int steps = 5000;
    double lr = 1e-3;
};

struct PemResult {
    StateSpaceModel model;
    double init_validation_rmse = 0.0;
    double best_validation_rmse = 0.0;
    double final_train_rmse = 0.0;  // of the returned model
    int best_step = 0;              // 0 means the initial model was kept
    bool diverged = false;
};

/// Output-error refinement: ADAM on the mean squared free-run simulation error over
/// every entry of A, B, C, D. Uses the means stored in `init`. Returns the stable
/// iterate with the lowest validation simulation RMSE (the initial model included).
PemResult pem_refine(const StateSpaceModel& init, const TimeSeries& train, const TimeSeries& validation,
                     const PemOptions& options = {});

/// Mean squared simulation error and its gradient w.r.t. the packed parameters
/// [vec(A), B, C, D] (column-major A), on the series as given.
double ss_simulation_loss(const StateSpaceModel& model, const TimeSeries& data, Vector* grad = nullptr);
Vector pack_parameters(const StateSpaceModel& model);
StateSpaceModel unpack_parameters(const Vector& theta, const StateSpaceModel& shape);

struct LtiOptions {
    bool grid_search = false;
    int grid_max = 6;
    SubspaceOptions subspace;
    PemOptions pem;
};

struct LtiFit {
    StateSpaceModel model;
    PemResult pem;
    bool init_stabilized = false;
    std::vector<std::pair<int, double>> grid;  // (n_x, validation RMSE) when grid searching
};

/// Number of states used per benchmark: Silverbox 2, W-H 6, EMPS 4, CT 2, CED 3.
int default_state_order(BenchmarkId id);

/// Mean removal -> subspace_init -> pem_refine; means are stored in the model.
LtiFit fit_lti_ss(const TrainingData& data, int n_x, const LtiOptions& options = {});
LtiFit fit_lti_ss(const BenchmarkDataset& dataset, int n_x, const LtiOptions& options = {});

}  // namespace sysid
