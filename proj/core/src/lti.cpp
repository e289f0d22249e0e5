#include "sysid/lti.hpp"

#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "sysid/adam.hpp"
#include "sysid/linalg.hpp"
#include "sysid/metrics.hpp"

namespace sysid {

double StateSpaceModel::spectral_radius() const {
    if (A.size() == 0) return 0.0;
    return A.eigenvalues().cwiseAbs().maxCoeff();
}

void StateSpaceModel::validate() const {
    const auto n = A.rows();
    if (n < 1 || A.cols() != n || B.size() != n || C.size() != n) {
        throw Error("state-space model: inconsistent dimensions");
    }
    if (!A.allFinite() || !B.allFinite() || !C.allFinite() || !std::isfinite(D) || !std::isfinite(u_mean) ||
        !std::isfinite(y_mean)) {
        throw Error("state-space model: non-finite entries");
    }
}

double StateSpaceModel::markov(int k) const {
    if (k == 0) return D;
    Vector v = B;
    for (int i = 1; i < k; ++i) v = A * v;
    return C.dot(v);
}

Vector simulate_ss(const StateSpaceModel& model, const Vector& u, const std::optional<Vector>& x0) {
    model.validate();
    Vector x = x0 ? *x0 : Vector::Zero(model.n_x());
    if (x.size() != model.n_x()) throw Error("simulate_ss: initial state dimension mismatch");
    Vector y(u.size());
    for (Eigen::Index t = 0; t < u.size(); ++t) {
        const double ut = u[t] - model.u_mean;
        y[t] = model.C.dot(x) + model.D * ut + model.y_mean;
        if (!std::isfinite(y[t])) throw SimulationError(static_cast<std::size_t>(t));
        x = model.A * x + model.B * ut;
        if (!x.allFinite()) throw SimulationError(static_cast<std::size_t>(t));
    }
    return y;
}

namespace {

// Impulse response h_0 .. h_count-1 of y_t = sum a_k y_{t-k} + sum_{j=0}^{L} b_j u_{t-j}.
Vector arx_impulse_response(const Vector& a, const Vector& b, Eigen::Index count) {
    Vector h = Vector::Zero(count);
    for (Eigen::Index k = 0; k < count; ++k) {
        double v = k < b.size() ? b[k] : 0.0;
        for (Eigen::Index j = 1; j <= a.size() && j <= k; ++j) v += a[j - 1] * h[k - j];
        h[k] = v;
    }
    return h;
}

}  // namespace

StateSpaceModel subspace_init(const TimeSeries& train, int n_x, const SubspaceOptions& options) {
    if (n_x < 1) throw ConfigError("subspace_init: n_x must be >= 1");
    train.validate();
    const int L = options.arx_order > 0 ? options.arx_order : std::max(20, 5 * n_x);
    const auto n = static_cast<Eigen::Index>(train.size());
    if (n < 10 * (2 * n_x + L)) {
        throw DataError("subspace_init: training record too short (" + std::to_string(n) + " samples, need " +
                        std::to_string(10 * (2 * n_x + L)) + ")");
    }

    // (i) high-order ARX with an offset column: [y_{t-1..t-L}, u_{t..t-L}, 1]
    const Eigen::Index rows = n - L;
    Matrix H(rows, 2 * L + 2);
    for (Eigen::Index t = L; t < n; ++t) {
        for (int k = 1; k <= L; ++k) H(t - L, k - 1) = train.y[t - k];
        for (int k = 0; k <= L; ++k) H(t - L, L + k) = train.u[t - k];
        H(t - L, 2 * L + 1) = 1.0;
    }
    const Vector theta = solve_least_squares_qr(H, train.y.tail(rows));
    const Vector a = theta.head(L);
    const Vector b = theta.segment(L, L + 1);

    // (ii) impulse response h_0 .. h_{2L}
    const Vector h = arx_impulse_response(a, b, 2 * L + 1);

    // (iii) Ho-Kalman on the L x L Hankel matrix of h_1 .. h_{2L-1}
    Matrix hankel(L, L);
    for (int i = 0; i < L; ++i) {
        for (int j = 0; j < L; ++j) hankel(i, j) = h[i + j + 1];
    }
    Eigen::JacobiSVD<Matrix> svd(hankel, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& sv = svd.singularValues();

    StateSpaceModel m;
    m.D = h[0];  // (iv) instantaneous least-squares feedthrough
    const double scale = std::max(sv[0], std::abs(h[0]));
    if (scale == 0.0 || sv[0] <= 1e-9 * scale) {
        // no measurable dynamics: static gain with a zero dynamic part
        m.A = Matrix::Zero(n_x, n_x);
        m.B = Vector::Zero(n_x);
        m.C = Vector::Zero(n_x);
        return m;
    }
    if (n_x > L || sv[n_x - 1] <= options.rank_tol * sv[0]) {
        throw NumericalError("subspace_init: Hankel matrix has numerical rank below n_x = " + std::to_string(n_x) +
                                 "; try a smaller state order",
                             static_cast<std::size_t>(n_x - 1));
    }
    const Vector sqrt_s = sv.head(n_x).cwiseSqrt();
    const Matrix obs = svd.matrixU().leftCols(n_x) * sqrt_s.asDiagonal();
    const Matrix ctrb = sqrt_s.asDiagonal() * svd.matrixV().leftCols(n_x).transpose();
    m.C = obs.row(0).transpose();
    m.B = ctrb.col(0);
    m.A = Eigen::CompleteOrthogonalDecomposition<Matrix>(obs.topRows(L - 1)).solve(obs.bottomRows(L - 1));
    return m;
}

Vector pack_parameters(const StateSpaceModel& m) {
    const int n = m.n_x();
    Vector theta(n * n + 2 * n + 1);
    theta.head(n * n) = Eigen::Map<const Vector>(m.A.data(), n * n);
    theta.segment(n * n, n) = m.B;
    theta.segment(n * n + n, n) = m.C;
    theta[n * n + 2 * n] = m.D;
    return theta;
}

StateSpaceModel unpack_parameters(const Vector& theta, const StateSpaceModel& shape) {
    const int n = shape.n_x();
    if (theta.size() != n * n + 2 * n + 1) throw Error("unpack_parameters: length mismatch");
    StateSpaceModel m = shape;
    m.A = Eigen::Map<const Matrix>(theta.data(), n, n);
    m.B = theta.segment(n * n, n);
    m.C = theta.segment(n * n + n, n);
    m.D = theta[n * n + 2 * n];
    return m;
}

double ss_simulation_loss(const StateSpaceModel& m, const TimeSeries& data, Vector* grad) {
    const int n = m.n_x();
    const Eigen::Index T = static_cast<Eigen::Index>(data.size());
    const Vector u = data.u.array() - m.u_mean;
    Matrix states(n, T);
    Vector err(T);
    Vector x = Vector::Zero(n);
    double loss = 0.0;
    for (Eigen::Index t = 0; t < T; ++t) {
        states.col(t) = x;
        err[t] = m.C.dot(x) + m.D * u[t] + m.y_mean - data.y[t];
        loss += err[t] * err[t];
        x = m.A * x + m.B * u[t];
    }
    loss /= static_cast<double>(T);
    if (grad == nullptr || !std::isfinite(loss)) return loss;

    Matrix gA = Matrix::Zero(n, n);
    Vector gB = Vector::Zero(n);
    Vector gC = Vector::Zero(n);
    double gD = 0.0;
    Vector lambda = Vector::Zero(n);  // dL/dx_{t+1}
    const Matrix At = m.A.transpose();
    for (Eigen::Index t = T - 1; t >= 0; --t) {
        const double e = 2.0 * err[t] / static_cast<double>(T);
        gC.noalias() += e * states.col(t);
        gD += e * u[t];
        gA.noalias() += lambda * states.col(t).transpose();
        gB.noalias() += lambda * u[t];
        lambda = m.C * e + At * lambda;
    }
    grad->resize(n * n + 2 * n + 1);
    grad->head(n * n) = Eigen::Map<const Vector>(gA.data(), n * n);
    grad->segment(n * n, n) = gB;
    grad->segment(n * n + n, n) = gC;
    (*grad)[n * n + 2 * n] = gD;
    return loss;
}

namespace {

double simulation_rmse(const StateSpaceModel& m, const TimeSeries& data) {
    try {
        return compute_rmse(data.y, simulate_ss(m, data.u));
    } catch (const SimulationError&) {
        return std::numeric_limits<double>::infinity();
    }
}

}  // namespace

PemResult pem_refine(const StateSpaceModel& init, const TimeSeries& train, const TimeSeries& validation,
                     const PemOptions& options) {
    init.validate();
    if (!init.stable()) throw Error("pem_refine: initial model is unstable");

    PemResult result;
    result.model = init;
    result.init_validation_rmse = simulation_rmse(init, validation);
    result.best_validation_rmse = result.init_validation_rmse;

    Vector theta = pack_parameters(init);
    AdamState adam = AdamState::zeros(theta.size(), options.lr);
    Vector grad;
    for (int step = 1; step <= options.steps; ++step) {
        const StateSpaceModel current = unpack_parameters(theta, init);
        const double loss = ss_simulation_loss(current, train, &grad);
        if (!std::isfinite(loss) || !grad.allFinite()) {
            result.diverged = true;
            break;
        }
        adam_update(adam, theta, grad);
        const StateSpaceModel next = unpack_parameters(theta, init);
        if (!next.stable()) continue;
        const double val = simulation_rmse(next, validation);
        if (val < result.best_validation_rmse) {
            result.best_validation_rmse = val;
            result.model = next;
            result.best_step = step;
        }
    }
    result.final_train_rmse = std::sqrt(ss_simulation_loss(result.model, train));
    return result;
}

int default_state_order(BenchmarkId id) {
    switch (id) {
        case BenchmarkId::silverbox: return 2;
        case BenchmarkId::wiener_hammerstein: return 6;
        case BenchmarkId::emps: return 4;
        case BenchmarkId::cascaded_tanks: return 2;
        case BenchmarkId::ced: return 3;
    }
    return 2;
}

namespace {

LtiFit fit_single_order(const TrainingData& data, int n_x, const LtiOptions& options) {
    const double u_mean = data.train.u.mean();
    const double y_mean = data.train.y.mean();
    TimeSeries centred = data.train;
    centred.u.array() -= u_mean;
    centred.y.array() -= y_mean;

    LtiFit fit;
    StateSpaceModel init = subspace_init(centred, n_x, options.subspace);
    const double rho = init.spectral_radius();
    if (rho >= 1.0) {
        init.A *= 0.99 / rho;
        fit.init_stabilized = true;
    }
    init.u_mean = u_mean;
    init.y_mean = y_mean;
    fit.pem = pem_refine(init, data.train, data.validation, options.pem);
    fit.model = fit.pem.model;
    return fit;
}

}  // namespace

LtiFit fit_lti_ss(const TrainingData& data, int n_x, const LtiOptions& options) {
    if (n_x < 1) throw ConfigError("fit_lti_ss: n_x must be >= 1");
    if (!options.grid_search) return fit_single_order(data, n_x, options);

    std::optional<LtiFit> best;
    std::vector<std::pair<int, double>> grid;
    for (int order = 1; order <= options.grid_max; ++order) {
        try {
            LtiFit f = fit_single_order(data, order, options);
            grid.emplace_back(order, f.pem.best_validation_rmse);
            if (f.model.stable() && (!best || f.pem.best_validation_rmse < best->pem.best_validation_rmse)) {
                best = std::move(f);
            }
        } catch (const NumericalError&) {
            grid.emplace_back(order, std::numeric_limits<double>::infinity());
        }
    }
    if (!best) throw Error("fit_lti_ss: no state order in the grid produced a stable model");
    best->grid = std::move(grid);
    return *best;
}

LtiFit fit_lti_ss(const BenchmarkDataset& dataset, int n_x, const LtiOptions& options) {
    return fit_lti_ss(TrainingData{dataset.train, dataset.validation}, n_x, options);
}

}  // namespace sysid
