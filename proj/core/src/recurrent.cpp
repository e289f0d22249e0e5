#include "sysid/recurrent.hpp"

#include <cmath>
#include <optional>
#include <random>

#include "sysid/adam.hpp"
#include "sysid/metrics.hpp"
#include "sysid/parallel.hpp"

namespace sysid {

std::string_view to_string(CellKind kind) {
    switch (kind) {
        case CellKind::fir: return "fir";
        case CellKind::rnn: return "rnn";
        case CellKind::gru: return "gru";
        case CellKind::lstm: return "lstm";
        case CellKind::olstm: return "olstm";
    }
    return "?";
}

CellKind cell_kind_from_string(std::string_view name) {
    for (CellKind k : {CellKind::fir, CellKind::rnn, CellKind::gru, CellKind::lstm, CellKind::olstm}) {
        if (to_string(k) == name) return k;
    }
    throw ConfigError("unknown cell kind '" + std::string(name) + "'");
}

namespace {

using CMap = Eigen::Map<const Matrix>;
using CVMap = Eigen::Map<const Vector>;
using MMap = Eigen::Map<Matrix>;
using VMap = Eigen::Map<Vector>;
using Index = Eigen::Index;

struct Layout {
    CellKind kind;
    Index m;
    Index h;
    Index gates = 1;
    Index block = 0;

    Layout(CellKind k, int n_u, int n_h) : kind(k), m(n_u), h(n_h) {
        switch (k) {
            case CellKind::fir: gates = 1; break;
            case CellKind::rnn: gates = 1; break;
            case CellKind::gru: gates = 3; break;
            case CellKind::lstm:
            case CellKind::olstm: gates = 4; break;
        }
        block = k == CellKind::fir ? h * m + h : h * m + h * h + h;
    }

    Index wu(Index g) const { return g * block; }
    Index wh(Index g) const { return g * block + h * m; }
    Index bias(Index g) const { return kind == CellKind::fir ? h * m : g * block + h * m + h * h; }
    Index fused_b() const { return 4 * h * (m + h); }
    Index readout() const { return kind == CellKind::olstm ? 4 * h * (m + h) + 4 * h : gates * block; }
    Index total() const { return readout() + h + 1; }
    bool has_cell() const { return kind == CellKind::lstm || kind == CellKind::olstm; }
};

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Vector sigmoid(const Vector& a) { return a.unaryExpr([](double v) { return sigmoid(v); }); }

struct StepCache {
    Vector x;
    Vector h_prev;
    Vector c_prev;
    Vector act;  // post-nonlinearity gate values
    Vector h;
    Vector c;
    double y = 0.0;
};

// a_g = W_u,g x + W_h,g h_in + b_g
Vector gate_pre(const Layout& L, const double* p, Index g, const Vector& x, const Vector& h_in) {
    Vector a = CMap(p + L.wu(g), L.h, L.m) * x + CVMap(p + L.bias(g), L.h);
    if (L.kind != CellKind::fir) a.noalias() += CMap(p + L.wh(g), L.h, L.h) * h_in;
    return a;
}

Vector lstm_pre(const Layout& L, const double* p, const Vector& x, const Vector& h_prev) {
    if (L.kind == CellKind::olstm) {
        // one fused product over the concatenated [input, hidden]
        const CMap W(p, 4 * L.h, L.m + L.h);
        Vector xh(L.m + L.h);
        xh << x, h_prev;
        return W * xh + CVMap(p + L.fused_b(), 4 * L.h);
    }
    Vector a(4 * L.h);
    for (Index g = 0; g < 4; ++g) a.segment(g * L.h, L.h) = gate_pre(L, p, g, x, h_prev);
    return a;
}

void forward_step(const Layout& L, const double* p, StepCache& k) {
    const Index h = L.h;
    switch (L.kind) {
        case CellKind::fir:
        case CellKind::rnn:
            k.act = gate_pre(L, p, 0, k.x, k.h_prev).array().tanh();
            k.h = k.act;
            break;
        case CellKind::gru: {
            k.act.resize(3 * h);
            const Vector z = sigmoid(gate_pre(L, p, 0, k.x, k.h_prev));
            const Vector r = sigmoid(gate_pre(L, p, 1, k.x, k.h_prev));
            const Vector rh = r.cwiseProduct(k.h_prev);
            const Vector n = gate_pre(L, p, 2, k.x, rh).array().tanh();
            k.act << z, r, n;
            k.h = (1.0 - z.array()) * k.h_prev.array() + z.array() * n.array();
            break;
        }
        case CellKind::lstm:
        case CellKind::olstm: {
            const Vector a = lstm_pre(L, p, k.x, k.h_prev);
            k.act.resize(4 * h);
            k.act.segment(0, h) = sigmoid(Vector(a.segment(0, h)));
            k.act.segment(h, h) = sigmoid(Vector(a.segment(h, h)));
            k.act.segment(2 * h, h) = a.segment(2 * h, h).array().tanh();
            k.act.segment(3 * h, h) = sigmoid(Vector(a.segment(3 * h, h)));
            k.c = k.act.segment(h, h).cwiseProduct(k.c_prev) + k.act.segment(0, h).cwiseProduct(k.act.segment(2 * h, h));
            k.h = k.act.segment(3 * h, h).array() * k.c.array().tanh();
            break;
        }
    }
    k.y = CVMap(p + L.readout(), h).dot(k.h) + p[L.readout() + h];
}

// Accumulates parameter gradients of one step into g. dh is dLoss/dh_t (readout and
// future contributions), dc likewise for the cell state. Returns carries for t-1.
void backward_step(const Layout& L, const double* p, const StepCache& k, const Vector& dh, const Vector& dc,
                   double* g, Vector& dh_prev, Vector& dc_prev) {
    const Index h = L.h;
    auto acc_gate = [&](Index gate, const Vector& da, const Vector& h_in) {
        MMap(g + L.wu(gate), h, L.m).noalias() += da * k.x.transpose();
        VMap(g + L.bias(gate), h) += da;
        if (L.kind != CellKind::fir) MMap(g + L.wh(gate), h, h).noalias() += da * h_in.transpose();
    };
    switch (L.kind) {
        case CellKind::fir: {
            const Vector da = dh.array() * (1.0 - k.act.array().square());
            acc_gate(0, da, k.h_prev);
            dh_prev = Vector::Zero(h);
            break;
        }
        case CellKind::rnn: {
            const Vector da = dh.array() * (1.0 - k.act.array().square());
            acc_gate(0, da, k.h_prev);
            dh_prev = CMap(p + L.wh(0), h, h).transpose() * da;
            break;
        }
        case CellKind::gru: {
            const auto z = k.act.segment(0, h).array();
            const auto r = k.act.segment(h, h).array();
            const auto n = k.act.segment(2 * h, h).array();
            const Vector dz = dh.array() * (n - k.h_prev.array());
            const Vector dn = dh.array() * z;
            dh_prev = dh.array() * (1.0 - z);

            const Vector da_n = dn.array() * (1.0 - n.square());
            const Vector rh = r * k.h_prev.array();
            acc_gate(2, da_n, rh);
            const Vector drh = CMap(p + L.wh(2), h, h).transpose() * da_n;
            const Vector dr = drh.array() * k.h_prev.array();
            dh_prev.array() += drh.array() * r;

            const Vector da_z = dz.array() * z * (1.0 - z);
            const Vector da_r = dr.array() * r * (1.0 - r);
            acc_gate(0, da_z, k.h_prev);
            acc_gate(1, da_r, k.h_prev);
            dh_prev.noalias() += CMap(p + L.wh(0), h, h).transpose() * da_z;
            dh_prev.noalias() += CMap(p + L.wh(1), h, h).transpose() * da_r;
            break;
        }
        case CellKind::lstm:
        case CellKind::olstm: {
            const auto i = k.act.segment(0, h).array();
            const auto f = k.act.segment(h, h).array();
            const auto gg = k.act.segment(2 * h, h).array();
            const auto o = k.act.segment(3 * h, h).array();
            const Eigen::ArrayXd tc = k.c.array().tanh();
            const Eigen::ArrayXd dc_total = dc.array() + dh.array() * o * (1.0 - tc.square());
            Vector da(4 * h);
            da.segment(0, h) = dc_total * gg * i * (1.0 - i);
            da.segment(h, h) = dc_total * k.c_prev.array() * f * (1.0 - f);
            da.segment(2 * h, h) = dc_total * i * (1.0 - gg.square());
            da.segment(3 * h, h) = dh.array() * tc * o * (1.0 - o);
            dc_prev = dc_total * f;
            if (L.kind == CellKind::olstm) {
                Vector xh(L.m + h);
                xh << k.x, k.h_prev;
                MMap(g, 4 * h, L.m + h).noalias() += da * xh.transpose();
                VMap(g + L.fused_b(), 4 * h) += da;
                dh_prev = CMap(p, 4 * h, L.m + h).rightCols(h).transpose() * da;
            } else {
                dh_prev = Vector::Zero(h);
                for (Index gate = 0; gate < 4; ++gate) {
                    const Vector dag = da.segment(gate * h, h);
                    acc_gate(gate, dag, k.h_prev);
                    dh_prev.noalias() += CMap(p + L.wh(gate), h, h).transpose() * dag;
                }
            }
            break;
        }
    }
}

}  // namespace

std::size_t RecurrentModel::parameter_count(CellKind kind, int n_u, int n_h) {
    return static_cast<std::size_t>(Layout(kind, n_u, n_h).total());
}

void RecurrentModel::validate() const {
    if (n_u < 1 || n_h < 1) throw ConfigError("recurrent model: n_u and n_h must be >= 1");
    if (static_cast<std::size_t>(params.size()) != parameter_count(kind, n_u, n_h)) {
        throw ConfigError("recurrent model: parameter vector has " + std::to_string(params.size()) +
                          " entries, expected " + std::to_string(parameter_count(kind, n_u, n_h)));
    }
    if (!params.allFinite()) throw Error("recurrent model: non-finite parameters");
}

CellState CellState::zeros(const RecurrentModel& model) {
    CellState s;
    s.h = Vector::Zero(model.n_h);
    s.c = Vector::Zero(model.n_h);
    return s;
}

CellOutput cell_forward(const RecurrentModel& model, const CellState& state, const Eigen::Ref<const Vector>& stacked_u) {
    const Layout L(model.kind, model.n_u, model.n_h);
    if (stacked_u.size() != L.m || state.h.size() != L.h || (L.has_cell() && state.c.size() != L.h)) {
        throw Error("cell_forward: shape mismatch");
    }
    StepCache k;
    k.x = stacked_u;
    k.h_prev = state.h;
    k.c_prev = L.has_cell() ? state.c : Vector::Zero(L.h);
    forward_step(L, model.params.data(), k);
    CellOutput out;
    out.state.h = std::move(k.h);
    out.state.c = L.has_cell() ? std::move(k.c) : Vector::Zero(L.h);
    out.y = k.y;
    return out;
}

Vector simulate_rnn(const RecurrentModel& model, const Vector& u) {
    model.validate();
    const Index n = u.size();
    if (n < model.n_u) throw Error("simulate_rnn: input shorter than the look-back window");
    const Layout L(model.kind, model.n_u, model.n_h);
    const Vector u_n = model.normalizer.apply_u(u);
    Vector out = Vector::Constant(n, model.normalizer.y_mean);
    StepCache k;
    k.h_prev = Vector::Zero(L.h);
    k.c_prev = Vector::Zero(L.h);
    k.x.resize(L.m);
    for (Index t = model.n_u - 1; t < n; ++t) {
        for (Index j = 0; j < L.m; ++j) k.x[j] = u_n[t - j];
        forward_step(L, model.params.data(), k);
        if (!k.h.allFinite() || (L.has_cell() && !k.c.allFinite()) || !std::isfinite(k.y)) {
            throw SimulationError(static_cast<std::size_t>(t));
        }
        out[t] = model.normalizer.invert_y(k.y);
        std::swap(k.h_prev, k.h);
        if (L.has_cell()) std::swap(k.c_prev, k.c);
    }
    return out;
}

RecurrentModel lstm_to_olstm(const RecurrentModel& lstm) {
    if (lstm.kind != CellKind::lstm) throw ConfigError("lstm_to_olstm: expects an lstm model");
    lstm.validate();
    const Layout src(CellKind::lstm, lstm.n_u, lstm.n_h);
    const Layout dst(CellKind::olstm, lstm.n_u, lstm.n_h);
    RecurrentModel out = lstm;
    out.kind = CellKind::olstm;
    out.params.setZero(dst.total());
    const double* p = lstm.params.data();
    MMap W(out.params.data(), 4 * dst.h, dst.m + dst.h);
    for (Index g = 0; g < 4; ++g) {
        W.block(g * dst.h, 0, dst.h, dst.m) = CMap(p + src.wu(g), src.h, src.m);
        W.block(g * dst.h, dst.m, dst.h, dst.h) = CMap(p + src.wh(g), src.h, src.h);
        out.params.segment(dst.fused_b() + g * dst.h, dst.h) = CVMap(p + src.bias(g), src.h);
    }
    out.params.tail(dst.h + 1) = lstm.params.tail(src.h + 1);
    return out;
}

TrainingWindows make_windows(const TimeSeries& normalized, int n_u, const SubsequenceOptions& options) {
    if (n_u < 1) throw ConfigError("make_windows: n_u must be >= 1");
    if (options.length < 1 || options.stride < 1 || options.washout < 0) {
        throw ConfigError("make_windows: length and stride must be >= 1, washout >= 0");
    }
    const Index n = static_cast<Index>(normalized.size());
    const Index T = n - n_u + 1;
    if (T < 1) throw DataError("make_windows: record shorter than the look-back window");
    TrainingWindows w;
    w.washout = options.washout;
    w.inputs.resize(n_u, T);
    for (Index j = 0; j < T; ++j) {
        for (Index k = 0; k < n_u; ++k) w.inputs(k, j) = normalized.u[j + n_u - 1 - k];
    }
    w.targets = normalized.y.tail(T);
    const Index len = std::min<Index>(options.length, T);
    Index begin = 0;
    for (; begin + len <= T; begin += options.stride) w.segments.push_back({begin, len});
    if (w.segments.back().begin + len < T) w.segments.push_back({T - len, len});
    return w;
}

double sequence_loss(const RecurrentModel& model, const TrainingWindows& windows,
                     const std::vector<std::size_t>& segment_ids, Vector* grad) {
    model.validate();
    const Layout L(model.kind, model.n_u, model.n_h);
    if (windows.inputs.rows() != L.m) throw Error("sequence_loss: window look-back does not match the model");
    const double* p = model.params.data();
    std::vector<std::size_t> ids = segment_ids;
    if (ids.empty()) {
        for (std::size_t i = 0; i < windows.segments.size(); ++i) ids.push_back(i);
    }

    std::size_t scored = 0;
    for (auto id : ids) {
        scored += static_cast<std::size_t>(std::max<Index>(0, windows.segments.at(id).length - windows.washout));
    }
    if (scored == 0) throw Error("sequence_loss: every step falls inside the washout");
    const double scale = 1.0 / static_cast<double>(scored);

    if (grad) grad->setZero(L.total());
    double loss = 0.0;
    std::vector<StepCache> cache;
    for (auto id : ids) {
        const auto& seg = windows.segments[id];
        cache.resize(static_cast<std::size_t>(seg.length));
        Vector h = Vector::Zero(L.h);
        Vector c = Vector::Zero(L.h);
        for (Index s = 0; s < seg.length; ++s) {
            StepCache& k = cache[static_cast<std::size_t>(s)];
            k.x = windows.inputs.col(seg.begin + s);
            k.h_prev = h;
            k.c_prev = c;
            forward_step(L, p, k);
            h = k.h;
            if (L.has_cell()) c = k.c;
            if (s >= windows.washout) {
                const double e = k.y - windows.targets[seg.begin + s];
                loss += e * e;
            }
        }
        if (!grad) continue;

        double* g = grad->data();
        const CVMap w(p + L.readout(), L.h);
        Vector dh_next = Vector::Zero(L.h);
        Vector dc_next = Vector::Zero(L.h);
        Vector dh_prev;
        Vector dc_prev = Vector::Zero(L.h);
        for (Index s = seg.length - 1; s >= 0; --s) {
            const StepCache& k = cache[static_cast<std::size_t>(s)];
            double dy = 0.0;
            if (s >= windows.washout) dy = 2.0 * scale * (k.y - windows.targets[seg.begin + s]);
            VMap(g + L.readout(), L.h) += dy * k.h;
            g[L.readout() + L.h] += dy;
            const Vector dh = w * dy + dh_next;
            backward_step(L, p, k, dh, dc_next, g, dh_prev, dc_prev);
            dh_next = dh_prev;
            if (L.has_cell()) dc_next = dc_prev;
        }
    }
    return loss * scale;
}

RecurrentModel init_recurrent(CellKind kind, int n_u, int n_h, std::uint64_t seed) {
    RecurrentModel m;
    m.kind = kind;
    m.n_u = n_u;
    m.n_h = n_h;
    if (n_u < 1 || n_h < 1) throw ConfigError("init_recurrent: n_u and n_h must be >= 1");
    const Layout L(kind, n_u, n_h);
    std::mt19937_64 rng(seed);
    const double cell_fan_in = static_cast<double>(kind == CellKind::fir ? L.m : L.m + L.h);
    std::uniform_real_distribution<double> cell(-1.0 / std::sqrt(cell_fan_in), 1.0 / std::sqrt(cell_fan_in));
    std::uniform_real_distribution<double> out(-1.0 / std::sqrt(static_cast<double>(L.h)),
                                               1.0 / std::sqrt(static_cast<double>(L.h)));
    m.params.resize(L.total());
    for (Index i = 0; i < L.readout(); ++i) m.params[i] = cell(rng);
    for (Index i = L.readout(); i < L.total(); ++i) m.params[i] = out(rng);
    if (kind == CellKind::lstm) m.params.segment(L.bias(1), L.h).setOnes();
    if (kind == CellKind::olstm) m.params.segment(L.fused_b() + L.h, L.h).setOnes();
    return m;
}

int default_epochs(std::size_t usable_samples) { return usable_samples < 10000 ? 20000 : 10000; }

RecurrentFit bptt_train(const TimeSeries& train, const TimeSeries& validation, const RecurrentSearch& search) {
    if (search.look_backs.empty() || search.hidden_sizes.empty() || search.restarts < 1 || search.batch_size < 1) {
        throw ConfigError("bptt_train: empty search space");
    }
    const Normalizer norm = fit_normalizer(train, Normalizer::Mode::zscore);
    const TimeSeries train_n = norm.apply(train);

    RecurrentFit fit;
    fit.epochs = search.epochs > 0 ? search.epochs : default_epochs(train.size());
    for (int n_u : search.look_backs) {
        for (int n_h : search.hidden_sizes) {
            for (int r = 0; r < search.restarts; ++r) {
                RecurrentRun run;
                run.n_u = n_u;
                run.n_h = n_h;
                run.restart = r;
                fit.runs.push_back(run);
            }
        }
    }
    std::vector<std::optional<TrainingWindows>> windows(search.look_backs.size());
    for (std::size_t i = 0; i < search.look_backs.size(); ++i) {
        windows[i] = make_windows(train_n, search.look_backs[i], search.windows);
    }

    std::vector<RecurrentModel> models(fit.runs.size());
    parallel_for(fit.runs.size(), search.workers, [&](std::size_t idx) {
        RecurrentRun& run = fit.runs[idx];
        const std::size_t lb = idx / (search.hidden_sizes.size() * static_cast<std::size_t>(search.restarts));
        const TrainingWindows& w = *windows[lb];
        RecurrentModel m = init_recurrent(search.kind, run.n_u, run.n_h,
                                          derive_seed(search.seed, {static_cast<std::uint64_t>(run.n_u),
                                                                    static_cast<std::uint64_t>(run.n_h),
                                                                    static_cast<std::uint64_t>(run.restart)}));
        m.normalizer = norm;
        AdamState adam = AdamState::zeros(m.params.size(), search.lr);
        Vector grad;
        std::vector<std::size_t> batch;
        try {
            for (int epoch = 0; epoch < fit.epochs; ++epoch) {
                for (std::size_t b = 0; b < w.segments.size(); b += static_cast<std::size_t>(search.batch_size)) {
                    batch.clear();
                    for (std::size_t s = b; s < std::min(w.segments.size(), b + search.batch_size); ++s) {
                        batch.push_back(s);
                    }
                    const double loss = sequence_loss(m, w, batch, &grad);
                    if (!std::isfinite(loss)) {
                        throw NumericalError("non-finite training loss at epoch " + std::to_string(epoch), batch[0]);
                    }
                    adam_update(adam, m.params, grad);
                }
            }
            run.train_loss = sequence_loss(m, w);
            run.validation_rmse = compute_rmse(validation.y, simulate_rnn(m, validation.u));
        } catch (const Error& e) {
            run.failed = true;
            run.failure = e.what();
            return;
        }
        models[idx] = std::move(m);
    });

    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < fit.runs.size(); ++i) {
        if (fit.runs[i].failed) continue;
        if (!best || fit.runs[i].validation_rmse < fit.runs[*best].validation_rmse) best = i;
    }
    if (!best) throw Error("bptt_train: every training run failed");
    fit.model = std::move(models[*best]);
    return fit;
}

}  // namespace sysid
