#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "sysid/data.hpp"

namespace sysid {

enum class CellKind { fir, rnn, gru, lstm, olstm };

std::string_view to_string(CellKind kind);
CellKind cell_kind_from_string(std::string_view name);

/// Input-driven simulation model. The stacked input at time t is
/// [u_t, u_{t-1}, .., u_{t-n_u+1}] in normalized units; the readout is y = w . h + c.
///
/// Flat parameter layouts (matrices column-major), m = n_u, h = n_h:
///   fir   : W (h x m), b (h) | w (h), c        h is the tanh hidden width, no recurrence
///   rnn   : W_u (h x m), W_h (h x h), b (h) | w, c
///   gru   : [W_u, W_h, b] for gates z, r, n | w, c
///   lstm  : [W_u, W_h, b] for gates i, f, g, o | w, c
///   olstm : W (4h x (m + h)), b (4h) | w, c   rows ordered i, f, g, o; columns [input, hidden]
struct RecurrentModel {
    CellKind kind = CellKind::gru;
    int n_u = 1;
    int n_h = 1;
    Vector params;
    Normalizer normalizer;

    static std::size_t parameter_count(CellKind kind, int n_u, int n_h);
    /// Throws ConfigError on bad shapes, Error on non-finite parameters.
    void validate() const;
};

/// Hidden state; `c` is used by lstm and olstm only.
struct CellState {
    Vector h;
    Vector c;

    static CellState zeros(const RecurrentModel& model);
};

struct CellOutput {
    CellState state;
    double y = 0.0;
};

/// One step of the cell followed by the readout, in normalized coordinates.
CellOutput cell_forward(const RecurrentModel& model, const CellState& state, const Eigen::Ref<const Vector>& stacked_u);

/// Free-run simulation from a zero state, physical units. Samples before index n_u - 1
/// are the normalizer's y_mean. Throws SimulationError at the first non-finite state.
Vector simulate_rnn(const RecurrentModel& model, const Vector& u);

/// lstm parameters rearranged into the fused olstm layout (same mathematics).
RecurrentModel lstm_to_olstm(const RecurrentModel& lstm);

struct SubsequenceOptions {
    int length = 128;
    int stride = 64;
    int washout = 16;
};

/// Stacked inputs (n_u x T) and targets for t = n_u-1 .. N-1 of a normalized record,
/// cut into overlapping windows [begin, begin + length) over the columns. When the
/// stride leaves a remainder, a final window ending at T is appended.
struct TrainingWindows {
    struct Segment {
        Eigen::Index begin = 0;
        Eigen::Index length = 0;
    };

    Matrix inputs;
    Vector targets;
    std::vector<Segment> segments;
    int washout = 0;
};

TrainingWindows make_windows(const TimeSeries& normalized, int n_u, const SubsequenceOptions& options);

/// Mean squared simulation error over the non-washout steps of the chosen segments
/// (all when `segment_ids` is empty), each started from a zero state. With `grad`,
/// fills the gradient by backpropagation through time.
double sequence_loss(const RecurrentModel& model, const TrainingWindows& windows,
                     const std::vector<std::size_t>& segment_ids = {}, Vector* grad = nullptr);

/// Uniform +-1/sqrt(fan_in) per layer; forget-gate bias 1 for lstm / olstm.
RecurrentModel init_recurrent(CellKind kind, int n_u, int n_h, std::uint64_t seed);

/// 2e4 epochs below 1e4 usable training samples, 1e4 otherwise.
int default_epochs(std::size_t usable_samples);

struct RecurrentSearch {
    CellKind kind = CellKind::gru;
    std::vector<int> look_backs{1, 5, 10, 20};
    std::vector<int> hidden_sizes{4, 8, 16, 32};
    int restarts = 10;
    int epochs = 0;  // 0 applies default_epochs
    double lr = 1e-3;
    int batch_size = 32;  // subsequences per ADAM step
    SubsequenceOptions windows;
    std::uint64_t seed = 0;
    int workers = 1;
};

struct RecurrentRun {
    int n_u = 0;
    int n_h = 0;
    int restart = 0;
    double train_loss = 0.0;
    double validation_rmse = 0.0;  // free-run, physical units
    bool failed = false;
    std::string failure;
};

struct RecurrentFit {
    RecurrentModel model;
    std::vector<RecurrentRun> runs;
    int epochs = 0;
};

/// Trains every (n_u, n_h, restart) candidate with ADAM + BPTT and keeps the one with the
/// lowest full-record validation free-run RMSE. Failed runs are recorded and skipped.
RecurrentFit bptt_train(const TimeSeries& train, const TimeSeries& validation, const RecurrentSearch& search);

}  // namespace sysid
