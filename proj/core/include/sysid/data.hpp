#pragma once

#include <algorithm>
#include <array>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sysid/common.hpp"

namespace sysid {

/// One single-input single-output record in physical units.
struct TimeSeries {
    std::string name;
    Vector u;
    Vector y;
    double sample_time = 1.0;

    std::size_t size() const { return static_cast<std::size_t>(y.size()); }

    /// Throws DataError unless length(u) == length(y) >= 1, sample_time > 0 and every sample is finite.
    void validate() const;

    /// Contiguous slice [begin, begin + count).
    TimeSeries slice(std::size_t begin, std::size_t count, std::string new_name = {}) const;
};

/// Concatenates records end to end (same sample time required).
TimeSeries concatenate(const std::vector<TimeSeries>& parts, std::string name);

enum class BenchmarkId { silverbox, wiener_hammerstein, emps, cascaded_tanks, ced };

inline constexpr std::array<BenchmarkId, 5> kAllBenchmarks = {
    BenchmarkId::silverbox, BenchmarkId::wiener_hammerstein, BenchmarkId::emps,
    BenchmarkId::cascaded_tanks, BenchmarkId::ced};

std::string_view to_string(BenchmarkId id);
BenchmarkId benchmark_from_string(std::string_view name);

struct NamedSeries {
    std::string name;
    TimeSeries series;
};

/// A benchmark split into train / validation / named test records.
struct BenchmarkDataset {
    BenchmarkId benchmark_id = BenchmarkId::silverbox;
    TimeSeries train;
    TimeSeries validation;
    std::vector<NamedSeries> tests;
    std::string report_unit;
    double report_scale = 1.0;  // 1 or 1e3, display only

    void validate() const;
};

/// Train-set statistics applied around every model. Apply maps physical to
/// normalized coordinates, invert maps back.
struct Normalizer {
    enum class Mode { mean_only, zscore };

    Mode mode = Mode::zscore;
    double u_mean = 0.0;
    double y_mean = 0.0;
    double u_scale = 1.0;
    double y_scale = 1.0;
    bool constant_signal = false;  // set when a zscore scale fell back to 1

    double apply_u(double u) const { return (u - u_mean) / u_scale; }
    double apply_y(double y) const { return (y - y_mean) / y_scale; }
    double invert_u(double u) const { return u * u_scale + u_mean; }
    double invert_y(double y) const { return y * y_scale + y_mean; }

    Vector apply_u(const Vector& u) const;
    Vector apply_y(const Vector& y) const;
    Vector invert_u(const Vector& u) const;
    Vector invert_y(const Vector& y) const;

    TimeSeries apply(const TimeSeries& ts) const;
    TimeSeries invert(const TimeSeries& ts) const;
};

Normalizer fit_normalizer(const TimeSeries& train, Normalizer::Mode mode);

/// Output/input lag counts for the regressor
/// [y_{t-1} .. y_{t-n_y}, u_t .. u_{t-n_u+1}].
struct LagStructure {
    static constexpr int kMaxLag = 20;

    int n_y = 1;
    int n_u = 1;

    int p() const { return std::max(n_y, n_u); }
    int width() const { return n_y + n_u; }
    void validate() const;

    friend bool operator==(const LagStructure&, const LagStructure&) = default;
};

/// Regressor matrix (bias column last) and aligned one-step targets.
struct Regression {
    Matrix H;
    Vector targets;
};

/// Row t (t = p .. N-1) holds [y_{t-1}..y_{t-n_y}, u_t..u_{t-n_u+1}, 1] with target y_t.
Regression build_hankel(const TimeSeries& ts, const LagStructure& lags);

/// Writes one regressor row without the bias entry for time `t`, reading lagged
/// outputs from `y` and inputs from `u`.
void fill_regressor(const Vector& y, const Vector& u, std::size_t t, const LagStructure& lags,
                    Eigen::Ref<Vector> row);

/// Validation is the contiguous tail. Both segments must hold at least 2*max_lag + 1 samples.
std::pair<TimeSeries, TimeSeries> split_train_val(const TimeSeries& ts, double val_fraction,
                                                  int max_lag = 0);

struct CsvSchema {
    std::string input_column = "u";
    std::string output_column = "y";
};

TimeSeries load_csv(const std::filesystem::path& path, const CsvSchema& schema, double sample_time);

/// Writes a header row "u,y" (names from schema) and one sample per line at full precision.
void write_csv(const std::filesystem::path& path, const TimeSeries& ts, const CsvSchema& schema = {});

}  // namespace sysid
