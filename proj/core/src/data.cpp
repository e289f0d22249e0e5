#include "sysid/data.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace sysid {

void TimeSeries::validate() const {
    if (u.size() != y.size()) {
        throw DataError("series '" + name + "': input and output lengths differ (" +
                        std::to_string(u.size()) + " vs " + std::to_string(y.size()) + ")");
    }
    if (y.size() == 0) throw DataError("series '" + name + "': empty series");
    if (!(sample_time > 0.0) || !std::isfinite(sample_time)) {
        throw DataError("series '" + name + "': sample_time must be positive");
    }
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        if (!std::isfinite(u[i]) || !std::isfinite(y[i])) {
            throw DataError("series '" + name + "': non-finite sample", static_cast<std::size_t>(i));
        }
    }
}

TimeSeries TimeSeries::slice(std::size_t begin, std::size_t count, std::string new_name) const {
    if (begin + count > size()) {
        throw DataError("slice [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                        ") exceeds series '" + name + "' of length " + std::to_string(size()));
    }
    TimeSeries out;
    out.name = new_name.empty() ? name : std::move(new_name);
    out.u = u.segment(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(count));
    out.y = y.segment(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(count));
    out.sample_time = sample_time;
    return out;
}

TimeSeries concatenate(const std::vector<TimeSeries>& parts, std::string name) {
    if (parts.empty()) throw DataError("concatenate: no records");
    Eigen::Index total = 0;
    for (const auto& p : parts) {
        if (p.sample_time != parts.front().sample_time) {
            throw DataError("concatenate: sample times differ between '" + parts.front().name +
                            "' and '" + p.name + "'");
        }
        total += p.y.size();
    }
    TimeSeries out;
    out.name = std::move(name);
    out.sample_time = parts.front().sample_time;
    out.u.resize(total);
    out.y.resize(total);
    Eigen::Index at = 0;
    for (const auto& p : parts) {
        out.u.segment(at, p.u.size()) = p.u;
        out.y.segment(at, p.y.size()) = p.y;
        at += p.y.size();
    }
    return out;
}

std::string_view to_string(BenchmarkId id) {
    switch (id) {
        case BenchmarkId::silverbox: return "silverbox";
        case BenchmarkId::wiener_hammerstein: return "wiener_hammerstein";
        case BenchmarkId::emps: return "emps";
        case BenchmarkId::cascaded_tanks: return "cascaded_tanks";
        case BenchmarkId::ced: return "ced";
    }
    return "?";
}

BenchmarkId benchmark_from_string(std::string_view name) {
    for (auto id : kAllBenchmarks) {
        if (to_string(id) == name) return id;
    }
    throw ConfigError("unknown benchmark id '" + std::string(name) + "'");
}

void BenchmarkDataset::validate() const {
    train.validate();
    validation.validate();
    for (const auto& t : tests) t.series.validate();
    if (report_scale != 1.0 && report_scale != 1e3) {
        throw DataError("report_scale must be 1 or 1000");
    }
}

Vector Normalizer::apply_u(const Vector& u) const { return (u.array() - u_mean) / u_scale; }
Vector Normalizer::apply_y(const Vector& y) const { return (y.array() - y_mean) / y_scale; }
Vector Normalizer::invert_u(const Vector& u) const { return u.array() * u_scale + u_mean; }
Vector Normalizer::invert_y(const Vector& y) const { return y.array() * y_scale + y_mean; }

TimeSeries Normalizer::apply(const TimeSeries& ts) const {
    TimeSeries out = ts;
    out.u = apply_u(ts.u);
    out.y = apply_y(ts.y);
    return out;
}

TimeSeries Normalizer::invert(const TimeSeries& ts) const {
    TimeSeries out = ts;
    out.u = invert_u(ts.u);
    out.y = invert_y(ts.y);
    return out;
}

namespace {

// Population standard deviation; returns 0 for a constant signal.
double population_std(const Vector& x, double mean) {
    return std::sqrt((x.array() - mean).square().mean());
}

}  // namespace

Normalizer fit_normalizer(const TimeSeries& train, Normalizer::Mode mode) {
    if (train.size() == 0 || train.u.size() == 0) throw DataError("fit_normalizer: empty series");
    Normalizer n;
    n.mode = mode;
    n.u_mean = train.u.mean();
    n.y_mean = train.y.mean();
    if (mode == Normalizer::Mode::zscore) {
        const double su = population_std(train.u, n.u_mean);
        const double sy = population_std(train.y, n.y_mean);
        // relative threshold so that a constant signal with rounding noise still counts
        auto usable = [](double s, double mean) { return s > 1e-12 * std::max(1.0, std::abs(mean)); };
        if (usable(su, n.u_mean)) n.u_scale = su; else n.constant_signal = true;
        if (usable(sy, n.y_mean)) n.y_scale = sy; else n.constant_signal = true;
    }
    return n;
}

void LagStructure::validate() const {
    if (n_y < 0 || n_y > kMaxLag) {
        throw ConfigError("n_y must lie in [0, " + std::to_string(kMaxLag) + "], got " + std::to_string(n_y));
    }
    if (n_u < 1 || n_u > kMaxLag) {
        throw ConfigError("n_u must lie in [1, " + std::to_string(kMaxLag) + "], got " + std::to_string(n_u));
    }
}

void fill_regressor(const Vector& y, const Vector& u, std::size_t t, const LagStructure& lags,
                    Eigen::Ref<Vector> row) {
    const auto ti = static_cast<Eigen::Index>(t);
    for (int k = 0; k < lags.n_y; ++k) row[k] = y[ti - 1 - k];
    for (int k = 0; k < lags.n_u; ++k) row[lags.n_y + k] = u[ti - k];
}

Regression build_hankel(const TimeSeries& ts, const LagStructure& lags) {
    lags.validate();
    const auto n = static_cast<Eigen::Index>(ts.size());
    const Eigen::Index p = lags.p();
    if (n <= p) {
        throw DataError("build_hankel: series '" + ts.name + "' of length " + std::to_string(n) +
                        " is shorter than max lag + 1 = " + std::to_string(p + 1));
    }
    Regression r;
    r.H.resize(n - p, lags.width() + 1);
    r.targets = ts.y.tail(n - p);
    Vector row(lags.width());
    for (Eigen::Index t = p; t < n; ++t) {
        fill_regressor(ts.y, ts.u, static_cast<std::size_t>(t), lags, row);
        r.H.row(t - p).head(lags.width()) = row.transpose();
        r.H(t - p, lags.width()) = 1.0;
    }
    return r;
}

std::pair<TimeSeries, TimeSeries> split_train_val(const TimeSeries& ts, double val_fraction, int max_lag) {
    if (!(val_fraction > 0.0 && val_fraction < 1.0)) {
        throw ConfigError("val_fraction must lie in (0, 1)");
    }
    const std::size_t n = ts.size();
    const auto n_val = static_cast<std::size_t>(std::llround(static_cast<double>(n) * val_fraction));
    const std::size_t n_train = n - std::min(n_val, n);
    const auto min_len = static_cast<std::size_t>(2 * std::max(max_lag, 0) + 1);
    if (n_val < min_len || n_train < min_len) {
        throw DataError("split_train_val: segment too short (train " + std::to_string(n_train) +
                        ", validation " + std::to_string(n_val) + ", need " + std::to_string(min_len) + ")");
    }
    return {ts.slice(0, n_train, ts.name + "/train"), ts.slice(n_train, n_val, ts.name + "/validation")};
}

namespace {

std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r\"");
    auto e = s.find_last_not_of(" \t\r\"");
    if (b == std::string_view::npos) return {};
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string_view rest(line);
    while (true) {
        auto pos = rest.find(',');
        cells.push_back(trim(rest.substr(0, pos)));
        if (pos == std::string_view::npos) break;
        rest.remove_prefix(pos + 1);
    }
    return cells;
}

}  // namespace

TimeSeries load_csv(const std::filesystem::path& path, const CsvSchema& schema, double sample_time) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open CSV file '" + path.string() + "'");

    std::string line;
    if (!std::getline(in, line)) throw DataError("'" + path.string() + "': empty series");
    const auto header = split_line(line);
    auto column = [&](const std::string& name) {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) return i;
        }
        throw DataError("'" + path.string() + "': missing column '" + name + "'");
    };
    const std::size_t iu = column(schema.input_column);
    const std::size_t iy = column(schema.output_column);

    std::vector<double> u, y;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        const auto cells = split_line(line);
        auto parse = [&](std::size_t idx) {
            if (idx >= cells.size()) {
                throw DataError("'" + path.string() + "': missing cell in column " + header[idx], row);
            }
            const std::string& c = cells[idx];
            double v = 0.0;
            auto [ptr, ec] = std::from_chars(c.data(), c.data() + c.size(), v);
            if (ec != std::errc() || ptr != c.data() + c.size() || !std::isfinite(v)) {
                throw DataError("'" + path.string() + "': non-numeric cell '" + c + "' in column " + header[idx], row);
            }
            return v;
        };
        u.push_back(parse(iu));
        y.push_back(parse(iy));
        ++row;
    }
    if (y.empty()) throw DataError("'" + path.string() + "': empty series");

    TimeSeries ts;
    ts.name = path.stem().string();
    ts.u = Eigen::Map<Vector>(u.data(), static_cast<Eigen::Index>(u.size()));
    ts.y = Eigen::Map<Vector>(y.data(), static_cast<Eigen::Index>(y.size()));
    ts.sample_time = sample_time;
    ts.validate();
    return ts;
}

void write_csv(const std::filesystem::path& path, const TimeSeries& ts, const CsvSchema& schema) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write CSV file '" + path.string() + "'");
    out << schema.input_column << ',' << schema.output_column << '\n';
    out.precision(17);
    for (Eigen::Index i = 0; i < ts.y.size(); ++i) out << ts.u[i] << ',' << ts.y[i] << '\n';
}

}  // namespace sysid
