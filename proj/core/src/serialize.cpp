#include "sysid/serialize.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace sysid {

using nlohmann::json;

namespace {

json vec_json(const Vector& v) { return json(std::vector<double>(v.data(), v.data() + v.size())); }

Vector vec_from(const json& j) {
    const auto values = j.get<std::vector<double>>();
    return Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size()));
}

json mat_json(const Matrix& m) {
    return {{"rows", m.rows()}, {"cols", m.cols()},
            {"data", std::vector<double>(m.data(), m.data() + m.size())}};
}

Matrix mat_from(const json& j) {
    const auto rows = j.at("rows").get<Eigen::Index>();
    const auto cols = j.at("cols").get<Eigen::Index>();
    const auto values = j.at("data").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(values.size()) != rows * cols) throw DataError("matrix record: size mismatch");
    return Eigen::Map<const Matrix>(values.data(), rows, cols);
}

json lags_json(const LagStructure& l) { return {{"n_y", l.n_y}, {"n_u", l.n_u}}; }

LagStructure lags_from(const json& j) {
    LagStructure l{j.at("n_y").get<int>(), j.at("n_u").get<int>()};
    l.validate();
    return l;
}

json ranges_json(const std::vector<ColumnRange>& ranges) {
    json out = json::array();
    for (const auto& r : ranges) out.push_back({{"min", r.min}, {"max", r.max}, {"active", r.active}});
    return out;
}

std::vector<ColumnRange> ranges_from(const json& j) {
    std::vector<ColumnRange> out;
    for (const auto& r : j) out.push_back({r.at("min").get<double>(), r.at("max").get<double>(), r.at("active").get<bool>()});
    return out;
}

json to_json_impl(const StateSpaceModel& m) {
    return {{"A", mat_json(m.A)}, {"B", vec_json(m.B)}, {"C", vec_json(m.C)},
            {"D", m.D}, {"u_mean", m.u_mean}, {"y_mean", m.y_mean}};
}

json to_json_impl(const ArxModel& m) {
    return {{"lags", lags_json(m.lags)}, {"alpha", vec_json(m.alpha)}, {"normalizer", to_json(m.normalizer)}};
}

json to_json_impl(const PolyNarxModel& m) {
    return {{"lags", lags_json(m.lags)}, {"degree", m.degree}, {"column_ranges", ranges_json(m.ranges)},
            {"alpha", vec_json(m.alpha)}, {"normalizer", to_json(m.normalizer)}};
}

json to_json_impl(const GpNarxModel& m) {
    return {{"lags", lags_json(m.lags)},
            {"normalizer", to_json(m.normalizer)},
            {"log_noise_var", m.hyper.log_noise_var},
            {"log_signal_var", m.hyper.log_signal_var},
            {"log_lengthscale", m.hyper.log_lengthscale},
            {"train_regressors", mat_json(m.H_train)},
            {"train_targets", vec_json(m.targets)}};
}

json to_json_impl(const MlpNarxModel& m) {
    return {{"lags", lags_json(m.lags)}, {"normalizer", to_json(m.normalizer)}, {"W1", mat_json(m.W1)},
            {"b1", vec_json(m.b1)}, {"w2", vec_json(m.w2)}, {"b2", m.b2}};
}

json to_json_impl(const RecurrentModel& m) {
    return {{"cell", std::string(to_string(m.kind))}, {"n_u", m.n_u}, {"n_h", m.n_h},
            {"params", vec_json(m.params)}, {"normalizer", to_json(m.normalizer)}};
}

double number_or_nan(const json& j) {
    return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

}  // namespace

json to_json(const Normalizer& n) {
    return {{"mode", n.mode == Normalizer::Mode::zscore ? "zscore" : "mean_only"},
            {"u_mean", n.u_mean}, {"y_mean", n.y_mean}, {"u_scale", n.u_scale}, {"y_scale", n.y_scale},
            {"constant_signal", n.constant_signal}};
}

Normalizer normalizer_from_json(const json& j) {
    Normalizer n;
    const auto mode = j.at("mode").get<std::string>();
    if (mode == "zscore") {
        n.mode = Normalizer::Mode::zscore;
    } else if (mode == "mean_only") {
        n.mode = Normalizer::Mode::mean_only;
    } else {
        throw DataError("normalizer record: unknown mode '" + mode + "'");
    }
    n.u_mean = j.at("u_mean").get<double>();
    n.y_mean = j.at("y_mean").get<double>();
    n.u_scale = j.at("u_scale").get<double>();
    n.y_scale = j.at("y_scale").get<double>();
    n.constant_signal = j.value("constant_signal", false);
    return n;
}

json model_to_json(const AnyModel& model) {
    json body = std::visit([](const auto& m) { return to_json_impl(m); }, model);
    body["format_version"] = kModelFormatVersion;
    body["kind"] = std::string(kind_of(model));
    body["toolkit_version"] = kVersion;
    return body;
}

AnyModel model_from_json(const json& j) {
    try {
        const int version = j.at("format_version").get<int>();
        if (version != kModelFormatVersion) {
            throw DataError("model record: unsupported format_version " + std::to_string(version));
        }
        const auto kind = j.at("kind").get<std::string>();
        if (kind == "state_space") {
            StateSpaceModel m;
            m.A = mat_from(j.at("A"));
            m.B = vec_from(j.at("B"));
            m.C = vec_from(j.at("C"));
            m.D = j.at("D").get<double>();
            m.u_mean = j.at("u_mean").get<double>();
            m.y_mean = j.at("y_mean").get<double>();
            m.validate();
            return m;
        }
        if (kind == "arx") {
            ArxModel m;
            m.lags = lags_from(j.at("lags"));
            m.alpha = vec_from(j.at("alpha"));
            m.normalizer = normalizer_from_json(j.at("normalizer"));
            if (m.alpha.size() != m.lags.width() + 1) throw DataError("arx record: alpha length mismatch");
            return m;
        }
        if (kind == "pnarx") {
            PolyNarxModel m;
            m.lags = lags_from(j.at("lags"));
            m.degree = j.at("degree").get<int>();
            m.ranges = ranges_from(j.at("column_ranges"));
            m.alpha = vec_from(j.at("alpha"));
            m.normalizer = normalizer_from_json(j.at("normalizer"));
            if (static_cast<std::size_t>(m.alpha.size()) != m.feature_count()) {
                throw DataError("pnarx record: alpha length mismatch");
            }
            return m;
        }
        if (kind == "gp_narx") {
            GpNarxModel m;
            m.lags = lags_from(j.at("lags"));
            m.normalizer = normalizer_from_json(j.at("normalizer"));
            m.hyper = {j.at("log_noise_var").get<double>(), j.at("log_signal_var").get<double>(),
                       j.at("log_lengthscale").get<double>()};
            m.H_train = mat_from(j.at("train_regressors"));
            m.targets = vec_from(j.at("train_targets"));
            m.rebuild_cache();
            return m;
        }
        if (kind == "mlp_narx") {
            MlpNarxModel m;
            m.lags = lags_from(j.at("lags"));
            m.normalizer = normalizer_from_json(j.at("normalizer"));
            m.W1 = mat_from(j.at("W1"));
            m.b1 = vec_from(j.at("b1"));
            m.w2 = vec_from(j.at("w2"));
            m.b2 = j.at("b2").get<double>();
            if (m.W1.cols() != m.lags.width() || m.b1.size() != m.W1.rows() || m.w2.size() != m.W1.rows()) {
                throw DataError("mlp_narx record: weight shapes inconsistent");
            }
            return m;
        }
        if (kind == "recurrent") {
            RecurrentModel m;
            m.kind = cell_kind_from_string(j.at("cell").get<std::string>());
            m.n_u = j.at("n_u").get<int>();
            m.n_h = j.at("n_h").get<int>();
            m.params = vec_from(j.at("params"));
            m.normalizer = normalizer_from_json(j.at("normalizer"));
            m.validate();
            return m;
        }
        throw DataError("model record: unknown kind '" + kind + "'");
    } catch (const json::exception& e) {
        throw DataError(std::string("model record: ") + e.what());
    }
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot write '" + tmp.string() + "'");
        out << text;
        if (!out) throw Error("write failed for '" + tmp.string() + "'");
    }
    std::filesystem::rename(tmp, path);
}

void save_model(const std::filesystem::path& path, const AnyModel& model) {
    write_text_file(path, model_to_json(model).dump(1) + "\n");
}

AnyModel load_model(const std::filesystem::path& path) {
    const std::string text = read_text_file(path);
    json j = json::parse(text, nullptr, false);
    if (j.is_discarded()) throw DataError("model file '" + path.string() + "' is not valid JSON");
    return model_from_json(j);
}

json report_to_json(const EvalReport& r) {
    json scores = json::array();
    for (const auto& s : r.scores) {
        json e = {{"name", s.name}, {"failed", s.failed}};
        e["rmse"] = s.failed ? json(nullptr) : json(s.rmse);
        e["display_rmse"] = s.failed ? json(nullptr) : json(s.display_rmse);
        if (s.blowup_index) e["blowup_index"] = *s.blowup_index;
        if (!s.error.empty()) e["error"] = s.error;
        scores.push_back(std::move(e));
    }
    return {{"format_version", kReportFormatVersion},
            {"benchmark", r.benchmark},
            {"model", r.model},
            {"report_unit", r.report_unit},
            {"report_scale", r.report_scale},
            {"scores", scores},
            {"hyperparameters", r.hyperparameters},
            {"train_seconds", r.train_seconds},
            {"seed", r.seed},
            {"failure", r.failure},
            {"toolkit_version", r.version}};
}

EvalReport report_from_json(const json& j) {
    try {
        if (j.at("format_version").get<int>() != kReportFormatVersion) {
            throw DataError("report record: unsupported format_version");
        }
        EvalReport r;
        r.benchmark = j.at("benchmark").get<std::string>();
        r.model = j.at("model").get<std::string>();
        r.report_unit = j.at("report_unit").get<std::string>();
        r.report_scale = j.at("report_scale").get<double>();
        for (const auto& e : j.at("scores")) {
            TestScore s;
            s.name = e.at("name").get<std::string>();
            s.failed = e.at("failed").get<bool>();
            s.rmse = number_or_nan(e.at("rmse"));
            s.display_rmse = number_or_nan(e.at("display_rmse"));
            if (e.contains("blowup_index")) s.blowup_index = e.at("blowup_index").get<std::size_t>();
            s.error = e.value("error", "");
            r.scores.push_back(std::move(s));
        }
        r.hyperparameters = j.at("hyperparameters");
        r.train_seconds = j.at("train_seconds").get<double>();
        r.seed = j.at("seed").get<std::uint64_t>();
        r.failure = j.at("failure").get<std::string>();
        r.version = j.at("toolkit_version").get<std::string>();
        return r;
    } catch (const json::exception& e) {
        throw DataError(std::string("report record: ") + e.what());
    }
}

void save_report(const std::filesystem::path& path, const EvalReport& report) {
    write_text_file(path, report_to_json(report).dump(1) + "\n");
}

EvalReport load_report(const std::filesystem::path& path) {
    json j = json::parse(read_text_file(path), nullptr, false);
    if (j.is_discarded()) throw DataError("report file '" + path.string() + "' is not valid JSON");
    return report_from_json(j);
}

}  // namespace sysid
