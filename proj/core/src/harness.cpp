#include "sysid/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <set>

#include "sysid/metrics.hpp"
#include "sysid/parallel.hpp"
#include "sysid/serialize.hpp"

namespace sysid {

using nlohmann::json;
namespace fs = std::filesystem;

bool is_model_id(std::string_view id) {
    return std::find(kModelIds.begin(), kModelIds.end(), id) != kModelIds.end();
}

namespace {

const std::map<std::string_view, std::vector<std::string_view>>& allowed_overrides() {
    static const std::map<std::string_view, std::vector<std::string_view>> table = {
        {"lti_ss", {"n_x", "grid_search", "grid_max", "pem_steps", "pem_lr", "arx_order"}},
        {"lti_arx", {"n_y", "n_u"}},
        {"pnarx", {"n_y", "n_u", "max_degree"}},
        {"gp_narx", {"n_y", "n_u", "restarts", "steps", "lr", "max_rows", "noise_floor"}},
        {"mlp_narx", {"n_y", "n_u", "hidden_sizes", "restarts", "iterations", "lr"}},
    };
    return table;
}

const std::vector<std::string_view> kRecurrentKeys = {"look_backs", "hidden_sizes", "restarts", "epochs",
                                                      "lr",         "batch_size",   "length",   "stride",
                                                      "washout"};

std::optional<CellKind> recurrent_kind(std::string_view id) {
    if (id == "mlp_fir") return CellKind::fir;
    if (id == "rnn") return CellKind::rnn;
    if (id == "gru") return CellKind::gru;
    if (id == "lstm") return CellKind::lstm;
    if (id == "olstm") return CellKind::olstm;
    return std::nullopt;
}

template <typename T>
T opt(const json& o, const char* key, T fallback) {
    return o.contains(key) ? o.at(key).get<T>() : fallback;
}

std::size_t model_index(std::string_view id) {
    return static_cast<std::size_t>(std::find(kModelIds.begin(), kModelIds.end(), id) - kModelIds.begin());
}

std::size_t benchmark_index(BenchmarkId id) {
    return static_cast<std::size_t>(std::find(kAllBenchmarks.begin(), kAllBenchmarks.end(), id) -
                                    kAllBenchmarks.begin());
}

struct ResolvedLags {
    LagStructure lags;
    std::string source;
};

ResolvedLags resolve_lags(BenchmarkId benchmark, const TrainingData& data, const json& ov,
                          std::string_view lag_policy, int workers) {
    if (ov.contains("n_y") || ov.contains("n_u")) {
        LagStructure l = default_lags(benchmark);
        l.n_y = opt(ov, "n_y", l.n_y);
        l.n_u = opt(ov, "n_u", l.n_u);
        l.validate();
        return {l, "override"};
    }
    if (lag_policy == "aic") {
        LagSelectionOptions o;
        o.ced_override = benchmark == BenchmarkId::ced;
        o.workers = workers;
        const LagSelection sel = select_lags_aic(data.train, data.validation, o);
        return {sel.lags, sel.overridden ? "fixed" : "aic"};
    }
    return {default_lags(benchmark), "table"};
}

}  // namespace

void check_overrides(std::string_view model_id, const json& overrides) {
    if (!is_model_id(model_id)) throw ConfigError("unknown model id '" + std::string(model_id) + "'");
    if (!overrides.is_object()) throw ConfigError("overrides for '" + std::string(model_id) + "' must be an object");
    const auto& table = allowed_overrides();
    const auto it = table.find(model_id);
    const auto& keys = it != table.end() ? it->second : kRecurrentKeys;
    for (const auto& [key, value] : overrides.items()) {
        if (std::find(keys.begin(), keys.end(), key) == keys.end()) {
            throw ConfigError("override '" + key + "' is not understood by model '" + std::string(model_id) + "'");
        }
    }
}

void RunConfig::validate() const {
    if (format_version != kRunConfigVersion) {
        throw ConfigError("run config: unsupported format_version " + std::to_string(format_version));
    }
    if (!seed) throw ConfigError("run config: a seed is required");
    if (benchmarks.empty()) throw ConfigError("run config: no benchmarks selected");
    if (models.empty()) throw ConfigError("run config: no models selected");
    for (const auto& m : models) {
        if (!is_model_id(m)) throw ConfigError("run config: unknown model id '" + m + "'");
    }
    if (!overrides.is_object()) throw ConfigError("run config: overrides must be an object");
    for (const auto& [key, value] : overrides.items()) check_overrides(key, value);
    if (!(val_fraction > 0.0 && val_fraction < 1.0)) throw ConfigError("run config: val_fraction must lie in (0, 1)");
    if (workers < 1) throw ConfigError("run config: workers must be >= 1");
    if (lag_policy != "table" && lag_policy != "aic") {
        throw ConfigError("run config: lag_policy must be 'table' or 'aic'");
    }
    for (const auto& cell : inject_blowup) {
        if (cell.find('/') == std::string::npos) throw ConfigError("run config: inject_blowup entries are 'benchmark/model'");
    }
}

RunConfig parse_run_config(const json& j, const fs::path& base_dir) {
    static const std::set<std::string> known = {"format_version", "manifest", "benchmarks", "models",
                                                "overrides",      "seed",     "val_fraction", "burn_in",
                                                "output_dir",     "workers",  "resume",     "lag_policy",
                                                "inject_blowup"};
    if (!j.is_object()) throw ConfigError("run config: expected an object");
    for (const auto& [key, value] : j.items()) {
        if (!known.count(key)) throw ConfigError("run config: unknown key '" + key + "'");
    }
    auto resolve = [&](const fs::path& p) { return p.is_relative() && !base_dir.empty() ? base_dir / p : p; };
    try {
        RunConfig c;
        c.format_version = j.value("format_version", kRunConfigVersion);
        c.manifest = resolve(j.at("manifest").get<std::string>());
        const json& b = j.at("benchmarks");
        if (b.is_string() && b.get<std::string>() == "all") {
            c.benchmarks.assign(kAllBenchmarks.begin(), kAllBenchmarks.end());
        } else {
            for (const auto& name : b) c.benchmarks.push_back(benchmark_from_string(name.get<std::string>()));
        }
        const json& m = j.at("models");
        if (m.is_string() && m.get<std::string>() == "all") {
            for (auto id : kModelIds) c.models.emplace_back(id);
        } else {
            c.models = m.get<std::vector<std::string>>();
        }
        c.overrides = j.value("overrides", json::object());
        if (j.contains("seed") && !j.at("seed").is_null()) c.seed = j.at("seed").get<std::uint64_t>();
        c.val_fraction = j.value("val_fraction", 0.2);
        c.burn_in = j.value("burn_in", std::size_t{0});
        c.output_dir = resolve(j.value("output_dir", std::string("runs")));
        c.workers = j.value("workers", 1);
        c.resume = j.value("resume", false);
        c.lag_policy = j.value("lag_policy", std::string("table"));
        c.inject_blowup = j.value("inject_blowup", std::vector<std::string>{});
        return c;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("run config: ") + e.what());
    }
}

RunConfig load_run_config(const fs::path& path) {
    json j = json::parse(read_text_file(path), nullptr, false, true);
    if (j.is_discarded()) throw ConfigError("run config '" + path.string() + "' is not valid JSON");
    return parse_run_config(j, path.parent_path());
}

json to_json(const RunConfig& c) {
    json benchmarks = json::array();
    for (auto b : c.benchmarks) benchmarks.push_back(std::string(to_string(b)));
    json j = {{"format_version", c.format_version},
              {"manifest", c.manifest.string()},
              {"benchmarks", benchmarks},
              {"models", c.models},
              {"overrides", c.overrides},
              {"val_fraction", c.val_fraction},
              {"burn_in", c.burn_in},
              {"output_dir", c.output_dir.string()},
              {"workers", c.workers},
              {"resume", c.resume},
              {"lag_policy", c.lag_policy},
              {"inject_blowup", c.inject_blowup}};
    j["seed"] = c.seed ? json(*c.seed) : json(nullptr);
    return j;
}

int required_lag(BenchmarkId benchmark, std::string_view model_id, const json& ov, std::string_view lag_policy) {
    if (model_id == "lti_ss") return 0;
    if (recurrent_kind(model_id)) {
        const auto looks = opt(ov, "look_backs", std::vector<int>{1, 5, 10, 20});
        return looks.empty() ? 0 : *std::max_element(looks.begin(), looks.end());
    }
    if (ov.contains("n_y") || ov.contains("n_u")) {
        LagStructure l = default_lags(benchmark);
        l.n_y = opt(ov, "n_y", l.n_y);
        l.n_u = opt(ov, "n_u", l.n_u);
        return l.p();
    }
    if (lag_policy == "aic" && benchmark != BenchmarkId::ced) return LagStructure::kMaxLag;
    return default_lags(benchmark).p();
}

CellFit fit_cell(BenchmarkId benchmark, std::string_view model_id, const TrainingData& data, const json& ov,
                 std::uint64_t seed, std::string_view lag_policy, int workers) {
    check_overrides(model_id, ov);
    CellFit out;
    json& hp = out.hyperparameters;

    if (model_id == "lti_ss") {
        LtiOptions o;
        o.grid_search = opt(ov, "grid_search", o.grid_search);
        o.grid_max = opt(ov, "grid_max", o.grid_max);
        o.pem.steps = opt(ov, "pem_steps", o.pem.steps);
        o.pem.lr = opt(ov, "pem_lr", o.pem.lr);
        o.subspace.arx_order = opt(ov, "arx_order", o.subspace.arx_order);
        const int n_x = opt(ov, "n_x", default_state_order(benchmark));
        const LtiFit f = fit_lti_ss(data, n_x, o);
        hp = {{"n_x", f.model.n_x()},
              {"init_stabilized", f.init_stabilized},
              {"pem_best_step", f.pem.best_step},
              {"pem_diverged", f.pem.diverged},
              {"spectral_radius", f.model.spectral_radius()}};
        out.model = f.model;
        return out;
    }

    if (const auto kind = recurrent_kind(model_id)) {
        RecurrentSearch s;
        s.kind = *kind;
        s.look_backs = opt(ov, "look_backs", s.look_backs);
        s.hidden_sizes = opt(ov, "hidden_sizes", s.hidden_sizes);
        s.restarts = opt(ov, "restarts", s.restarts);
        s.epochs = opt(ov, "epochs", s.epochs);
        s.lr = opt(ov, "lr", s.lr);
        s.batch_size = opt(ov, "batch_size", s.batch_size);
        s.windows.length = opt(ov, "length", s.windows.length);
        s.windows.stride = opt(ov, "stride", s.windows.stride);
        s.windows.washout = opt(ov, "washout", s.windows.washout);
        s.seed = seed;
        s.workers = workers;
        const RecurrentFit f = bptt_train(data.train, data.validation, s);
        const auto failed = std::count_if(f.runs.begin(), f.runs.end(), [](const RecurrentRun& r) { return r.failed; });
        hp = {{"cell", std::string(to_string(f.model.kind))},
              {"n_u", f.model.n_u},
              {"n_h", f.model.n_h},
              {"epochs", f.epochs},
              {"runs", f.runs.size()},
              {"failed_runs", failed}};
        out.model = f.model;
        return out;
    }

    const ResolvedLags lags = resolve_lags(benchmark, data, ov, lag_policy, workers);
    hp = {{"n_y", lags.lags.n_y}, {"n_u", lags.lags.n_u}, {"lag_source", lags.source}};

    if (model_id == "lti_arx") {
        out.model = fit_arx(data.train, lags.lags);
    } else if (model_id == "pnarx") {
        const PolyNarxFit f = fit_pnarx(data.train, data.validation, lags.lags, opt(ov, "max_degree", kMaxPolyDegree));
        hp["degree"] = f.model.degree;
        out.model = f.model;
    } else if (model_id == "gp_narx") {
        GpOptions o;
        o.restarts = opt(ov, "restarts", o.restarts);
        o.steps = opt(ov, "steps", o.steps);
        o.lr = opt(ov, "lr", o.lr);
        o.max_rows = opt(ov, "max_rows", o.max_rows);
        o.noise_floor = opt(ov, "noise_floor", o.noise_floor);
        o.seed = seed;
        o.workers = workers;
        const GpNarxFit f = fit_gp_narx(data.train, data.validation, lags.lags, o);
        hp["sigma_n2"] = f.model.hyper.noise_var();
        hp["sigma_f2"] = f.model.hyper.signal_var();
        hp["lengthscale"] = f.model.hyper.lengthscale();
        hp["train_rows"] = f.model.H_train.rows();
        hp["truncated"] = f.truncated;
        out.model = f.model;
    } else if (model_id == "mlp_narx") {
        MlpOptions o;
        o.hidden_sizes = opt(ov, "hidden_sizes", o.hidden_sizes);
        o.restarts = opt(ov, "restarts", o.restarts);
        o.iterations = opt(ov, "iterations", o.iterations);
        o.lr = opt(ov, "lr", o.lr);
        o.seed = seed;
        o.workers = workers;
        const MlpNarxFit f = fit_mlp_narx(data.train, data.validation, lags.lags, o);
        hp["hidden_size"] = f.model.hidden_size();
        hp["failed_runs"] = std::count_if(f.runs.begin(), f.runs.end(), [](const MlpRun& r) { return r.failed; });
        out.model = f.model;
    }
    return out;
}

void AccessLog::record(std::string cell, std::string what) {
    std::lock_guard lock(mutex_);
    events_.push_back({std::move(cell), std::move(what)});
}

std::vector<AccessLog::Event> AccessLog::events() const {
    std::lock_guard lock(mutex_);
    return events_;
}

std::string cell_name(BenchmarkId benchmark, std::string_view model_id) {
    return std::string(to_string(benchmark)) + "__" + std::string(model_id);
}

namespace {

struct Cell {
    BenchmarkId benchmark;
    std::string model;
};

bool table_less(const EvalReport& a, const EvalReport& b) {
    auto bench = [](const std::string& s) {
        try {
            return benchmark_index(benchmark_from_string(s));
        } catch (const ConfigError&) {
            return kAllBenchmarks.size();
        }
    };
    return std::make_tuple(bench(a.benchmark), model_index(a.model), a.benchmark, a.model) <
           std::make_tuple(bench(b.benchmark), model_index(b.model), b.benchmark, b.model);
}

class TestVault {
public:
    TestVault(const DatasetManifest& manifest, const ManifestEntry& entry, std::string cell, AccessLog* log)
        : manifest_(manifest), entry_(entry), cell_(std::move(cell)), log_(log) {}

    TimeSeries read(const NamedSource& test) const {
        if (log_) log_->record(cell_, "test_read:" + test.name);
        return load_series(manifest_, entry_, test.source, test.name);
    }

private:
    const DatasetManifest& manifest_;
    const ManifestEntry& entry_;
    std::string cell_;
    AccessLog* log_;
};

EvalReport run_cell(const RunConfig& config, const DatasetManifest& manifest, const Cell& cell, int workers,
                    AccessLog* log) {
    const ManifestEntry& entry = manifest.entry(cell.benchmark);
    const std::string name = cell_name(cell.benchmark, cell.model);
    EvalReport r;
    r.benchmark = std::string(to_string(cell.benchmark));
    r.model = cell.model;
    r.report_unit = entry.report_unit;
    r.report_scale = entry.report_scale;
    r.seed = derive_seed(*config.seed, {benchmark_index(cell.benchmark), model_index(cell.model)});
    r.version = kVersion;

    const json ov = config.overrides.value(cell.model, json::object());
    const bool inject = std::find(config.inject_blowup.begin(), config.inject_blowup.end(),
                                  r.benchmark + "/" + cell.model) != config.inject_blowup.end();
    try {
        if (log) log->record(name, "fit:start");
        const TrainingData data = load_training_data(manifest, entry, config.val_fraction,
                                                     required_lag(cell.benchmark, cell.model, ov, config.lag_policy));
        const auto t0 = std::chrono::steady_clock::now();
        const CellFit fit = fit_cell(cell.benchmark, cell.model, data, ov, r.seed, config.lag_policy, workers);
        r.train_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        r.hyperparameters = fit.hyperparameters;
        if (log) log->record(name, "fit:end");
        save_model(config.output_dir / "models" / (name + ".json"), fit.model);

        const TestVault vault(manifest, entry, name, log);
        for (const auto& test : entry.tests) {
            TestScore s;
            s.name = test.name;
            try {
                TimeSeries ts = vault.read(test);
                if (inject) ts.u[ts.u.size() / 2] = std::numeric_limits<double>::quiet_NaN();
                const Vector y_hat = simulate_model(fit.model, ts);
                s.rmse = compute_rmse(ts.y, y_hat, config.burn_in);
                s.display_rmse = s.rmse * r.report_scale;
            } catch (const SimulationError& e) {
                s.failed = true;
                s.blowup_index = e.step();
                s.error = e.what();
            } catch (const Error& e) {
                s.failed = true;
                s.error = e.what();
            }
            r.scores.push_back(std::move(s));
        }
    } catch (const std::exception& e) {
        r.failure = e.what();
        r.scores.clear();
        for (const auto& test : entry.tests) {
            TestScore s;
            s.name = test.name;
            s.failed = true;
            r.scores.push_back(std::move(s));
        }
    }
    return r;
}

}  // namespace

std::vector<EvalReport> run_benchmark(const RunConfig& config, AccessLog* log) {
    config.validate();
    const DatasetManifest manifest = load_manifest(config.manifest);

    std::vector<Cell> cells;
    for (auto b : kAllBenchmarks) {
        if (std::find(config.benchmarks.begin(), config.benchmarks.end(), b) == config.benchmarks.end()) continue;
        if (!manifest.has(b)) {
            throw ConfigError("manifest '" + config.manifest.string() + "' has no entry for " + std::string(to_string(b)));
        }
        for (auto id : kModelIds) {
            if (std::find(config.models.begin(), config.models.end(), id) != config.models.end()) {
                cells.push_back({b, std::string(id)});
            }
        }
    }

    const fs::path report_dir = config.output_dir / "reports";
    fs::create_directories(report_dir);
    std::mutex writer;
    const int inner_workers = cells.size() == 1 ? config.workers : 1;
    std::vector<EvalReport> reports(cells.size());

    parallel_for(cells.size(), config.workers, [&](std::size_t i) {
        const std::string name = cell_name(cells[i].benchmark, cells[i].model);
        const fs::path file = report_dir / (name + ".json");
        if (config.resume && fs::exists(file)) {
            try {
                EvalReport previous = load_report(file);
                const auto seed = derive_seed(*config.seed, {benchmark_index(cells[i].benchmark), model_index(cells[i].model)});
                if (previous.seed == seed && previous.version == kVersion && !previous.failed()) {
                    reports[i] = std::move(previous);
                    return;
                }
            } catch (const Error&) {
                // unreadable report: recompute the cell
            }
        }
        reports[i] = run_cell(config, manifest, cells[i], inner_workers, log);
        std::lock_guard lock(writer);
        save_report(file, reports[i]);
        std::ofstream index(config.output_dir / "index.jsonl", std::ios::app);
        index << json{{"cell", name},
                      {"report", "reports/" + name + ".json"},
                      {"failed", reports[i].failed()}}
                     .dump()
              << "\n";
    });
    return reports;
}

std::vector<EvalReport> load_reports(const fs::path& output_dir) {
    std::vector<EvalReport> reports;
    const fs::path dir = output_dir / "reports";
    if (!fs::is_directory(dir)) throw DataError("no reports directory under '" + output_dir.string() + "'");
    for (const auto& e : fs::directory_iterator(dir)) {
        if (e.path().extension() == ".json") reports.push_back(load_report(e.path()));
    }
    std::sort(reports.begin(), reports.end(), table_less);
    return reports;
}

}  // namespace sysid
