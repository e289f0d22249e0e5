#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "sysid/fetch.hpp"
#include "sysid/harness.hpp"
#include "sysid/metrics.hpp"
#include "sysid/selftest.hpp"
#include "sysid/serialize.hpp"
#include "sysid/table.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// "key=value" pairs become override entries; values are parsed as JSON when possible.
json parse_overrides(const std::vector<std::string>& pairs) {
    json out = json::object();
    for (const auto& p : pairs) {
        const auto eq = p.find('=');
        if (eq == std::string::npos) throw sysid::ConfigError("override '" + p + "' is not key=value");
        const std::string key = p.substr(0, eq);
        const std::string raw = p.substr(eq + 1);
        json value = json::parse(raw, nullptr, false);
        out[key] = value.is_discarded() ? json(raw) : value;
    }
    return out;
}

int cmd_ingest(const fs::path& manifest_path, std::optional<fs::path> cache_dir, bool offline, bool allow_unpinned) {
    const auto manifest = sysid::load_manifest(manifest_path);
    const fs::path dir = cache_dir ? *cache_dir : manifest.base_dir / "archives";
    if (manifest.sources.empty()) {
        std::cout << "manifest lists no remote sources\n";
        return 0;
    }
    int failures = 0;
    sysid::FetchOptions opts;
    opts.offline = offline;
    opts.allow_unpinned = allow_unpinned;
    for (const auto& src : manifest.sources) {
        try {
            const auto r = sysid::fetch_dataset(src.url, src.sha256, dir, src.file, opts);
            std::cout << (r.downloaded ? "fetched  " : "cached   ") << r.path.string() << "  sha256=" << r.sha256 << "\n";
        } catch (const sysid::Error& e) {
            ++failures;
            std::cerr << "error: " << e.what() << "\n";
        }
    }
    if (failures == 0) {
        std::cout << "next: convert archives to CSV with tools/convert_benchmarks.py " << dir.string() << " "
                  << manifest.base_dir.string() << "\n";
    }
    return failures == 0 ? 0 : 1;
}

int cmd_fit(const fs::path& manifest_path, const std::string& benchmark, const std::string& model, std::uint64_t seed,
            double val_fraction, const std::string& lag_policy, const std::vector<std::string>& overrides,
            const fs::path& out, int workers) {
    const auto manifest = sysid::load_manifest(manifest_path);
    const auto id = sysid::benchmark_from_string(benchmark);
    const json ov = parse_overrides(overrides);
    sysid::check_overrides(model, ov);
    const auto data = sysid::load_training_data(manifest, manifest.entry(id), val_fraction,
                                                sysid::required_lag(id, model, ov, lag_policy));
    const auto fit = sysid::fit_cell(id, model, data, ov, seed, lag_policy, workers);
    sysid::save_model(out, fit.model);
    std::cout << fit.hyperparameters.dump() << "\nmodel written to " << out.string() << "\n";
    return 0;
}

int cmd_simulate(const fs::path& model_file, const fs::path& input, const std::string& in_col,
                 const std::string& out_col, const fs::path& output) {
    const auto model = sysid::load_model(model_file);
    const sysid::CsvSchema schema{in_col, out_col};
    const auto data = sysid::load_csv(input, schema, 1.0);
    sysid::TimeSeries sim = data;
    sim.y = sysid::simulate_model(model, data);
    sysid::write_csv(output, sim, {in_col, out_col + "_sim"});
    std::printf("simulated %zu samples, rmse %.6g\n", data.size(), sysid::compute_rmse(data.y, sim.y));
    return 0;
}

void emit_tables(const std::vector<sysid::EvalReport>& reports, const fs::path& dir) {
    sysid::write_table(dir / "table.csv", reports, sysid::TableFormat::csv);
    sysid::write_table(dir / "table.md", reports, sysid::TableFormat::markdown);
}

int cmd_benchmark(const fs::path& config_path, std::uint64_t seed, std::optional<int> workers,
                  std::optional<fs::path> output_dir, bool resume) {
    auto config = sysid::load_run_config(config_path);
    config.seed = seed;
    if (workers) config.workers = *workers;
    if (output_dir) config.output_dir = *output_dir;
    if (resume) config.resume = true;
    const auto reports = sysid::run_benchmark(config);
    int failed = 0;
    for (const auto& r : reports) {
        std::cout << r.benchmark << " / " << r.model;
        if (r.failed()) {
            ++failed;
            std::cout << "  FAILED: " << r.failure << "\n";
            continue;
        }
        for (const auto& s : r.scores) {
            std::cout << "  " << s.name << "=" << (s.failed ? "fail" : sysid::format_display(s.display_rmse));
        }
        std::cout << " " << r.report_unit << "\n";
    }
    emit_tables(reports, config.output_dir);
    std::cout << "tables written to " << (config.output_dir / "table.csv").string() << "\n";
    return failed == 0 ? 0 : 2;
}

int cmd_report(const fs::path& dir, const std::string& format, std::optional<fs::path> out) {
    const auto reports = sysid::load_reports(dir);
    if (reports.empty()) throw sysid::DataError("no reports found under '" + dir.string() + "'");
    const auto fmt = format == "markdown" ? sysid::TableFormat::markdown : sysid::TableFormat::csv;
    if (out) {
        sysid::write_table(*out, reports, fmt);
    } else {
        std::cout << sysid::emit_table(reports, fmt);
    }
    return 0;
}

int cmd_selftest() {
    int failed = 0;
    for (const auto& r : sysid::run_selftest()) {
        std::printf("[%s] %-32s %s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(), r.detail.c_str());
        failed += r.passed ? 0 : 1;
    }
    return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Baseline nonlinear system identification toolkit"};
    app.set_version_flag("--version", std::string(sysid::kVersion));
    app.require_subcommand(1);

    fs::path manifest = "data/manifest.json";
    std::optional<fs::path> cache_dir;
    bool offline = false;
    bool allow_unpinned = false;
    auto* ingest = app.add_subcommand("ingest", "Fetch and verify benchmark archives listed in a manifest");
    ingest->add_option("--manifest", manifest, "Dataset manifest")->check(CLI::ExistingFile);
    ingest->add_option("--cache-dir", cache_dir, "Archive directory (default: <data_dir>/archives)");
    ingest->add_flag("--offline", offline, "Refuse network access; only verify cached files");
    ingest->add_flag("--allow-unpinned", allow_unpinned, "Accept sources without a pinned checksum");

    std::string benchmark;
    std::string model;
    std::uint64_t seed = 0;
    double val_fraction = 0.2;
    std::string lag_policy = "table";
    std::vector<std::string> overrides;
    fs::path model_out = "model.json";
    int fit_workers = 1;
    auto* fit = app.add_subcommand("fit", "Fit one model on one benchmark's training data");
    fit->add_option("--manifest", manifest, "Dataset manifest")->check(CLI::ExistingFile);
    fit->add_option("--benchmark", benchmark, "Benchmark id")->required();
    fit->add_option("--model", model, "Model id")->required();
    fit->add_option("--seed", seed, "Global seed")->required();
    fit->add_option("--val-fraction", val_fraction, "Validation tail fraction");
    fit->add_option("--lag-policy", lag_policy, "table or aic")->check(CLI::IsMember({"table", "aic"}));
    fit->add_option("--set", overrides, "Model override key=value (repeatable)");
    fit->add_option("--workers", fit_workers, "Worker threads");
    fit->add_option("--out", model_out, "Model file to write");

    fs::path model_file;
    fs::path input;
    std::string in_col = "u";
    std::string out_col = "y";
    fs::path sim_out = "simulation.csv";
    auto* simulate = app.add_subcommand("simulate", "Free-run a saved model on a CSV record");
    simulate->add_option("--model-file", model_file, "Saved model")->required()->check(CLI::ExistingFile);
    simulate->add_option("--input", input, "CSV with input and measured output columns")->required()->check(CLI::ExistingFile);
    simulate->add_option("--input-column", in_col, "Input column name");
    simulate->add_option("--output-column", out_col, "Output column name");
    simulate->add_option("--out", sim_out, "CSV to write");

    fs::path config_path;
    std::optional<int> workers;
    std::optional<fs::path> output_dir;
    bool resume = false;
    auto* bench = app.add_subcommand("benchmark", "Run the benchmark x model grid from a run config");
    bench->add_option("--config", config_path, "Run config")->required()->check(CLI::ExistingFile);
    bench->add_option("--seed", seed, "Global seed")->required();
    bench->add_option("--workers", workers, "Parallel grid cells");
    bench->add_option("--output-dir", output_dir, "Override output directory");
    bench->add_flag("--resume", resume, "Reuse finished cells with matching seed and version");

    fs::path report_dir = "runs";
    std::string format = "csv";
    std::optional<fs::path> table_out;
    auto* report = app.add_subcommand("report", "Render persisted reports as a results table");
    report->add_option("--output-dir", report_dir, "Run output directory")->check(CLI::ExistingDirectory);
    report->add_option("--format", format, "csv or markdown")->check(CLI::IsMember({"csv", "markdown"}));
    report->add_option("--out", table_out, "File to write (default: stdout)");

    auto* selftest = app.add_subcommand("selftest", "Run the built-in invariant checks");

    CLI11_PARSE(app, argc, argv);
    try {
        if (*ingest) return cmd_ingest(manifest, cache_dir, offline, allow_unpinned);
        if (*fit) return cmd_fit(manifest, benchmark, model, seed, val_fraction, lag_policy, overrides, model_out, fit_workers);
        if (*simulate) return cmd_simulate(model_file, input, in_col, out_col, sim_out);
        if (*bench) return cmd_benchmark(config_path, seed, workers, output_dir, resume);
        if (*report) return cmd_report(report_dir, format, table_out);
        if (*selftest) return cmd_selftest();
    } catch (const sysid::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "unexpected error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
