#include <algorithm>
#include <filesystem>
#include <map>
#include <fstream>
#include <set>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "sysid/fetch.hpp"
#include "sysid/harness.hpp"
#include "sysid/metrics.hpp"
#include "sysid/serialize.hpp"
#include "sysid/table.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sysid;

namespace {

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "sysid_test_harness" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

json base_config() {
    return {{"manifest", "m.json"}, {"benchmarks", {"ced"}}, {"models", {"lti_arx"}}, {"seed", 1}};
}

// Everything except wall-clock time.
json comparable(const EvalReport& r) {
    json j = report_to_json(r);
    j.erase("train_seconds");
    return j;
}

EvalReport report(const std::string& bench, const std::string& model, std::vector<std::pair<std::string, double>> scores,
                  double scale = 1.0, std::string unit = "V") {
    EvalReport r;
    r.benchmark = bench;
    r.model = model;
    r.report_unit = std::move(unit);
    r.report_scale = scale;
    for (auto& [name, v] : scores) {
        TestScore s;
        s.name = name;
        s.rmse = v;
        s.display_rmse = v * scale;
        r.scores.push_back(s);
    }
    return r;
}

}  // namespace

TEST(RunConfig, ParsesAndExpandsAll) {
    json j = base_config();
    j["benchmarks"] = "all";
    j["models"] = "all";
    const auto c = parse_run_config(j, "/base");
    EXPECT_EQ(c.benchmarks.size(), 5u);
    EXPECT_EQ(c.models.size(), 10u);
    EXPECT_EQ(c.manifest, fs::path("/base/m.json"));
    EXPECT_EQ(c.seed, 1u);
    EXPECT_DOUBLE_EQ(c.val_fraction, 0.2);
    EXPECT_EQ(c.burn_in, 0u);
    const auto again = parse_run_config(to_json(c), "/elsewhere");
    EXPECT_EQ(to_json(again), to_json(c));
}

TEST(RunConfig, RejectsBadDocuments) {
    json j = base_config();
    j["models"] = {"lti_arx", "transformer"};
    EXPECT_THROW(parse_run_config(j).validate(), ConfigError);

    j = base_config();
    j.erase("seed");
    EXPECT_THROW(parse_run_config(j).validate(), ConfigError);

    j = base_config();
    j["colour"] = "blue";
    EXPECT_THROW(parse_run_config(j), ConfigError);

    j = base_config();
    j["overrides"] = {{"lti_arx", {{"hidden_sizes", {2}}}}};
    EXPECT_THROW(parse_run_config(j).validate(), ConfigError);

    j = base_config();
    j["val_fraction"] = 1.5;
    EXPECT_THROW(parse_run_config(j).validate(), ConfigError);

    j = base_config();
    j["lag_policy"] = "bic";
    EXPECT_THROW(parse_run_config(j).validate(), ConfigError);
}

TEST(RunConfig, OverrideKeysPerModel) {
    EXPECT_NO_THROW(check_overrides("lti_ss", {{"n_x", 3}, {"grid_search", true}}));
    EXPECT_NO_THROW(check_overrides("gru", {{"look_backs", {1}}, {"washout", 4}}));
    EXPECT_THROW(check_overrides("gru", {{"n_y", 3}}), ConfigError);
    EXPECT_THROW(check_overrides("pnarx", {{"degree", 3}}), ConfigError);
}

TEST(Fetch, CacheHitNeverTouchesNetwork) {
    const auto dir = scratch("fetch_hit");
    std::ofstream(dir / "abc.bin") << "abc";
    const std::string sha = "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad";
    EXPECT_EQ(sha256_file(dir / "abc.bin"), sha);
    FetchOptions o;
    o.offline = true;
    const auto r = fetch_dataset("http://unreachable.invalid/abc.bin", sha, dir, "abc.bin", o);
    EXPECT_FALSE(r.downloaded);
    EXPECT_EQ(r.attempts, 0);
    EXPECT_EQ(r.path, dir / "abc.bin");
}

TEST(Fetch, WrongChecksumQuarantines) {
    const auto dir = scratch("fetch_bad");
    std::ofstream(dir / "abc.bin") << "abd";
    FetchOptions o;
    o.offline = true;
    EXPECT_THROW(fetch_dataset("http://unreachable.invalid/abc.bin",
                               "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad", dir, "abc.bin", o),
                 FetchError);
    EXPECT_FALSE(fs::exists(dir / "abc.bin"));
    EXPECT_TRUE(fs::exists(dir / "quarantine" / "abc.bin"));
}

TEST(Fetch, FreshDownloadVerifies) {
    const auto src = scratch("fetch_src");
    const auto cache = scratch("fetch_cache");
    std::ofstream(src / "payload.csv") << "u,y\n1,2\n";
    const std::string sha = sha256_file(src / "payload.csv");
    const std::string url = "file://" + (src / "payload.csv").string();
    const auto r = fetch_dataset(url, sha, cache, "payload.csv");
    EXPECT_TRUE(r.downloaded);
    EXPECT_EQ(sha256_file(r.path), sha);
    const auto again = fetch_dataset(url, sha, cache, "payload.csv");
    EXPECT_FALSE(again.downloaded);

    EXPECT_THROW(fetch_dataset(url, std::string(64, '0'), scratch("fetch_cache2"), "payload.csv"), FetchError);
    EXPECT_THROW(fetch_dataset(url, "", scratch("fetch_cache3"), "payload.csv"), FetchError);
    FetchOptions unpinned;
    unpinned.allow_unpinned = true;
    EXPECT_EQ(fetch_dataset(url, "", scratch("fetch_cache4"), "payload.csv", unpinned).sha256, sha);
    FetchOptions offline;
    offline.offline = true;
    EXPECT_THROW(fetch_dataset(url, sha, scratch("fetch_cache5"), "payload.csv", offline), FetchError);
}

TEST(Table, DisplayFormatting) {
    EXPECT_EQ(format_display(6.96), "6.96");
    EXPECT_EQ(format_display(0.413), "0.413");
    EXPECT_EQ(format_display(0.1), "0.100");
    EXPECT_EQ(format_display(43.4), "43.4");
    EXPECT_EQ(format_display(1690.0), "1690");
}

TEST(Table, FullGridShape) {
    std::vector<EvalReport> reports;
    for (auto id : kModelIds) {
        const std::string m(id);
        reports.push_back(report("silverbox", m, {{"multisine", 1e-3}, {"arrow_full", 2e-3}, {"arrow_no_extrap", 3e-3}}, 1000, "mV"));
        reports.push_back(report("wiener_hammerstein", m, {{"test", 4e-3}}, 1000, "mV"));
        reports.push_back(report("emps", m, {{"test", 5e-3}}, 1000, "mm"));
        reports.push_back(report("cascaded_tanks", m, {{"test", 0.5}}));
        reports.push_back(report("ced", m, {{"test1", 0.1}, {"test2", 0.2}}, 1, "ticks/s"));
    }
    const std::string csv = emit_table(reports, TableFormat::csv);
    std::vector<std::string> lines;
    for (std::size_t pos = 0, next; (next = csv.find("\r\n", pos)) != std::string::npos; pos = next + 2) {
        lines.push_back(csv.substr(pos, next - pos));
    }
    ASSERT_EQ(lines.size(), 11u);
    EXPECT_EQ(lines[0],
              "Model,SB multisine [mV],SB arrow (full) [mV],SB arrow (no extrap.) [mV],W-H test [mV],EMPS test [mm],"
              "CT test [V],CED test 1 [ticks/s],CED test 2 [ticks/s]");
    EXPECT_EQ(lines[1], "LTI SS,1.00,2.00,3.00,4.00,5.00,0.500,0.100,0.200");
    EXPECT_EQ(lines[10].substr(0, 6), "OLSTM,");
    std::reverse(reports.begin(), reports.end());
    EXPECT_EQ(emit_table(reports, TableFormat::csv), csv);
}

TEST(Table, MissingFailedAndSingle) {
    auto a = report("ced", "gru", {{"test1", 0.1}, {"test2", 0.2}}, 1, "ticks/s");
    a.scores[1].failed = true;
    const auto b = report("cascaded_tanks", "lti_arx", {{"test", 0.5}});
    const std::string md = emit_table({a, b}, TableFormat::markdown);
    EXPECT_NE(md.find("| LTI ARX | 0.500 | - | - |"), std::string::npos) << md;
    EXPECT_NE(md.find("| GRU | - | 0.100 | fail |"), std::string::npos) << md;
    const std::string single = emit_table({b}, TableFormat::csv);
    EXPECT_EQ(single, "Model,CT test [V]\r\nLTI ARX,0.500\r\n");
}

TEST(Serialize, ModelsRoundTripExactly) {
    const auto ts = generate_synthetic({DuffingRk4{}, 0.01, 1}, oracle::gaussian(400, 2), 0.1);
    const TrainingData data{ts.slice(0, 300), ts.slice(300, 100)};
    json ov = fixture::quick_config("m", "o", 1).overrides;
    for (const char* m : {"rnn", "lstm", "olstm"}) ov[m] = ov["gru"];
    const auto dir = scratch("models");
    for (auto id : kModelIds) {
        const std::string m(id);
        const CellFit fit = fit_cell(BenchmarkId::cascaded_tanks, m, data, ov.value(m, json::object()), 5);
        save_model(dir / (m + ".json"), fit.model);
        const AnyModel back = load_model(dir / (m + ".json"));
        EXPECT_EQ(kind_of(back), kind_of(fit.model)) << m;
        EXPECT_EQ(simulate_model(back, ts), simulate_model(fit.model, ts)) << m;
        EXPECT_EQ(model_to_json(back).dump(), model_to_json(fit.model).dump()) << m;
    }
    json bad = model_to_json(AnyModel{StateSpaceModel{}});
    bad["format_version"] = 99;
    EXPECT_THROW(model_from_json(bad), Error);
}

TEST(Serialize, ReportRoundTrip) {
    auto r = report("ced", "pnarx", {{"test1", 0.1}, {"test2", std::nan("")}});
    r.scores[1].failed = true;
    r.scores[1].blowup_index = 42;
    r.hyperparameters = {{"degree", 3}};
    r.seed = 77;
    const auto dir = scratch("report");
    save_report(dir / "r.json", r);
    const auto back = load_report(dir / "r.json");
    EXPECT_EQ(report_to_json(back).dump(), report_to_json(r).dump());
    EXPECT_EQ(back.scores[1].blowup_index, 42u);
}

class MiniGrid : public ::testing::Test {
protected:
    static void SetUpTestSuite() {
        root_ = new fs::path(scratch("grid"));
        manifest_ = new fs::path(fixture::write_mini_benchmark(*root_ / "data"));
        AccessLog log;
        serial_ = new std::vector<EvalReport>(run_benchmark(fixture::quick_config(*manifest_, *root_ / "serial", 1), &log));
        events_ = new std::vector<AccessLog::Event>(log.events());
    }
    static void TearDownTestSuite() {
        delete serial_;
        delete events_;
        delete manifest_;
        delete root_;
    }
    static fs::path* root_;
    static fs::path* manifest_;
    static std::vector<EvalReport>* serial_;
    static std::vector<AccessLog::Event>* events_;
};

fs::path* MiniGrid::root_ = nullptr;
fs::path* MiniGrid::manifest_ = nullptr;
std::vector<EvalReport>* MiniGrid::serial_ = nullptr;
std::vector<AccessLog::Event>* MiniGrid::events_ = nullptr;

TEST_F(MiniGrid, EveryCellReportsEveryTest) {
    ASSERT_EQ(serial_->size(), 14u);
    for (const auto& r : *serial_) {
        EXPECT_FALSE(r.failed()) << r.benchmark << "/" << r.model << ": " << r.failure;
        EXPECT_EQ(r.scores.size(), r.benchmark == "ced" ? 2u : 1u);
        for (const auto& s : r.scores) {
            EXPECT_GE(s.rmse, 0.0);
            EXPECT_EQ(s.display_rmse, s.rmse * r.report_scale);
        }
        EXPECT_EQ(r.version, kVersion);
    }
    EXPECT_TRUE(fs::exists(*root_ / "serial" / "index.jsonl"));
}

TEST_F(MiniGrid, LinearBaselineTracksTanks) {
    const auto arx = std::find_if(serial_->begin(), serial_->end(),
                                   [](const EvalReport& r) { return r.benchmark == "cascaded_tanks" && r.model == "lti_arx"; });
    ASSERT_NE(arx, serial_->end());
    EXPECT_LT(arx->scores[0].rmse, 1.0);
}

TEST_F(MiniGrid, TestRecordsReadOnlyAfterFitting) {
    std::map<std::string, bool> fitted;
    std::set<std::string> tested;
    for (const auto& e : *events_) {
        if (e.what == "fit:end") fitted[e.cell] = true;
        if (e.what.rfind("test_read:", 0) == 0) {
            EXPECT_TRUE(fitted[e.cell]) << e.cell << " read " << e.what << " before fitting finished";
            tested.insert(e.cell);
        }
    }
    EXPECT_EQ(tested.size(), 14u);
}

TEST_F(MiniGrid, WorkerCountDoesNotChangeResults) {
    const auto parallel = run_benchmark(fixture::quick_config(*manifest_, *root_ / "parallel", 4));
    ASSERT_EQ(parallel.size(), serial_->size());
    for (std::size_t i = 0; i < parallel.size(); ++i) {
        EXPECT_EQ(comparable(parallel[i]).dump(), comparable((*serial_)[i]).dump());
    }
    EXPECT_EQ(emit_table(parallel, TableFormat::csv), emit_table(*serial_, TableFormat::csv));
}

TEST_F(MiniGrid, InjectedBlowUpStaysInItsCell) {
    auto c = fixture::quick_config(*manifest_, *root_ / "inject", 1);
    c.inject_blowup = {"ced/gru", "cascaded_tanks/pnarx"};
    const auto reports = run_benchmark(c);
    for (std::size_t i = 0; i < reports.size(); ++i) {
        const auto& r = reports[i];
        const std::string cell = r.benchmark + "/" + r.model;
        if (cell == "ced/gru" || cell == "cascaded_tanks/pnarx") {
            for (const auto& s : r.scores) EXPECT_TRUE(s.failed) << cell;
        } else {
            EXPECT_EQ(comparable(r).dump(), comparable((*serial_)[i]).dump()) << cell;
        }
    }
}

TEST_F(MiniGrid, PersistedReportsEmitTheSameTable) {
    const auto loaded = load_reports(*root_ / "serial");
    EXPECT_EQ(emit_table(loaded, TableFormat::csv), emit_table(*serial_, TableFormat::csv));
    EXPECT_EQ(emit_table(loaded, TableFormat::markdown), emit_table(*serial_, TableFormat::markdown));
}

TEST_F(MiniGrid, ResumeReusesFinishedCells) {
    const auto dir = *root_ / "resume";
    fs::create_directories(dir / "reports");
    fs::copy(*root_ / "serial" / "reports", dir / "reports", fs::copy_options::recursive);
    auto c = fixture::quick_config(*manifest_, dir, 1);
    c.resume = true;
    AccessLog log;
    const auto again = run_benchmark(c, &log);
    EXPECT_TRUE(log.events().empty());
    for (std::size_t i = 0; i < again.size(); ++i) EXPECT_EQ(report_to_json(again[i]).dump(), report_to_json((*serial_)[i]).dump());
}

TEST(RunBenchmark, ValidationBeforeWork) {
    RunConfig c;
    c.manifest = "/nonexistent.json";
    c.benchmarks = {BenchmarkId::ced};
    c.models = {"lti_arx", "svm"};
    c.seed = 1;
    EXPECT_THROW(run_benchmark(c), ConfigError);
    c.models = {"lti_arx"};
    c.seed.reset();
    EXPECT_THROW(run_benchmark(c), ConfigError);
}
