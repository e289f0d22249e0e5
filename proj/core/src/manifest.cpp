#include "sysid/manifest.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace sysid {

using nlohmann::json;

namespace {

SeriesPart parse_part(const json& j) {
    SeriesPart part;
    if (j.is_string()) {
        part.file = j.get<std::string>();
        return part;
    }
    part.file = j.at("file").get<std::string>();
    if (j.contains("rows")) {
        const auto& r = j.at("rows");
        if (!r.is_array() || r.size() != 2) throw ConfigError("manifest: 'rows' must be [begin, end)");
        const auto b = r[0].get<std::size_t>();
        const auto e = r[1].get<std::size_t>();
        if (e <= b) throw ConfigError("manifest: empty row range");
        part.rows = std::make_pair(b, e);
    }
    return part;
}

SeriesSource parse_source(const json& j) {
    SeriesSource s;
    if (j.is_array()) {
        for (const auto& p : j) s.parts.push_back(parse_part(p));
    } else {
        s.parts.push_back(parse_part(j));
    }
    if (s.parts.empty()) throw ConfigError("manifest: series without files");
    return s;
}

}  // namespace

const ManifestEntry& DatasetManifest::entry(BenchmarkId id) const {
    for (const auto& e : benchmarks) {
        if (e.benchmark_id == id) return e;
    }
    throw ConfigError("manifest has no entry for benchmark '" + std::string(to_string(id)) + "'");
}

bool DatasetManifest::has(BenchmarkId id) const {
    for (const auto& e : benchmarks) {
        if (e.benchmark_id == id) return true;
    }
    return false;
}

DatasetManifest parse_manifest(const std::string& json_text, const std::filesystem::path& base_dir) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("manifest: ") + e.what());
    }
    DatasetManifest m;
    try {
        m.format_version = j.value("format_version", 1);
        if (m.format_version != 1) {
            throw ConfigError("manifest: unsupported format_version " + std::to_string(m.format_version));
        }
        m.base_dir = base_dir;
        if (j.contains("data_dir")) {
            std::filesystem::path d = j.at("data_dir").get<std::string>();
            m.base_dir = d.is_absolute() ? d : base_dir / d;
        }
        for (const auto& s : j.value("sources", json::array())) {
            m.sources.push_back({s.at("url").get<std::string>(), s.value("sha256", std::string{}),
                                 s.at("file").get<std::string>()});
        }
        for (const auto& b : j.at("benchmarks")) {
            ManifestEntry e;
            e.benchmark_id = benchmark_from_string(b.at("benchmark_id").get<std::string>());
            e.sample_time = b.at("sample_time").get<double>();
            e.report_unit = b.at("report_unit").get<std::string>();
            e.report_scale = b.value("report_scale", 1.0);
            if (e.report_scale != 1.0 && e.report_scale != 1e3) {
                throw ConfigError("manifest: report_scale must be 1 or 1000");
            }
            if (b.contains("columns")) {
                e.schema.input_column = b.at("columns").value("input", e.schema.input_column);
                e.schema.output_column = b.at("columns").value("output", e.schema.output_column);
            }
            e.train = parse_source(b.at("train"));
            if (b.contains("validation")) e.validation = parse_source(b.at("validation"));
            if (b.contains("val_fraction")) e.val_fraction = b.at("val_fraction").get<double>();
            for (const auto& t : b.at("tests")) {
                e.tests.push_back({t.at("name").get<std::string>(), parse_source(t.at("source"))});
            }
            if (e.tests.empty()) throw ConfigError("manifest: benchmark without test records");
            m.benchmarks.push_back(std::move(e));
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("manifest: ") + e.what());
    }
    return m;
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open manifest '" + path.string() + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_manifest(ss.str(), path.parent_path());
}

namespace {

std::filesystem::path resolve(const DatasetManifest& m, const std::filesystem::path& p) {
    return p.is_absolute() ? p : m.base_dir / p;
}

}  // namespace

bool files_present(const DatasetManifest& manifest, const ManifestEntry& entry) {
    auto check = [&](const SeriesSource& s) {
        for (const auto& p : s.parts) {
            if (!std::filesystem::exists(resolve(manifest, p.file))) return false;
        }
        return true;
    };
    if (!check(entry.train)) return false;
    if (entry.validation && !check(*entry.validation)) return false;
    for (const auto& t : entry.tests) {
        if (!check(t.source)) return false;
    }
    return true;
}

TimeSeries load_series(const DatasetManifest& manifest, const ManifestEntry& entry,
                       const SeriesSource& source, const std::string& name) {
    std::vector<TimeSeries> parts;
    for (const auto& p : source.parts) {
        TimeSeries ts = load_csv(resolve(manifest, p.file), entry.schema, entry.sample_time);
        if (p.rows) {
            const auto [b, e] = *p.rows;
            if (e > ts.size()) {
                throw DataError("manifest row range [" + std::to_string(b) + ", " + std::to_string(e) +
                                ") exceeds '" + p.file.string() + "' with " + std::to_string(ts.size()) + " rows");
            }
            ts = ts.slice(b, e - b);
        }
        parts.push_back(std::move(ts));
    }
    return parts.size() == 1 ? parts.front().slice(0, parts.front().size(), name) : concatenate(parts, name);
}

TrainingData load_training_data(const DatasetManifest& manifest, const ManifestEntry& entry,
                                double default_val_fraction, int max_lag) {
    const std::string id(to_string(entry.benchmark_id));
    TimeSeries train = load_series(manifest, entry, entry.train, id + "/train");
    if (entry.validation) {
        return {std::move(train), load_series(manifest, entry, *entry.validation, id + "/validation")};
    }
    auto [tr, val] = split_train_val(train, entry.val_fraction.value_or(default_val_fraction), max_lag);
    tr.name = id + "/train";
    val.name = id + "/validation";
    return {std::move(tr), std::move(val)};
}

BenchmarkDataset load_benchmark(const DatasetManifest& manifest, BenchmarkId id,
                                double default_val_fraction, int max_lag) {
    const auto& entry = manifest.entry(id);
    auto training = load_training_data(manifest, entry, default_val_fraction, max_lag);
    BenchmarkDataset d;
    d.benchmark_id = id;
    d.train = std::move(training.train);
    d.validation = std::move(training.validation);
    d.report_unit = entry.report_unit;
    d.report_scale = entry.report_scale;
    for (const auto& t : entry.tests) {
        d.tests.push_back({t.name, load_series(manifest, entry, t.source, std::string(to_string(id)) + "/" + t.name)});
    }
    d.validate();
    return d;
}

}  // namespace sysid
