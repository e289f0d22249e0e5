#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sysid/data.hpp"

namespace sysid {

/// A CSV file, optionally restricted to the row range [begin, end) (data rows, header excluded).
struct SeriesPart {
    std::filesystem::path file;
    std::optional<std::pair<std::size_t, std::size_t>> rows;
};

/// One logical record; several parts are concatenated in order.
struct SeriesSource {
    std::vector<SeriesPart> parts;
};

struct NamedSource {
    std::string name;
    SeriesSource source;
};

/// Archive to be fetched by `ingest`.
struct RemoteSource {
    std::string url;
    std::string sha256;  // lowercase hex; empty means unpinned
    std::string file;    // name inside the cache directory
};

struct ManifestEntry {
    BenchmarkId benchmark_id = BenchmarkId::silverbox;
    double sample_time = 1.0;
    std::string report_unit;
    double report_scale = 1.0;
    CsvSchema schema;
    SeriesSource train;
    std::optional<SeriesSource> validation;  // when absent the tail of train is split off
    std::optional<double> val_fraction;
    std::vector<NamedSource> tests;
};

struct DatasetManifest {
    int format_version = 1;
    std::filesystem::path base_dir;  // relative file paths resolve against this
    std::vector<RemoteSource> sources;
    std::vector<ManifestEntry> benchmarks;

    const ManifestEntry& entry(BenchmarkId id) const;
    bool has(BenchmarkId id) const;
};

DatasetManifest load_manifest(const std::filesystem::path& path);
DatasetManifest parse_manifest(const std::string& json_text, const std::filesystem::path& base_dir);

/// True when every file referenced by the entry exists.
bool files_present(const DatasetManifest& manifest, const ManifestEntry& entry);

TimeSeries load_series(const DatasetManifest& manifest, const ManifestEntry& entry,
                       const SeriesSource& source, const std::string& name);

struct TrainingData {
    TimeSeries train;
    TimeSeries validation;
};

/// Reads only the training material: explicit validation file if given, otherwise
/// split_train_val on the train record.
TrainingData load_training_data(const DatasetManifest& manifest, const ManifestEntry& entry,
                                double default_val_fraction, int max_lag = 0);

BenchmarkDataset load_benchmark(const DatasetManifest& manifest, BenchmarkId id,
                                double default_val_fraction = 0.2, int max_lag = 0);

}  // namespace sysid
