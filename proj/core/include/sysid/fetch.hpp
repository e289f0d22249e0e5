#pragma once

#include <filesystem>
#include <string>

namespace sysid {

struct FetchOptions {
    bool offline = false;         // refuse any download
    bool allow_unpinned = false;  // accept an empty checksum (the computed one is reported)
    int retries = 3;
    long timeout_seconds = 600;
};

struct FetchResult {
    std::filesystem::path path;
    std::string sha256;
    bool downloaded = false;  // false on a verified cache hit
    int attempts = 0;
};

/// Lowercase hex SHA-256 of a file.
std::string sha256_file(const std::filesystem::path& path);

/// Ensures `cache_dir/file_name` exists with the given checksum. A verified cached copy is
/// returned without touching the network. A file whose checksum does not match is moved to
/// `cache_dir/quarantine/`. Proxies follow the usual *_proxy environment variables.
/// Throws FetchError on checksum mismatch after download, offline mode, or exhausted retries.
FetchResult fetch_dataset(const std::string& url, const std::string& sha256, const std::filesystem::path& cache_dir,
                          std::string file_name = {}, const FetchOptions& options = {});

}  // namespace sysid
