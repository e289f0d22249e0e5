#include "sysid/fetch.hpp"

#include <array>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <thread>

#include <curl/curl.h>
#include <openssl/evp.h>

#include "sysid/common.hpp"

namespace sysid {

namespace fs = std::filesystem;

std::string sha256_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FetchError("cannot read '" + path.string() + "'");
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    std::array<char, 1 << 16> buf{};
    while (in) {
        in.read(buf.data(), buf.size());
        if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, digest.data(), &len);
    EVP_MD_CTX_free(ctx);
    std::string hex;
    char byte[3];
    for (unsigned int i = 0; i < len; ++i) {
        std::snprintf(byte, sizeof byte, "%02x", digest[i]);
        hex += byte;
    }
    return hex;
}

namespace {

std::size_t write_to_file(char* data, std::size_t size, std::size_t count, void* stream) {
    auto* out = static_cast<std::ofstream*>(stream);
    out->write(data, static_cast<std::streamsize>(size * count));
    return *out ? size * count : 0;
}

// One transfer attempt into `target`; returns an empty string on success, else the reason.
std::string download_once(const std::string& url, const fs::path& target, long timeout) {
    std::ofstream out(target, std::ios::binary | std::ios::trunc);
    if (!out) return "cannot write '" + target.string() + "'";
    CURL* curl = curl_easy_init();
    if (!curl) return "curl initialization failed";
    curl_easy_setopt(curl, CURLOPT_URL, url.c_str());
    curl_easy_setopt(curl, CURLOPT_WRITEFUNCTION, write_to_file);
    curl_easy_setopt(curl, CURLOPT_WRITEDATA, &out);
    curl_easy_setopt(curl, CURLOPT_FOLLOWLOCATION, 1L);
    curl_easy_setopt(curl, CURLOPT_FAILONERROR, 1L);
    curl_easy_setopt(curl, CURLOPT_TIMEOUT, timeout);
    curl_easy_setopt(curl, CURLOPT_USERAGENT, "sysid-ingest");
    const CURLcode rc = curl_easy_perform(curl);
    curl_easy_cleanup(curl);
    out.close();
    if (rc != CURLE_OK) return curl_easy_strerror(rc);
    return {};
}

void quarantine(const fs::path& file, const fs::path& cache_dir) {
    const fs::path dir = cache_dir / "quarantine";
    fs::create_directories(dir);
    fs::path dest = dir / file.filename();
    for (int i = 1; fs::exists(dest); ++i) dest = dir / (file.filename().string() + "." + std::to_string(i));
    fs::rename(file, dest);
}

std::string file_name_from_url(const std::string& url) {
    const auto cut = url.find_first_of("?#");
    const std::string path = url.substr(0, cut);
    const auto slash = path.find_last_of('/');
    return slash == std::string::npos ? path : path.substr(slash + 1);
}

}  // namespace

FetchResult fetch_dataset(const std::string& url, const std::string& sha256, const fs::path& cache_dir,
                          std::string file_name, const FetchOptions& options) {
    if (file_name.empty()) file_name = file_name_from_url(url);
    if (file_name.empty()) throw FetchError("cannot derive a file name from '" + url + "'");
    if (sha256.empty() && !options.allow_unpinned) {
        throw FetchError("no checksum pinned for '" + file_name + "'; pass allow_unpinned to accept one");
    }
    fs::create_directories(cache_dir);
    const fs::path target = cache_dir / file_name;

    FetchResult result;
    result.path = target;
    if (fs::exists(target)) {
        const std::string have = sha256_file(target);
        if (sha256.empty() || have == sha256) {
            result.sha256 = have;
            return result;
        }
        quarantine(target, cache_dir);
    }
    if (options.offline) throw FetchError("offline mode: '" + file_name + "' is not in the cache");

    const fs::path partial = cache_dir / (file_name + ".part");
    std::string last_error;
    for (int attempt = 1; attempt <= std::max(options.retries, 1); ++attempt) {
        result.attempts = attempt;
        last_error = download_once(url, partial, options.timeout_seconds);
        if (last_error.empty()) break;
        if (attempt < options.retries) std::this_thread::sleep_for(std::chrono::milliseconds(250 * attempt));
    }
    if (!last_error.empty()) {
        std::error_code ec;
        fs::remove(partial, ec);
        throw FetchError("download of '" + url + "' failed after " + std::to_string(result.attempts) +
                         " attempts: " + last_error);
    }
    fs::rename(partial, target);
    result.downloaded = true;
    result.sha256 = sha256_file(target);
    if (!sha256.empty() && result.sha256 != sha256) {
        quarantine(target, cache_dir);
        throw FetchError("checksum mismatch for '" + file_name + "': expected " + sha256 + ", got " + result.sha256 +
                         " (file moved to quarantine)");
    }
    return result;
}

}  // namespace sysid
