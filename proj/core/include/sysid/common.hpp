#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace sysid {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr const char* kVersion = SYSID_VERSION;

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Bad input data: missing file, malformed CSV, invariant violation on a record.
/// `row` is the zero-based data row (header excluded) when one applies.
class DataError : public Error {
public:
    explicit DataError(const std::string& what, std::optional<std::size_t> row = std::nullopt)
        : Error(row ? what + " (row " + std::to_string(*row) + ")" : what), row_(row) {}
    std::optional<std::size_t> row() const { return row_; }

private:
    std::optional<std::size_t> row_;
};

/// Numerical failure with the offending index (pivot, gradient entry, ...).
class NumericalError : public Error {
public:
    NumericalError(const std::string& what, std::size_t index)
        : Error(what + " (index " + std::to_string(index) + ")"), index_(index) {}
    std::size_t index() const { return index_; }

private:
    std::size_t index_;
};

/// A free-run simulation produced a non-finite value at time index `step`.
class SimulationError : public Error {
public:
    explicit SimulationError(std::size_t step)
        : Error("simulation blow-up: non-finite value at time index " + std::to_string(step)),
          step_(step) {}
    std::size_t step() const { return step_; }

private:
    std::size_t step_;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class FetchError : public Error {
public:
    using Error::Error;
};

/// Deterministic child seed for (base, key...) via splitmix64 mixing.
inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> keys) {
    auto mix = [](std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    };
    std::uint64_t h = mix(base);
    for (auto k : keys) h = mix(h ^ mix(k));
    return h;
}

inline bool all_finite(const Eigen::Ref<const Matrix>& m) { return m.allFinite(); }

}  // namespace sysid
