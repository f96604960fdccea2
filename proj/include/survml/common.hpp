#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace survml {

// Error hierarchy. The CLI maps each branch to a distinct exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class ConfigError : public Error {
 public:
  using Error::Error;
};
class DataError : public Error {
 public:
  using Error::Error;
};
class FitError : public Error {
 public:
  using Error::Error;
};
class MetricError : public Error {
 public:
  using Error::Error;
};

/// Dense row-major matrix of doubles. Rows are samples, columns features.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix from_rows(const std::vector<std::vector<double>>& rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return rows_ == 0; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::vector<double> column(std::size_t c) const;
  Matrix select_rows(std::span<const std::size_t> idx) const;

  const std::vector<double>& data() const { return data_; }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

using Rng = std::mt19937_64;

/// Seed for a named sub-stream of a master seed. Stable across builds:
/// FNV-1a of the label mixed into the master seed through splitmix64.
std::uint64_t derive_seed(std::uint64_t master, std::string_view label);
std::uint64_t derive_seed(std::uint64_t master, std::string_view label, std::uint64_t index);

/// Uniform draw in [0, 1) built from the raw 64-bit engine output, so the
/// stream does not depend on the standard library's distribution code.
double uniform01(Rng& rng);
/// Uniform integer in [0, n).
std::size_t uniform_index(Rng& rng, std::size_t n);
/// Standard normal via Box-Muller on uniform01.
double standard_normal(Rng& rng);
/// Fisher-Yates shuffle driven by uniform_index.
void shuffle_indices(std::vector<std::size_t>& v, Rng& rng);
std::vector<std::size_t> iota_indices(std::size_t n);

/// Runs body(i) for i in [0, n) on up to `workers` threads. Results must be
/// written to slot i so the outcome does not depend on scheduling.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body,
                  unsigned workers = 0);
unsigned default_workers();

void warn(std::string_view message);
void set_warning_sink(std::function<void(std::string_view)> sink);

}  // namespace survml
