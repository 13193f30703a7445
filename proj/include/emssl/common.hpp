#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace emssl {

// Error taxonomy shared by every module. Callers that need to distinguish
// operator mistakes from runtime failures catch ValidationError first.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InstabilityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NonFiniteError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Dense row-major matrix of doubles. Rows are frames, columns are features.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  /// Keeps the first `rows` rows, or appends rows copied from the last one
  /// (zeros if the matrix is empty).
  void resize_rows(std::size_t rows);

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Seed derivation. Every random stream in the project is keyed by a base seed
// and a tag so that streams stay independent of each other.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);
std::uint64_t hash_string(std::string_view s);
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view tag) {
  return mix_seed(base, hash_string(tag));
}
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view tag, std::uint64_t index) {
  return mix_seed(derive_seed(base, tag), index);
}

using Rng = std::mt19937_64;

/// Decibel level to linear amplitude, with 60 dB mapping to 1 and any level
/// at or below 0 dB treated as silence.
double db_to_amplitude(double db, double reference_db = 60.0);

}  // namespace emssl
