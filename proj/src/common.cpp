#include "emssl/common.hpp"

#include <cmath>

namespace emssl {

void Matrix::resize_rows(std::size_t rows) {
  if (rows <= rows_) {
    data_.resize(rows * cols_);
    rows_ = rows;
    return;
  }
  std::vector<double> last(cols_, 0.0);
  if (rows_ > 0) {
    auto r = row(rows_ - 1);
    last.assign(r.begin(), r.end());
  }
  data_.reserve(rows * cols_);
  for (std::size_t i = rows_; i < rows; ++i) data_.insert(data_.end(), last.begin(), last.end());
  rows_ = rows;
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  // splitmix64 finalizer over a combined word
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t hash_string(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

double db_to_amplitude(double db, double reference_db) {
  if (!(db > 0.0)) return 0.0;
  return std::pow(10.0, (db - reference_db) / 20.0);
}

}  // namespace emssl
