#include "emssl/metrics/snr.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace emssl::metrics {

namespace {

void require_same_shape(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError("SNR operands differ in shape: " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
                     " vs " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()));
  }
}

double cap(double db) { return std::clamp(db, -kSnrCapDb, kSnrCapDb); }

}  // namespace

double sentence_snr(const Matrix& reference, const Matrix& estimate) {
  require_same_shape(reference, estimate);
  double signal = 0.0;
  double noise = 0.0;
  const auto& y = reference.data();
  const auto& yh = estimate.data();
  for (std::size_t i = 0; i < y.size(); ++i) {
    signal += y[i] * y[i];
    const double e = y[i] - yh[i];
    noise += e * e;
  }
  if (noise == 0.0) return kSnrCapDb;
  if (signal == 0.0) return -kSnrCapDb;
  return cap(10.0 * std::log10(signal / noise));
}

Matrix local_snr(const Matrix& reference, const Matrix& estimate) {
  require_same_shape(reference, estimate);
  Matrix out(reference.rows(), reference.cols());
  const auto& y = reference.data();
  const auto& yh = estimate.data();
  auto& o = out.data();
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double e = std::abs(y[i] - yh[i]);
    if (e == 0.0) o[i] = kSnrCapDb;
    else if (y[i] == 0.0) o[i] = -kSnrCapDb;
    else o[i] = cap(20.0 * std::log10(std::abs(y[i]) / e));
  }
  return out;
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) throw ValidationError("quantile of an empty sample");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

BoxStats box_stats(std::vector<double> values) {
  for (double& v : values) v = std::clamp(v, kBoxLowDb, kBoxHighDb);
  std::sort(values.begin(), values.end());
  BoxStats s;
  s.p25 = quantile_sorted(values, 0.25);
  s.median = quantile_sorted(values, 0.5);
  s.p75 = quantile_sorted(values, 0.75);
  const double iqr = s.p75 - s.p25;
  const double lo_fence = s.p25 - 1.5 * iqr;
  const double hi_fence = s.p75 + 1.5 * iqr;
  s.whisker_low = s.p25;
  s.whisker_high = s.p75;
  for (double v : values) {
    if (v < lo_fence || v > hi_fence) {
      s.outliers.push_back(v);
      continue;
    }
    s.whisker_low = std::min(s.whisker_low, v);
    s.whisker_high = std::max(s.whisker_high, v);
  }
  return s;
}

BinSnrStats bin_snr_stats(const Matrix& local) {
  if (local.rows() == 0) throw ValidationError("bin_snr_stats needs at least one frame");
  BinSnrStats stats;
  stats.bins.reserve(local.cols());
  std::vector<double> column(local.rows());
  for (std::size_t j = 0; j < local.cols(); ++j) {
    for (std::size_t i = 0; i < local.rows(); ++i) column[i] = local(i, j);
    stats.bins.push_back(box_stats(column));
  }
  return stats;
}

MeanStd mean_std(const std::vector<double>& values) {
  if (values.empty()) throw ValidationError("mean of an empty sample");
  MeanStd r;
  for (double v : values) r.mean += v;
  r.mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - r.mean) * (v - r.mean);
  r.std = std::sqrt(var / static_cast<double>(values.size()));
  return r;
}

MeanStd corpus_snr(const std::vector<std::pair<Matrix, Matrix>>& pairs) {
  std::vector<double> snr;
  snr.reserve(pairs.size());
  for (const auto& [y, yh] : pairs) snr.push_back(sentence_snr(y, yh));
  return mean_std(snr);
}

}  // namespace emssl::metrics
