#pragma once

#include <utility>
#include <vector>

#include "emssl/common.hpp"

namespace emssl::metrics {

/// Magnitude of the sentinel returned for zero denominators and of the cap
/// applied to every SNR value.
inline constexpr double kSnrCapDb = 120.0;
inline constexpr double kBoxLowDb = -20.0;
inline constexpr double kBoxHighDb = 60.0;

/// 10 log10(sum Y^2 / sum (Y - Yhat)^2) over all entries, clamped to +-120 dB.
double sentence_snr(const Matrix& reference, const Matrix& estimate);

/// Per-entry 20 log10(|Y| / |Y - Yhat|), clamped to +-120 dB. An exact match
/// gives +120; a zero reference with a nonzero estimate gives -120.
Matrix local_snr(const Matrix& reference, const Matrix& estimate);

struct BoxStats {
  double median = 0.0;
  double p25 = 0.0;
  double p75 = 0.0;
  double whisker_low = 0.0;
  double whisker_high = 0.0;
  std::vector<double> outliers;
};

/// One box per mel bin (column).
struct BinSnrStats {
  std::vector<BoxStats> bins;
};

/// Quantile by linear interpolation between order statistics of sorted data.
double quantile_sorted(const std::vector<double>& sorted, double q);

/// Box statistics of one sample after truncation to [-20, 60] dB; whiskers
/// reach the furthest points within 1.5 IQR of the box.
BoxStats box_stats(std::vector<double> values);

BinSnrStats bin_snr_stats(const Matrix& local);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population
};

MeanStd mean_std(const std::vector<double>& values);

MeanStd corpus_snr(const std::vector<std::pair<Matrix, Matrix>>& pairs);

}  // namespace emssl::metrics
