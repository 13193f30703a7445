#include "emssl/features/resample.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "emssl/common.hpp"

namespace emssl::features {

namespace {

constexpr int kZeroCrossings = 16;
constexpr int kTableOversample = 512;
constexpr double kRolloff = 0.95;

// sinc(u) * blackman(u / kZeroCrossings) sampled on u in [0, kZeroCrossings].
const std::vector<double>& kernel_table() {
  static const std::vector<double> table = [] {
    std::vector<double> t(kZeroCrossings * kTableOversample + 2, 0.0);
    for (std::size_t i = 0; i < t.size(); ++i) {
      const double u = static_cast<double>(i) / kTableOversample;
      if (u >= kZeroCrossings) continue;
      const double x = u / kZeroCrossings;
      const double window = 0.42 + 0.5 * std::cos(std::numbers::pi * x) + 0.08 * std::cos(2.0 * std::numbers::pi * x);
      const double sinc = u == 0.0 ? 1.0 : std::sin(std::numbers::pi * u) / (std::numbers::pi * u);
      t[i] = sinc * window;
    }
    return t;
  }();
  return table;
}

double kernel(double u) {
  u = std::abs(u);
  if (u >= kZeroCrossings) return 0.0;
  const auto& t = kernel_table();
  const double pos = u * kTableOversample;
  const auto i = static_cast<std::size_t>(pos);
  const double frac = pos - static_cast<double>(i);
  return t[i] + frac * (t[i + 1] - t[i]);
}

}  // namespace

std::vector<double> resample(std::span<const double> x, double source_rate, double target_rate) {
  if (!(source_rate > 0.0) || !(target_rate > 0.0)) throw ValidationError("resample: rates must be positive");
  if (x.empty()) throw ValidationError("resample: empty input");
  if (source_rate == target_rate) return {x.begin(), x.end()};

  const double step = source_rate / target_rate;  // input samples per output sample
  const double scale = std::min(1.0, target_rate / source_rate) * kRolloff;
  const double half_width = kZeroCrossings / scale;
  const auto n_out = static_cast<std::size_t>(std::llround(static_cast<double>(x.size()) / step));
  const auto last = static_cast<long long>(x.size()) - 1;

  std::vector<double> y(n_out, 0.0);
  for (std::size_t n = 0; n < n_out; ++n) {
    const double t = static_cast<double>(n) * step;
    const auto k0 = static_cast<long long>(std::ceil(t - half_width));
    const auto k1 = static_cast<long long>(std::floor(t + half_width));
    double acc = 0.0;
    double weight_sum = 0.0;
    for (long long k = k0; k <= k1; ++k) {
      const double w = kernel(scale * (t - static_cast<double>(k)));
      acc += w * x[static_cast<std::size_t>(std::clamp(k, 0LL, last))];
      weight_sum += w;
    }
    y[n] = acc / weight_sum;
  }
  return y;
}

Waveform resample(const Waveform& w, double target_rate) {
  Waveform out;
  out.sample_rate = target_rate;
  out.samples = resample(w.samples, w.sample_rate, target_rate);
  return out;
}

}  // namespace emssl::features
