#include "emssl/audio/waveform.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "emssl/common.hpp"

namespace emssl {

void check_waveform(const Waveform& w) {
  for (std::size_t i = 0; i < w.samples.size(); ++i) {
    const double s = w.samples[i];
    if (!std::isfinite(s) || std::abs(s) > kClipGuard) {
      throw InstabilityError("waveform sample " + std::to_string(i) + " exceeds the clip guard");
    }
  }
}

double rms(const Waveform& w) {
  if (w.samples.empty()) return 0.0;
  double acc = 0.0;
  for (double s : w.samples) acc += s * s;
  return std::sqrt(acc / static_cast<double>(w.samples.size()));
}

double peak(const Waveform& w) {
  double p = 0.0;
  for (double s : w.samples) p = std::max(p, std::abs(s));
  return p;
}

}  // namespace emssl
