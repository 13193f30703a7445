#pragma once

#include <vector>

namespace emssl {

/// Mono audio at a fixed sample rate, nominally within [-1, 1].
struct Waveform {
  double sample_rate = 16000.0;
  std::vector<double> samples;

  double duration_s() const { return static_cast<double>(samples.size()) / sample_rate; }
};

/// Synthesis output is rejected once any sample reaches this magnitude.
inline constexpr double kClipGuard = 4.0;

/// Throws InstabilityError on a non-finite sample or one beyond the clip guard.
void check_waveform(const Waveform& w);

double rms(const Waveform& w);
double peak(const Waveform& w);

}  // namespace emssl
