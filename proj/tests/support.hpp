#pragma once

#include <cmath>
#include <complex>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include "emssl/audio/waveform.hpp"
#include "emssl/trm/params.hpp"
#include "emssl/trm/synth.hpp"

namespace emssl::test {

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("emssl_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

/// Single DFT coefficient of x at frequency f (Hz), normalized so a unit
/// sinusoid spanning whole periods gives magnitude 1.
inline double dft_amplitude(const std::vector<double>& x, double f, double rate) {
  std::complex<double> acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    acc += x[i] * std::polar(1.0, -2.0 * std::numbers::pi * f * static_cast<double>(i) / rate);
  }
  return 2.0 * std::abs(acc) / static_cast<double>(x.size());
}

/// Voiced, noise-free, equal-radius tract at constant 100 Hz pitch.
inline trm::ControlTrack uniform_tube_track(double seconds, double pitch_hz = 100.0) {
  trm::ControlFrame f{};
  f[trm::kPitch] = 12.0 * std::log2(pitch_hz / trm::kReferencePitchHz);
  f[trm::kGlottalVolume] = 60.0;
  f[trm::kFricativeCenter] = 2000.0;
  f[trm::kFricativeBandwidth] = 1000.0;
  for (std::size_t i = 0; i < trm::kOralSections; ++i) f[trm::kRadius1 + i] = 1.0;
  trm::ControlTrack t;
  t.frame_rate_hz = 250.0;
  t.frames.assign(static_cast<std::size_t>(seconds * 250.0) + 1, f);
  return t;
}

inline trm::UtteranceParams uniform_tube_utterance(double length_cm) {
  trm::UtteranceParams u;
  u.breathiness = 0.0;
  u.tract_length_cm = length_cm;
  return u;
}

/// Frequencies of interior local maxima of the harmonic amplitude envelope
/// (harmonics of f0 up to fmax), measured over the second half of `w` so the
/// onset transient is excluded.
inline std::vector<double> harmonic_envelope_peaks(const Waveform& w, double f0, double fmax) {
  const std::vector<double> tail(w.samples.begin() + static_cast<std::ptrdiff_t>(w.samples.size() / 2),
                                 w.samples.end());
  std::vector<double> amp;
  for (double f = f0; f <= fmax + 1e-9; f += f0) amp.push_back(dft_amplitude(tail, f, w.sample_rate));
  std::vector<double> peaks;
  for (std::size_t h = 1; h + 1 < amp.size(); ++h) {
    if (amp[h] > amp[h - 1] && amp[h] >= amp[h + 1]) peaks.push_back(f0 * static_cast<double>(h + 1));
  }
  return peaks;
}

/// Closest entry of `peaks` to `target`, or a huge value if there are none.
inline double nearest(const std::vector<double>& peaks, double target) {
  double best = 1e300;
  for (double p : peaks) {
    if (std::abs(p - target) < std::abs(best - target)) best = p;
  }
  return best;
}

/// Quarter-wave resonances of a tube closed at one end.
inline double quarter_wave(double c_m_s, double length_cm, int k) {
  return c_m_s * (2.0 * k - 1.0) / (4.0 * length_cm / 100.0);
}

}  // namespace emssl::test
