#include "emssl/features/mel.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>

namespace emssl::features {

namespace {

// FFTW plans are created once; executing a plan on fresh buffers is
// thread-safe when the plan was made with FFTW_UNALIGNED.
class RealFft {
 public:
  RealFft() {
    double* in = fftw_alloc_real(kFftSize);
    fftw_complex* out = fftw_alloc_complex(kFftBins);
    plan_ = fftw_plan_dft_r2c_1d(static_cast<int>(kFftSize), in, out, FFTW_ESTIMATE | FFTW_UNALIGNED);
    fftw_free(in);
    fftw_free(out);
  }
  ~RealFft() { fftw_destroy_plan(plan_); }
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  void execute(double* in, fftw_complex* out) const { fftw_execute_dft_r2c(plan_, in, out); }

 private:
  fftw_plan plan_;
};

const RealFft& real_fft() {
  static const RealFft fft;
  return fft;
}

const std::vector<double>& hann_window() {
  static const std::vector<double> w = [] {
    std::vector<double> v(kFrameLength);
    for (std::size_t i = 0; i < kFrameLength; ++i) {
      v[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / kFrameLength);
    }
    return v;
  }();
  return w;
}

// Mirror index into [0, n) without repeating the edge sample.
std::size_t reflect_index(long long i, std::size_t n) {
  if (n == 1) return 0;
  const long long period = 2 * (static_cast<long long>(n) - 1);
  long long m = i % period;
  if (m < 0) m += period;
  if (m >= static_cast<long long>(n)) m = period - m;
  return static_cast<std::size_t>(m);
}

}  // namespace

std::size_t frame_count(std::size_t samples) { return (samples + kHop - 1) / kHop; }

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

double mel_center_hz(std::size_t j) {
  const double step = hz_to_mel(kMelMaxHz) / static_cast<double>(kMelBins + 1);
  return mel_to_hz(step * static_cast<double>(j + 1));
}

Matrix stft_magnitude(const Waveform& w) {
  if (w.samples.empty()) throw ValidationError("stft_magnitude: empty waveform");
  if (w.sample_rate != kFeatureRate) throw ValidationError("stft_magnitude: waveform must be sampled at 16 kHz");
  const std::size_t n = w.samples.size();
  const std::size_t frames = frame_count(n);
  const auto pad = static_cast<long long>(kFrameLength / 2);
  const auto& window = hann_window();

  Matrix mag(frames, kFftBins);
  std::vector<double> buf(kFftSize);
  std::vector<fftw_complex> spec(kFftBins);
  for (std::size_t f = 0; f < frames; ++f) {
    const long long start = static_cast<long long>(f * kHop) - pad;
    std::fill(buf.begin(), buf.end(), 0.0);
    for (std::size_t i = 0; i < kFrameLength; ++i) {
      buf[i] = window[i] * w.samples[reflect_index(start + static_cast<long long>(i), n)];
    }
    real_fft().execute(buf.data(), spec.data());
    auto row = mag.row(f);
    for (std::size_t k = 0; k < kFftBins; ++k) row[k] = std::hypot(spec[k][0], spec[k][1]);
  }
  return mag;
}

const Matrix& mel_filterbank() {
  static const Matrix fb = [] {
    Matrix m(kMelBins, kFftBins);
    const double mel_step = hz_to_mel(kMelMaxHz) / static_cast<double>(kMelBins + 1);
    for (std::size_t j = 0; j < kMelBins; ++j) {
      const double lo = mel_to_hz(mel_step * static_cast<double>(j));
      const double mid = mel_to_hz(mel_step * static_cast<double>(j + 1));
      const double hi = mel_to_hz(mel_step * static_cast<double>(j + 2));
      double peak = 0.0;
      for (std::size_t k = 0; k < kFftBins; ++k) {
        const double f = static_cast<double>(k) * kFeatureRate / static_cast<double>(kFftSize);
        double v = 0.0;
        if (f > lo && f <= mid) v = (f - lo) / (mid - lo);
        else if (f > mid && f < hi) v = (hi - f) / (hi - mid);
        m(j, k) = v;
        peak = std::max(peak, v);
      }
      if (peak > 0.0) {
        for (std::size_t k = 0; k < kFftBins; ++k) m(j, k) /= peak;
      }
    }
    return m;
  }();
  return fb;
}

Matrix log_mel(const Waveform& w) {
  const Matrix mag = stft_magnitude(w);
  const Matrix& fb = mel_filterbank();
  Matrix out(mag.rows(), kMelBins);
  for (std::size_t f = 0; f < mag.rows(); ++f) {
    const auto spectrum = mag.row(f);
    for (std::size_t j = 0; j < kMelBins; ++j) {
      const auto weights = fb.row(j);
      double acc = 0.0;
      for (std::size_t k = 0; k < kFftBins; ++k) acc += weights[k] * spectrum[k];
      out(f, j) = std::log(std::max(acc, kLogFloor));
    }
  }
  return out;
}

}  // namespace emssl::features
