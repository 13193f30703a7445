#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "emssl/features/mel.hpp"
#include "emssl/features/resample.hpp"
#include "support.hpp"

using namespace emssl;
using namespace emssl::features;

namespace {

Waveform sine(double freq, double rate, std::size_t n, double amp = 1.0) {
  Waveform w;
  w.sample_rate = rate;
  w.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) w.samples[i] = amp * std::sin(2.0 * std::numbers::pi * freq * i / rate);
  return w;
}

std::size_t argmax(std::span<const double> v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

}  // namespace

TEST_SUITE("features") {
  TEST_CASE("resampling at the same rate is the identity") {
    Rng rng(1);
    std::normal_distribution<double> nd;
    Waveform w;
    w.samples.resize(1234);
    for (double& s : w.samples) s = nd(rng);
    const auto out = resample(w, w.sample_rate);
    CHECK(out.samples == w.samples);
  }

  TEST_CASE("resampled sine keeps its frequency") {
    const auto out = resample(sine(1000.0, 32000.0, 16384), 16000.0);
    REQUIRE(out.samples.size() >= 4096);
    // naive 4096-point DFT magnitude
    std::vector<double> seg(out.samples.begin() + 1000, out.samples.begin() + 1000 + 4096);
    std::size_t best = 0;
    double best_mag = -1.0;
    for (std::size_t k = 1; k < 2048; ++k) {
      const double mag = test::dft_amplitude(seg, k * 16000.0 / 4096.0, 16000.0);
      if (mag > best_mag) {
        best_mag = mag;
        best = k;
      }
    }
    CHECK(std::abs(static_cast<double>(best) - 256.0) <= 1.0);
  }

  TEST_CASE("resampling preserves DC and duration") {
    Waveform w;
    w.sample_rate = 8000.0;
    w.samples.assign(8000, 0.5);
    const auto out = resample(w, 16000.0);
    CHECK(std::abs(static_cast<double>(out.samples.size()) - 16000.0) <= 1.0);
    for (double s : out.samples) REQUIRE(std::abs(s - 0.5) < 1e-3);
    CHECK_THROWS(resample(Waveform{}, 8000.0));
  }

  TEST_CASE("stft shapes and zero input") {
    Waveform w;
    w.samples.assign(3200, 0.0);
    const auto m = stft_magnitude(w);
    CHECK(m.rows() == 16);
    CHECK(m.cols() == kFftBins);
    for (double v : m.data()) CHECK(v == 0.0);
    CHECK_THROWS(stft_magnitude(Waveform{}));
  }

  TEST_CASE("stft of a 1 kHz sine peaks at bin 64") {
    const auto m = stft_magnitude(sine(1000.0, 16000.0, 8000));
    // edge frames see the reflected padding
    for (std::size_t r = 1; r + 1 < m.rows(); ++r) {
      INFO("frame " << r);
      CHECK(argmax(m.row(r)) == 64);
    }
  }

  TEST_CASE("mel filterbank structure") {
    const auto& fb = mel_filterbank();
    REQUIRE(fb.rows() == kMelBins);
    REQUIRE(fb.cols() == kFftBins);
    for (std::size_t j = 0; j < kMelBins; ++j) {
      const auto row = fb.row(j);
      CHECK(*std::max_element(row.begin(), row.end()) == doctest::Approx(1.0).epsilon(1e-12));
      const std::size_t top = argmax(row);
      for (std::size_t k = 0; k < row.size(); ++k) {
        REQUIRE(row[k] >= 0.0);
        if (k < top) REQUIRE(row[k] <= row[k + 1]);
        if (k > top) REQUIRE(row[k] <= row[k - 1]);
      }
      if (j > 0) CHECK(mel_center_hz(j) > mel_center_hz(j - 1));
    }
    for (std::size_t k = 0; k < kFftBins; ++k) {
      int touched = 0;
      for (std::size_t j = 0; j < kMelBins; ++j) touched += fb(j, k) > 0.0;
      REQUIRE(touched <= 2);
    }
    CHECK(hz_to_mel(700.0) == doctest::Approx(2595.0 * std::log10(2.0)));
    CHECK(mel_to_hz(hz_to_mel(1234.5)) == doctest::Approx(1234.5));
  }

  TEST_CASE("a tone at a filter centre lights up that bin") {
    for (std::size_t j = 4; j < kMelBins - 1; j += 5) {
      const auto x = log_mel(sine(mel_center_hz(j), 16000.0, 4000));
      const std::size_t r = x.rows() / 2;
      const auto best = argmax(x.row(r));
      INFO("bin " << j);
      CHECK(std::abs(static_cast<double>(best) - static_cast<double>(j)) <= 1.0);
    }
  }

  TEST_CASE("log mel floor, shape and log linearity") {
    Waveform z;
    z.samples.assign(16000, 0.0);
    const auto x0 = log_mel(z);
    CHECK(x0.rows() == 80);
    CHECK(x0.cols() == 80);
    for (double v : x0.data()) CHECK(v == doctest::Approx(std::log(kLogFloor)));

    auto w = sine(440.0, 16000.0, 16000, 0.01);
    Rng rng(2);
    std::normal_distribution<double> nd(0.0, 0.001);
    for (double& s : w.samples) s += nd(rng);
    auto w10 = w;
    for (double& s : w10.samples) s *= 10.0;
    const auto a = log_mel(w), b = log_mel(w10);
    const double floor = std::log(kLogFloor);
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a.data()[i] > floor + 1e-9) REQUIRE(b.data()[i] - a.data()[i] == doctest::Approx(std::log(10.0)));
    }
    auto w2 = w;
    for (double& s : w2.samples) s *= 1.7;
    const auto c = log_mel(w2);
    for (std::size_t i = 0; i < a.size(); ++i) REQUIRE(c.data()[i] >= a.data()[i]);
    CHECK(log_mel(w) == a);
  }

  TEST_CASE("frame count law") {
    Rng rng(8);
    std::uniform_int_distribution<std::size_t> len(1, 20000);
    for (int i = 0; i < 40; ++i) {
      Waveform w;
      w.samples.assign(len(rng), 0.1);
      CHECK(log_mel(w).rows() == (w.samples.size() + kHop - 1) / kHop);
      CHECK(frame_count(w.samples.size()) == (w.samples.size() + kHop - 1) / kHop);
    }
  }
}
