#pragma once

#include "emssl/audio/waveform.hpp"
#include "emssl/common.hpp"

namespace emssl::features {

inline constexpr double kFeatureRate = 16000.0;
inline constexpr std::size_t kFrameLength = 800;  // 50 ms
inline constexpr std::size_t kHop = 200;          // 12.5 ms
inline constexpr std::size_t kFftSize = 1024;
inline constexpr std::size_t kFftBins = kFftSize / 2 + 1;
inline constexpr std::size_t kMelBins = 80;
inline constexpr double kMelMaxHz = 8000.0;
inline constexpr double kLogFloor = 1e-5;
/// Observation frames per second.
inline constexpr double kFrameRate = kFeatureRate / static_cast<double>(kHop);

/// ceil(samples / hop): the number of frames produced for a signal length.
std::size_t frame_count(std::size_t samples);

double hz_to_mel(double hz);
double mel_to_hz(double mel);

/// N x 513 STFT magnitudes: periodic Hann window of 800 samples, reflection
/// padding of 400 samples per side, 1024-point FFT, hop 200.
Matrix stft_magnitude(const Waveform& w);

/// 80 x 513 triangular filters, peak-normalized, with centres equally spaced
/// on the mel scale between 0 Hz and 8 kHz. Computed once and shared.
const Matrix& mel_filterbank();

/// Centre frequency (Hz) of mel filter `j`.
double mel_center_hz(std::size_t j);

/// N x 80 natural-log mel magnitudes, floored at 1e-5.
Matrix log_mel(const Waveform& w);

}  // namespace emssl::features
