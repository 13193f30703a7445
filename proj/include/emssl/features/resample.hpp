#pragma once

#include <span>
#include <vector>

#include "emssl/audio/waveform.hpp"

namespace emssl::features {

/// Band-limited windowed-sinc resampling to `target_rate`. Output length is
/// round(len * target / source). Samples beyond either end are treated as
/// repeats of the edge sample, so constant signals pass through unchanged.
Waveform resample(const Waveform& w, double target_rate);

std::vector<double> resample(std::span<const double> samples, double source_rate, double target_rate);

}  // namespace emssl::features
