#pragma once

#include <filesystem>

#include "emssl/audio/waveform.hpp"

namespace emssl {

/// Reads a RIFF/WAVE file (integer PCM of 8-32 bits or IEEE float). Multiple
/// channels are averaged to mono. Throws IoError on malformed input.
Waveform read_wav(const std::filesystem::path& path);

/// Writes 16-bit little-endian PCM mono, clipping to [-1, 1].
void write_wav(const std::filesystem::path& path, const Waveform& w);

}  // namespace emssl
