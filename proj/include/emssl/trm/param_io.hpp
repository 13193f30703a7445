#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include "emssl/trm/params.hpp"

namespace emssl::trm {

/// Contents of an utterance parameter file: the 26 fields plus the optional
/// noise seed used to render the matching audio.
struct UtteranceFile {
  UtteranceParams params;
  std::optional<std::uint64_t> noise_seed;
};

/// Text file, one `name = value` line per field, `#` comments allowed. Every
/// field must be present exactly once. Errors carry file:line:column.
UtteranceFile read_utterance_file(const std::filesystem::path& path);
void write_utterance_file(const std::filesystem::path& path, const UtteranceParams& u,
                          std::optional<std::uint64_t> noise_seed = std::nullopt);

/// CSV with a header row naming the 16 control fields and one row per frame.
ControlTrack read_control_csv(const std::filesystem::path& path, double frame_rate_hz);
void write_control_csv(const std::filesystem::path& path, const ControlTrack& track);

}  // namespace emssl::trm
