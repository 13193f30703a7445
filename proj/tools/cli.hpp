#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "emssl/engine/engine.hpp"
#include "emssl/model/model.hpp"

namespace emssl::cli {

enum ExitCode : int { kOk = 0, kValidation = 1, kRuntime = 2 };

/// Everything an experiment needs, parsed from an INI file.
struct RunConfig {
  std::string text;  // verbatim file contents, echoed into the manifest
  engine::EmsslConfig emssl;
  model::ModelConfig model = model::ModelConfig::from_preset("desk");

  std::string source = "self_inversion";  // self_inversion | directory | toy
  std::filesystem::path directory;
  std::array<double, 3> split_ratios{0.8, 0.1, 0.1};
  std::uint64_t split_seed = 0;
  bool split_specified = false;

  // self_inversion
  std::size_t count = 200;
  double min_duration_s = 0.5;
  double max_duration_s = 1.0;
  double tract_length_cm = 17.5;
  double tract_length_jitter_cm = 1.0;
  double nasal_scale = 1.0;
  std::uint64_t corpus_seed = 0;

  // toy
  std::size_t toy_dz = 4;
  std::size_t toy_dx = 8;
  std::size_t toy_n = 500;
  double toy_noise_std = 0.01;
};

/// Throws ValidationError with the offending key on any problem.
RunConfig parse_config(const std::filesystem::path& path);

/// Entry point shared by the executable and the tests.
int run(int argc, const char* const* argv);

}  // namespace emssl::cli
