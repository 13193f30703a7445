#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "emssl/audio/waveform.hpp"
#include "emssl/common.hpp"
#include "emssl/engine/engine.hpp"
#include "emssl/trm/params.hpp"

namespace emssl::corpus {

enum class Split { kUnassigned, kTrain, kValidation, kTest };

std::string_view split_name(Split s);

/// Parameters a synthetic clip was rendered from.
struct GroundTruth {
  trm::UtteranceParams utterance;
  std::vector<trm::ControlFrame> frames;  // physical units, one per observation frame
  model::Latent z;                        // the same, normalized
  std::uint64_t noise_seed = 0;
};

struct Clip {
  std::string id;
  std::filesystem::path path;  // empty for in-memory clips
  std::optional<Waveform> audio;
  Matrix mel;
  std::optional<GroundTruth> truth;
  Split split = Split::kUnassigned;

  double duration_s() const;
};

struct Corpus {
  std::vector<Clip> clips;

  std::vector<const Clip*> in_split(Split s) const;
};

struct LoadReport {
  std::vector<std::pair<std::filesystem::path, std::string>> skipped;
};

inline constexpr double kLoadPeak = 0.95;

/// One WAV file as a clip: resampled to 16 kHz, scaled to a peak of 0.95
/// (silence is left as is), id = file stem. Throws IoError.
Clip load_clip(const std::filesystem::path& path);

/// Every *.wav under `dir` (recursive, sorted by path), resampled to 16 kHz
/// and scaled to a peak of 0.95. Unreadable files are skipped and listed in
/// `report`; duplicate stems and an empty result throw.
Corpus load_wav_corpus(const std::filesystem::path& dir, LoadReport* report = nullptr);

/// Seeded shuffle, then contiguous train/validation/test blocks whose sizes
/// follow largest-remainder rounding of the ratios.
void split(Corpus& corpus, const std::array<double, 3>& ratios, std::uint64_t seed);

/// Clip counts the split would produce for `n` clips.
std::array<std::size_t, 3> split_counts(std::size_t n, const std::array<double, 3>& ratios);

engine::Dataset to_dataset(const Corpus& corpus);

/// Unit-variance noise low-passed by a 4th-order Butterworth filter.
std::vector<double> smooth_noise(std::size_t n, double rate_hz, double cutoff_hz, Rng& rng);

struct SelfInversionSpec {
  std::size_t count = 200;
  double min_duration_s = 0.5;
  double max_duration_s = 1.0;
  trm::UtteranceParams base;  // fixed block and the centre of the jitter
  double tract_length_cm = 17.5;
  double tract_length_jitter_cm = 1.0;
  double nasal_scale = 1.0;  // multiplies base.nasal_radius_cm
  std::string id_prefix = "syn";
  std::uint64_t seed = 0;
};

/// Smooth random articulation rendered through the synthesizer. Ground truth
/// lives on the observation frame grid. Unstable draws are regenerated from
/// the next seed (bounded retries).
Corpus make_self_inversion_corpus(const SelfInversionSpec& spec);

/// x = A z* + e with A well conditioned (condition number < 100).
struct ToyLinearProblem {
  Matrix a;  // d_x x d_z
  double noise_std = 0.0;
  std::vector<std::vector<double>> z_star;
  std::vector<std::vector<double>> x;

  std::size_t dz() const { return a.cols(); }
  std::size_t dx() const { return a.rows(); }
  engine::Dataset dataset() const;
};

/// Latent for the toy problem: the utterance vector carries z, the control
/// track has one row and no columns.
model::Latent toy_latent(std::vector<double> z);

class LinearForwardOperator : public engine::ForwardOperator {
 public:
  LinearForwardOperator(Matrix a, double noise_std) : a_(std::move(a)), noise_std_(noise_std) {}
  std::optional<Matrix> evaluate(const model::Latent& z, std::size_t frames, std::uint64_t seed) const override;

 private:
  Matrix a_;
  double noise_std_;
};

std::uint64_t toy_noise_seed(std::uint64_t seed, std::size_t index);

ToyLinearProblem make_toy_linear_problem(std::size_t dz, std::size_t dx, std::size_t n, double noise_std,
                                         std::uint64_t seed);

/// Mean over samples and dims of (x - A R(x))^2.
double reconstruction_mse(const ToyLinearProblem& p, const model::RegressorModel& m);

/// CSV (id, path, split, duration_s).
void write_manifest(const std::filesystem::path& path, const Corpus& corpus);

}  // namespace emssl::corpus
