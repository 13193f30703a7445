#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "emssl/common.hpp"
#include "emssl/engine/forward_op.hpp"
#include "emssl/model/model.hpp"

namespace emssl::engine {

struct EmsslConfig {
  std::size_t samples_per_datapoint = 1;  // L
  std::size_t iterations = 30;            // T
  std::size_t epochs = 10;                // E
  std::size_t batch_size = 16;            // M
  double drop_rate = 0.33;                // gamma
  double posterior_std = 0.0;             // sigma
  double loss_weight = 0.001;             // lambda
  double learning_rate = 5e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  std::uint64_t seed = 0;
  std::size_t workers = 1;
  bool log_wall_time = false;

  void validate() const;
  std::string to_text() const;
  model::AdamConfig adam() const { return {learning_rate, beta1, beta2, 1e-8}; }
};

struct Observation {
  std::string id;
  Matrix x;
};

struct Dataset {
  std::vector<Observation> train;
  std::vector<Observation> validation;
  std::vector<Observation> test;
};

struct PairedSample {
  model::Latent z;
  Matrix x;
  std::size_t iteration = 0;
  std::string source_id;
};

using TrainingSet = std::vector<PairedSample>;

/// Mean = forward(m, x); each of the L samples adds N(0, sigma^2) per entry
/// and clamps to [-1 + 1e-9, 1 - 1e-9]. sigma = 0, L = 1 returns the mean.
std::vector<model::Latent> sample_posterior(const model::RegressorModel& m, const Matrix& x, double sigma,
                                            std::size_t count, std::uint64_t seed);

struct PairRequest {
  const model::Latent* z = nullptr;
  std::string source_id;
  std::size_t frames = 0;
  std::uint64_t seed = 0;
};

/// Evaluates F for every request, in order, dropping failures with a
/// warning. `workers` threads share the work; the output order does not
/// depend on it.
TrainingSet generate_pairs(const ForwardOperator& f, const std::vector<PairRequest>& requests, std::size_t iteration,
                           std::size_t workers = 1);

/// Removes exactly round(gamma * |phi|) uniformly chosen samples, then
/// appends `fresh`.
TrainingSet update_training_set(TrainingSet phi, TrainingSet fresh, double gamma, std::uint64_t seed);

/// E epochs of shuffled minibatch Adam. Returns the mean total loss of each
/// epoch.
std::vector<double> train_iteration(model::RegressorModel& m, const TrainingSet& phi, const EmsslConfig& cfg,
                                    std::uint64_t seed);

/// Noise seed used whenever a clip is resynthesized for evaluation. It
/// depends only on the clip id, so evaluation outside a run matches the log.
std::uint64_t evaluation_seed(const std::string& clip_id);

/// Log-mel of F applied to the model's deterministic output for one clip,
/// using the clip's evaluation seed. nullopt if synthesis failed.
std::optional<Matrix> resynthesize(const model::RegressorModel& m, const ForwardOperator& f, const Observation& clip);

/// Sentence SNR of each clip against its resynthesis from the model's
/// deterministic output. Failed syntheses score the -120 dB cap.
std::vector<double> evaluate_clips(const model::RegressorModel& m, const ForwardOperator& f,
                                   const std::vector<Observation>& clips, std::size_t workers = 1);

struct LogRow {
  std::size_t iteration = 0;  // 1-based
  std::string split;
  double mean_snr = 0.0;
  double std_snr = 0.0;
  double mean_loss = 0.0;
  double wall_time_s = 0.0;
};

std::string log_header();
std::string format_log_row(const LogRow& r);

struct Callbacks {
  /// Called with each log row as soon as it is final.
  std::function<void(const LogRow&)> on_log_row;
  /// Called after training in iteration t (1-based).
  std::function<void(std::size_t, const model::RegressorModel&)> on_iteration_end;
};

struct RunResult {
  std::vector<LogRow> log;
  TrainingSet phi;
};

/// Alternates sampling and training for cfg.iterations rounds. Each
/// iteration evaluates the train and validation splits before training and
/// logs one row per nonempty split; the test split, if any, is evaluated once
/// after the last iteration. Pairs are generated from the train split only.
RunResult run_emssl(const Dataset& data, const ForwardOperator& f, model::RegressorModel& m, const EmsslConfig& cfg,
                    const Callbacks& callbacks = {});

/// The same loop started from trained weights and an empty training set.
RunResult adapt(const Dataset& data, const ForwardOperator& f, model::RegressorModel& m, const EmsslConfig& cfg,
                const Callbacks& callbacks = {});

}  // namespace emssl::engine
