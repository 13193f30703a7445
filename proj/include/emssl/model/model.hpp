#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "emssl/common.hpp"

namespace emssl::model {

/// Architecture description. "desk" and "paper" are the convolutional
/// recurrent regressor at two widths; "linear" is a single affine map from
/// the flattened observation to the utterance outputs, used for analytic
/// problems where the observation is one fixed-size frame.
struct ModelConfig {
  std::string preset = "desk";
  std::vector<std::size_t> channels;  // conv widths c0..c3
  std::size_t out_channels = 0;       // width of the final up-conv
  std::size_t hidden = 0;             // recurrent hidden size per direction
  std::size_t kernel = 3;
  std::size_t input_bins = 80;
  std::size_t control_dims = 16;
  std::size_t utterance_dims = 13;
  std::uint64_t seed = 0;

  /// Fully populated config for a named preset. Throws ValidationError on an
  /// unknown name.
  static ModelConfig from_preset(const std::string& name, std::uint64_t seed = 0);

  void validate() const;
  /// Canonical text form; also the input to the checkpoint config hash.
  std::string to_text() const;
  static ModelConfig from_text(const std::string& text);
  std::uint64_t hash() const;

  bool operator==(const ModelConfig&) const = default;
};

/// Normalized parameters in (-1, 1): a per-frame control track and a global
/// utterance vector.
struct Latent {
  Matrix control;
  std::vector<double> utterance;
};

struct ParamTensor {
  std::string name;
  std::vector<std::size_t> shape;
  std::size_t offset = 0;
  std::size_t size = 0;
};

struct AdamState {
  std::uint64_t step = 0;
  std::vector<float> m;
  std::vector<float> v;
};

class RegressorModel {
 public:
  explicit RegressorModel(const ModelConfig& cfg);

  const ModelConfig& config() const { return cfg_; }
  const std::vector<ParamTensor>& tensors() const { return tensors_; }
  std::size_t parameter_count() const { return values_.size(); }

  std::span<const float> values() const { return values_; }
  void set_values(std::span<const float> values);
  void set_value(std::size_t index, float value);

  AdamState& adam() { return adam_; }
  const AdamState& adam() const { return adam_; }

  /// Smallest number of frames the network accepts.
  std::size_t min_frames() const { return 1; }

  /// Control output has x.rows() rows. Throws ShapeError or NonFiniteError.
  Latent forward(const Matrix& x) const;
  /// Treats only the first `valid_frames` rows as signal; control rows past
  /// that point are zero, matching a masked padded batch.
  Latent forward(const Matrix& x, std::size_t valid_frames) const;

  /// Per-parameter gradient of `scale_control * sum((control - target)^2) +
  /// scale_utterance * sum((utterance - target)^2)`, accumulated into `grad`.
  /// Returns the two unscaled squared-error sums.
  std::pair<double, double> accumulate_gradient(const Matrix& x, const Latent& target, double scale_control,
                                                double scale_utterance, std::span<double> grad) const;

  const double* compute_values() const { return compute_.data(); }

 private:
  struct Trace;
  void check_input(const Matrix& x) const;
  void run(const Matrix& x, Trace& trace, Latent& out) const;
  void backprop(const Trace& trace, const Latent& out, const Matrix& d_control, std::span<const double> d_utterance,
                double* grad) const;
  std::size_t add_tensor(const std::string& name, std::vector<std::size_t> shape);
  std::size_t offset_of(const std::string& name) const;

  ModelConfig cfg_;
  std::vector<ParamTensor> tensors_;
  std::vector<float> values_;
  std::vector<double> compute_;  // values_ widened, refreshed on every change
  AdamState adam_;
};

struct LossBreakdown {
  double l_u = 0.0;
  double l_c = 0.0;
  double lambda = 0.0;
  double total = 0.0;
};

struct TrainingExample {
  const Matrix* x = nullptr;
  const Latent* z = nullptr;
};

/// L_c is the mean square error over all control entries of the batch, L_u
/// over batch x utterance dims. `grad` (resized to the parameter count) gets
/// the gradient of L_u + lambda * L_c. Per-sample contributions are summed in
/// batch order.
LossBreakdown loss_and_grad(const RegressorModel& m, std::span<const TrainingExample> batch, double lambda,
                            std::vector<double>* grad);

struct AdamConfig {
  double lr = 5e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected Adam. Throws NonFiniteError (leaving the model untouched)
/// if any gradient entry is not finite.
void adam_step(RegressorModel& m, std::span<const double> grad, const AdamConfig& cfg);

inline constexpr std::uint32_t kCheckpointVersion = 1;

void save_checkpoint(const RegressorModel& m, const std::filesystem::path& path);
/// Throws IoError on a missing, truncated or corrupt file or a version
/// mismatch. When `expected` is given the stored config hash must match it.
RegressorModel load_checkpoint(const std::filesystem::path& path, const ModelConfig* expected = nullptr);

}  // namespace emssl::model
