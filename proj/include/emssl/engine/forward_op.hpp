#pragma once

#include <cstdint>
#include <optional>
#include <utility>

#include "emssl/audio/waveform.hpp"
#include "emssl/common.hpp"
#include "emssl/model/model.hpp"
#include "emssl/trm/params.hpp"

namespace emssl::engine {

/// The generation process as the loop sees it: evaluation only. A failed
/// evaluation (unstable synthesis) returns nullopt.
class ForwardOperator {
 public:
  virtual ~ForwardOperator() = default;
  virtual std::optional<Matrix> evaluate(const model::Latent& z, std::size_t frames, std::uint64_t seed) const = 0;
};

/// Normalized latent -> physical synthesizer inputs. The control rows sit on
/// the observation frame grid; one extra frame repeating the last row is
/// appended so the rendered audio spans exactly `rows / frame_rate` seconds,
/// and the track is then interpolated to the synthesizer control rate.
struct PhysicalParams {
  trm::UtteranceParams utterance;
  trm::ControlTrack track;
};

PhysicalParams to_physical(const model::Latent& z, const trm::UtteranceParams& base,
                           const trm::ParameterRanges& ranges = trm::ParameterRanges::standard());

/// Inverse of the utterance and per-frame maps (no interpolation).
model::Latent to_normalized(const trm::UtteranceParams& u, const std::vector<trm::ControlFrame>& frames,
                            const trm::ParameterRanges& ranges = trm::ParameterRanges::standard());

/// Synthesizer plus log-mel front end. `base` supplies the fixed block of the
/// utterance parameters.
class TrmForwardOperator : public ForwardOperator {
 public:
  explicit TrmForwardOperator(trm::UtteranceParams base = {}) : base_(base) {}

  std::optional<Matrix> evaluate(const model::Latent& z, std::size_t frames, std::uint64_t seed) const override;

  /// Audio for `z` (throws on instability).
  Waveform render(const model::Latent& z, std::uint64_t seed) const;
  /// Log-mel of `w`, trimmed or padded (repeating the last frame) to `frames`.
  static Matrix features(const Waveform& w, std::size_t frames);

  const trm::UtteranceParams& base() const { return base_; }

 private:
  trm::UtteranceParams base_;
};

}  // namespace emssl::engine
