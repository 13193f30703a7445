#include "emssl/engine/forward_op.hpp"

#include "emssl/features/mel.hpp"
#include "emssl/trm/synth.hpp"

namespace emssl::engine {

PhysicalParams to_physical(const model::Latent& z, const trm::UtteranceParams& base,
                           const trm::ParameterRanges& ranges) {
  if (z.utterance.size() != trm::kTrainableUtteranceCount || z.control.cols() != trm::kControlDims) {
    throw ShapeError("latent does not have 13 utterance and 16 control dims");
  }
  if (z.control.rows() == 0) throw ShapeError("latent control track is empty");
  PhysicalParams p;
  p.utterance = base;
  std::array<double, trm::kTrainableUtteranceCount> u{};
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = ranges.utterance_to_physical(i, z.utterance[i]);
  p.utterance.set_trainable(u);

  trm::ControlTrack frame_track;
  frame_track.frame_rate_hz = features::kFrameRate;
  frame_track.frames.resize(z.control.rows() + 1);
  for (std::size_t t = 0; t < z.control.rows(); ++t) {
    for (std::size_t d = 0; d < trm::kControlDims; ++d) {
      frame_track.frames[t][d] = ranges.control_to_physical(d, z.control(t, d));
    }
  }
  frame_track.frames.back() = frame_track.frames[z.control.rows() - 1];
  p.track = trm::interpolate_control(frame_track, base.control_rate_hz);
  return p;
}

model::Latent to_normalized(const trm::UtteranceParams& u, const std::vector<trm::ControlFrame>& frames,
                            const trm::ParameterRanges& ranges) {
  model::Latent z;
  const auto t = u.trainable();
  z.utterance.resize(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) z.utterance[i] = ranges.utterance_to_normalized(i, t[i]);
  z.control = Matrix(frames.size(), trm::kControlDims);
  for (std::size_t r = 0; r < frames.size(); ++r) {
    for (std::size_t d = 0; d < trm::kControlDims; ++d) z.control(r, d) = ranges.control_to_normalized(d, frames[r][d]);
  }
  return z;
}

Waveform TrmForwardOperator::render(const model::Latent& z, std::uint64_t seed) const {
  const auto p = to_physical(z, base_);
  return trm::synthesize(p.utterance, p.track, seed);
}

Matrix TrmForwardOperator::features(const Waveform& w, std::size_t frames) {
  Matrix x = features::log_mel(w);
  x.resize_rows(frames);
  return x;
}

std::optional<Matrix> TrmForwardOperator::evaluate(const model::Latent& z, std::size_t frames,
                                                   std::uint64_t seed) const {
  if (z.control.rows() != frames) throw ShapeError("latent frame count differs from the requested frame count");
  try {
    return features(render(z, seed), frames);
  } catch (const InstabilityError&) {
    return std::nullopt;
  }
}

}  // namespace emssl::engine
