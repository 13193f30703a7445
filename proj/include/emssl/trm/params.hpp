#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "emssl/common.hpp"

namespace emssl::trm {

inline constexpr std::size_t kUtteranceFieldCount = 26;
inline constexpr std::size_t kTrainableUtteranceCount = 13;
inline constexpr std::size_t kControlDims = 16;
inline constexpr std::size_t kOralSections = 8;
inline constexpr std::size_t kNasalSections = 5;

/// Global (per-utterance) synthesizer settings. The first thirteen members
/// are learned by the inference model; the rest are fixed audio
/// configuration and radiation/loss constants.
struct UtteranceParams {
  // trainable
  double master_volume_db = 60.0;
  double glottal_tp = 0.40;       // rise time, fraction of period
  double glottal_tn_min = 0.16;   // fall time at zero amplitude
  double glottal_tn_max = 0.32;   // fall time at full amplitude
  double breathiness = 1.5;       // percent
  double tract_length_cm = 17.5;
  std::array<double, kNasalSections> nasal_radius_cm{1.35, 1.96, 1.91, 1.30, 0.73};
  double throat_volume_db = 6.0;
  double noise_crossmix_offset_db = 48.0;

  // fixed
  double output_rate_hz = 16000.0;
  double control_rate_hz = 250.0;
  double channels = 1.0;
  double balance = 0.0;
  double waveform_type = 0.0;  // 0 pulse, 1 sine
  double temperature_c = 32.0;
  double loss_factor_pct = 0.8;
  double aperture_radius_cm = 3.05;
  double mouth_coef_hz = 5000.0;
  double nose_coef_hz = 5000.0;
  double throat_cutoff_hz = 1500.0;
  double modulation = 1.0;
  double mix_reference_db = 60.0;

  /// All 26 values in canonical order (trainable block first).
  std::array<double, kUtteranceFieldCount> to_array() const;
  static UtteranceParams from_array(std::span<const double, kUtteranceFieldCount> values);

  std::array<double, kTrainableUtteranceCount> trainable() const;
  void set_trainable(std::span<const double, kTrainableUtteranceCount> values);

  /// The fixed block, for equality checks across training steps.
  std::array<double, kUtteranceFieldCount - kTrainableUtteranceCount> fixed() const;

  double sound_speed_m_s() const { return 331.4 + 0.6 * temperature_c; }

  bool operator==(const UtteranceParams&) const = default;
};

/// Field names as used in parameter files, canonical order.
std::span<const std::string_view, kUtteranceFieldCount> utterance_field_names();

/// Throws ValidationError describing the first violated invariant.
void validate(const UtteranceParams& u);

enum ControlIndex : std::size_t {
  kPitch = 0,          // semitones relative to middle C
  kGlottalVolume = 1,  // dB
  kAspirationVolume = 2,
  kFricativeVolume = 3,
  kFricativePosition = 4,  // 0 glottis .. 1 lips
  kFricativeCenter = 5,    // Hz
  kFricativeBandwidth = 6, // Hz
  kRadius1 = 7,            // r1..r8 occupy 7..14
  kVelum = 15,
};

using ControlFrame = std::array<double, kControlDims>;

std::span<const std::string_view, kControlDims> control_field_names();

void validate(const ControlFrame& f);

struct ControlTrack {
  double frame_rate_hz = 250.0;
  std::vector<ControlFrame> frames;

  /// Time spanned from the first to the last frame.
  double duration_s() const {
    return frames.empty() ? 0.0 : static_cast<double>(frames.size() - 1) / frame_rate_hz;
  }
};

void validate(const ControlTrack& t);

/// Per-dimension linear map between the model's (-1, 1) space and physical
/// units. Normalized values outside (-1, 1) are clamped before mapping.
struct ParameterRanges {
  std::array<std::array<double, 2>, kTrainableUtteranceCount> utterance;
  std::array<std::array<double, 2>, kControlDims> control;

  static const ParameterRanges& standard();

  double utterance_to_physical(std::size_t i, double normalized) const;
  double utterance_to_normalized(std::size_t i, double physical) const;
  double control_to_physical(std::size_t i, double normalized) const;
  double control_to_normalized(std::size_t i, double physical) const;
};

}  // namespace emssl::trm
