#include "emssl/trm/params.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace emssl::trm {

namespace {

constexpr std::array<std::string_view, kUtteranceFieldCount> kUtteranceNames{
    "master_volume_db", "glottal_tp", "glottal_tn_min", "glottal_tn_max", "breathiness",
    "tract_length_cm", "nasal_radius_1", "nasal_radius_2", "nasal_radius_3", "nasal_radius_4",
    "nasal_radius_5", "throat_volume_db", "noise_crossmix_offset_db",
    // fixed block
    "output_rate_hz", "control_rate_hz", "channels", "balance", "waveform_type",
    "temperature_c", "loss_factor_pct", "aperture_radius_cm", "mouth_coef_hz", "nose_coef_hz",
    "throat_cutoff_hz", "modulation", "mix_reference_db"};

constexpr std::array<std::string_view, kControlDims> kControlNames{
    "glottal_pitch", "glottal_volume", "aspiration_volume", "fricative_volume",
    "fricative_position", "fricative_center_hz", "fricative_bandwidth_hz", "r1", "r2", "r3", "r4",
    "r5", "r6", "r7", "r8", "velum"};

void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError(what);
}

double map_to_physical(const std::array<double, 2>& range, double normalized) {
  const double n = std::clamp(normalized, -1.0, 1.0);
  return range[0] + 0.5 * (n + 1.0) * (range[1] - range[0]);
}

double map_to_normalized(const std::array<double, 2>& range, double physical) {
  return 2.0 * (physical - range[0]) / (range[1] - range[0]) - 1.0;
}

}  // namespace

std::array<double, kUtteranceFieldCount> UtteranceParams::to_array() const {
  const auto& n = nasal_radius_cm;
  return {master_volume_db, glottal_tp,      glottal_tn_min,     glottal_tn_max,
          breathiness,      tract_length_cm, n[0],               n[1],
          n[2],             n[3],            n[4],               throat_volume_db,
          noise_crossmix_offset_db,
          output_rate_hz,   control_rate_hz, channels,           balance,
          waveform_type,    temperature_c,   loss_factor_pct,    aperture_radius_cm,
          mouth_coef_hz,    nose_coef_hz,    throat_cutoff_hz,   modulation,
          mix_reference_db};
}

UtteranceParams UtteranceParams::from_array(std::span<const double, kUtteranceFieldCount> v) {
  UtteranceParams u;
  u.master_volume_db = v[0];
  u.glottal_tp = v[1];
  u.glottal_tn_min = v[2];
  u.glottal_tn_max = v[3];
  u.breathiness = v[4];
  u.tract_length_cm = v[5];
  for (std::size_t i = 0; i < kNasalSections; ++i) u.nasal_radius_cm[i] = v[6 + i];
  u.throat_volume_db = v[11];
  u.noise_crossmix_offset_db = v[12];
  u.output_rate_hz = v[13];
  u.control_rate_hz = v[14];
  u.channels = v[15];
  u.balance = v[16];
  u.waveform_type = v[17];
  u.temperature_c = v[18];
  u.loss_factor_pct = v[19];
  u.aperture_radius_cm = v[20];
  u.mouth_coef_hz = v[21];
  u.nose_coef_hz = v[22];
  u.throat_cutoff_hz = v[23];
  u.modulation = v[24];
  u.mix_reference_db = v[25];
  return u;
}

std::array<double, kTrainableUtteranceCount> UtteranceParams::trainable() const {
  const auto all = to_array();
  std::array<double, kTrainableUtteranceCount> out{};
  std::copy_n(all.begin(), kTrainableUtteranceCount, out.begin());
  return out;
}

void UtteranceParams::set_trainable(std::span<const double, kTrainableUtteranceCount> values) {
  auto all = to_array();
  std::copy(values.begin(), values.end(), all.begin());
  *this = from_array(all);
}

std::array<double, kUtteranceFieldCount - kTrainableUtteranceCount> UtteranceParams::fixed() const {
  const auto all = to_array();
  std::array<double, kUtteranceFieldCount - kTrainableUtteranceCount> out{};
  std::copy(all.begin() + kTrainableUtteranceCount, all.end(), out.begin());
  return out;
}

std::span<const std::string_view, kUtteranceFieldCount> utterance_field_names() {
  return kUtteranceNames;
}

std::span<const std::string_view, kControlDims> control_field_names() { return kControlNames; }

void validate(const UtteranceParams& u) {
  const auto all = u.to_array();
  for (std::size_t i = 0; i < all.size(); ++i) {
    require(std::isfinite(all[i]), "utterance field '" + std::string(kUtteranceNames[i]) + "' is not finite");
  }
  require(u.tract_length_cm >= 10.0 && u.tract_length_cm <= 25.0,
          "tract_length_cm must lie in [10, 25]");
  for (double r : u.nasal_radius_cm) require(r >= 0.0, "nasal radii must be non-negative");
  require(u.aperture_radius_cm > 0.0, "aperture_radius_cm must be positive");
  require(u.glottal_tp > 0.0 && u.glottal_tn_min > 0.0 && u.glottal_tp + u.glottal_tn_min <= 1.0,
          "glottal pulse requires 0 < tp < tp + tn_min <= 1");
  require(u.glottal_tn_max > 0.0, "glottal_tn_max must be positive");
  require(u.breathiness >= 0.0 && u.breathiness <= 100.0, "breathiness must lie in [0, 100]");
  require(u.output_rate_hz > 0.0, "output_rate_hz must be positive");
  require(u.control_rate_hz > 0.0, "control_rate_hz must be positive");
  require(u.channels == 1.0, "only mono output (channels = 1) is supported");
  require(u.balance >= -1.0 && u.balance <= 1.0, "balance must lie in [-1, 1]");
  require(u.waveform_type == 0.0 || u.waveform_type == 1.0, "waveform_type must be 0 (pulse) or 1 (sine)");
  require(u.temperature_c >= 0.0 && u.temperature_c <= 50.0, "temperature_c must lie in [0, 50]");
  require(u.loss_factor_pct >= 0.0 && u.loss_factor_pct < 100.0, "loss_factor_pct must lie in [0, 100)");
  require(u.mouth_coef_hz > 0.0 && u.nose_coef_hz > 0.0, "radiation coefficients must be positive");
  require(u.throat_cutoff_hz > 0.0, "throat_cutoff_hz must be positive");
  require(u.modulation == 0.0 || u.modulation == 1.0, "modulation must be 0 or 1");
}

void validate(const ControlFrame& f) {
  for (std::size_t i = 0; i < kControlDims; ++i) {
    require(std::isfinite(f[i]), "control field '" + std::string(kControlNames[i]) + "' is not finite");
  }
  for (std::size_t i = kRadius1; i <= kVelum; ++i) require(f[i] >= 0.0, "tract radii must be non-negative");
  require(f[kFricativePosition] >= 0.0 && f[kFricativePosition] <= 1.0,
          "fricative_position must lie in [0, 1]");
  require(f[kFricativeCenter] >= 100.0 && f[kFricativeCenter] <= 8000.0,
          "fricative_center_hz must lie in [100, 8000]");
  require(f[kFricativeBandwidth] > 0.0, "fricative_bandwidth_hz must be positive");
}

void validate(const ControlTrack& t) {
  require(std::isfinite(t.frame_rate_hz) && t.frame_rate_hz > 0.0, "control frame rate must be positive");
  require(!t.frames.empty(), "control track is empty");
  for (const auto& f : t.frames) validate(f);
}

const ParameterRanges& ParameterRanges::standard() {
  static const ParameterRanges ranges = [] {
    ParameterRanges r;
    r.utterance = {{{36.0, 60.0},  // master volume
                    {0.20, 0.50},  // tp
                    {0.08, 0.30},  // tn min
                    {0.15, 0.45},  // tn max
                    {0.0, 5.0},    // breathiness
                    {13.0, 22.0},  // tract length
                    {0.3, 2.4}, {0.3, 2.4}, {0.3, 2.4}, {0.3, 2.4}, {0.3, 2.4},
                    {0.0, 36.0},   // throat volume
                    {30.0, 60.0}}};
    r.control = {{{-26.0, 4.0},   // pitch, semitones
                  {0.0, 60.0},    // glottal volume
                  {0.0, 30.0},    // aspiration
                  {0.0, 30.0},    // fricative volume
                  {0.0, 1.0},     // fricative position
                  {500.0, 6000.0},
                  {300.0, 4000.0},
                  {0.0, 2.5}, {0.0, 2.5}, {0.0, 2.5}, {0.0, 2.5},
                  {0.0, 2.5}, {0.0, 2.5}, {0.0, 2.5}, {0.0, 2.5},
                  {0.0, 1.2}}};
    return r;
  }();
  return ranges;
}

double ParameterRanges::utterance_to_physical(std::size_t i, double normalized) const {
  return map_to_physical(utterance.at(i), normalized);
}
double ParameterRanges::utterance_to_normalized(std::size_t i, double physical) const {
  return map_to_normalized(utterance.at(i), physical);
}
double ParameterRanges::control_to_physical(std::size_t i, double normalized) const {
  return map_to_physical(control.at(i), normalized);
}
double ParameterRanges::control_to_normalized(std::size_t i, double physical) const {
  return map_to_normalized(control.at(i), physical);
}

}  // namespace emssl::trm
