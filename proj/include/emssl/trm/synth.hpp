#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "emssl/audio/waveform.hpp"
#include "emssl/trm/params.hpp"

namespace emssl::trm {

/// Reflection coefficient of a pressure wave travelling from a section of
/// area `a_in` into one of area `a_out`. Zero when both areas vanish.
double reflection_coefficient(double a_in, double a_out);

inline constexpr double kGlottalReflection = 0.7;
/// The nasal branch joins the oral tract between sections 2 and 3.
inline constexpr std::size_t kVelumJunction = 2;
/// Reference pitch for semitone offsets (middle C).
inline constexpr double kReferencePitchHz = 261.6256;
/// Nasal delay-line sections: the velar port plus the fixed nasal tract.
inline constexpr std::size_t kNasalLineSections = kNasalSections + 1;

/// Zero-mean periodic rise/fall pulse generator. Each cycle is rendered when
/// it starts, with the pitch and amplitude current at that moment, and has
/// its own mean removed.
class GlottalOscillator {
 public:
  GlottalOscillator(const UtteranceParams& u, double sample_rate);

  /// Next sample for the given pitch (Hz) and amplitude in [0, 1].
  double next(double pitch_hz, double amplitude);
  /// Un-centred pulse value (0..amplitude) of the most recent sample.
  double last_raw() const { return last_raw_; }

  /// Pulse shape over one period, phase in [0, 1).
  static double shape(double phase, double tp, double tn, bool sine);

 private:
  void start_cycle(double pitch_hz, double amplitude);

  double sample_rate_;
  double tp_, tn_min_, tn_max_;
  bool sine_;
  std::vector<double> cycle_;
  std::vector<double> cycle_raw_;
  std::size_t pos_ = 0;
  double offset_ = 0.0;  // fractional delay of the first sample after a cycle start
  double last_raw_ = 0.0;
};

/// Constant-pitch source at full amplitude, mixed with uniform white noise at
/// the breathiness percentage.
std::vector<double> glottal_source(const UtteranceParams& u, double pitch_hz, std::size_t n_samples,
                                   double sample_rate, std::uint64_t noise_seed = 0);

/// Kelly-Lochbaum waveguide: 8 oral sections, a nasal branch (velar port
/// followed by the 5 fixed nasal sections) and a three-way velum junction. Every section is a one-sample delay in each
/// direction, so the tube runs at a rate derived from the tract length.
class TubeState {
 public:
  struct Output {
    double mouth = 0.0;  // volume-velocity proxy leaving the lips
    double nose = 0.0;
  };

  double tube_rate() const { return tube_rate_; }

  /// Sets the time-varying geometry and recomputes all junction coefficients.
  void set_geometry(std::span<const double, kOralSections> oral_radius_cm, double velum_radius_cm);

  /// Oral junction coefficients; the entry at kVelumJunction is the two-port
  /// value between the adjacent oral sections, ignoring the nasal branch.
  const std::array<double, kOralSections - 1>& oral_reflection() const { return oral_k_; }
  const std::array<double, kNasalLineSections - 1>& nasal_reflection() const { return nasal_k_; }
  double lip_reflection() const { return lip_k_; }
  double velum_area() const { return nasal_area_[0]; }

  /// Advances one tube-rate sample. `fricative` is injected at oral junction
  /// `fricative_junction` (0..6).
  Output step(double glottal_input, double fricative, std::size_t fricative_junction);

  bool delay_lines_zero() const;

 private:
  friend TubeState validate_and_build_tube(const UtteranceParams& u);
  TubeState() = default;

  double tube_rate_ = 0.0;
  double damping_ = 1.0;
  double aperture_area_ = 0.0;
  double mouth_pole_ = 0.0;
  double nose_pole_ = 0.0;

  std::array<double, kOralSections> oral_area_{};
  std::array<double, kNasalLineSections> nasal_area_{};  // [0] is the velar port
  std::array<double, kOralSections - 1> oral_k_{};
  std::array<double, kNasalLineSections - 1> nasal_k_{};
  double lip_k_ = 0.0;
  double nose_k_ = 0.0;

  std::array<double, kOralSections> oral_fwd_{}, oral_bwd_{};
  std::array<double, kNasalLineSections> nasal_fwd_{}, nasal_bwd_{};
  double mouth_lp_ = 0.0;
  double nose_lp_ = 0.0;
};

/// Validates `u` and returns a zeroed waveguide with 1 cm oral radii and a
/// closed velum.
TubeState validate_and_build_tube(const UtteranceParams& u);

/// Resamples a control track by per-dimension linear interpolation. Output
/// length is round(duration * target_rate) + 1; the first and last frames are
/// copied exactly.
ControlTrack interpolate_control(const ControlTrack& track, double target_rate);

/// Renders `track` (which must already be at u.control_rate_hz) to audio at
/// u.output_rate_hz. Deterministic for a given noise seed.
Waveform synthesize(const UtteranceParams& u, const ControlTrack& track, std::uint64_t noise_seed);

}  // namespace emssl::trm
