#include "emssl/trm/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "emssl/features/resample.hpp"

namespace emssl::trm {

namespace {

constexpr double kPi = std::numbers::pi;
// Brings a fully voiced, full-volume tube output to roughly unit peak level.
constexpr double kOutputScale = 0.5;

double area(double radius_cm) { return kPi * radius_cm * radius_cm; }

double one_pole_coefficient(double cutoff_hz, double rate) {
  return std::exp(-2.0 * kPi * std::min(cutoff_hz, 0.45 * rate) / rate);
}

// RBJ band-pass with 0 dB peak gain; coefficients refreshed per sample.
class BandPass {
 public:
  double process(double x, double center_hz, double bandwidth_hz, double rate) {
    const double cf = std::clamp(center_hz, 20.0, 0.45 * rate);
    const double q = cf / std::max(bandwidth_hz, 1.0);
    const double w0 = 2.0 * kPi * cf / rate;
    const double alpha = std::sin(w0) / (2.0 * q);
    const double a0 = 1.0 + alpha;
    const double y = (alpha * x - alpha * x2_ + 2.0 * std::cos(w0) * y1_ - (1.0 - alpha) * y2_) / a0;
    x2_ = x1_;
    x1_ = x;
    y2_ = y1_;
    y1_ = y;
    return y;
  }

 private:
  double x1_ = 0.0, x2_ = 0.0, y1_ = 0.0, y2_ = 0.0;
};

}  // namespace

double reflection_coefficient(double a_in, double a_out) {
  const double sum = a_in + a_out;
  if (sum <= 0.0) return 0.0;
  return (a_in - a_out) / sum;
}

// ---------------------------------------------------------------------------
// Glottal source

GlottalOscillator::GlottalOscillator(const UtteranceParams& u, double sample_rate)
    : sample_rate_(sample_rate),
      tp_(u.glottal_tp),
      tn_min_(u.glottal_tn_min),
      tn_max_(u.glottal_tn_max),
      sine_(u.waveform_type == 1.0) {}

double GlottalOscillator::shape(double phase, double tp, double tn, bool sine) {
  if (sine) return std::sin(2.0 * kPi * phase);
  if (phase < tp) {
    const double s = phase / tp;
    return s * s * (3.0 - 2.0 * s);
  }
  if (phase < tp + tn) {
    const double s = (phase - tp) / tn;
    return 1.0 - s * s;
  }
  return 0.0;
}

void GlottalOscillator::start_cycle(double pitch_hz, double amplitude) {
  const double period = sample_rate_ / pitch_hz;
  const double tn = std::min(tn_min_ + (tn_max_ - tn_min_) * amplitude, 1.0 - tp_);
  const auto count = static_cast<std::size_t>(std::ceil(period - offset_));
  cycle_.resize(count);
  cycle_raw_.resize(count);
  double mean = 0.0;
  for (std::size_t k = 0; k < count; ++k) {
    const double phase = (static_cast<double>(k) + offset_) / period;
    cycle_raw_[k] = shape(phase, tp_, tn, sine_);
    mean += cycle_raw_[k];
  }
  mean /= static_cast<double>(count);
  for (std::size_t k = 0; k < count; ++k) {
    cycle_[k] = amplitude * (cycle_raw_[k] - mean);
    cycle_raw_[k] *= amplitude;
  }
  offset_ = static_cast<double>(count) + offset_ - period;
  pos_ = 0;
}

double GlottalOscillator::next(double pitch_hz, double amplitude) {
  if (pos_ >= cycle_.size()) start_cycle(pitch_hz, amplitude);
  last_raw_ = cycle_raw_[pos_];
  return cycle_[pos_++];
}

std::vector<double> glottal_source(const UtteranceParams& u, double pitch_hz, std::size_t n_samples,
                                   double sample_rate, std::uint64_t noise_seed) {
  validate(u);
  if (!(pitch_hz >= 40.0 && pitch_hz <= 600.0)) throw ValidationError("glottal pitch must lie in [40, 600] Hz");
  GlottalOscillator osc(u, sample_rate);
  Rng rng(noise_seed);
  std::uniform_real_distribution<double> noise(-1.0, 1.0);
  const double mix = u.breathiness / 100.0;
  std::vector<double> out(n_samples);
  for (auto& s : out) {
    const double pulse = osc.next(pitch_hz, 1.0);
    s = (1.0 - mix) * pulse + mix * noise(rng);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Waveguide

TubeState validate_and_build_tube(const UtteranceParams& u) {
  validate(u);
  TubeState t;
  const double c_cm_per_s = 100.0 * u.sound_speed_m_s();
  const double section_length = u.tract_length_cm / static_cast<double>(kOralSections);
  t.tube_rate_ = c_cm_per_s / section_length;
  // One sample of delay per section at the tube rate, by construction; the
  // rate must still be usable against the output rate.
  const double delay_samples = section_length / c_cm_per_s * t.tube_rate_;
  if (!std::isfinite(t.tube_rate_) || delay_samples < 1.0 - 1e-9 || t.tube_rate_ < 0.5 * u.output_rate_hz ||
      t.tube_rate_ > 4.0 * u.output_rate_hz) {
    throw ValidationError("tract length " + std::to_string(u.tract_length_cm) +
                          " cm gives an unusable tube rate of " + std::to_string(t.tube_rate_) + " Hz");
  }
  t.damping_ = 1.0 - u.loss_factor_pct / 100.0;
  t.aperture_area_ = area(u.aperture_radius_cm);
  t.mouth_pole_ = one_pole_coefficient(u.mouth_coef_hz, t.tube_rate_);
  t.nose_pole_ = one_pole_coefficient(u.nose_coef_hz, t.tube_rate_);
  for (std::size_t i = 0; i < kNasalSections; ++i) t.nasal_area_[i + 1] = area(u.nasal_radius_cm[i]);
  for (std::size_t i = 1; i + 1 < kNasalLineSections; ++i) {
    t.nasal_k_[i] = reflection_coefficient(t.nasal_area_[i], t.nasal_area_[i + 1]);
  }
  t.nose_k_ = reflection_coefficient(t.nasal_area_.back(), t.aperture_area_);
  const std::array<double, kOralSections> uniform{1, 1, 1, 1, 1, 1, 1, 1};
  t.set_geometry(uniform, 0.0);
  return t;
}

void TubeState::set_geometry(std::span<const double, kOralSections> oral_radius_cm, double velum_radius_cm) {
  for (std::size_t i = 0; i < kOralSections; ++i) oral_area_[i] = area(oral_radius_cm[i]);
  for (std::size_t i = 0; i + 1 < kOralSections; ++i) {
    oral_k_[i] = reflection_coefficient(oral_area_[i], oral_area_[i + 1]);
  }
  nasal_area_[0] = area(velum_radius_cm);
  nasal_k_[0] = reflection_coefficient(nasal_area_[0], nasal_area_[1]);
  lip_k_ = reflection_coefficient(oral_area_.back(), aperture_area_);
}

TubeState::Output TubeState::step(double glottal_input, double fricative, std::size_t fricative_junction) {
  std::array<double, kOralSections> fwd{}, bwd{};
  std::array<double, kNasalLineSections> nfwd{}, nbwd{};
  const double d = damping_;

  fwd[0] = d * (glottal_input + kGlottalReflection * oral_bwd_[0]);

  for (std::size_t j = 0; j + 1 < kOralSections; ++j) {
    const double a = oral_fwd_[j];
    const double b = oral_bwd_[j + 1];
    if (j == kVelumJunction) {
      const double n = nasal_bwd_[0];
      const double av = nasal_area_[0];
      const double sum = oral_area_[j] + oral_area_[j + 1] + av;
      const double pj = sum > 0.0 ? 2.0 * (oral_area_[j] * a + oral_area_[j + 1] * b + av * n) / sum : 0.0;
      fwd[j + 1] = d * (pj - b);
      bwd[j] = d * (pj - a);
      nfwd[0] = av > 0.0 ? d * (pj - n) : 0.0;
    } else {
      const double k = oral_k_[j];
      fwd[j + 1] = d * ((1.0 + k) * a - k * b);
      bwd[j] = d * (k * a + (1.0 - k) * b);
    }
  }
  if (fricative != 0.0) {
    fwd[fricative_junction + 1] += 0.5 * fricative;
    bwd[fricative_junction] += 0.5 * fricative;
  }

  Output out;
  {
    const double x = oral_fwd_[kOralSections - 1];
    mouth_lp_ = (1.0 - mouth_pole_) * x + mouth_pole_ * mouth_lp_;
    const double reflected = lip_k_ * x + (-1.0 - lip_k_) * mouth_lp_;
    bwd[kOralSections - 1] = d * reflected;
    out.mouth = x - reflected;
  }

  for (std::size_t j = 0; j + 1 < kNasalLineSections; ++j) {
    const double a = nasal_fwd_[j];
    const double b = nasal_bwd_[j + 1];
    const double k = nasal_k_[j];
    nfwd[j + 1] = d * ((1.0 + k) * a - k * b);
    nbwd[j] = d * (k * a + (1.0 - k) * b);
  }
  {
    const double x = nasal_fwd_[kNasalLineSections - 1];
    nose_lp_ = (1.0 - nose_pole_) * x + nose_pole_ * nose_lp_;
    const double reflected = nose_k_ * x + (-1.0 - nose_k_) * nose_lp_;
    nbwd[kNasalLineSections - 1] = d * reflected;
    out.nose = x - reflected;
  }

  oral_fwd_ = fwd;
  oral_bwd_ = bwd;
  nasal_fwd_ = nfwd;
  nasal_bwd_ = nbwd;
  return out;
}

bool TubeState::delay_lines_zero() const {
  auto zero = [](const auto& arr) { return std::all_of(arr.begin(), arr.end(), [](double v) { return v == 0.0; }); };
  return zero(oral_fwd_) && zero(oral_bwd_) && zero(nasal_fwd_) && zero(nasal_bwd_);
}

// ---------------------------------------------------------------------------
// Control tracks and rendering

ControlTrack interpolate_control(const ControlTrack& track, double target_rate) {
  validate(track);
  if (!(target_rate >= track.frame_rate_hz)) {
    throw ValidationError("interpolation target rate must not be below the track rate");
  }
  ControlTrack out;
  out.frame_rate_hz = target_rate;
  const auto n = static_cast<std::size_t>(std::llround(track.duration_s() * target_rate)) + 1;
  out.frames.resize(n);
  const std::size_t last = track.frames.size() - 1;
  for (std::size_t j = 0; j < n; ++j) {
    const double pos = static_cast<double>(j) / target_rate * track.frame_rate_hz;
    const auto k = std::min(static_cast<std::size_t>(pos), last);
    if (k >= last) {
      out.frames[j] = track.frames[last];
      continue;
    }
    const double frac = pos - static_cast<double>(k);
    for (std::size_t d = 0; d < kControlDims; ++d) {
      const double a = track.frames[k][d];
      out.frames[j][d] = a + frac * (track.frames[k + 1][d] - a);
    }
  }
  out.frames.front() = track.frames.front();
  out.frames.back() = track.frames.back();
  return out;
}

Waveform synthesize(const UtteranceParams& u, const ControlTrack& track, std::uint64_t noise_seed) {
  validate(track);
  if (track.frame_rate_hz != u.control_rate_hz) {
    throw ValidationError("control track rate " + std::to_string(track.frame_rate_hz) +
                          " Hz does not match the synthesizer control rate " + std::to_string(u.control_rate_hz) +
                          " Hz");
  }
  TubeState tube = validate_and_build_tube(u);
  const double rate = tube.tube_rate();
  const double duration = track.duration_s();
  const auto n_out = static_cast<std::size_t>(std::llround(duration * u.output_rate_hz));
  Waveform result;
  result.sample_rate = u.output_rate_hz;
  if (n_out == 0) return result;

  // Extra tube samples cover the resampler's look-ahead at the end.
  const auto n_tube = static_cast<std::size_t>(std::ceil((duration + 0.005) * rate));
  std::vector<double> buffer(n_tube);

  GlottalOscillator glottis(u, rate);
  BandPass fricative_filter;
  Rng rng(noise_seed);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);

  const double breath = u.breathiness / 100.0;
  const double crossmix_scale = 1.0 / std::max(db_to_amplitude(u.noise_crossmix_offset_db, u.mix_reference_db), 1e-9);
  const double throat_gain = db_to_amplitude(u.throat_volume_db);
  const double throat_pole = one_pole_coefficient(u.throat_cutoff_hz, rate);
  const bool modulate = u.modulation == 1.0;

  const std::size_t last = track.frames.size() - 1;
  ControlFrame p{};
  double throat_state = 0.0;
  double previous_radiated = 0.0;

  for (std::size_t m = 0; m < n_tube; ++m) {
    const double pos = static_cast<double>(m) / rate * u.control_rate_hz;
    const auto k = std::min(static_cast<std::size_t>(pos), last);
    if (k >= last) {
      p = track.frames[last];
    } else {
      const double frac = pos - static_cast<double>(k);
      for (std::size_t d = 0; d < kControlDims; ++d) {
        p[d] = track.frames[k][d] + frac * (track.frames[k + 1][d] - track.frames[k][d]);
      }
    }

    const double pitch = std::clamp(kReferencePitchHz * std::exp2(p[kPitch] / 12.0), 40.0, 600.0);
    const double voice_amp = std::min(db_to_amplitude(p[kGlottalVolume]), 1.0);
    const double pulse = glottis.next(pitch, voice_amp);

    const double noise = uniform(rng);
    double voiced = (1.0 - breath) * pulse + breath * voice_amp * noise;

    double aspiration_noise = noise;
    if (modulate) {
      const double crossmix = std::min(voice_amp * crossmix_scale, 1.0);
      aspiration_noise = crossmix * noise * glottis.last_raw() + (1.0 - crossmix) * noise;
    }
    const double aspiration = aspiration_noise * db_to_amplitude(p[kAspirationVolume]);

    const double fric_noise = uniform(rng);
    const double fric_amp = db_to_amplitude(p[kFricativeVolume]);
    const double fricative =
        fric_amp * fricative_filter.process(fric_noise, p[kFricativeCenter], p[kFricativeBandwidth], rate);
    const auto fric_junction = static_cast<std::size_t>(
        std::lround(std::clamp(p[kFricativePosition], 0.0, 1.0) * static_cast<double>(kOralSections - 2)));

    std::array<double, kOralSections> radii{};
    for (std::size_t i = 0; i < kOralSections; ++i) radii[i] = std::max(p[kRadius1 + i], 0.0);
    tube.set_geometry(radii, std::max(p[kVelum], 0.0));

    const auto out = tube.step(voiced + aspiration, fricative, fric_junction);
    const double flow = out.mouth + out.nose;
    const double radiated = flow - previous_radiated;
    previous_radiated = flow;

    throat_state = (1.0 - throat_pole) * voiced + throat_pole * throat_state;
    const double sample = radiated + throat_gain * throat_state;
    if (!std::isfinite(sample)) throw InstabilityError("waveguide produced a non-finite sample");
    buffer[m] = sample;
  }

  const double gain = kOutputScale * db_to_amplitude(u.master_volume_db);
  for (double& s : buffer) s *= gain;
  result.samples = features::resample(buffer, rate, u.output_rate_hz);
  result.samples.resize(n_out, result.samples.empty() ? 0.0 : result.samples.back());
  check_waveform(result);
  return result;
}

}  // namespace emssl::trm
