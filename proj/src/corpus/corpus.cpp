#include "emssl/corpus/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>

#include <Eigen/Dense>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "emssl/audio/wav.hpp"
#include "emssl/engine/forward_op.hpp"
#include "emssl/features/mel.hpp"
#include "emssl/features/resample.hpp"

namespace emssl::corpus {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Biquad {
  double b0, b1, b2, a1, a2;
  double z1 = 0.0, z2 = 0.0;

  static Biquad lowpass(double cutoff, double rate, double q) {
    const double w0 = 2.0 * kPi * cutoff / rate;
    const double alpha = std::sin(w0) / (2.0 * q);
    const double c = std::cos(w0);
    const double a0 = 1.0 + alpha;
    return {(1.0 - c) / 2.0 / a0, (1.0 - c) / a0, (1.0 - c) / 2.0 / a0, -2.0 * c / a0, (1.0 - alpha) / a0};
  }
  double process(double x) {
    const double y = b0 * x + z1;
    z1 = b1 * x - a1 * y + z2;
    z2 = b2 * x - a2 * y;
    return y;
  }
};

struct Butterworth4 {
  Biquad s1, s2;
  Butterworth4(double cutoff, double rate)
      : s1(Biquad::lowpass(cutoff, rate, 0.54119610014619698)), s2(Biquad::lowpass(cutoff, rate, 1.3065629648763766)) {}
  double process(double x) { return s2.process(s1.process(x)); }
};

// Centre range and spread of each control dimension, normalized units.
struct DimDraw {
  double lo, hi, spread;
};
constexpr std::array<DimDraw, trm::kControlDims> kControlDraw{{
    {-0.5, 0.3, 0.15},    // pitch
    {0.5, 0.8, 0.10},     // glottal volume
    {-0.9, -0.5, 0.10},   // aspiration
    {-0.9, -0.4, 0.15},   // fricative volume
    {-0.5, 0.5, 0.20},    // fricative position
    {-0.5, 0.5, 0.20},    // fricative centre
    {-0.5, 0.5, 0.20},    // fricative bandwidth
    {-0.45, 0.05, 0.25}, {-0.45, 0.05, 0.25}, {-0.45, 0.05, 0.25}, {-0.45, 0.05, 0.25},
    {-0.45, 0.05, 0.25}, {-0.45, 0.05, 0.25}, {-0.45, 0.05, 0.25}, {-0.45, 0.05, 0.25},
    {-0.95, -0.6, 0.10},  // velum
}};
constexpr double kUtteranceJitter = 0.1;
constexpr double kDrawEdge = 0.95;
constexpr int kMaxRetries = 20;

GroundTruth draw_truth(const SelfInversionSpec& spec, std::size_t frames, Rng& rng) {
  const auto& ranges = trm::ParameterRanges::standard();
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  trm::UtteranceParams u = spec.base;
  for (auto& r : u.nasal_radius_cm) r *= spec.nasal_scale;
  u.tract_length_cm = spec.tract_length_cm + spec.tract_length_jitter_cm * unit(rng);
  u.master_volume_db = ranges.utterance_to_physical(0, 0.6);
  auto t = u.trainable();
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (i == 5) continue;  // tract length drawn above
    const double n = ranges.utterance_to_normalized(i, t[i]) + kUtteranceJitter * unit(rng);
    t[i] = ranges.utterance_to_physical(i, std::clamp(n, -kDrawEdge, kDrawEdge));
  }
  u.set_trainable(t);

  std::vector<trm::ControlFrame> frames_phys(frames);
  for (std::size_t d = 0; d < trm::kControlDims; ++d) {
    const auto& draw = kControlDraw[d];
    const double centre = draw.lo + (draw.hi - draw.lo) * 0.5 * (unit(rng) + 1.0);
    const auto wobble = smooth_noise(frames, features::kFrameRate, 8.0, rng);
    for (std::size_t f = 0; f < frames; ++f) {
      const double n = std::clamp(centre + draw.spread * wobble[f], -kDrawEdge, kDrawEdge);
      frames_phys[f][d] = ranges.control_to_physical(d, n);
    }
  }
  GroundTruth g;
  g.utterance = u;
  g.frames = std::move(frames_phys);
  g.z = engine::to_normalized(u, g.frames);
  return g;
}

std::vector<std::size_t> largest_remainder(std::size_t n, const std::array<double, 3>& ratios) {
  std::array<std::size_t, 3> counts{};
  std::array<double, 3> rem{};
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    const double exact = ratios[i] * static_cast<double>(n);
    counts[i] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    rem[i] = exact - static_cast<double>(counts[i]);
    assigned += counts[i];
  }
  std::array<std::size_t, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return rem[a] > rem[b]; });
  for (std::size_t k = 0; assigned < n; ++k, ++assigned) ++counts[order[k % 3]];
  return {counts.begin(), counts.end()};
}

}  // namespace

std::string_view split_name(Split s) {
  switch (s) {
    case Split::kTrain:
      return "train";
    case Split::kValidation:
      return "validation";
    case Split::kTest:
      return "test";
    default:
      return "unassigned";
  }
}

double Clip::duration_s() const {
  if (audio) return audio->duration_s();
  return static_cast<double>(mel.rows()) / features::kFrameRate;
}

std::vector<const Clip*> Corpus::in_split(Split s) const {
  std::vector<const Clip*> out;
  for (const auto& c : clips) {
    if (c.split == s) out.push_back(&c);
  }
  return out;
}

Clip load_clip(const std::filesystem::path& path) {
  Waveform w = read_wav(path);
  if (w.samples.empty()) throw IoError(path.string() + ": no audio samples");
  if (w.sample_rate != features::kFeatureRate) w = features::resample(w, features::kFeatureRate);
  const double pk = peak(w);
  if (pk > 0.0) {
    for (double& s : w.samples) s *= kLoadPeak / pk;
  }
  Clip c;
  c.id = path.stem().string();
  c.path = path;
  c.mel = features::log_mel(w);
  c.audio = std::move(w);
  return c;
}

Corpus load_wav_corpus(const std::filesystem::path& dir, LoadReport* report) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw IoError("corpus directory not found: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    auto ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".wav") files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());

  std::map<std::string, fs::path> seen;
  for (const auto& f : files) {
    const auto stem = f.stem().string();
    auto [it, inserted] = seen.emplace(stem, f);
    if (!inserted) {
      throw ValidationError("duplicate clip id '" + stem + "': " + it->second.string() + " and " + f.string());
    }
  }

  Corpus corpus;
  for (const auto& f : files) {
    try {
      corpus.clips.push_back(load_clip(f));
    } catch (const IoError& e) {
      spdlog::warn("skipping {}: {}", f.string(), e.what());
      if (report) report->skipped.emplace_back(f, e.what());
    }
  }
  if (corpus.clips.empty()) throw IoError("no readable WAV files under " + dir.string());
  return corpus;
}

std::array<std::size_t, 3> split_counts(std::size_t n, const std::array<double, 3>& ratios) {
  double sum = 0.0;
  for (double r : ratios) {
    if (!(r >= 0.0)) throw ValidationError("split ratios must be non-negative");
    sum += r;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw ValidationError(fmt::format("split ratios must sum to 1, got {}", sum));
  const auto buckets = std::count_if(ratios.begin(), ratios.end(), [](double r) { return r > 0.0; });
  if (n < static_cast<std::size_t>(buckets)) {
    throw ValidationError(fmt::format("{} clips cannot fill {} nonzero split buckets", n, buckets));
  }
  const auto c = largest_remainder(n, ratios);
  return {c[0], c[1], c[2]};
}

void split(Corpus& corpus, const std::array<double, 3>& ratios, std::uint64_t seed) {
  const auto counts = split_counts(corpus.clips.size(), ratios);
  std::vector<std::size_t> order(corpus.clips.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::size_t k = 0;
  const Split labels[3] = {Split::kTrain, Split::kValidation, Split::kTest};
  for (std::size_t b = 0; b < 3; ++b) {
    for (std::size_t i = 0; i < counts[b]; ++i) corpus.clips[order[k++]].split = labels[b];
  }
}

engine::Dataset to_dataset(const Corpus& corpus) {
  engine::Dataset d;
  for (const auto& c : corpus.clips) {
    engine::Observation o{c.id, c.mel};
    switch (c.split) {
      case Split::kTrain:
        d.train.push_back(std::move(o));
        break;
      case Split::kValidation:
        d.validation.push_back(std::move(o));
        break;
      case Split::kTest:
        d.test.push_back(std::move(o));
        break;
      default:
        break;
    }
  }
  return d;
}

std::vector<double> smooth_noise(std::size_t n, double rate_hz, double cutoff_hz, Rng& rng) {
  static constexpr std::size_t kWarmup = 256;
  // output std of the filter for unit white noise, from its impulse response
  Butterworth4 probe(cutoff_hz, rate_hz);
  double energy = 0.0;
  for (std::size_t i = 0; i < 4096; ++i) {
    const double h = probe.process(i == 0 ? 1.0 : 0.0);
    energy += h * h;
  }
  const double scale = 1.0 / std::sqrt(energy);
  Butterworth4 filter(cutoff_hz, rate_hz);
  std::normal_distribution<double> white(0.0, 1.0);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < kWarmup + n; ++i) {
    const double y = filter.process(white(rng));
    if (i >= kWarmup) out[i - kWarmup] = y * scale;
  }
  return out;
}

Corpus make_self_inversion_corpus(const SelfInversionSpec& spec) {
  if (spec.count == 0) throw ValidationError("self-inversion corpus needs at least one clip");
  if (!(spec.min_duration_s > 0.0) || spec.max_duration_s < spec.min_duration_s) {
    throw ValidationError("invalid clip duration range");
  }
  const engine::TrmForwardOperator f(spec.base);
  Corpus corpus;
  for (std::size_t i = 0; i < spec.count; ++i) {
    bool ok = false;
    for (int attempt = 0; attempt < kMaxRetries && !ok; ++attempt) {
      Rng rng(derive_seed(spec.seed, "clip", i * kMaxRetries + attempt));
      std::uniform_real_distribution<double> dur(spec.min_duration_s, spec.max_duration_s);
      const auto frames = std::max<std::size_t>(1, std::llround(dur(rng) * features::kFrameRate));
      GroundTruth g = draw_truth(spec, frames, rng);
      g.noise_seed = derive_seed(spec.seed, "clip-noise", i * kMaxRetries + attempt);
      try {
        Waveform w = f.render(g.z, g.noise_seed);
        Clip c;
        c.id = fmt::format("{}{:04d}", spec.id_prefix, i);
        c.mel = engine::TrmForwardOperator::features(w, frames);
        c.audio = std::move(w);
        c.truth = std::move(g);
        corpus.clips.push_back(std::move(c));
        ok = true;
      } catch (const InstabilityError& e) {
        spdlog::warn("clip {} attempt {} unstable ({}); redrawing", i, attempt, e.what());
      }
    }
    if (!ok) throw InstabilityError(fmt::format("clip {} could not be synthesized stably", i));
  }
  return corpus;
}

model::Latent toy_latent(std::vector<double> z) {
  model::Latent l;
  l.control = Matrix(1, 0);
  l.utterance = std::move(z);
  return l;
}

std::optional<Matrix> LinearForwardOperator::evaluate(const model::Latent& z, std::size_t frames,
                                                      std::uint64_t seed) const {
  if (frames != 1 || z.utterance.size() != a_.cols()) throw ShapeError("toy operator expects one frame of d_z values");
  Rng rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  Matrix x(1, a_.rows());
  for (std::size_t r = 0; r < a_.rows(); ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < a_.cols(); ++c) acc += a_(r, c) * z.utterance[c];
    x(0, r) = acc + noise_std_ * noise(rng);
  }
  return x;
}

std::uint64_t toy_noise_seed(std::uint64_t seed, std::size_t index) { return derive_seed(seed, "toy-noise", index); }

ToyLinearProblem make_toy_linear_problem(std::size_t dz, std::size_t dx, std::size_t n, double noise_std,
                                         std::uint64_t seed) {
  if (dz == 0 || dx < dz) throw ValidationError("toy problem needs 0 < d_z <= d_x");
  if (n < dz) throw ValidationError("toy problem needs at least d_z samples");
  if (!(noise_std >= 0.0)) throw ValidationError("noise std must be non-negative");
  ToyLinearProblem p;
  p.noise_std = noise_std;
  Rng rng(derive_seed(seed, "toy-matrix"));
  std::normal_distribution<double> gauss(0.0, 1.0 / std::sqrt(double(dz)));
  for (int attempt = 0;; ++attempt) {
    Eigen::MatrixXd a(dx, dz);
    for (Eigen::Index r = 0; r < a.rows(); ++r) {
      for (Eigen::Index c = 0; c < a.cols(); ++c) a(r, c) = gauss(rng);
    }
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(a);
    const auto& s = svd.singularValues();
    if (s(s.size() - 1) > 0.0 && s(0) / s(s.size() - 1) < 100.0) {
      p.a = Matrix(dx, dz);
      for (std::size_t r = 0; r < dx; ++r) {
        for (std::size_t c = 0; c < dz; ++c) p.a(r, c) = a(r, c);
      }
      break;
    }
    if (attempt > 1000) throw std::runtime_error("could not draw a well-conditioned matrix");
  }
  const LinearForwardOperator f(p.a, noise_std);
  Rng zr(derive_seed(seed, "toy-latent"));
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> z(dz);
    for (double& v : z) v = unit(zr);
    const auto x = f.evaluate(toy_latent(z), 1, toy_noise_seed(seed, i));
    p.z_star.push_back(std::move(z));
    p.x.push_back(x->data());
  }
  return p;
}

engine::Dataset ToyLinearProblem::dataset() const {
  engine::Dataset d;
  for (std::size_t i = 0; i < x.size(); ++i) {
    Matrix m(1, dx());
    std::copy(x[i].begin(), x[i].end(), m.data().begin());
    d.train.push_back({fmt::format("toy{:04d}", i), std::move(m)});
  }
  return d;
}

double reconstruction_mse(const ToyLinearProblem& p, const model::RegressorModel& m) {
  const auto data = p.dataset();
  double sum = 0.0;
  for (const auto& o : data.train) {
    const auto z = m.forward(o.x);
    for (std::size_t r = 0; r < p.dx(); ++r) {
      double xr = 0.0;
      for (std::size_t c = 0; c < p.dz(); ++c) xr += p.a(r, c) * z.utterance[c];
      const double e = o.x(0, r) - xr;
      sum += e * e;
    }
  }
  return sum / static_cast<double>(data.train.size() * p.dx());
}

void write_manifest(const std::filesystem::path& path, const Corpus& corpus) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write manifest " + path.string());
  out << "id,path,split,duration_s\n";
  for (const auto& c : corpus.clips) {
    out << fmt::format("{},{},{},{:.6f}\n", c.id, c.path.string(), split_name(c.split), c.duration_s());
  }
}

}  // namespace emssl::corpus
