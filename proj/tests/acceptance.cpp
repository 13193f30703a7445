// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit if any
// fails. Usage: emssl_acceptance [criterion...] [--save-desk PATH]
// [--load-desk PATH]. With no criterion numbers all eight run; --load-desk
// skips the criterion 6 training and adapts the stored model instead.

#include <Eigen/Dense>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <optional>
#include <set>
#include <string>

#include "emssl/corpus/corpus.hpp"
#include "emssl/engine/engine.hpp"
#include "emssl/metrics/snr.hpp"
#include "emssl/trm/synth.hpp"
#include "gradient_checks.hpp"
#include "support.hpp"

using namespace emssl;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt_double(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// ---- 1: uniform tube resonances

Outcome tube_resonances() {
  const auto t0 = Clock::now();
  const auto w = trm::synthesize(test::uniform_tube_utterance(17.5), test::uniform_tube_track(1.0), 1);
  const auto peaks = test::harmonic_envelope_peaks(w, 100.0, 4000.0);
  Outcome o{true, "peaks"};
  for (double target : {500.0, 1500.0, 2500.0}) {
    const double got = test::nearest(peaks, target);
    o.pass = o.pass && std::abs(got - target) <= 0.15 * target;
    o.detail += fmt_double(" %.0f", got);
  }
  const double dt = seconds_since(t0);
  o.pass = o.pass && dt < 10.0;
  o.detail += " Hz (targets 500 1500 2500), " + fmt_double("%.2f s", dt);
  return o;
}

// ---- 2: gradients

Outcome gradients() {
  const auto t0 = Clock::now();
  const std::vector<std::pair<std::string, double>> layers{
      {"conv2d+relu s1", test::conv_relu_gradient_error(1)},
      {"conv2d+relu s2", test::conv_relu_gradient_error(2)},
      {"upsample", test::upsample_gradient_error()},
      {"linear", test::linear_gradient_error()},
      {"lstm fwd", test::lstm_gradient_error(false)},
      {"lstm rev", test::lstm_gradient_error(true)},
  };
  Outcome o{true, ""};
  double worst_layer = 0.0;
  for (const auto& [name, err] : layers) {
    worst_layer = std::max(worst_layer, err);
    if (err >= 1e-4) {
      o.pass = false;
      o.detail += " layer " + name + fmt_double(" %.3g", err);
    }
  }
  double worst = 0.0;
  std::string worst_name;
  for (const auto& [name, err] : test::desk_gradient_errors(1)) {
    if (err > worst) {
      worst = err;
      worst_name = name;
    }
  }
  const double dt = seconds_since(t0);
  o.pass = o.pass && worst < 1e-4 && dt < 120.0;
  o.detail = "desk worst rel err " + fmt_double("%.3g", worst) + " (" + worst_name + "), layers worst " +
             fmt_double("%.3g", worst_layer) + o.detail + ", " + fmt_double("%.1f s", dt);
  return o;
}

// ---- 3: SNR metric examples

Outcome snr_examples() {
  using namespace metrics;
  std::vector<std::string> failed;
  auto expect = [&](bool ok, const char* what) {
    if (!ok) failed.emplace_back(what);
  };
  Rng rng(1);
  std::normal_distribution<double> nd;
  Matrix y(5, 80);
  for (double& v : y.data()) v = nd(rng);
  expect(sentence_snr(y, y) == kSnrCapDb, "sentence cap");
  expect(sentence_snr(y, Matrix(5, 80)) == 0.0, "sentence 0 dB");
  expect(sentence_snr(Matrix(1, 1, 2.0), Matrix(1, 1, 1.0)) == 10.0 * std::log10(4.0), "sentence 2 vs 1");
  expect(local_snr(Matrix(1, 1, 1.0), Matrix(1, 1, 0.0))(0, 0) == 0.0, "local 0 dB");
  expect(local_snr(Matrix(1, 1, 1.0), Matrix(1, 1, 1.0))(0, 0) == kSnrCapDb, "local cap");
  expect(std::abs(local_snr(Matrix(1, 1, 1.0), Matrix(1, 1, 0.9))(0, 0) - 20.0) < 1e-12, "local 1 vs 0.9");
  expect(local_snr(Matrix(1, 1, 0.0), Matrix(1, 1, 0.5))(0, 0) == -kSnrCapDb, "local zero reference");

  const auto flat = box_stats(std::vector<double>(7, 30.0));
  expect(flat.median == 30.0 && flat.p25 == 30.0 && flat.p75 == 30.0 && flat.outliers.empty(), "box constant");
  const auto ramp = box_stats({0.0, 10.0, 20.0, 30.0, 40.0});
  expect(ramp.median == 20.0 && ramp.p25 == 10.0 && ramp.p75 == 30.0, "box quartiles");
  const auto high = box_stats({100.0, 100.0, 100.0});
  expect(high.median == 60.0, "box truncation");

  double worst = 0.0;
  std::uniform_real_distribution<double> cdist(-1e3, 1e3);
  for (int i = 0; i < 500; ++i) {
    Matrix a(7, 80), b(7, 80);
    for (double& v : a.data()) v = nd(rng);
    for (double& v : b.data()) v = nd(rng);
    const double c = cdist(rng);
    Matrix ca = a, cb = b;
    for (double& v : ca.data()) v *= c;
    for (double& v : cb.data()) v *= c;
    worst = std::max(worst, std::abs(sentence_snr(ca, cb) - sentence_snr(a, b)));
  }
  expect(worst <= 1e-9, "scale invariance");

  Outcome o{failed.empty(), "11 examples, scale invariance worst " + fmt_double("%.2g dB", worst)};
  for (const auto& f : failed) o.detail += "; failed: " + f;
  return o;
}

// ---- 4: training-set size law

Outcome training_set_law() {
  engine::TrainingSet phi;
  std::string sizes;
  bool pass = true;
  for (std::size_t t = 1; t <= 30; ++t) {
    engine::TrainingSet fresh(100);
    for (auto& s : fresh) s.iteration = t;
    phi = engine::update_training_set(std::move(phi), std::move(fresh), 0.33, t);
    if (t >= 20) {
      // 302, 303 and 304 are all integer fixed points of the rounded map
      pass = pass && std::abs(static_cast<double>(phi.size()) - 303.0) <= 1.0;
      if (t == 20 || t == 30) sizes += " t" + std::to_string(t) + "=" + std::to_string(phi.size());
    }
  }
  return {pass, "|phi|" + sizes + " (target 303 +- 1)"};
}

// ---- 5 and 8: toy linear problem

struct ToyRun {
  double mse = 0.0;
  double oracle = 0.0;
  double seconds = 0.0;
};

ToyRun run_toy(const std::filesystem::path& out_dir) {
  const auto t0 = Clock::now();
  const auto p = corpus::make_toy_linear_problem(4, 8, 500, 0.01, 1);
  model::RegressorModel m(model::ModelConfig::from_preset("linear", 2));
  engine::EmsslConfig cfg;
  cfg.iterations = 50;
  cfg.seed = 3;
  const corpus::LinearForwardOperator f(p.a, p.noise_std);

  std::ofstream log;
  engine::Callbacks cb;
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    log.open(out_dir / "iterations.csv", std::ios::binary);
    log << engine::log_header() << '\n';
    cb.on_log_row = [&](const engine::LogRow& r) { log << engine::format_log_row(r) << '\n'; };
    cb.on_iteration_end = [&](std::size_t t, const model::RegressorModel& mm) {
      char name[32];
      std::snprintf(name, sizeof name, "iter_%03zu.ckpt", t);
      model::save_checkpoint(mm, out_dir / name);
    };
  }
  engine::run_emssl(p.dataset(), f, m, cfg, cb);
  if (!out_dir.empty()) model::save_checkpoint(m, out_dir / "final.ckpt");

  // least squares: project each x onto the column space of A
  Eigen::MatrixXd a(8, 4);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 4; ++j) a(i, j) = p.a(i, j);
  const Eigen::MatrixXd proj = a * (a.transpose() * a).inverse() * a.transpose();
  double oracle = 0.0;
  for (const auto& x : p.x) {
    const Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(x.data(), 8);
    oracle += (v - proj * v).squaredNorm();
  }
  oracle /= 500.0 * 8.0;
  return {corpus::reconstruction_mse(p, m), oracle, seconds_since(t0)};
}

Outcome toy_oracle() {
  const auto r = run_toy({});
  const double ratio = r.mse / r.oracle;
  return {ratio <= 1.1 && r.seconds < 60.0, "mse " + fmt_double("%.6g", r.mse) + " oracle " +
                                                fmt_double("%.6g", r.oracle) + " ratio " + fmt_double("%.4f", ratio) +
                                                ", " + fmt_double("%.1f s", r.seconds)};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome reproducibility() {
  const auto base = test::temp_dir("acceptance_repro");
  run_toy(base / "a");
  run_toy(base / "b");
  std::size_t files = 0;
  std::vector<std::string> differ;
  for (const auto& e : std::filesystem::directory_iterator(base / "a")) {
    ++files;
    const auto other = base / "b" / e.path().filename();
    if (!std::filesystem::exists(other) || slurp(e.path()) != slurp(other)) differ.push_back(e.path().filename());
  }
  const auto count_b = std::distance(std::filesystem::directory_iterator(base / "b"), {});
  const bool pass = differ.empty() && files == static_cast<std::size_t>(count_b) && files == 52;
  Outcome o{pass, std::to_string(files) + " files compared (log, 50 checkpoints, final)"};
  for (const auto& d : differ) o.detail += "; differs: " + d;
  return o;
}

// ---- 6 and 7: desk self-inversion and adaptation

engine::EmsslConfig desk_config(std::size_t iterations) {
  engine::EmsslConfig cfg;
  cfg.iterations = iterations;
  cfg.samples_per_datapoint = 3;
  cfg.batch_size = 32;
  cfg.posterior_std = 0.1;
  cfg.loss_weight = 1.0;
  cfg.seed = 9;
  return cfg;
}

Outcome desk_convergence(model::RegressorModel& m) {
  const auto t0 = Clock::now();
  corpus::SelfInversionSpec spec;
  spec.count = 200;
  spec.seed = 11;
  auto c = corpus::make_self_inversion_corpus(spec);
  corpus::split(c, {0.8, 0.1, 0.1}, 5);
  const engine::TrmForwardOperator f;
  std::vector<double> val;
  engine::Callbacks cb;
  cb.on_log_row = [&](const engine::LogRow& r) {
    if (r.split == "validation") {
      val.push_back(r.mean_snr);
      std::printf("  [6] iteration %zu validation %.3f dB (%.0f s)\n", r.iteration, r.mean_snr, seconds_since(t0));
      std::fflush(stdout);
    }
  };
  engine::run_emssl(corpus::to_dataset(c), f, m, desk_config(30), cb);

  // validation after the last update; the log's iteration-30 row precedes it
  std::vector<engine::Observation> validation;
  for (const auto* clip : c.in_split(corpus::Split::kValidation)) validation.push_back({clip->id, clip->mel});
  const double final_snr = metrics::mean_std(engine::evaluate_clips(m, f, validation)).mean;

  Outcome o;
  if (val.size() != 30) return {false, "expected 30 validation rows, got " + std::to_string(val.size())};
  const double gain = val[29] - val[0];
  bool monotone = true;
  double prev = -1e300;
  for (std::size_t t = 4; t < 20; ++t) {
    double ma = 0.0;
    for (std::size_t k = t - 4; k <= t; ++k) ma += val[k];
    ma /= 5.0;
    if (ma < prev) monotone = false;
    prev = ma;
  }
  const double dt = seconds_since(t0);
  o.pass = gain >= 6.0 && monotone && val[29] >= 10.0 && dt < 4.0 * 3600.0;
  o.detail = "iter1 " + fmt_double("%.2f", val[0]) + " iter30 " + fmt_double("%.2f", val[29]) + " dB (gain " +
             fmt_double("%.2f", gain) + "), after final update " + fmt_double("%.2f", final_snr) +
             ", moving average " + (monotone ? "non-decreasing" : "DECREASES") + ", " + fmt_double("%.0f s", dt);
  return o;
}

Outcome desk_adaptation(model::RegressorModel& m) {
  const auto t0 = Clock::now();
  corpus::SelfInversionSpec spec;
  spec.count = 60;
  spec.seed = 23;
  spec.id_prefix = "shift";
  spec.tract_length_cm = 15.0;
  spec.nasal_scale = 0.7;
  auto c = corpus::make_self_inversion_corpus(spec);
  corpus::split(c, {0.5, 0.5, 0.0}, 6);
  const auto ds = corpus::to_dataset(c);
  engine::Dataset data;
  data.train = ds.train;  // adaptation clips
  const auto& held_out = ds.validation;

  const engine::TrmForwardOperator f;
  auto snr = [&](const model::RegressorModel& mm, const std::vector<engine::Observation>& clips) {
    return metrics::mean_std(engine::evaluate_clips(mm, f, clips)).mean;
  };
  const double adapt0 = snr(m, data.train), held0 = snr(m, held_out);
  double best_gain = -1e300, held_last = held0;
  engine::Callbacks cb;
  cb.on_iteration_end = [&](std::size_t t, const model::RegressorModel& mm) {
    const double a = snr(mm, data.train);
    held_last = snr(mm, held_out);
    best_gain = std::max(best_gain, a - adapt0);
    std::printf("  [7] iteration %zu adaptation %.3f held-out %.3f dB\n", t, a, held_last);
    std::fflush(stdout);
  };
  // fewer pairs than the original run, so smaller batches and a larger step
  auto cfg = desk_config(10);
  cfg.learning_rate = 1e-3;
  cfg.batch_size = 16;
  engine::adapt(data, f, m, cfg, cb);
  const bool pass = best_gain >= 1.0 && held_last >= held0;
  return {pass, "adaptation " + fmt_double("%.2f", adapt0) + " dB, best gain " + fmt_double("%.2f", best_gain) +
                    " dB in 10 iterations; held-out " + fmt_double("%.2f", held0) + " -> " +
                    fmt_double("%.2f", held_last) + " dB, " + fmt_double("%.0f s", seconds_since(t0))};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> wanted;
  std::filesystem::path save_desk, load_desk;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--save-desk" && i + 1 < argc) {
      save_desk = argv[++i];
    } else if (a == "--load-desk" && i + 1 < argc) {
      load_desk = argv[++i];
    } else if (!a.empty() && std::isdigit(static_cast<unsigned char>(a[0]))) {
      wanted.insert(std::stoi(a));
    } else {
      std::fprintf(stderr, "usage: %s [1-8 ...] [--save-desk PATH] [--load-desk PATH]\n", argv[0]);
      return 2;
    }
  }
  if (wanted.empty()) wanted = {1, 2, 3, 4, 5, 6, 7, 8};

  bool all = true;
  auto report = [&](int n, const char* name, const std::function<Outcome()>& fn) {
    if (!wanted.count(n)) return;
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    all = all && o.pass;
    std::printf("%s criterion %d (%s): %s\n", o.pass ? "PASS" : "FAIL", n, name, o.detail.c_str());
    std::fflush(stdout);
  };

  report(1, "uniform tube resonances", tube_resonances);
  report(2, "gradient suite", gradients);
  report(3, "SNR metric examples", snr_examples);
  report(4, "training-set law", training_set_law);
  report(5, "toy linear oracle", toy_oracle);

  std::optional<model::RegressorModel> desk;
  if (!load_desk.empty()) desk = model::load_checkpoint(load_desk);
  report(6, "desk self-inversion", [&] {
    desk.emplace(model::ModelConfig::from_preset("desk", 1));
    auto o = desk_convergence(*desk);
    if (!save_desk.empty()) model::save_checkpoint(*desk, save_desk);
    return o;
  });
  report(7, "desk adaptation", [&]() -> Outcome {
    if (!desk) return {false, "needs criterion 6 or --load-desk"};
    return desk_adaptation(*desk);
  });

  report(8, "reproducibility", reproducibility);
  return all ? 0 : 1;
}
