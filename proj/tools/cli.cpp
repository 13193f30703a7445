#include "cli.hpp"

#include <charconv>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "emssl/audio/wav.hpp"
#include "emssl/corpus/corpus.hpp"
#include "emssl/engine/forward_op.hpp"
#include "emssl/features/mel.hpp"
#include "emssl/metrics/snr.hpp"
#include "emssl/trm/param_io.hpp"
#include "emssl/trm/synth.hpp"

namespace emssl::cli {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;

namespace {

[[noreturn]] void bad_key(const std::string& section, const std::string& key, const std::string& msg) {
  throw ValidationError(fmt::format("config [{}] {}: {}", section, key, msg));
}

double parse_real(const std::string& section, const std::string& key, const std::string& text) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) bad_key(section, key, "expected a number, got '" + text + "'");
  return v;
}

std::uint64_t parse_uint(const std::string& section, const std::string& key, const std::string& text) {
  std::uint64_t v = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) bad_key(section, key, "expected a non-negative integer, got '" + text + "'");
  return v;
}

bool parse_bool(const std::string& section, const std::string& key, const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  bad_key(section, key, "expected true or false, got '" + text + "'");
}

// "8:1:1" or "0.8,0.1,0.1"; normalized to sum 1
std::array<double, 3> parse_ratios(const std::string& key, const std::string& text) {
  std::array<double, 3> r{};
  std::size_t n = 0, start = 0;
  while (true) {
    const auto sep = text.find_first_of(":,", start);
    const auto cell = text.substr(start, sep == std::string::npos ? std::string::npos : sep - start);
    if (n == 3) bad_key("corpus", key, "expected three ratios");
    r[n++] = parse_real("corpus", key, cell);
    if (sep == std::string::npos) break;
    start = sep + 1;
  }
  const double sum = r[0] + r[1] + r[2];
  if (n != 3 || r[0] < 0 || r[1] < 0 || r[2] < 0 || sum <= 0) bad_key("corpus", key, "expected three non-negative ratios");
  for (double& v : r) v /= sum;
  return r;
}

void apply_model(RunConfig& rc, const pt::ptree& sec) {
  std::string preset = rc.model.preset;
  std::optional<std::uint64_t> seed;
  for (const auto& [key, node] : sec) {
    const auto value = node.get_value<std::string>();
    if (key == "preset") {
      preset = value;
    } else if (key == "seed") {
      seed = parse_uint("model", key, value);
    } else {
      bad_key("model", key, "unknown key");
    }
  }
  rc.model = model::ModelConfig::from_preset(preset, seed.value_or(rc.model.seed));
}

void apply_emssl(engine::EmsslConfig& c, const pt::ptree& sec) {
  for (const auto& [key, node] : sec) {
    const auto v = node.get_value<std::string>();
    if (key == "samples_per_datapoint") c.samples_per_datapoint = parse_uint("emssl", key, v);
    else if (key == "iterations") c.iterations = parse_uint("emssl", key, v);
    else if (key == "epochs") c.epochs = parse_uint("emssl", key, v);
    else if (key == "batch_size") c.batch_size = parse_uint("emssl", key, v);
    else if (key == "drop_rate") c.drop_rate = parse_real("emssl", key, v);
    else if (key == "posterior_std") c.posterior_std = parse_real("emssl", key, v);
    else if (key == "loss_weight") c.loss_weight = parse_real("emssl", key, v);
    else if (key == "learning_rate") c.learning_rate = parse_real("emssl", key, v);
    else if (key == "beta1") c.beta1 = parse_real("emssl", key, v);
    else if (key == "beta2") c.beta2 = parse_real("emssl", key, v);
    else if (key == "seed") c.seed = parse_uint("emssl", key, v);
    else if (key == "workers") c.workers = parse_uint("emssl", key, v);
    else if (key == "log_wall_time") c.log_wall_time = parse_bool("emssl", key, v);
    else bad_key("emssl", key, "unknown key");
  }
}

void apply_corpus(RunConfig& rc, const pt::ptree& sec, const fs::path& base_dir) {
  for (const auto& [key, node] : sec) {
    const auto v = node.get_value<std::string>();
    if (key == "source") {
      if (v != "self_inversion" && v != "directory" && v != "toy") {
        bad_key("corpus", key, "expected self_inversion, directory or toy, got '" + v + "'");
      }
      rc.source = v;
    } else if (key == "directory") {
      const fs::path p(v);
      rc.directory = p.is_absolute() ? p : base_dir / p;
    } else if (key == "split") {
      rc.split_ratios = parse_ratios(key, v);
      rc.split_specified = true;
    } else if (key == "split_seed") {
      rc.split_seed = parse_uint("corpus", key, v);
    } else if (key == "count") {
      rc.count = parse_uint("corpus", key, v);
    } else if (key == "min_duration_s") {
      rc.min_duration_s = parse_real("corpus", key, v);
    } else if (key == "max_duration_s") {
      rc.max_duration_s = parse_real("corpus", key, v);
    } else if (key == "tract_length_cm") {
      rc.tract_length_cm = parse_real("corpus", key, v);
    } else if (key == "tract_length_jitter_cm") {
      rc.tract_length_jitter_cm = parse_real("corpus", key, v);
    } else if (key == "nasal_scale") {
      rc.nasal_scale = parse_real("corpus", key, v);
    } else if (key == "seed") {
      rc.corpus_seed = parse_uint("corpus", key, v);
    } else if (key == "dz") {
      rc.toy_dz = parse_uint("corpus", key, v);
    } else if (key == "dx") {
      rc.toy_dx = parse_uint("corpus", key, v);
    } else if (key == "n") {
      rc.toy_n = parse_uint("corpus", key, v);
    } else if (key == "noise_std") {
      rc.toy_noise_std = parse_real("corpus", key, v);
    } else {
      bad_key("corpus", key, "unknown key");
    }
  }
}

void validate_run_config(RunConfig& rc) {
  rc.emssl.validate();
  if (rc.source == "toy") {
    if (rc.model.preset != "linear") throw ValidationError("config: corpus source 'toy' needs model preset 'linear'");
    rc.model.input_bins = rc.toy_dx;
    rc.model.utterance_dims = rc.toy_dz;
    if (rc.toy_dz == 0 || rc.toy_dx < rc.toy_dz) throw ValidationError("config [corpus]: need 0 < dz <= dx");
    if (rc.toy_n == 0) throw ValidationError("config [corpus] n: must be positive");
    if (!(rc.toy_noise_std >= 0.0)) throw ValidationError("config [corpus] noise_std: must be non-negative");
  } else {
    if (rc.model.preset == "linear") throw ValidationError("config: model preset 'linear' only fits corpus source 'toy'");
  }
  if (rc.source == "directory") {
    if (rc.directory.empty()) throw ValidationError("config [corpus] directory: required for source 'directory'");
    if (!fs::is_directory(rc.directory)) {
      throw ValidationError("config [corpus] directory: no such directory " + rc.directory.string());
    }
  }
  if (rc.source == "self_inversion") {
    if (rc.count == 0) throw ValidationError("config [corpus] count: must be positive");
    if (!(rc.min_duration_s > 0.0 && rc.min_duration_s <= rc.max_duration_s)) {
      throw ValidationError("config [corpus]: need 0 < min_duration_s <= max_duration_s");
    }
    if (!(rc.tract_length_cm > 0.0) || rc.tract_length_jitter_cm < 0.0 || !(rc.nasal_scale > 0.0)) {
      throw ValidationError("config [corpus]: tract length and nasal scale must be positive");
    }
  }
  rc.model.validate();
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---------------------------------------------------------------------------
// output helpers

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

class LogWriter {
 public:
  explicit LogWriter(const fs::path& path) : out_(path, std::ios::binary) {
    if (!out_) throw IoError("cannot write " + path.string());
    out_ << engine::log_header() << '\n' << std::flush;
  }
  void operator()(const engine::LogRow& r) {
    out_ << engine::format_log_row(r) << '\n' << std::flush;
    spdlog::info("iteration {} {}: {:.3f} +- {:.3f} dB, loss {:.6g}", r.iteration, r.split, r.mean_snr, r.std_snr,
                 r.mean_loss);
  }

 private:
  std::ofstream out_;
};

engine::Callbacks make_callbacks(LogWriter& log, const fs::path& out) {
  fs::create_directories(out / "checkpoints");
  engine::Callbacks cb;
  cb.on_log_row = [&log](const engine::LogRow& r) { log(r); };
  cb.on_iteration_end = [out](std::size_t t, const model::RegressorModel& m) {
    model::save_checkpoint(m, out / "checkpoints" / fmt::format("iter_{:03d}.ckpt", t));
  };
  return cb;
}

void write_run_manifest(const fs::path& path, const fs::path& config_path, const RunConfig& rc,
                        const std::string& status) {
  std::string text = fmt::format("# config file: {}\n", config_path.string());
  text += "# --- verbatim ---\n" + rc.text;
  if (!rc.text.empty() && rc.text.back() != '\n') text += '\n';
  text += "# --- resolved ---\n[emssl]\n" + rc.emssl.to_text() + "workers = " + std::to_string(rc.emssl.workers) +
          "\n[model]\n" + rc.model.to_text();
  if (text.back() != '\n') text += '\n';
  text += "# status: " + status + "\n";
  write_file(path, text);
}

void write_snr_csv(const fs::path& path, const std::vector<std::string>& ids, const std::vector<double>& snr) {
  std::string text = "clip_id,sentence_snr_db\n";
  for (std::size_t i = 0; i < ids.size(); ++i) text += fmt::format("{},{:.6f}\n", ids[i], snr[i]);
  write_file(path, text);
}

corpus::Corpus corpus_from_split_dirs(const fs::path& root) {
  corpus::Corpus all;
  for (auto s : {corpus::Split::kTrain, corpus::Split::kValidation, corpus::Split::kTest}) {
    const auto dir = root / std::string(corpus::split_name(s));
    if (!fs::is_directory(dir)) continue;
    auto part = corpus::load_wav_corpus(dir);
    for (auto& c : part.clips) {
      c.split = s;
      all.clips.push_back(std::move(c));
    }
  }
  return all;
}

// Renders the self-inversion corpus to disk, one directory per split, with
// the parameter files each clip was rendered from next to its WAV.
void write_self_inversion(corpus::Corpus& c, const fs::path& root) {
  const engine::TrmForwardOperator f;
  for (auto& clip : c.clips) {
    const auto dir = root / std::string(corpus::split_name(clip.split));
    fs::create_directories(dir);
    clip.path = dir / (clip.id + ".wav");
    write_wav(clip.path, *clip.audio);
    const auto p = engine::to_physical(clip.truth->z, f.base());
    trm::write_utterance_file(dir / (clip.id + ".utterance.txt"), p.utterance, clip.truth->noise_seed);
    trm::write_control_csv(dir / (clip.id + ".control.csv"), p.track);
  }
  corpus::write_manifest(root / "manifest.csv", c);
}

model::RegressorModel load_speech_checkpoint(const fs::path& path) {
  auto m = model::load_checkpoint(path);
  if (m.config().preset == "linear") {
    throw ValidationError(path.string() + ": checkpoint holds a linear toy model, not a speech model");
  }
  return m;
}

// ---------------------------------------------------------------------------
// commands

struct Options {
  fs::path config;
  fs::path checkpoint;
  fs::path out;
  std::optional<std::size_t> workers;
  std::optional<std::uint64_t> seed_override;
  std::vector<fs::path> inputs;
};

int cmd_train(const Options& o) {
  RunConfig rc = parse_config(o.config);
  if (o.seed_override) {
    rc.emssl.seed = rc.model.seed = rc.corpus_seed = rc.split_seed = *o.seed_override;
  }
  if (o.workers) rc.emssl.workers = *o.workers;
  validate_run_config(rc);

  fs::create_directories(o.out);
  write_run_manifest(o.out / "run_manifest.txt", o.config, rc, "running");

  model::RegressorModel m(rc.model);
  LogWriter log(o.out / "iterations.csv");
  const auto cb = make_callbacks(log, o.out);

  if (rc.source == "toy") {
    const auto problem =
        corpus::make_toy_linear_problem(rc.toy_dz, rc.toy_dx, rc.toy_n, rc.toy_noise_std, rc.corpus_seed);
    const corpus::LinearForwardOperator f(problem.a, problem.noise_std);
    engine::run_emssl(problem.dataset(), f, m, rc.emssl, cb);
    write_file(o.out / "toy_report.csv",
               fmt::format("reconstruction_mse\n{:.9g}\n", corpus::reconstruction_mse(problem, m)));
  } else {
    corpus::Corpus c;
    if (rc.source == "self_inversion") {
      corpus::SelfInversionSpec spec;
      spec.count = rc.count;
      spec.min_duration_s = rc.min_duration_s;
      spec.max_duration_s = rc.max_duration_s;
      spec.tract_length_cm = rc.tract_length_cm;
      spec.tract_length_jitter_cm = rc.tract_length_jitter_cm;
      spec.nasal_scale = rc.nasal_scale;
      spec.seed = rc.corpus_seed;
      auto generated = corpus::make_self_inversion_corpus(spec);
      corpus::split(generated, rc.split_ratios, rc.split_seed);
      write_self_inversion(generated, o.out / "corpus");
      // train on exactly what was written, as any later evaluation will
      c = corpus_from_split_dirs(o.out / "corpus");
    } else {
      corpus::LoadReport report;
      c = corpus::load_wav_corpus(rc.directory, &report);
      for (const auto& [path, why] : report.skipped) spdlog::warn("skipped {}: {}", path.string(), why);
      corpus::split(c, rc.split_ratios, rc.split_seed);
      corpus::write_manifest(o.out / "manifest.csv", c);
    }
    const engine::TrmForwardOperator f;
    engine::run_emssl(corpus::to_dataset(c), f, m, rc.emssl, cb);
  }
  model::save_checkpoint(m, o.out / "final.ckpt");
  write_run_manifest(o.out / "run_manifest.txt", o.config, rc, "complete");
  return kOk;
}

int cmd_invert(const Options& o) {
  const auto m = load_speech_checkpoint(o.checkpoint);
  const auto clip = corpus::load_clip(o.inputs.at(0));
  const engine::TrmForwardOperator f;
  const auto z = m.forward(clip.mel);
  const std::uint64_t seed = o.seed_override.value_or(engine::evaluation_seed(clip.id));
  const auto p = engine::to_physical(z, f.base());
  const auto w = trm::synthesize(p.utterance, p.track, seed);
  const auto xh = engine::TrmForwardOperator::features(w, clip.mel.rows());
  const double snr = metrics::sentence_snr(clip.mel, xh);

  fs::create_directories(o.out);
  trm::write_utterance_file(o.out / "utterance.txt", p.utterance, seed);
  trm::write_control_csv(o.out / "control.csv", p.track);
  write_wav(o.out / "resynth.wav", w);
  write_snr_csv(o.out / "snr.csv", {clip.id}, {snr});
  std::cout << fmt::format("{}: sentence SNR {:.3f} dB\n", clip.id, snr);
  return kOk;
}

int cmd_synthesize(const Options& o) {
  if (o.inputs.size() != 2) throw ValidationError("synthesize needs an utterance file and a control CSV");
  const auto uf = trm::read_utterance_file(o.inputs[0]);
  const auto track = trm::read_control_csv(o.inputs[1], uf.params.control_rate_hz);
  const std::uint64_t seed = o.seed_override.value_or(uf.noise_seed.value_or(0));
  const auto w = trm::synthesize(uf.params, track, seed);
  if (o.out.has_parent_path()) fs::create_directories(o.out.parent_path());
  write_wav(o.out, w);
  std::cout << fmt::format("duration_s={:.6f} peak={:.6f}\n", w.duration_s(), peak(w));
  return kOk;
}

int cmd_adapt(const Options& o) {
  RunConfig rc = parse_config(o.config);
  if (o.seed_override) rc.emssl.seed = *o.seed_override;
  if (o.workers) rc.emssl.workers = *o.workers;
  rc.emssl.validate();
  auto m = load_speech_checkpoint(o.checkpoint);
  rc.model = m.config();

  corpus::LoadReport report;
  auto c = corpus::load_wav_corpus(o.inputs.at(0), &report);
  for (const auto& [path, why] : report.skipped) spdlog::warn("skipped {}: {}", path.string(), why);
  if (rc.split_specified) {
    corpus::split(c, rc.split_ratios, rc.split_seed);
  } else {
    for (auto& clip : c.clips) clip.split = corpus::Split::kTrain;
  }

  fs::create_directories(o.out);
  write_run_manifest(o.out / "run_manifest.txt", o.config, rc, "running");
  corpus::write_manifest(o.out / "manifest.csv", c);
  LogWriter log(o.out / "adaptation.csv");
  const engine::TrmForwardOperator f;
  engine::adapt(corpus::to_dataset(c), f, m, rc.emssl, make_callbacks(log, o.out));
  model::save_checkpoint(m, o.out / "final.ckpt");
  write_run_manifest(o.out / "run_manifest.txt", o.config, rc, "complete");
  return kOk;
}

int cmd_evaluate(const Options& o) {
  const auto m = load_speech_checkpoint(o.checkpoint);
  corpus::LoadReport report;
  const auto c = corpus::load_wav_corpus(o.inputs.at(0), &report);
  for (const auto& [path, why] : report.skipped) spdlog::warn("skipped {}: {}", path.string(), why);
  const engine::TrmForwardOperator f;

  std::vector<std::string> ids;
  std::vector<double> snr;
  Matrix pooled(0, features::kMelBins);
  for (const auto& clip : c.clips) {
    const auto xh = engine::resynthesize(m, f, {clip.id, clip.mel});
    ids.push_back(clip.id);
    const Matrix local =
        xh ? metrics::local_snr(clip.mel, *xh) : Matrix(clip.mel.rows(), clip.mel.cols(), -metrics::kSnrCapDb);
    snr.push_back(xh ? metrics::sentence_snr(clip.mel, *xh) : -metrics::kSnrCapDb);
    const std::size_t r0 = pooled.rows();
    pooled.resize_rows(r0 + local.rows());
    std::copy(local.data().begin(), local.data().end(), pooled.data().begin() + r0 * pooled.cols());
  }
  const auto ms = metrics::mean_std(snr);
  const auto stats = metrics::bin_snr_stats(pooled);

  fs::create_directories(o.out);
  write_snr_csv(o.out / "snr.csv", ids, snr);
  write_file(o.out / "summary.csv",
             fmt::format("clips,mean_snr_db,std_snr_db\n{},{:.6f},{:.6f}\n", ids.size(), ms.mean, ms.std));
  std::string bins = "bin,median,p25,p75,lo_whisker,hi_whisker,outlier_count\n";
  for (std::size_t b = 0; b < stats.bins.size(); ++b) {
    const auto& s = stats.bins[b];
    bins += fmt::format("{},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{}\n", b, s.median, s.p25, s.p75, s.whisker_low,
                        s.whisker_high, s.outliers.size());
  }
  write_file(o.out / "bin_stats.csv", bins);
  std::cout << fmt::format("{} clips: sentence SNR {:.3f} +- {:.3f} dB\n", ids.size(), ms.mean, ms.std);
  return kOk;
}

}  // namespace

RunConfig parse_config(const fs::path& path) {
  RunConfig rc;
  rc.text = read_text(path);
  pt::ptree tree;
  try {
    std::istringstream in(rc.text);
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ValidationError(fmt::format("{}:{}: {}", path.string(), e.line(), e.message()));
  }
  std::set<std::string> seen;
  // [model] first so that a later seed override does not depend on order
  if (auto sec = tree.get_child_optional("model")) apply_model(rc, *sec);
  for (const auto& [name, sec] : tree) {
    if (sec.empty() && !sec.data().empty()) throw ValidationError("config: key '" + name + "' outside any section");
    if (name == "model") continue;
    if (name == "emssl") apply_emssl(rc.emssl, sec);
    else if (name == "corpus") apply_corpus(rc, sec, path.parent_path());
    else throw ValidationError("config: unknown section [" + name + "]");
  }
  validate_run_config(rc);
  return rc;
}

int run(int argc, const char* const* argv) {
  if (!spdlog::get("emssl")) spdlog::set_default_logger(spdlog::stderr_color_st("emssl"));

  CLI::App app{"Articulatory inversion by embodied self-supervised learning"};
  app.require_subcommand(1);
  Options o;
  std::size_t workers = 0;
  std::uint64_t seed_override = 0;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--workers", workers, "Worker threads for the sampling step")->check(CLI::PositiveNumber);
    sub->add_option("--seed-override", seed_override, "Replace every configured seed");
  };

  auto* train = app.add_subcommand("train", "Run the training loop from a config file");
  train->add_option("--config", o.config)->required()->check(CLI::ExistingFile);
  train->add_option("--out", o.out)->required();
  add_common(train);

  auto* invert = app.add_subcommand("invert", "Infer synthesizer parameters for one WAV");
  invert->add_option("--checkpoint", o.checkpoint)->required()->check(CLI::ExistingFile);
  invert->add_option("--out", o.out)->required();
  invert->add_option("wav", o.inputs)->required()->expected(1)->check(CLI::ExistingFile);
  invert->add_option("--seed-override", seed_override, "Noise seed for the resynthesis");

  auto* synth = app.add_subcommand("synthesize", "Render parameter files to a WAV");
  synth->add_option("params", o.inputs, "Utterance file then control CSV")->required()->expected(2);
  synth->add_option("--out", o.out, "Output WAV")->required();
  synth->add_option("--seed-override", seed_override, "Noise seed (default: the utterance file's)");

  auto* adapt = app.add_subcommand("adapt", "Continue training from a checkpoint on new clips");
  adapt->add_option("--checkpoint", o.checkpoint)->required()->check(CLI::ExistingFile);
  adapt->add_option("--config", o.config)->required()->check(CLI::ExistingFile);
  adapt->add_option("--out", o.out)->required();
  adapt->add_option("wav_dir", o.inputs)->required()->expected(1)->check(CLI::ExistingDirectory);
  add_common(adapt);

  auto* evaluate = app.add_subcommand("evaluate", "Score a checkpoint on a directory of WAVs");
  evaluate->add_option("--checkpoint", o.checkpoint)->required()->check(CLI::ExistingFile);
  evaluate->add_option("--out", o.out)->required();
  evaluate->add_option("corpus_dir", o.inputs)->required()->expected(1)->check(CLI::ExistingDirectory);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }
  for (auto* sub : app.get_subcommands()) {
    for (const auto* opt : sub->get_options()) {
      if (opt->count() == 0) continue;
      if (opt->get_name() == "--workers") o.workers = workers;
      if (opt->get_name() == "--seed-override") o.seed_override = seed_override;
    }
  }

  try {
    if (train->parsed()) return cmd_train(o);
    if (invert->parsed()) return cmd_invert(o);
    if (synth->parsed()) return cmd_synthesize(o);
    if (adapt->parsed()) return cmd_adapt(o);
    return cmd_evaluate(o);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const ShapeError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntime;
  }
}

}  // namespace emssl::cli
