#include <doctest.h>

#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "support.hpp"

using namespace emssl;
namespace fs = std::filesystem;

namespace {

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "emssl");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return cli::run(static_cast<int>(argv.size()), argv.data());
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  std::string l;
  while (std::getline(in, l)) out.push_back(l);
  return out;
}

void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

const char* kToyConfig =
    "[model]\npreset = linear\nseed = 2\n[emssl]\niterations = 50\nseed = 3\n[corpus]\nsource = toy\nseed = 1\n";

// Small self-inversion run shared by the invert/evaluate/adapt cases.
const fs::path& trained_run() {
  static const fs::path dir = [] {
    const auto d = test::temp_dir("cli_selfinv");
    write(d / "run.ini",
          "[emssl]\niterations = 2\nepochs = 1\nseed = 4\n[model]\nseed = 1\n[corpus]\ncount = 10\nseed = 7\n"
          "split = 8:1:1\nsplit_seed = 2\n");
    REQUIRE(run_cli({"train", "--config", (d / "run.ini").string(), "--out", (d / "out").string()}) == 0);
    return d;
  }();
  return dir;
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("toy training writes the full log and reruns byte-identically") {
    const auto d = test::temp_dir("cli_toy");
    write(d / "toy.ini", kToyConfig);
    REQUIRE(run_cli({"train", "--config", (d / "toy.ini").string(), "--out", (d / "a").string()}) == 0);
    const auto log = lines(d / "a" / "iterations.csv");
    REQUIRE(log.size() == 51);
    CHECK(log[0] == "iteration,split,mean_snr_db,std_snr_db,mean_loss,wall_time_s");
    CHECK(log[50].rfind("50,train,", 0) == 0);
    CHECK(fs::exists(d / "a" / "final.ckpt"));
    CHECK(fs::exists(d / "a" / "checkpoints" / "iter_050.ckpt"));
    const auto manifest = slurp(d / "a" / "run_manifest.txt");
    CHECK(manifest.find(kToyConfig) != std::string::npos);
    CHECK(manifest.find("drop_rate = 0.33") != std::string::npos);

    REQUIRE(run_cli({"train", "--config", (d / "toy.ini").string(), "--out", (d / "b").string()}) == 0);
    CHECK(slurp(d / "a" / "iterations.csv") == slurp(d / "b" / "iterations.csv"));
    CHECK(slurp(d / "a" / "final.ckpt") == slurp(d / "b" / "final.ckpt"));

    REQUIRE(run_cli({"train", "--config", (d / "toy.ini").string(), "--out", (d / "c").string(), "--seed-override",
                     "99"}) == 0);
    CHECK(slurp(d / "a" / "iterations.csv") != slurp(d / "c" / "iterations.csv"));
  }

  TEST_CASE("invalid configs fail validation before any work") {
    const auto d = test::temp_dir("cli_bad");
    write(d / "gamma.ini", "[emssl]\ndrop_rate = 1.2\n");
    CHECK(run_cli({"train", "--config", (d / "gamma.ini").string(), "--out", (d / "out").string()}) == 1);
    CHECK_FALSE(fs::exists(d / "out"));

    write(d / "key.ini", "[emssl]\ndrop_rat = 0.3\n");
    CHECK(run_cli({"train", "--config", (d / "key.ini").string(), "--out", (d / "out").string()}) == 1);
    write(d / "section.ini", "[optim]\nlr = 1\n");
    CHECK(run_cli({"train", "--config", (d / "section.ini").string(), "--out", (d / "out").string()}) == 1);
    write(d / "num.ini", "[emssl]\nepochs = ten\n");
    CHECK(run_cli({"train", "--config", (d / "num.ini").string(), "--out", (d / "out").string()}) == 1);
    write(d / "dir.ini", "[corpus]\nsource = directory\ndirectory = nowhere\n");
    CHECK(run_cli({"train", "--config", (d / "dir.ini").string(), "--out", (d / "out").string()}) == 1);
    write(d / "mismatch.ini", "[corpus]\nsource = toy\n");
    CHECK(run_cli({"train", "--config", (d / "mismatch.ini").string(), "--out", (d / "out").string()}) == 1);
    CHECK_FALSE(fs::exists(d / "out"));

    CHECK(run_cli({"train"}) == 1);
    CHECK(run_cli({"frobnicate"}) == 1);
    CHECK(run_cli({"--help"}) == 0);
  }

  TEST_CASE("config parsing") {
    const auto d = test::temp_dir("cli_parse");
    write(d / "c.ini",
          "# comment\n[model]\npreset = desk\nseed = 5\n[emssl]\nloss_weight = 1\nposterior_std = 0.1\n"
          "[corpus]\nsplit = 8:1:1\ncount = 20\n");
    const auto rc = cli::parse_config(d / "c.ini");
    CHECK(rc.model.seed == 5);
    CHECK(rc.emssl.loss_weight == 1.0);
    CHECK(rc.emssl.posterior_std == 0.1);
    CHECK(rc.count == 20);
    CHECK(rc.split_specified);
    CHECK(rc.split_ratios[0] == doctest::Approx(0.8));
    CHECK(rc.text == slurp(d / "c.ini"));
  }

  TEST_CASE("self-inversion training lays out corpus and checkpoints") {
    const auto& d = trained_run();
    const auto out = d / "out";
    CHECK(lines(out / "iterations.csv").size() == 1 + 2 * 2 + 1);
    CHECK(fs::exists(out / "corpus" / "manifest.csv"));
    CHECK(lines(out / "corpus" / "manifest.csv").size() == 11);
    std::size_t wavs = 0;
    for (const auto& e : fs::recursive_directory_iterator(out / "corpus")) {
      if (e.path().extension() == ".wav") {
        ++wavs;
        CHECK(fs::exists(fs::path(e.path()).replace_extension(".utterance.txt")));
        CHECK(fs::exists(fs::path(e.path()).replace_extension(".control.csv")));
      }
    }
    CHECK(wavs == 10);
    CHECK(fs::exists(out / "checkpoints" / "iter_001.ckpt"));
    CHECK(fs::exists(out / "checkpoints" / "iter_002.ckpt"));
  }

  TEST_CASE("ground-truth parameter files resynthesize their clip") {
    const auto& d = trained_run();
    const auto dir = d / "out" / "corpus" / "train";
    fs::path wav;
    for (const auto& e : fs::directory_iterator(dir)) {
      if (e.path().extension() == ".wav") {
        wav = e.path();
        break;
      }
    }
    REQUIRE_FALSE(wav.empty());
    const auto stem = wav.stem().string();
    REQUIRE(run_cli({"synthesize", (dir / (stem + ".utterance.txt")).string(), (dir / (stem + ".control.csv")).string(),
                     "--out", (d / "gt.wav").string()}) == 0);
    CHECK(slurp(d / "gt.wav") == slurp(wav));
  }

  TEST_CASE("invert, synthesize and evaluate agree with the training log") {
    const auto& d = trained_run();
    const auto test_dir = d / "out" / "corpus" / "test";
    fs::path wav;
    for (const auto& e : fs::directory_iterator(test_dir)) {
      if (e.path().extension() == ".wav") wav = e.path();
    }
    REQUIRE_FALSE(wav.empty());
    const auto ckpt = (d / "out" / "final.ckpt").string();

    REQUIRE(run_cli({"invert", "--checkpoint", ckpt, "--out", (d / "inv").string(), wav.string()}) == 0);
    const auto control = lines(d / "inv" / "control.csv");
    REQUIRE(control.size() > 2);
    CHECK(std::count(control[0].begin(), control[0].end(), ',') == 15);
    CHECK(control[0].rfind("glottal_pitch,", 0) == 0);
    const auto snr = lines(d / "inv" / "snr.csv");
    REQUIRE(snr.size() == 2);
    CHECK(snr[0] == "clip_id,sentence_snr_db");

    REQUIRE(run_cli({"synthesize", (d / "inv" / "utterance.txt").string(), (d / "inv" / "control.csv").string(),
                     "--out", (d / "again.wav").string()}) == 0);
    CHECK(slurp(d / "again.wav") == slurp(d / "inv" / "resynth.wav"));

    // the single test clip: its SNR is the logged test mean, std 0
    REQUIRE(run_cli({"evaluate", "--checkpoint", ckpt, "--out", (d / "ev").string(), test_dir.string()}) == 0);
    const auto summary = lines(d / "ev" / "summary.csv");
    REQUIRE(summary.size() == 2);
    CHECK(summary[0] == "clips,mean_snr_db,std_snr_db");
    const auto log = lines(d / "out" / "iterations.csv");
    const auto& test_row = log.back();
    REQUIRE(test_row.find(",test,") != std::string::npos);
    auto field = [](const std::string& row, int k) {
      std::stringstream ss(row);
      std::string cell;
      for (int i = 0; i <= k; ++i) std::getline(ss, cell, ',');
      return std::stod(cell);
    };
    CHECK(std::abs(field(summary[1], 1) - field(test_row, 2)) < 0.01);
    CHECK(field(summary[1], 2) == 0.0);
    CHECK(std::abs(field(snr[1], 1) - field(test_row, 2)) < 0.01);
    const auto bins = lines(d / "ev" / "bin_stats.csv");
    CHECK(bins.size() == 81);
    CHECK(bins[0] == "bin,median,p25,p75,lo_whisker,hi_whisker,outlier_count");
  }

  TEST_CASE("adapt logs one row per iteration and zero iterations change nothing") {
    const auto& d = trained_run();
    const auto ckpt = (d / "out" / "final.ckpt").string();
    const auto clips = (d / "out" / "corpus" / "train").string();
    write(d / "adapt.ini", "[emssl]\niterations = 2\nepochs = 1\n");
    REQUIRE(run_cli({"adapt", "--checkpoint", ckpt, "--config", (d / "adapt.ini").string(), "--out",
                     (d / "ad").string(), clips}) == 0);
    const auto log = lines(d / "ad" / "adaptation.csv");
    CHECK(log.size() == 3);

    write(d / "zero.ini", "[emssl]\niterations = 0\n");
    REQUIRE(run_cli({"adapt", "--checkpoint", ckpt, "--config", (d / "zero.ini").string(), "--out",
                     (d / "ad0").string(), clips}) == 0);
    CHECK(lines(d / "ad0" / "adaptation.csv").size() == 1);
    REQUIRE(run_cli({"evaluate", "--checkpoint", ckpt, "--out", (d / "e1").string(), clips}) == 0);
    REQUIRE(run_cli({"evaluate", "--checkpoint", (d / "ad0" / "final.ckpt").string(), "--out", (d / "e2").string(),
                     clips}) == 0);
    CHECK(slurp(d / "e1" / "snr.csv") == slurp(d / "e2" / "snr.csv"));
  }

  TEST_CASE("bad inputs give a nonzero exit") {
    const auto& d = trained_run();
    write(d / "u.txt", "master_volume_db = 60\n");
    write(d / "empty.csv", "");
    CHECK(run_cli({"synthesize", (d / "u.txt").string(), (d / "empty.csv").string(), "--out",
                   (d / "x.wav").string()}) == 1);
    write(d / "garbage.wav", "RIFF....");
    CHECK(run_cli({"invert", "--checkpoint", (d / "out" / "final.ckpt").string(), "--out", (d / "g").string(),
                   (d / "garbage.wav").string()}) == 2);
    write(d / "bad.ckpt", "nope");
    CHECK(run_cli({"invert", "--checkpoint", (d / "bad.ckpt").string(), "--out", (d / "g").string(),
                   (d / "gt.wav").string()}) == 2);
    const auto toy = test::temp_dir("cli_toy_ckpt");
    write(toy / "toy.ini", kToyConfig);
    REQUIRE(run_cli({"train", "--config", (toy / "toy.ini").string(), "--out", (toy / "o").string()}) == 0);
    CHECK(run_cli({"evaluate", "--checkpoint", (toy / "o" / "final.ckpt").string(), "--out", (toy / "e").string(),
                   (d / "out" / "corpus" / "train").string()}) == 1);
  }
}
