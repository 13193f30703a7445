#include <doctest.h>

#include <cmath>

#include "emssl/corpus/corpus.hpp"
#include "emssl/engine/engine.hpp"
#include "emssl/features/mel.hpp"
#include "emssl/metrics/snr.hpp"

using namespace emssl;
using namespace emssl::engine;

namespace {

TrainingSet dummy_set(std::size_t n, std::size_t tag) {
  TrainingSet s(n);
  for (std::size_t i = 0; i < n; ++i) {
    s[i].iteration = tag;
    s[i].source_id = std::to_string(tag) + ":" + std::to_string(i);
  }
  return s;
}

// Linear operator that refuses every seed divisible by `every`.
class FlakyOperator : public ForwardOperator {
 public:
  FlakyOperator(Matrix a, std::uint64_t every) : inner_(std::move(a), 0.0), every_(every) {}
  std::optional<Matrix> evaluate(const model::Latent& z, std::size_t frames, std::uint64_t seed) const override {
    if (seed % every_ == 0) return std::nullopt;
    return inner_.evaluate(z, frames, seed);
  }

 private:
  corpus::LinearForwardOperator inner_;
  std::uint64_t every_;
};

model::RegressorModel toy_model(std::size_t dx, std::size_t dz, std::uint64_t seed) {
  auto cfg = model::ModelConfig::from_preset("linear", seed);
  cfg.input_bins = dx;
  cfg.utterance_dims = dz;
  return model::RegressorModel(cfg);
}

}  // namespace

TEST_SUITE("engine") {
  TEST_CASE("config validation") {
    EmsslConfig c;
    CHECK_NOTHROW(c.validate());
    c.drop_rate = 1.2;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c = EmsslConfig{};
    c.samples_per_datapoint = 3;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c.posterior_std = 0.1;
    CHECK_NOTHROW(c.validate());
    c.samples_per_datapoint = 0;
    CHECK_THROWS_AS(c.validate(), ValidationError);
    c = EmsslConfig{};
    c.posterior_std = -1.0;
    CHECK_THROWS_AS(c.validate(), ValidationError);
  }

  TEST_CASE("posterior sampling") {
    model::RegressorModel m(model::ModelConfig::from_preset("desk", 3));
    Rng rng(1);
    Matrix x(6, 80);
    std::normal_distribution<double> nd(-3.0, 1.0);
    for (double& v : x.data()) v = nd(rng);
    const auto mean = m.forward(x);
    const auto det = sample_posterior(m, x, 0.0, 1, 5);
    REQUIRE(det.size() == 1);
    CHECK(det[0].control == mean.control);
    CHECK(det[0].utterance == mean.utterance);

    const auto s = sample_posterior(m, x, 0.1, 1000, 7);
    const auto again = sample_posterior(m, x, 0.1, 1000, 7);
    CHECK(s.size() == 1000);
    for (std::size_t d = 0; d < 13; ++d) {
      if (std::abs(mean.utterance[d]) > 0.6) continue;
      double sum = 0.0, sq = 0.0;
      for (const auto& z : s) {
        sum += z.utterance[d];
        sq += z.utterance[d] * z.utterance[d];
      }
      const double mu = sum / 1000.0;
      const double sd = std::sqrt(sq / 1000.0 - mu * mu);
      CHECK(sd == doctest::Approx(0.1).epsilon(0.1));
    }
    for (std::size_t l = 0; l < s.size(); ++l) {
      REQUIRE(s[l].utterance == again[l].utterance);
      for (double v : s[l].control.data()) REQUIRE((v > -1.0 && v < 1.0));
    }
  }

  TEST_CASE("generate_pairs keeps the source frame count and is deterministic") {
    const TrmForwardOperator f;
    model::Latent z;
    z.control = Matrix(80, 16, 0.0);
    z.utterance.assign(13, 0.0);
    const std::vector<PairRequest> req{{&z, "a", 80, 11}, {&z, "b", 80, 12}};
    const auto a = generate_pairs(f, req, 1);
    const auto b = generate_pairs(f, req, 1);
    REQUIRE(a.size() == 2);
    CHECK(a[0].x.rows() == 80);
    CHECK(a[0].x.cols() == 80);
    CHECK(a[0].x == b[0].x);
    CHECK(a[1].source_id == "b");
    CHECK(a[1].iteration == 1);

    model::Latent silent = z;
    silent.control = Matrix(40, 16, -1.0);
    for (double& v : silent.control.data()) v = -1.0;
    for (double& v : silent.utterance) v = -1.0;
    const std::vector<PairRequest> quiet{{&silent, "s", 40, 3}};
    const auto q = generate_pairs(f, quiet, 1);
    REQUIRE(q.size() == 1);
    for (double v : q[0].x.data()) REQUIRE(v < std::log(features::kLogFloor) + 0.5);

    const auto threaded = generate_pairs(f, req, 1, 2);
    CHECK(threaded[0].x == a[0].x);
    CHECK(threaded[1].x == a[1].x);
  }

  TEST_CASE("failed syntheses are dropped") {
    Matrix a(3, 2, 0.5);
    const FlakyOperator f(a, 2);
    const model::Latent z = corpus::toy_latent({0.1, 0.2});
    const std::vector<PairRequest> req{{&z, "a", 1, 1}, {&z, "b", 1, 2}, {&z, "c", 1, 3}};
    const auto out = generate_pairs(f, req, 4);
    REQUIRE(out.size() == 2);
    CHECK(out[0].source_id == "a");
    CHECK(out[1].source_id == "c");
  }

  TEST_CASE("training-set update counts") {
    auto phi = update_training_set(dummy_set(300, 0), dummy_set(100, 1), 0.33, 9);
    CHECK(phi.size() == 301);
    std::size_t fresh = 0;
    for (const auto& s : phi) fresh += s.iteration == 1;
    CHECK(fresh == 100);

    const auto kept = update_training_set(dummy_set(50, 0), dummy_set(10, 1), 0.0, 9);
    CHECK(kept.size() == 60);
    for (std::size_t i = 0; i < 50; ++i) CHECK(kept[i].source_id == "0:" + std::to_string(i));

    const auto a = update_training_set(dummy_set(40, 0), {}, 0.5, 3);
    const auto b = update_training_set(dummy_set(40, 0), {}, 0.5, 3);
    REQUIRE(a.size() == 20);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].source_id == b[i].source_id);
    CHECK_THROWS_AS(update_training_set({}, {}, 1.0, 0), ValidationError);
  }

  TEST_CASE("training-set size follows the recurrence") {
    TrainingSet phi;
    std::size_t expect = 0;
    for (std::size_t t = 1; t <= 30; ++t) {
      phi = update_training_set(std::move(phi), dummy_set(100, t), 0.33, t);
      expect = expect - static_cast<std::size_t>(std::llround(0.33 * static_cast<double>(expect))) + 100;
      REQUIRE(phi.size() == expect);
      // integer fixed points are 302..304; the one nearest N / gamma is 303
      if (t >= 20) CHECK(std::abs(static_cast<double>(phi.size()) - 303.0) <= 1.0);
    }
  }

  TEST_CASE("train_iteration") {
    const auto problem = corpus::make_toy_linear_problem(2, 4, 10, 0.0, 1);
    auto m = toy_model(4, 2, 5);
    TrainingSet phi(1);
    phi[0].x = Matrix(1, 4);
    for (std::size_t j = 0; j < 4; ++j) phi[0].x(0, j) = problem.x[0][j];
    phi[0].z = corpus::toy_latent(problem.z_star[0]);

    EmsslConfig cfg;
    cfg.epochs = 0;
    const std::vector<float> before(m.values().begin(), m.values().end());
    CHECK(train_iteration(m, phi, cfg, 1).empty());
    CHECK(std::equal(before.begin(), before.end(), m.values().begin()));

    cfg.epochs = 200;
    cfg.learning_rate = 1e-2;
    const auto losses = train_iteration(m, phi, cfg, 1);
    REQUIRE(losses.size() == 200);
    CHECK(losses.back() < losses.front() / 100.0);

    auto m1 = toy_model(4, 2, 5), m2 = toy_model(4, 2, 5);
    TrainingSet many;
    for (std::size_t i = 0; i < 10; ++i) {
      PairedSample s;
      s.x = Matrix(1, 4);
      for (std::size_t j = 0; j < 4; ++j) s.x(0, j) = problem.x[i][j];
      s.z = corpus::toy_latent(problem.z_star[i]);
      many.push_back(s);
    }
    cfg.epochs = 3;
    cfg.batch_size = 3;
    train_iteration(m1, many, cfg, 42);
    train_iteration(m2, many, cfg, 42);
    CHECK(std::equal(m1.values().begin(), m1.values().end(), m2.values().begin()));
  }

  TEST_CASE("run_emssl bookkeeping") {
    const auto problem = corpus::make_toy_linear_problem(3, 5, 40, 0.01, 2);
    const corpus::LinearForwardOperator f(problem.a, problem.noise_std);
    auto data = problem.dataset();
    data.validation.assign(data.train.begin(), data.train.begin() + 5);
    data.test.assign(data.train.begin() + 5, data.train.begin() + 8);

    auto m = toy_model(5, 3, 1);
    EmsslConfig cfg;
    cfg.iterations = 0;
    const std::vector<float> before(m.values().begin(), m.values().end());
    const auto none = run_emssl(data, f, m, cfg);
    CHECK(none.log.empty());
    CHECK(std::equal(before.begin(), before.end(), m.values().begin()));

    cfg.iterations = 4;
    cfg.epochs = 2;
    cfg.seed = 3;
    std::vector<std::size_t> ends;
    std::vector<std::string> streamed;
    Callbacks cb;
    cb.on_log_row = [&](const LogRow& r) { streamed.push_back(format_log_row(r)); };
    cb.on_iteration_end = [&](std::size_t t, const model::RegressorModel&) { ends.push_back(t); };
    const auto r = run_emssl(data, f, m, cfg, cb);
    REQUIRE(r.log.size() == 4 * 2 + 1);
    CHECK(r.log[0].split == "train");
    CHECK(r.log[1].split == "validation");
    CHECK(r.log.back().split == "test");
    CHECK(r.log.back().iteration == 4);
    CHECK(ends == std::vector<std::size_t>{1, 2, 3, 4});
    CHECK(streamed.size() == r.log.size());
    // Φ size law with N = 40 fresh pairs per iteration
    std::size_t expect = 0;
    for (int t = 0; t < 4; ++t) expect = expect - static_cast<std::size_t>(std::llround(0.33 * expect)) + 40;
    CHECK(r.phi.size() == expect);
    for (const auto& s : r.phi) CHECK(s.x.rows() == 1);

    auto m2 = toy_model(5, 3, 1);
    const auto r2 = run_emssl(data, f, m2, cfg);
    for (std::size_t i = 0; i < r.log.size(); ++i) CHECK(format_log_row(r.log[i]) == format_log_row(r2.log[i]));
    CHECK(std::equal(m.values().begin(), m.values().end(), m2.values().begin()));

    cfg.workers = 3;
    auto m3 = toy_model(5, 3, 1);
    const auto r3 = run_emssl(data, f, m3, cfg);
    CHECK(std::equal(m.values().begin(), m.values().end(), m3.values().begin()));

    const Dataset empty;
    CHECK_THROWS_AS(run_emssl(empty, f, m, cfg), ValidationError);
  }

  TEST_CASE("evaluation scores failed syntheses at the cap") {
    const auto problem = corpus::make_toy_linear_problem(2, 3, 4, 0.0, 1);
    const FlakyOperator always(problem.a, 1);
    const auto m = toy_model(3, 2, 1);
    const auto snr = evaluate_clips(m, always, problem.dataset().train);
    for (double v : snr) CHECK(v == -metrics::kSnrCapDb);
    CHECK(evaluation_seed("abc") == evaluation_seed("abc"));
    CHECK(evaluation_seed("abc") != evaluation_seed("abd"));
  }

  TEST_CASE("adapting for zero iterations changes nothing") {
    const auto problem = corpus::make_toy_linear_problem(2, 3, 10, 0.0, 1);
    const corpus::LinearForwardOperator f(problem.a, 0.0);
    auto m = toy_model(3, 2, 1);
    EmsslConfig cfg;
    cfg.iterations = 0;
    const std::vector<float> before(m.values().begin(), m.values().end());
    const auto r = adapt(problem.dataset(), f, m, cfg);
    CHECK(r.log.empty());
    CHECK(std::equal(before.begin(), before.end(), m.values().begin()));
  }

  TEST_CASE("the physical mapping never touches the fixed block") {
    trm::UtteranceParams base;
    base.loss_factor_pct = 1.1;
    Rng rng(4);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int i = 0; i < 20; ++i) {
      model::Latent z;
      z.control = Matrix(5, 16);
      for (double& v : z.control.data()) v = u(rng);
      z.utterance.resize(13);
      for (double& v : z.utterance) v = u(rng);
      const auto p = to_physical(z, base);
      CHECK(p.utterance.fixed() == base.fixed());
      CHECK(p.track.frame_rate_hz == base.control_rate_hz);
      const auto back = to_normalized(p.utterance, {});
      for (std::size_t d = 0; d < 13; ++d) CHECK(back.utterance[d] == doctest::Approx(z.utterance[d]).epsilon(1e-9));
    }
  }

  TEST_CASE("log formatting") {
    CHECK(log_header() == "iteration,split,mean_snr_db,std_snr_db,mean_loss,wall_time_s");
    LogRow r{3, "validation", 1.5, 0.25, 0.125, 0.0};
    CHECK(format_log_row(r) == "3,validation,1.500000,0.250000,0.125,0.000");
  }
}
