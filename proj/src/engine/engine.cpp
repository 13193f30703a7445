#include "emssl/engine/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <thread>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "emssl/metrics/snr.hpp"

namespace emssl::engine {

namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError(what);
}

// Runs fn(i) for i in [0, n) on up to `workers` threads. Each index writes
// only its own output slot, so results do not depend on scheduling.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t workers, Fn&& fn) {
  workers = std::clamp<std::size_t>(workers, 1, std::max<std::size_t>(n, 1));
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += workers) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

LogRow summarize(std::size_t iteration, const std::string& split, const std::vector<double>& snr) {
  const auto ms = metrics::mean_std(snr);
  LogRow r;
  r.iteration = iteration;
  r.split = split;
  r.mean_snr = ms.mean;
  r.std_snr = ms.std;
  return r;
}

}  // namespace

void EmsslConfig::validate() const {
  require(samples_per_datapoint >= 1, "L (samples per datapoint) must be at least 1");
  require(drop_rate >= 0.0 && drop_rate < 1.0, fmt::format("drop rate gamma must lie in [0, 1), got {}", drop_rate));
  require(posterior_std >= 0.0 && std::isfinite(posterior_std), "posterior std sigma must be non-negative");
  require(samples_per_datapoint == 1 || posterior_std > 0.0, "L > 1 requires sigma > 0");
  require(batch_size >= 1, "batch size M must be at least 1");
  require(loss_weight >= 0.0 && std::isfinite(loss_weight), "loss weight lambda must be non-negative");
  require(learning_rate > 0.0 && std::isfinite(learning_rate), "learning rate must be positive");
  require(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0, "Adam betas must lie in [0, 1)");
  require(workers >= 1, "workers must be at least 1");
}

std::string EmsslConfig::to_text() const {
  return fmt::format(
      "samples_per_datapoint = {}\niterations = {}\nepochs = {}\nbatch_size = {}\ndrop_rate = {}\n"
      "posterior_std = {}\nloss_weight = {}\nlearning_rate = {}\nbeta1 = {}\nbeta2 = {}\nseed = {}\n",
      samples_per_datapoint, iterations, epochs, batch_size, drop_rate, posterior_std, loss_weight, learning_rate,
      beta1, beta2, seed);
}

std::vector<model::Latent> sample_posterior(const model::RegressorModel& m, const Matrix& x, double sigma,
                                            std::size_t count, std::uint64_t seed) {
  const model::Latent mean = m.forward(x);
  if (sigma == 0.0) return std::vector<model::Latent>(count, mean);
  Rng rng(seed);
  std::normal_distribution<double> noise(0.0, sigma);
  constexpr double kEdge = 1.0 - 1e-9;
  std::vector<model::Latent> out;
  out.reserve(count);
  for (std::size_t l = 0; l < count; ++l) {
    model::Latent z = mean;
    for (double& v : z.control.data()) v = std::clamp(v + noise(rng), -kEdge, kEdge);
    for (double& v : z.utterance) v = std::clamp(v + noise(rng), -kEdge, kEdge);
    out.push_back(std::move(z));
  }
  return out;
}

TrainingSet generate_pairs(const ForwardOperator& f, const std::vector<PairRequest>& requests, std::size_t iteration,
                           std::size_t workers) {
  std::vector<std::optional<Matrix>> xs(requests.size());
  parallel_for(requests.size(), workers, [&](std::size_t i) {
    const auto& r = requests[i];
    xs[i] = f.evaluate(*r.z, r.frames, r.seed);
  });
  TrainingSet out;
  out.reserve(requests.size());
  for (std::size_t i = 0; i < requests.size(); ++i) {
    if (!xs[i]) {
      spdlog::warn("iteration {}: synthesis failed for a sample of clip '{}'; dropped", iteration,
                   requests[i].source_id);
      continue;
    }
    out.push_back({*requests[i].z, std::move(*xs[i]), iteration, requests[i].source_id});
  }
  return out;
}

TrainingSet update_training_set(TrainingSet phi, TrainingSet fresh, double gamma, std::uint64_t seed) {
  require(gamma >= 0.0 && gamma < 1.0, "drop rate must lie in [0, 1)");
  const auto drop = static_cast<std::size_t>(std::llround(gamma * static_cast<double>(phi.size())));
  if (drop > 0) {
    std::vector<std::size_t> order(phi.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<char> removed(phi.size(), 0);
    for (std::size_t i = 0; i < drop; ++i) removed[order[i]] = 1;
    TrainingSet kept;
    kept.reserve(phi.size() - drop + fresh.size());
    for (std::size_t i = 0; i < phi.size(); ++i) {
      if (!removed[i]) kept.push_back(std::move(phi[i]));
    }
    phi = std::move(kept);
  }
  for (auto& s : fresh) phi.push_back(std::move(s));
  return phi;
}

std::vector<double> train_iteration(model::RegressorModel& m, const TrainingSet& phi, const EmsslConfig& cfg,
                                    std::uint64_t seed) {
  require(!phi.empty() || cfg.epochs == 0, "training set is empty");
  std::vector<double> epoch_loss;
  std::vector<std::size_t> order(phi.size());
  std::vector<double> grad;
  const auto adam = cfg.adam();
  for (std::size_t e = 0; e < cfg.epochs; ++e) {
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng rng(mix_seed(seed, e));
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    std::size_t steps = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      std::vector<model::TrainingExample> batch;
      for (std::size_t i = start; i < end; ++i) batch.push_back({&phi[order[i]].x, &phi[order[i]].z});
      const auto loss = model::loss_and_grad(m, batch, cfg.loss_weight, &grad);
      model::adam_step(m, grad, adam);
      total += loss.total;
      ++steps;
    }
    epoch_loss.push_back(total / static_cast<double>(steps));
  }
  return epoch_loss;
}

std::uint64_t evaluation_seed(const std::string& clip_id) { return derive_seed(hash_string("eval-noise"), clip_id); }

std::optional<Matrix> resynthesize(const model::RegressorModel& m, const ForwardOperator& f, const Observation& clip) {
  return f.evaluate(m.forward(clip.x), clip.x.rows(), evaluation_seed(clip.id));
}

std::vector<double> evaluate_clips(const model::RegressorModel& m, const ForwardOperator& f,
                                   const std::vector<Observation>& clips, std::size_t workers) {
  std::vector<double> snr(clips.size());
  parallel_for(clips.size(), workers, [&](std::size_t i) {
    const auto xh = resynthesize(m, f, clips[i]);
    snr[i] = xh ? metrics::sentence_snr(clips[i].x, *xh) : -metrics::kSnrCapDb;
  });
  return snr;
}

std::string log_header() { return "iteration,split,mean_snr_db,std_snr_db,mean_loss,wall_time_s"; }

std::string format_log_row(const LogRow& r) {
  return fmt::format("{},{},{:.6f},{:.6f},{:.9g},{:.3f}", r.iteration, r.split, r.mean_snr, r.std_snr, r.mean_loss,
                     r.wall_time_s);
}

RunResult run_emssl(const Dataset& data, const ForwardOperator& f, model::RegressorModel& m, const EmsslConfig& cfg,
                    const Callbacks& callbacks) {
  cfg.validate();
  require(!data.train.empty(), "the observation dataset has no training clips");
  RunResult result;
  const auto start = std::chrono::steady_clock::now();
  auto emit = [&](LogRow row) {
    row.wall_time_s = cfg.log_wall_time ? seconds_since(start) : 0.0;
    result.log.push_back(row);
    if (callbacks.on_log_row) callbacks.on_log_row(row);
  };

  double mean_loss = 0.0;
  for (std::size_t t = 1; t <= cfg.iterations; ++t) {
    // evaluate before this iteration's training
    std::vector<LogRow> rows;
    rows.push_back(summarize(t, "train", evaluate_clips(m, f, data.train, cfg.workers)));
    if (!data.validation.empty()) {
      rows.push_back(summarize(t, "validation", evaluate_clips(m, f, data.validation, cfg.workers)));
    }

    // sample from the snapshot theta^t
    const std::uint64_t posterior_seed = derive_seed(cfg.seed, "posterior", t);
    const std::uint64_t synthesis_seed = derive_seed(cfg.seed, "synthesis", t);
    std::vector<std::vector<model::Latent>> zs(data.train.size());
    parallel_for(data.train.size(), cfg.workers, [&](std::size_t i) {
      const auto& c = data.train[i];
      zs[i] = sample_posterior(m, c.x, cfg.posterior_std, cfg.samples_per_datapoint,
                               mix_seed(posterior_seed, hash_string(c.id)));
    });
    std::vector<PairRequest> requests;
    for (std::size_t i = 0; i < data.train.size(); ++i) {
      const auto& c = data.train[i];
      for (std::size_t l = 0; l < zs[i].size(); ++l) {
        requests.push_back({&zs[i][l], c.id, c.x.rows(), mix_seed(mix_seed(synthesis_seed, hash_string(c.id)), l)});
      }
    }
    auto fresh = generate_pairs(f, requests, t, cfg.workers);
    result.phi = update_training_set(std::move(result.phi), std::move(fresh), cfg.drop_rate,
                                     derive_seed(cfg.seed, "drop", t));

    mean_loss = 0.0;
    if (!result.phi.empty()) {
      const auto losses = train_iteration(m, result.phi, cfg, derive_seed(cfg.seed, "shuffle", t));
      for (double l : losses) mean_loss += l;
      if (!losses.empty()) mean_loss /= static_cast<double>(losses.size());
    } else {
      spdlog::warn("iteration {}: training set is empty; skipping training", t);
    }
    for (auto& r : rows) {
      r.mean_loss = mean_loss;
      emit(r);
    }
    if (callbacks.on_iteration_end) callbacks.on_iteration_end(t, m);
  }
  if (cfg.iterations > 0 && !data.test.empty()) {
    auto row = summarize(cfg.iterations, "test", evaluate_clips(m, f, data.test, cfg.workers));
    row.mean_loss = mean_loss;
    emit(row);
  }
  return result;
}

RunResult adapt(const Dataset& data, const ForwardOperator& f, model::RegressorModel& m, const EmsslConfig& cfg,
                const Callbacks& callbacks) {
  return run_emssl(data, f, m, cfg, callbacks);
}

}  // namespace emssl::engine
