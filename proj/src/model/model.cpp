#include "emssl/model/model.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include <fmt/format.h>

#include "emssl/model/layers.hpp"

namespace emssl::model {

namespace {

bool is_conv_preset(const std::string& p) { return p == "desk" || p == "paper"; }

std::string join(const std::vector<std::size_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s;
}

std::size_t parse_size(const std::string& key, const std::string& value) {
  std::size_t pos = 0;
  unsigned long long n = 0;
  try {
    n = std::stoull(value, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != value.size()) throw ValidationError("model config: bad integer for '" + key + "': " + value);
  return static_cast<std::size_t>(n);
}

}  // namespace

ModelConfig ModelConfig::from_preset(const std::string& name, std::uint64_t seed) {
  ModelConfig c;
  c.preset = name;
  c.seed = seed;
  if (name == "desk") {
    c.channels = {4, 8, 8, 16};
    c.out_channels = 4;
    c.hidden = 32;
  } else if (name == "paper") {
    c.channels = {16, 32, 64, 128};
    c.out_channels = 1;  // last up-conv output is N x 20
    c.hidden = 128;
  } else if (name == "linear") {
    c.channels = {};
    c.out_channels = 0;
    c.hidden = 0;
    c.input_bins = 8;
    c.control_dims = 0;
    c.utterance_dims = 4;
  } else {
    throw ValidationError("unknown model preset '" + name + "' (expected desk, paper or linear)");
  }
  return c;
}

void ModelConfig::validate() const {
  if (preset == "linear") {
    if (input_bins == 0 || utterance_dims == 0) throw ValidationError("linear preset needs nonzero dimensions");
    if (control_dims != 0) throw ValidationError("linear preset has no control outputs");
    return;
  }
  if (!is_conv_preset(preset)) throw ValidationError("unknown model preset '" + preset + "'");
  if (kernel % 2 == 0 || kernel == 0) throw ValidationError("kernel width must be odd");
  if (channels.size() != 4 || std::find(channels.begin(), channels.end(), 0u) != channels.end()) {
    throw ValidationError("convolutional presets need four nonzero channel widths");
  }
  if (out_channels == 0 || hidden == 0) throw ValidationError("out_channels and hidden must be nonzero");
  if (input_bins == 0 || input_bins % 8 != 0) throw ValidationError("input_bins must be a positive multiple of 8");
  if (control_dims != 16 || utterance_dims != 13) throw ValidationError("output dims are fixed at 16 and 13");
}

std::string ModelConfig::to_text() const {
  return fmt::format(
      "preset = {}\nchannels = {}\nout_channels = {}\nhidden = {}\nkernel = {}\ninput_bins = {}\n"
      "control_dims = {}\nutterance_dims = {}\nseed = {}\n",
      preset, join(channels), out_channels, hidden, kernel, input_bins, control_dims, utterance_dims, seed);
}

ModelConfig ModelConfig::from_text(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  auto get = [&](const std::string& k) {
    auto it = kv.find(k);
    if (it == kv.end()) throw ValidationError("model config: missing key '" + k + "'");
    return it->second;
  };
  ModelConfig c;
  c.preset = get("preset");
  c.channels.clear();
  std::istringstream ch(get("channels"));
  for (std::string tok; std::getline(ch, tok, ',');) {
    if (!tok.empty()) c.channels.push_back(parse_size("channels", tok));
  }
  c.out_channels = parse_size("out_channels", get("out_channels"));
  c.hidden = parse_size("hidden", get("hidden"));
  c.kernel = parse_size("kernel", get("kernel"));
  c.input_bins = parse_size("input_bins", get("input_bins"));
  c.control_dims = parse_size("control_dims", get("control_dims"));
  c.utterance_dims = parse_size("utterance_dims", get("utterance_dims"));
  c.seed = parse_size("seed", get("seed"));
  c.validate();
  return c;
}

std::uint64_t ModelConfig::hash() const { return hash_string(to_text()); }

// ---------------------------------------------------------------------------

struct RegressorModel::Trace {
  Tensor3 input;
  Tensor3 a[4];  // encoder activations, post-ReLU
  Tensor3 up;    // upsampled deepest activation
  Tensor3 u;     // up-conv + skip, post-ReLU
  Tensor3 o;     // final up-conv, post-ReLU, flattened per frame into the LSTM
  LstmTrace fwd, bwd;
  std::vector<double> hcat;     // N x 2H
  std::vector<double> summary;  // 2H
};

std::size_t RegressorModel::add_tensor(const std::string& name, std::vector<std::size_t> shape) {
  std::size_t n = 1;
  for (auto d : shape) n *= d;
  ParamTensor t{name, std::move(shape), values_.size(), n};
  values_.resize(values_.size() + n, 0.0f);
  tensors_.push_back(std::move(t));
  return tensors_.back().offset;
}

std::size_t RegressorModel::offset_of(const std::string& name) const {
  for (const auto& t : tensors_) {
    if (t.name == name) return t.offset;
  }
  throw std::logic_error("no tensor " + name);
}

RegressorModel::RegressorModel(const ModelConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  Rng rng(derive_seed(cfg_.seed, "model-init"));
  auto fill_uniform = [&](std::size_t offset, std::size_t n, double bound) {
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (std::size_t i = 0; i < n; ++i) values_[offset + i] = static_cast<float>(dist(rng));
  };
  if (cfg_.preset == "linear") {
    const auto w = add_tensor("linear.weight", {cfg_.utterance_dims, cfg_.input_bins});
    add_tensor("linear.bias", {cfg_.utterance_dims});
    fill_uniform(w, cfg_.utterance_dims * cfg_.input_bins, 1.0 / std::sqrt(double(cfg_.input_bins)));
  } else {
    const std::size_t k = cfg_.kernel;
    const auto& c = cfg_.channels;
    struct ConvSpec {
      std::string name;
      std::size_t cin, cout;
    };
    const std::vector<ConvSpec> convs{{"conv0", 1, c[0]},      {"down1", c[0], c[1]}, {"down2", c[1], c[2]},
                                      {"down3", c[2], c[3]},   {"up1", c[3], c[2]},
                                      {"up_out", c[2], cfg_.out_channels}};
    for (const auto& s : convs) {
      const auto w = add_tensor(s.name + ".weight", {s.cout, k, k, s.cin});
      add_tensor(s.name + ".bias", {s.cout});
      fill_uniform(w, s.cout * k * k * s.cin, std::sqrt(6.0 / double(k * k * s.cin)));
    }
    const std::size_t D = cfg_.out_channels * cfg_.input_bins / 4;
    const std::size_t H = cfg_.hidden;
    for (const char* dir : {"lstm_fwd", "lstm_bwd"}) {
      const auto wx = add_tensor(std::string(dir) + ".wx", {4 * H, D});
      const auto wh = add_tensor(std::string(dir) + ".wh", {4 * H, H});
      add_tensor(std::string(dir) + ".bias", {4 * H});
      const double bound = 1.0 / std::sqrt(double(D + H));
      fill_uniform(wx, 4 * H * D, bound);
      fill_uniform(wh, 4 * H * H, bound);
    }
    const auto wc = add_tensor("control_head.weight", {cfg_.control_dims, 2 * H});
    add_tensor("control_head.bias", {cfg_.control_dims});
    fill_uniform(wc, cfg_.control_dims * 2 * H, 1.0 / std::sqrt(double(2 * H)));
    const auto wu = add_tensor("utterance_head.weight", {cfg_.utterance_dims, 2 * H});
    add_tensor("utterance_head.bias", {cfg_.utterance_dims});
    fill_uniform(wu, cfg_.utterance_dims * 2 * H, 1.0 / std::sqrt(double(2 * H)));
  }
  compute_.assign(values_.begin(), values_.end());
  adam_.m.assign(values_.size(), 0.0f);
  adam_.v.assign(values_.size(), 0.0f);
}

void RegressorModel::set_values(std::span<const float> values) {
  if (values.size() != values_.size()) throw ShapeError("parameter vector size mismatch");
  std::copy(values.begin(), values.end(), values_.begin());
  compute_.assign(values_.begin(), values_.end());
}

void RegressorModel::set_value(std::size_t index, float value) {
  values_.at(index) = value;
  compute_[index] = value;
}

void RegressorModel::check_input(const Matrix& x) const {
  if (x.cols() != cfg_.input_bins) {
    throw ShapeError(fmt::format("model expects {} input bins, got {}", cfg_.input_bins, x.cols()));
  }
  if (cfg_.preset == "linear" && x.rows() != 1) throw ShapeError("linear model expects a single input row");
  if (x.rows() < min_frames()) throw ShapeError("input has fewer frames than the network minimum");
  for (double v : x.data()) {
    if (!std::isfinite(v)) throw NonFiniteError("model input contains a non-finite value");
  }
}

void RegressorModel::run(const Matrix& x, Trace& tr, Latent& out) const {
  const double* P = compute_.data();
  if (cfg_.preset == "linear") {
    tr.input = Tensor3(1, cfg_.input_bins, 1);
    tr.input.v = x.data();
    out.control = Matrix(x.rows(), 0);
    out.utterance.assign(cfg_.utterance_dims, 0.0);
    linear_forward(cfg_.input_bins, cfg_.utterance_dims, P + offset_of("linear.weight"),
                   P + offset_of("linear.bias"), x.data().data(), out.utterance.data());
    return;
  }
  const std::size_t k = cfg_.kernel;
  const auto& c = cfg_.channels;
  const std::size_t N = x.rows();
  tr.input = Tensor3(N, cfg_.input_bins, 1);
  std::copy(x.data().begin(), x.data().end(), tr.input.v.begin());

  auto conv = [&](const std::string& name, std::size_t cin, std::size_t cout, std::size_t stride,
                  const Tensor3& in, Tensor3& o) {
    conv2d_forward({cin, cout, k, stride}, P + offset_of(name + ".weight"), P + offset_of(name + ".bias"), in, o);
  };
  conv("conv0", 1, c[0], 1, tr.input, tr.a[0]);
  relu_inplace(tr.a[0]);
  conv("down1", c[0], c[1], 2, tr.a[0], tr.a[1]);
  relu_inplace(tr.a[1]);
  conv("down2", c[1], c[2], 2, tr.a[1], tr.a[2]);
  relu_inplace(tr.a[2]);
  conv("down3", c[2], c[3], 2, tr.a[2], tr.a[3]);
  relu_inplace(tr.a[3]);
  upsample2_forward(tr.a[3], tr.up);
  conv("up1", c[3], c[2], 1, tr.up, tr.u);
  for (std::size_t i = 0; i < tr.u.v.size(); ++i) tr.u.v[i] += tr.a[2].v[i];
  relu_inplace(tr.u);
  conv("up_out", c[2], cfg_.out_channels, 1, tr.u, tr.o);
  relu_inplace(tr.o);

  const std::size_t D = tr.o.f * tr.o.c;
  const std::size_t H = cfg_.hidden;
  lstm_forward(D, H, P + offset_of("lstm_fwd.wx"), P + offset_of("lstm_fwd.wh"), P + offset_of("lstm_fwd.bias"),
               tr.o.v.data(), N, false, tr.fwd);
  lstm_forward(D, H, P + offset_of("lstm_bwd.wx"), P + offset_of("lstm_bwd.wh"), P + offset_of("lstm_bwd.bias"),
               tr.o.v.data(), N, true, tr.bwd);
  tr.hcat.assign(N * 2 * H, 0.0);
  for (std::size_t t = 0; t < N; ++t) {
    std::copy_n(&tr.fwd.h[t * H], H, &tr.hcat[t * 2 * H]);
    std::copy_n(&tr.bwd.h[t * H], H, &tr.hcat[t * 2 * H + H]);
  }
  tr.summary.assign(2 * H, 0.0);
  std::copy_n(&tr.fwd.h[(N - 1) * H], H, tr.summary.begin());
  std::copy_n(&tr.bwd.h[0], H, tr.summary.begin() + H);

  out.control = Matrix(N, cfg_.control_dims);
  const double* wc = P + offset_of("control_head.weight");
  const double* bc = P + offset_of("control_head.bias");
  for (std::size_t t = 0; t < N; ++t) {
    auto row = out.control.row(t);
    linear_forward(2 * H, cfg_.control_dims, wc, bc, &tr.hcat[t * 2 * H], row.data());
    for (double& v : row) v = std::tanh(v);
  }
  out.utterance.assign(cfg_.utterance_dims, 0.0);
  linear_forward(2 * H, cfg_.utterance_dims, P + offset_of("utterance_head.weight"),
                 P + offset_of("utterance_head.bias"), tr.summary.data(), out.utterance.data());
  for (double& v : out.utterance) v = std::tanh(v);
}

void RegressorModel::backprop(const Trace& tr, const Latent& out, const Matrix& d_control,
                              std::span<const double> d_utterance, double* G) const {
  const double* P = compute_.data();
  if (cfg_.preset == "linear") {
    const std::size_t w = offset_of("linear.weight");
    const std::size_t b = offset_of("linear.bias");
    linear_backward(cfg_.input_bins, cfg_.utterance_dims, P + w, tr.input.v.data(), d_utterance.data(), G + w,
                    G + b, nullptr);
    return;
  }
  const std::size_t k = cfg_.kernel;
  const auto& c = cfg_.channels;
  const std::size_t N = tr.input.t;
  const std::size_t H = cfg_.hidden;
  const std::size_t D = tr.o.f * tr.o.c;

  // heads: gradient through tanh into the recurrent outputs
  std::vector<double> dh(N * 2 * H, 0.0);
  {
    const std::size_t w = offset_of("control_head.weight");
    const std::size_t b = offset_of("control_head.bias");
    std::vector<double> dy(cfg_.control_dims);
    for (std::size_t t = 0; t < N; ++t) {
      for (std::size_t j = 0; j < cfg_.control_dims; ++j) {
        const double y = out.control(t, j);
        dy[j] = d_control(t, j) * (1.0 - y * y);
      }
      linear_backward(2 * H, cfg_.control_dims, P + w, &tr.hcat[t * 2 * H], dy.data(), G + w, G + b,
                      &dh[t * 2 * H]);
    }
  }
  std::vector<double> dsum(2 * H, 0.0);
  {
    const std::size_t w = offset_of("utterance_head.weight");
    const std::size_t b = offset_of("utterance_head.bias");
    std::vector<double> dy(cfg_.utterance_dims);
    for (std::size_t j = 0; j < cfg_.utterance_dims; ++j) {
      const double y = out.utterance[j];
      dy[j] = d_utterance[j] * (1.0 - y * y);
    }
    linear_backward(2 * H, cfg_.utterance_dims, P + w, tr.summary.data(), dy.data(), G + w, G + b, dsum.data());
  }
  std::vector<double> dh_f(N * H), dh_b(N * H);
  for (std::size_t t = 0; t < N; ++t) {
    std::copy_n(&dh[t * 2 * H], H, &dh_f[t * H]);
    std::copy_n(&dh[t * 2 * H + H], H, &dh_b[t * H]);
  }
  for (std::size_t j = 0; j < H; ++j) {
    dh_f[(N - 1) * H + j] += dsum[j];
    dh_b[j] += dsum[H + j];
  }

  Tensor3 d_o(tr.o.t, tr.o.f, tr.o.c);
  for (const auto& [name, trace, dhd] : {std::tuple{"lstm_fwd", &tr.fwd, &dh_f}, std::tuple{"lstm_bwd", &tr.bwd, &dh_b}}) {
    const std::string n(name);
    const std::size_t wx = offset_of(n + ".wx");
    const std::size_t wh = offset_of(n + ".wh");
    const std::size_t b = offset_of(n + ".bias");
    lstm_backward(D, H, P + wx, P + wh, tr.o.v.data(), *trace, dhd->data(), G + wx, G + wh, G + b, d_o.v.data());
  }

  auto conv_back = [&](const std::string& name, std::size_t cin, std::size_t cout, std::size_t stride,
                       const Tensor3& in, const Tensor3& dout, Tensor3* din) {
    const std::size_t w = offset_of(name + ".weight");
    const std::size_t b = offset_of(name + ".bias");
    conv2d_backward({cin, cout, k, stride}, P + w, in, dout, G + w, G + b, din);
  };
  relu_backward(tr.o, d_o);
  Tensor3 d_u;
  conv_back("up_out", c[2], cfg_.out_channels, 1, tr.u, d_o, &d_u);
  relu_backward(tr.u, d_u);
  Tensor3 d_up;
  conv_back("up1", c[3], c[2], 1, tr.up, d_u, &d_up);
  Tensor3 d_a3;
  upsample2_backward(d_up, d_a3);
  relu_backward(tr.a[3], d_a3);
  Tensor3 d_a2;
  conv_back("down3", c[2], c[3], 2, tr.a[2], d_a3, &d_a2);
  for (std::size_t i = 0; i < d_a2.v.size(); ++i) d_a2.v[i] += d_u.v[i];  // skip path
  relu_backward(tr.a[2], d_a2);
  Tensor3 d_a1;
  conv_back("down2", c[1], c[2], 2, tr.a[1], d_a2, &d_a1);
  relu_backward(tr.a[1], d_a1);
  Tensor3 d_a0;
  conv_back("down1", c[0], c[1], 2, tr.a[0], d_a1, &d_a0);
  relu_backward(tr.a[0], d_a0);
  conv_back("conv0", 1, c[0], 1, tr.input, d_a0, nullptr);
}

Latent RegressorModel::forward(const Matrix& x) const {
  check_input(x);
  Trace tr;
  Latent out;
  run(x, tr, out);
  return out;
}

Latent RegressorModel::forward(const Matrix& x, std::size_t valid_frames) const {
  if (valid_frames > x.rows()) throw ShapeError("valid frame count exceeds input length");
  Matrix head = x;
  head.resize_rows(valid_frames);
  Latent out = forward(head);
  const std::size_t cols = out.control.cols();
  Matrix padded(x.rows(), cols);
  std::copy(out.control.data().begin(), out.control.data().end(), padded.data().begin());
  out.control = std::move(padded);
  return out;
}

std::pair<double, double> RegressorModel::accumulate_gradient(const Matrix& x, const Latent& target,
                                                              double scale_control, double scale_utterance,
                                                              std::span<double> grad) const {
  check_input(x);
  if (grad.size() != values_.size()) throw ShapeError("gradient buffer size mismatch");
  Trace tr;
  Latent out;
  run(x, tr, out);
  if (target.control.rows() != out.control.rows() || target.control.cols() != out.control.cols() ||
      target.utterance.size() != out.utterance.size()) {
    throw ShapeError(fmt::format("target shape {}x{}+{} does not match prediction {}x{}+{}", target.control.rows(),
                                 target.control.cols(), target.utterance.size(), out.control.rows(),
                                 out.control.cols(), out.utterance.size()));
  }
  double sc = 0.0;
  Matrix d_control(out.control.rows(), out.control.cols());
  for (std::size_t i = 0; i < out.control.size(); ++i) {
    const double e = out.control.data()[i] - target.control.data()[i];
    sc += e * e;
    d_control.data()[i] = 2.0 * scale_control * e;
  }
  double su = 0.0;
  std::vector<double> d_utt(out.utterance.size());
  for (std::size_t i = 0; i < out.utterance.size(); ++i) {
    const double e = out.utterance[i] - target.utterance[i];
    su += e * e;
    d_utt[i] = 2.0 * scale_utterance * e;
  }
  backprop(tr, out, d_control, d_utt, grad.data());
  return {sc, su};
}

// ---------------------------------------------------------------------------

LossBreakdown loss_and_grad(const RegressorModel& m, std::span<const TrainingExample> batch, double lambda,
                            std::vector<double>* grad) {
  if (batch.empty()) throw ShapeError("empty batch");
  std::size_t control_count = 0;
  for (const auto& ex : batch) control_count += ex.z->control.size();
  const std::size_t utt_count = batch.size() * m.config().utterance_dims;
  const double sc = control_count > 0 ? lambda / double(control_count) : 0.0;
  const double su = 1.0 / double(utt_count);

  std::vector<double> local;
  std::vector<double>& g = grad ? *grad : local;
  g.assign(m.parameter_count(), 0.0);
  double sum_c = 0.0, sum_u = 0.0;
  for (const auto& ex : batch) {
    const auto [c, u] = m.accumulate_gradient(*ex.x, *ex.z, sc, su, g);
    sum_c += c;
    sum_u += u;
  }
  LossBreakdown out;
  out.lambda = lambda;
  out.l_c = control_count > 0 ? sum_c / double(control_count) : 0.0;
  out.l_u = sum_u / double(utt_count);
  out.total = out.l_u + lambda * out.l_c;
  return out;
}

void adam_step(RegressorModel& m, std::span<const double> grad, const AdamConfig& cfg) {
  if (grad.size() != m.parameter_count()) throw ShapeError("gradient size does not match parameter count");
  for (double g : grad) {
    if (!std::isfinite(g)) throw NonFiniteError("non-finite gradient; update aborted");
  }
  auto& st = m.adam();
  const std::uint64_t t = st.step + 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, double(t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, double(t));
  std::vector<float> next(m.values().begin(), m.values().end());
  std::vector<float> nm(next.size()), nv(next.size());
  for (std::size_t i = 0; i < next.size(); ++i) {
    const double mi = cfg.beta1 * st.m[i] + (1.0 - cfg.beta1) * grad[i];
    const double vi = cfg.beta2 * st.v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
    nm[i] = static_cast<float>(mi);
    nv[i] = static_cast<float>(vi);
    next[i] = static_cast<float>(next[i] - cfg.lr * (mi / bc1) / (std::sqrt(vi / bc2) + cfg.eps));
    if (!std::isfinite(next[i]) || !std::isfinite(nv[i])) throw NonFiniteError("Adam update overflowed");
  }
  st.m = std::move(nm);
  st.v = std::move(nv);
  st.step = t;
  m.set_values(next);
}

}  // namespace emssl::model
