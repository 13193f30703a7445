#include "emssl/model/layers.hpp"

#include <algorithm>
#include <cmath>

namespace emssl::model {

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

void conv2d_forward(const Conv2dShape& s, const double* w, const double* b, const Tensor3& in, Tensor3& out) {
  const std::size_t fo_n = s.out_bins(in.f);
  out = Tensor3(in.t, fo_n, s.cout);
  const long half = static_cast<long>(s.kernel / 2);
  const long T = static_cast<long>(in.t);
  const long F = static_cast<long>(in.f);
  for (long t = 0; t < T; ++t) {
    for (std::size_t fo = 0; fo < fo_n; ++fo) {
      double* o = &out.at(t, fo, 0);
      for (std::size_t co = 0; co < s.cout; ++co) o[co] = b[co];
      for (long kt = 0; kt < static_cast<long>(s.kernel); ++kt) {
        const long ti = t + kt - half;
        if (ti < 0 || ti >= T) continue;
        for (long kf = 0; kf < static_cast<long>(s.kernel); ++kf) {
          const long fi = static_cast<long>(fo * s.stride) + kf - half;
          if (fi < 0 || fi >= F) continue;
          const double* x = &in.at(ti, fi, 0);
          for (std::size_t co = 0; co < s.cout; ++co) {
            const double* wk = w + ((co * s.kernel + kt) * s.kernel + kf) * s.cin;
            double acc = 0.0;
            for (std::size_t ci = 0; ci < s.cin; ++ci) acc += wk[ci] * x[ci];
            o[co] += acc;
          }
        }
      }
    }
  }
}

void conv2d_backward(const Conv2dShape& s, const double* w, const Tensor3& in, const Tensor3& dout, double* dw,
                     double* db, Tensor3* din) {
  if (din) *din = Tensor3(in.t, in.f, in.c);
  const long half = static_cast<long>(s.kernel / 2);
  const long T = static_cast<long>(in.t);
  const long F = static_cast<long>(in.f);
  for (long t = 0; t < T; ++t) {
    for (std::size_t fo = 0; fo < dout.f; ++fo) {
      const double* g = &dout.at(t, fo, 0);
      for (std::size_t co = 0; co < s.cout; ++co) db[co] += g[co];
      for (long kt = 0; kt < static_cast<long>(s.kernel); ++kt) {
        const long ti = t + kt - half;
        if (ti < 0 || ti >= T) continue;
        for (long kf = 0; kf < static_cast<long>(s.kernel); ++kf) {
          const long fi = static_cast<long>(fo * s.stride) + kf - half;
          if (fi < 0 || fi >= F) continue;
          const double* x = &in.at(ti, fi, 0);
          double* dx = din ? &din->at(ti, fi, 0) : nullptr;
          for (std::size_t co = 0; co < s.cout; ++co) {
            const double gc = g[co];
            if (gc == 0.0) continue;
            const std::size_t off = ((co * s.kernel + kt) * s.kernel + kf) * s.cin;
            double* dwk = dw + off;
            for (std::size_t ci = 0; ci < s.cin; ++ci) dwk[ci] += gc * x[ci];
            if (dx) {
              const double* wk = w + off;
              for (std::size_t ci = 0; ci < s.cin; ++ci) dx[ci] += gc * wk[ci];
            }
          }
        }
      }
    }
  }
}

void relu_inplace(Tensor3& x) {
  for (double& v : x.v) v = v > 0.0 ? v : 0.0;
}

void relu_backward(const Tensor3& out, Tensor3& dout) {
  for (std::size_t i = 0; i < out.v.size(); ++i) {
    if (!(out.v[i] > 0.0)) dout.v[i] = 0.0;
  }
}

void upsample2_forward(const Tensor3& in, Tensor3& out) {
  out = Tensor3(in.t, in.f * 2, in.c);
  for (std::size_t t = 0; t < in.t; ++t) {
    for (std::size_t f = 0; f < out.f; ++f) {
      for (std::size_t c = 0; c < in.c; ++c) out.at(t, f, c) = in.at(t, f / 2, c);
    }
  }
}

void upsample2_backward(const Tensor3& dout, Tensor3& din) {
  din = Tensor3(dout.t, dout.f / 2, dout.c);
  for (std::size_t t = 0; t < dout.t; ++t) {
    for (std::size_t f = 0; f < dout.f; ++f) {
      for (std::size_t c = 0; c < dout.c; ++c) din.at(t, f / 2, c) += dout.at(t, f, c);
    }
  }
}

void linear_forward(std::size_t in_dim, std::size_t out_dim, const double* w, const double* b, const double* x,
                    double* y) {
  for (std::size_t o = 0; o < out_dim; ++o) {
    double acc = b[o];
    const double* wr = w + o * in_dim;
    for (std::size_t i = 0; i < in_dim; ++i) acc += wr[i] * x[i];
    y[o] = acc;
  }
}

void linear_backward(std::size_t in_dim, std::size_t out_dim, const double* w, const double* x, const double* dy,
                     double* dw, double* db, double* dx) {
  for (std::size_t o = 0; o < out_dim; ++o) {
    const double g = dy[o];
    db[o] += g;
    if (g == 0.0) continue;
    double* dwr = dw + o * in_dim;
    const double* wr = w + o * in_dim;
    for (std::size_t i = 0; i < in_dim; ++i) dwr[i] += g * x[i];
    if (dx) {
      for (std::size_t i = 0; i < in_dim; ++i) dx[i] += g * wr[i];
    }
  }
}

void lstm_forward(std::size_t in_dim, std::size_t hidden, const double* wx, const double* wh, const double* b,
                  const double* xs, std::size_t steps, bool reverse, LstmTrace& tr) {
  const std::size_t H = hidden;
  tr.steps = steps;
  tr.hidden = H;
  tr.reverse = reverse;
  tr.gates.assign(steps * 4 * H, 0.0);
  tr.cell.assign(steps * H, 0.0);
  tr.h.assign(steps * H, 0.0);
  std::vector<double> pre(4 * H);
  std::vector<double> h_prev(H, 0.0), c_prev(H, 0.0);
  for (std::size_t k = 0; k < steps; ++k) {
    const std::size_t t = reverse ? steps - 1 - k : k;
    const double* x = xs + t * in_dim;
    for (std::size_t r = 0; r < 4 * H; ++r) {
      double acc = b[r];
      const double* wxr = wx + r * in_dim;
      for (std::size_t i = 0; i < in_dim; ++i) acc += wxr[i] * x[i];
      const double* whr = wh + r * H;
      for (std::size_t j = 0; j < H; ++j) acc += whr[j] * h_prev[j];
      pre[r] = acc;
    }
    double* g = &tr.gates[t * 4 * H];
    double* c = &tr.cell[t * H];
    double* h = &tr.h[t * H];
    for (std::size_t j = 0; j < H; ++j) {
      g[j] = sigmoid(pre[j]);
      g[H + j] = sigmoid(pre[H + j]);
      g[2 * H + j] = std::tanh(pre[2 * H + j]);
      g[3 * H + j] = sigmoid(pre[3 * H + j]);
      c[j] = g[H + j] * c_prev[j] + g[j] * g[2 * H + j];
      h[j] = g[3 * H + j] * std::tanh(c[j]);
    }
    std::copy(h, h + H, h_prev.begin());
    std::copy(c, c + H, c_prev.begin());
  }
}

void lstm_backward(std::size_t in_dim, std::size_t hidden, const double* wx, const double* wh, const double* xs,
                   const LstmTrace& tr, const double* dh, double* dwx, double* dwh, double* db, double* dxs) {
  const std::size_t H = hidden;
  const std::size_t steps = tr.steps;
  std::vector<double> dh_next(H, 0.0), dc_next(H, 0.0), dpre(4 * H);
  const std::vector<double> zeros(H, 0.0);
  // walk the recurrence backwards: last processed step first
  for (std::size_t k = steps; k-- > 0;) {
    const std::size_t t = tr.reverse ? steps - 1 - k : k;
    const bool first = k == 0;
    const std::size_t t_prev = tr.reverse ? t + 1 : t - 1;
    const double* c_prev = first ? zeros.data() : &tr.cell[t_prev * H];
    const double* h_prev = first ? zeros.data() : &tr.h[t_prev * H];
    const double* g = &tr.gates[t * 4 * H];
    const double* c = &tr.cell[t * H];
    for (std::size_t j = 0; j < H; ++j) {
      const double dht = dh[t * H + j] + dh_next[j];
      const double tc = std::tanh(c[j]);
      const double i = g[j], f = g[H + j], gg = g[2 * H + j], o = g[3 * H + j];
      const double dc = dc_next[j] + dht * o * (1.0 - tc * tc);
      dpre[j] = dc * gg * i * (1.0 - i);
      dpre[H + j] = dc * c_prev[j] * f * (1.0 - f);
      dpre[2 * H + j] = dc * i * (1.0 - gg * gg);
      dpre[3 * H + j] = dht * tc * o * (1.0 - o);
      dc_next[j] = dc * f;
    }
    std::fill(dh_next.begin(), dh_next.end(), 0.0);
    const double* x = xs + t * in_dim;
    double* dx = dxs ? dxs + t * in_dim : nullptr;
    for (std::size_t r = 0; r < 4 * H; ++r) {
      const double gr = dpre[r];
      db[r] += gr;
      if (gr == 0.0) continue;
      double* dwxr = dwx + r * in_dim;
      const double* wxr = wx + r * in_dim;
      for (std::size_t i = 0; i < in_dim; ++i) dwxr[i] += gr * x[i];
      if (dx) {
        for (std::size_t i = 0; i < in_dim; ++i) dx[i] += gr * wxr[i];
      }
      double* dwhr = dwh + r * H;
      const double* whr = wh + r * H;
      for (std::size_t j = 0; j < H; ++j) {
        dwhr[j] += gr * h_prev[j];
        dh_next[j] += gr * whr[j];
      }
    }
  }
}

}  // namespace emssl::model
