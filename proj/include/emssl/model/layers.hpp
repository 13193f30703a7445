#pragma once

#include <cstddef>
#include <vector>

// Layer primitives with explicit backward passes. Parameters are passed as
// raw pointers into the model's flat buffers; gradient outputs accumulate.

namespace emssl::model {

/// Activations laid out as [time][bin][channel].
struct Tensor3 {
  std::size_t t = 0, f = 0, c = 0;
  std::vector<double> v;

  Tensor3() = default;
  Tensor3(std::size_t t_, std::size_t f_, std::size_t c_) : t(t_), f(f_), c(c_), v(t_ * f_ * c_, 0.0) {}
  double& at(std::size_t ti, std::size_t fi, std::size_t ci) { return v[(ti * f + fi) * c + ci]; }
  const double& at(std::size_t ti, std::size_t fi, std::size_t ci) const { return v[(ti * f + fi) * c + ci]; }
};

/// Square kernel, "same" zero padding, stride 1 over time and `stride` over
/// frequency. Weights are [cout][kt][kf][cin].
struct Conv2dShape {
  std::size_t cin = 1;
  std::size_t cout = 1;
  std::size_t kernel = 3;
  std::size_t stride = 1;

  std::size_t weight_count() const { return cout * kernel * kernel * cin; }
  std::size_t out_bins(std::size_t bins) const { return (bins + stride - 1) / stride; }
};

void conv2d_forward(const Conv2dShape& s, const double* w, const double* b, const Tensor3& in, Tensor3& out);
/// `din` may be null when the input gradient is not needed.
void conv2d_backward(const Conv2dShape& s, const double* w, const Tensor3& in, const Tensor3& dout, double* dw,
                     double* db, Tensor3* din);

void relu_inplace(Tensor3& x);
/// Zeroes gradient entries where the (post-activation) output is not positive.
void relu_backward(const Tensor3& out, Tensor3& dout);

/// Nearest-neighbour doubling along frequency.
void upsample2_forward(const Tensor3& in, Tensor3& out);
void upsample2_backward(const Tensor3& dout, Tensor3& din);

/// y = W x + b with W [out][in].
void linear_forward(std::size_t in_dim, std::size_t out_dim, const double* w, const double* b, const double* x,
                    double* y);
void linear_backward(std::size_t in_dim, std::size_t out_dim, const double* w, const double* x, const double* dy,
                     double* dw, double* db, double* dx);

/// One LSTM direction. Gate order i, f, g, o; wx is [4H][D], wh is [4H][H].
struct LstmTrace {
  std::size_t steps = 0, hidden = 0;
  bool reverse = false;
  std::vector<double> gates;  // steps x 4H, post-activation
  std::vector<double> cell;   // steps x H
  std::vector<double> h;      // steps x H, indexed by time
};

void lstm_forward(std::size_t in_dim, std::size_t hidden, const double* wx, const double* wh, const double* b,
                  const double* xs, std::size_t steps, bool reverse, LstmTrace& trace);
/// `dh` is steps x H (gradient of the loss w.r.t. each output h_t). `dxs`
/// accumulates into steps x D.
void lstm_backward(std::size_t in_dim, std::size_t hidden, const double* wx, const double* wh, const double* xs,
                   const LstmTrace& trace, const double* dh, double* dwx, double* dwh, double* db, double* dxs);

}  // namespace emssl::model
