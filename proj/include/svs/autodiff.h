#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "svs/tensor.h"

namespace svs {

// Tape-free reverse-mode autodiff: each op node captures its own backward
// closure, and backward() replays them in reverse topological order.
// Everything is double precision so finite-difference checks can run tight.
struct Node {
  Tensor value;
  Tensor grad;  // allocated on first deposit, same shape as value
  bool requires_grad = false;
  bool frozen = false;  // parameters only: excluded from graphs built while set
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;

  bool active() const { return requires_grad && !frozen; }
  Tensor& ensure_grad() {
    if (grad.empty()) grad = Tensor::zeros(value.shape());
    return grad;
  }
};

using Var = std::shared_ptr<Node>;

Var make_constant(Tensor value);
Var make_param(Tensor value);

// Accumulates gradients of `root` (a scalar) into every reachable active node.
void backward(const Var& root);

// Elementwise; b may share a's shape or be a [1, C] row against a [R, C].
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);

Var scale(const Var& a, double s);
Var add_const(const Var& a, double c);
// s * a + c, elementwise.
Var affine(const Var& a, double s, double c);
Var neg(const Var& a);

Var matmul(const Var& a, const Var& b);
Var transpose(const Var& a);

Var relu(const Var& a);
Var leaky_relu(const Var& a, double slope);
Var tanh_v(const Var& a);
Var sigmoid_v(const Var& a);
Var exp_v(const Var& a);
Var log_v(const Var& a);   // domain-guarded at 1e-300
Var sqrt_v(const Var& a);  // derivative guarded at 1e-150
Var square(const Var& a);
Var abs_v(const Var& a);
Var softplus(const Var& a);

Var sum(const Var& a);
Var mean(const Var& a);
// Sum of same-shaped tensors (loss accumulation).
Var add_n(const std::vector<Var>& xs);

// out[i, :] = a[ids[i], :]; backward scatter-adds.  Shared by embedding
// lookup and length regulation.
Var gather_rows(const Var& a, std::vector<int64_t> ids);

Var row_slice(const Var& a, int64_t lo, int64_t hi);
Var col_slice(const Var& a, int64_t lo, int64_t hi);
Var concat_cols(const std::vector<Var>& xs);

Var softmax_rows(const Var& a);
// Normalizes each row of x to zero mean / unit variance, then y = g * xhat + b.
// g and b are [1, C].
Var layer_norm(const Var& x, const Var& g, const Var& b, double eps = 1e-5);

Var reshape(const Var& a, std::vector<int64_t> shape);
// Value copy with no graph history.
Var detach(const Var& a);

// 1-D convolution over time-major input x [T, Cin] with weights [Cout, Cin, K]
// and bias [1, Cout]; stride 1, zero 'same' padding, odd K, dilation >= 1.
Var conv1d(const Var& x, const Var& w, const Var& b, int64_t dilation);

// Transposed 1-D convolution: x [T, Cin], weights [Cin, Cout, K], bias
// [1, Cout]; output length (T-1)*stride + K - 2*pad.
Var conv_transpose1d(const Var& x, const Var& w, const Var& b, int64_t stride, int64_t pad);

// 2-D convolution: x [Cin, H, W], weights [Cout, Cin, Kh, Kw], bias [1, Cout],
// zero 'same' padding of (K-1)/2 per axis, odd kernels, strides >= 1.
Var conv2d(const Var& x, const Var& w, const Var& b, int64_t stride_h, int64_t stride_w);

// Magnitude STFT of a [L] or [L, 1] signal: frames are consecutive hops with
// no centering, each windowed and zero-padded to n_fft.  Output is
// [frames, n_fft/2 + 1]; gradients flow back to the signal exactly.
Var stft_mag(const Var& x, int64_t n_fft, int64_t hop, const std::vector<double>& window);

}  // namespace svs
