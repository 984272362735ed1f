#include "svs/autodiff.h"

#include <cmath>
#include <unordered_set>

#include "svs/errors.h"
#include "svs/fft.h"

namespace svs {
namespace {

bool any_active(const std::vector<Var>& parents) {
  for (const auto& p : parents)
    if (p->active()) return true;
  return false;
}

Var make_op(Tensor value, std::vector<Var> parents, std::function<void(Node&)> bw) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  if (any_active(parents)) {
    n->requires_grad = true;
    n->parents = std::move(parents);
    n->backward_fn = std::move(bw);
  }
  return n;
}

void deposit(const Var& p, const Tensor& g) {
  if (!p->active()) return;
  p->ensure_grad().vec() += g.vec();
}

// Broadcast classes accepted by the elementwise ops.
enum class Bcast { kSame, kRow };

Bcast bcast_kind(const Tensor& a, const Tensor& b) {
  if (a.same_shape(b)) return Bcast::kSame;
  if (a.rank() == 2 && b.rank() == 2 && b.rows() == 1 && b.cols() == a.cols()) return Bcast::kRow;
  throw ContractError("elementwise: incompatible shapes");
}

}  // namespace

Var make_constant(Tensor value) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  return n;
}

Var make_param(Tensor value) {
  auto n = std::make_shared<Node>();
  n->value = std::move(value);
  n->requires_grad = true;
  return n;
}

void backward(const Var& root) {
  if (root->value.size() != 1) throw ContractError("backward: root must be scalar");
  if (!root->requires_grad) return;

  // Post-order DFS limited to grad-requiring nodes.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, size_t>> stack;
  stack.emplace_back(root.get(), 0);
  seen.insert(root.get());
  while (!stack.empty()) {
    auto& [node, idx] = stack.back();
    if (idx < node->parents.size()) {
      Node* p = node->parents[idx].get();
      ++idx;
      if (p->requires_grad && !seen.count(p)) {
        seen.insert(p);
        stack.emplace_back(p, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  root->ensure_grad().fill(1.0);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* n = *it;
    if (n->backward_fn && !n->grad.empty()) n->backward_fn(*n);
  }
}

Var add(const Var& a, const Var& b) {
  Bcast k = bcast_kind(a->value, b->value);
  Tensor out = a->value;
  if (k == Bcast::kSame)
    out.vec() += b->value.vec();
  else
    out.mat().rowwise() += b->value.mat().row(0);
  return make_op(std::move(out), {a, b}, [a, b, k](Node& self) {
    deposit(a, self.grad);
    if (!b->active()) return;
    if (k == Bcast::kSame) {
      b->ensure_grad().vec() += self.grad.vec();
    } else {
      b->ensure_grad().mat().row(0) += self.grad.mat().colwise().sum();
    }
  });
}

Var sub(const Var& a, const Var& b) {
  Bcast k = bcast_kind(a->value, b->value);
  Tensor out = a->value;
  if (k == Bcast::kSame)
    out.vec() -= b->value.vec();
  else
    out.mat().rowwise() -= b->value.mat().row(0);
  return make_op(std::move(out), {a, b}, [a, b, k](Node& self) {
    deposit(a, self.grad);
    if (!b->active()) return;
    if (k == Bcast::kSame) {
      b->ensure_grad().vec() -= self.grad.vec();
    } else {
      b->ensure_grad().mat().row(0) -= self.grad.mat().colwise().sum();
    }
  });
}

Var mul(const Var& a, const Var& b) {
  Bcast k = bcast_kind(a->value, b->value);
  Tensor out = a->value;
  if (k == Bcast::kSame)
    out.vec() *= b->value.vec();
  else
    out.mat().array().rowwise() *= b->value.mat().row(0).array();
  return make_op(std::move(out), {a, b}, [a, b, k](Node& self) {
    if (a->active()) {
      if (k == Bcast::kSame)
        a->ensure_grad().vec() += self.grad.vec() * b->value.vec();
      else
        a->ensure_grad().mat().array() +=
            self.grad.mat().array().rowwise() * b->value.mat().row(0).array();
    }
    if (b->active()) {
      if (k == Bcast::kSame)
        b->ensure_grad().vec() += self.grad.vec() * a->value.vec();
      else
        b->ensure_grad().mat().row(0).array() +=
            (self.grad.mat().array() * a->value.mat().array()).colwise().sum();
    }
  });
}

Var affine(const Var& a, double s, double c) {
  Tensor out = a->value;
  out.vec() = out.vec() * s + c;
  return make_op(std::move(out), {a}, [a, s](Node& self) {
    if (a->active()) a->ensure_grad().vec() += self.grad.vec() * s;
  });
}

Var scale(const Var& a, double s) { return affine(a, s, 0.0); }
Var add_const(const Var& a, double c) { return affine(a, 1.0, c); }
Var neg(const Var& a) { return affine(a, -1.0, 0.0); }

Var matmul(const Var& a, const Var& b) {
  if (a->value.rank() != 2 || b->value.rank() != 2 || a->value.cols() != b->value.rows())
    throw ContractError("matmul: shape mismatch");
  Tensor out({a->value.rows(), b->value.cols()});
  out.mat().noalias() = a->value.mat() * b->value.mat();
  return make_op(std::move(out), {a, b}, [a, b](Node& self) {
    if (a->active()) a->ensure_grad().mat().noalias() += self.grad.mat() * b->value.mat().transpose();
    if (b->active()) b->ensure_grad().mat().noalias() += a->value.mat().transpose() * self.grad.mat();
  });
}

Var transpose(const Var& a) {
  if (a->value.rank() != 2) throw ContractError("transpose: rank-2 only");
  Tensor out({a->value.cols(), a->value.rows()});
  out.mat() = a->value.mat().transpose();
  return make_op(std::move(out), {a}, [a](Node& self) {
    if (a->active()) a->ensure_grad().mat() += self.grad.mat().transpose();
  });
}

namespace {

Var unary(const Var& a, Tensor out, std::function<double(double, double, double)> dfn) {
  // dfn(x, y, g) -> contribution to dx; y is the forward output.
  Tensor saved = out;
  return make_op(std::move(out), {a}, [a, saved, dfn](Node& self) {
    if (!a->active()) return;
    Tensor& g = a->ensure_grad();
    const double* x = a->value.data();
    const double* y = saved.data();
    const double* dy = self.grad.data();
    double* dx = g.data();
    int64_t n = g.size();
    for (int64_t i = 0; i < n; ++i) dx[i] += dfn(x[i], y[i], dy[i]);
  });
}

}  // namespace

Var relu(const Var& a) {
  Tensor out = a->value;
  out.vec() = out.vec().max(0.0);
  return unary(a, std::move(out), [](double x, double, double g) { return x > 0.0 ? g : 0.0; });
}

Var leaky_relu(const Var& a, double slope) {
  Tensor out = a->value;
  for (int64_t i = 0; i < out.size(); ++i)
    if (out[i] < 0.0) out[i] *= slope;
  return unary(a, std::move(out),
               [slope](double x, double, double g) { return x > 0.0 ? g : slope * g; });
}

Var tanh_v(const Var& a) {
  Tensor out = a->value;
  out.vec() = out.vec().tanh();
  return unary(a, std::move(out), [](double, double y, double g) { return g * (1.0 - y * y); });
}

Var sigmoid_v(const Var& a) {
  Tensor out = a->value;
  for (int64_t i = 0; i < out.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-out[i]));
  return unary(a, std::move(out), [](double, double y, double g) { return g * y * (1.0 - y); });
}

Var exp_v(const Var& a) {
  Tensor out = a->value;
  out.vec() = out.vec().exp();
  return unary(a, std::move(out), [](double, double y, double g) { return g * y; });
}

Var log_v(const Var& a) {
  Tensor out = a->value;
  for (int64_t i = 0; i < out.size(); ++i) out[i] = std::log(std::max(out[i], 1e-300));
  return unary(a, std::move(out),
               [](double x, double, double g) { return g / std::max(x, 1e-300); });
}

Var sqrt_v(const Var& a) {
  Tensor out = a->value;
  out.vec() = out.vec().sqrt();
  return unary(a, std::move(out),
               [](double, double y, double g) { return 0.5 * g / std::max(y, 1e-150); });
}

Var square(const Var& a) {
  Tensor out = a->value;
  out.vec() = out.vec().square();
  return unary(a, std::move(out), [](double x, double, double g) { return 2.0 * x * g; });
}

Var abs_v(const Var& a) {
  Tensor out = a->value;
  out.vec() = out.vec().abs();
  return unary(a, std::move(out), [](double x, double, double g) {
    return x > 0.0 ? g : (x < 0.0 ? -g : 0.0);
  });
}

Var softplus(const Var& a) {
  Tensor out = a->value;
  for (int64_t i = 0; i < out.size(); ++i) {
    double x = out[i];
    out[i] = std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
  }
  return unary(a, std::move(out), [](double x, double, double g) {
    return g / (1.0 + std::exp(-x));
  });
}

Var sum(const Var& a) {
  Tensor out = Tensor::scalar(a->value.vec().sum());
  return make_op(std::move(out), {a}, [a](Node& self) {
    if (a->active()) a->ensure_grad().vec() += self.grad[0];
  });
}

Var mean(const Var& a) {
  double inv = 1.0 / static_cast<double>(a->value.size());
  Tensor out = Tensor::scalar(a->value.vec().sum() * inv);
  return make_op(std::move(out), {a}, [a, inv](Node& self) {
    if (a->active()) a->ensure_grad().vec() += self.grad[0] * inv;
  });
}

Var add_n(const std::vector<Var>& xs) {
  if (xs.empty()) throw ContractError("add_n: empty list");
  Tensor out = xs[0]->value;
  for (size_t i = 1; i < xs.size(); ++i) {
    if (!xs[i]->value.same_shape(out)) throw ContractError("add_n: shape mismatch");
    out.vec() += xs[i]->value.vec();
  }
  return make_op(std::move(out), xs, [xs](Node& self) {
    for (const auto& x : xs) deposit(x, self.grad);
  });
}

Var gather_rows(const Var& a, std::vector<int64_t> ids) {
  if (a->value.rank() != 2) throw ContractError("gather_rows: rank-2 only");
  int64_t rows = a->value.rows();
  int64_t cols = a->value.cols();
  for (int64_t id : ids)
    if (id < 0 || id >= rows) throw RangeError("gather_rows: index out of range");
  Tensor out({static_cast<int64_t>(ids.size()), cols});
  for (size_t i = 0; i < ids.size(); ++i)
    out.mat().row(static_cast<int64_t>(i)) = a->value.mat().row(ids[i]);
  return make_op(std::move(out), {a}, [a, ids = std::move(ids)](Node& self) {
    if (!a->active()) return;
    MatMap g = a->ensure_grad().mat();
    for (size_t i = 0; i < ids.size(); ++i)
      g.row(ids[i]) += self.grad.mat().row(static_cast<int64_t>(i));
  });
}

Var row_slice(const Var& a, int64_t lo, int64_t hi) {
  int64_t rows = a->value.rows();
  if (lo < 0 || hi > rows || lo >= hi) throw ContractError("row_slice: bad range");
  if (a->value.rank() == 1) {
    Tensor out({hi - lo});
    for (int64_t i = lo; i < hi; ++i) out[i - lo] = a->value[i];
    return make_op(std::move(out), {a}, [a, lo, hi](Node& self) {
      if (!a->active()) return;
      Tensor& g = a->ensure_grad();
      for (int64_t i = lo; i < hi; ++i) g[i] += self.grad[i - lo];
    });
  }
  if (a->value.rank() != 2) throw ContractError("row_slice: rank-1 or rank-2 only");
  Tensor out({hi - lo, a->value.cols()});
  out.mat() = a->value.mat().middleRows(lo, hi - lo);
  return make_op(std::move(out), {a}, [a, lo, hi](Node& self) {
    if (a->active()) a->ensure_grad().mat().middleRows(lo, hi - lo) += self.grad.mat();
  });
}

Var col_slice(const Var& a, int64_t lo, int64_t hi) {
  if (a->value.rank() != 2) throw ContractError("col_slice: rank-2 only");
  if (lo < 0 || hi > a->value.cols() || lo >= hi) throw ContractError("col_slice: bad range");
  Tensor out({a->value.rows(), hi - lo});
  out.mat() = a->value.mat().middleCols(lo, hi - lo);
  return make_op(std::move(out), {a}, [a, lo, hi](Node& self) {
    if (a->active()) a->ensure_grad().mat().middleCols(lo, hi - lo) += self.grad.mat();
  });
}

Var concat_cols(const std::vector<Var>& xs) {
  if (xs.empty()) throw ContractError("concat_cols: empty list");
  int64_t rows = xs[0]->value.rows();
  int64_t cols = 0;
  for (const auto& x : xs) {
    if (x->value.rank() != 2 || x->value.rows() != rows)
      throw ContractError("concat_cols: row mismatch");
    cols += x->value.cols();
  }
  Tensor out({rows, cols});
  int64_t off = 0;
  for (const auto& x : xs) {
    out.mat().middleCols(off, x->value.cols()) = x->value.mat();
    off += x->value.cols();
  }
  return make_op(std::move(out), xs, [xs](Node& self) {
    int64_t off = 0;
    for (const auto& x : xs) {
      int64_t c = x->value.cols();
      if (x->active()) x->ensure_grad().mat() += self.grad.mat().middleCols(off, c);
      off += c;
    }
  });
}

Var softmax_rows(const Var& a) {
  if (a->value.rank() != 2) throw ContractError("softmax_rows: rank-2 only");
  Tensor out = a->value;
  for (int64_t r = 0; r < out.rows(); ++r) {
    double m = out.mat().row(r).maxCoeff();
    double s = 0.0;
    for (int64_t c = 0; c < out.cols(); ++c) {
      double e = std::exp(out.at(r, c) - m);
      out.at(r, c) = e;
      s += e;
    }
    out.mat().row(r) /= s;
  }
  Tensor probs = out;
  return make_op(std::move(out), {a}, [a, probs](Node& self) {
    if (!a->active()) return;
    MatMap g = a->ensure_grad().mat();
    for (int64_t r = 0; r < probs.rows(); ++r) {
      double dot = self.grad.mat().row(r).dot(probs.mat().row(r));
      g.row(r).array() += (self.grad.mat().row(r).array() - dot) * probs.mat().row(r).array();
    }
  });
}

Var layer_norm(const Var& x, const Var& g, const Var& b, double eps) {
  if (x->value.rank() != 2) throw ContractError("layer_norm: rank-2 only");
  int64_t rows = x->value.rows();
  int64_t cols = x->value.cols();
  if (g->value.rows() != 1 || g->value.cols() != cols || !g->value.same_shape(b->value))
    throw ContractError("layer_norm: gain/bias must be [1, C]");

  Tensor xhat({rows, cols});
  Tensor inv_std({rows});
  for (int64_t r = 0; r < rows; ++r) {
    double mu = x->value.mat().row(r).mean();
    double var = (x->value.mat().row(r).array() - mu).square().mean();
    double is = 1.0 / std::sqrt(var + eps);
    inv_std[r] = is;
    xhat.mat().row(r) = (x->value.mat().row(r).array() - mu) * is;
  }
  Tensor out({rows, cols});
  out.mat() = (xhat.mat().array().rowwise() * g->value.mat().row(0).array()).rowwise() +
              b->value.mat().row(0).array();
  return make_op(std::move(out), {x, g, b}, [x, g, b, xhat, inv_std](Node& self) {
    int64_t rows = xhat.rows();
    if (g->active())
      g->ensure_grad().mat().row(0).array() +=
          (self.grad.mat().array() * xhat.mat().array()).colwise().sum();
    if (b->active()) b->ensure_grad().mat().row(0) += self.grad.mat().colwise().sum();
    if (!x->active()) return;
    MatMap gx = x->ensure_grad().mat();
    for (int64_t r = 0; r < rows; ++r) {
      auto dxhat = (self.grad.mat().row(r).array() * g->value.mat().row(0).array()).eval();
      double m1 = dxhat.mean();
      double m2 = (dxhat * xhat.mat().row(r).array()).mean();
      gx.row(r).array() += (dxhat - m1 - xhat.mat().row(r).array() * m2) * inv_std[r];
    }
  });
}

Var reshape(const Var& a, std::vector<int64_t> shape) {
  Tensor out = a->value.reshaped(shape);
  return make_op(std::move(out), {a}, [a](Node& self) {
    if (a->active()) a->ensure_grad().vec() += self.grad.vec();
  });
}

Var detach(const Var& a) { return make_constant(a->value); }

Var conv1d(const Var& x, const Var& w, const Var& b, int64_t dilation) {
  if (x->value.rank() != 2 || w->value.rank() != 3) throw ContractError("conv1d: bad ranks");
  int64_t T = x->value.dim(0);
  int64_t cin = x->value.dim(1);
  int64_t cout = w->value.dim(0);
  int64_t K = w->value.dim(2);
  if (w->value.dim(1) != cin) throw ContractError("conv1d: channel mismatch");
  if (K % 2 == 0) throw ContractError("conv1d: kernel must be odd");
  if (dilation < 1) throw DomainError("conv1d: dilation must be >= 1");
  if (b->value.rows() != 1 || b->value.cols() != cout) throw ContractError("conv1d: bad bias");
  int64_t half = (K - 1) / 2;

  Tensor xcol({T, K * cin});
  for (int64_t t = 0; t < T; ++t) {
    for (int64_t k = 0; k < K; ++k) {
      int64_t src = t + (k - half) * dilation;
      if (src < 0 || src >= T) continue;
      std::copy(x->value.data() + src * cin, x->value.data() + (src + 1) * cin,
                xcol.data() + (t * K + k) * cin);
    }
  }
  Tensor wcol({K * cin, cout});
  for (int64_t co = 0; co < cout; ++co)
    for (int64_t ci = 0; ci < cin; ++ci)
      for (int64_t k = 0; k < K; ++k)
        wcol.at(k * cin + ci, co) = w->value[(co * cin + ci) * K + k];

  Tensor out({T, cout});
  out.mat().noalias() = xcol.mat() * wcol.mat();
  out.mat().rowwise() += b->value.mat().row(0);

  bool need = x->active() || w->active() || b->active();
  if (!need) return make_constant(std::move(out));

  return make_op(std::move(out), {x, w, b},
                 [x, w, b, xcol, wcol, T, cin, cout, K, half, dilation](Node& self) {
    if (b->active()) b->ensure_grad().mat().row(0) += self.grad.mat().colwise().sum();
    if (w->active()) {
      Tensor dwcol({K * cin, cout});
      dwcol.mat().noalias() = xcol.mat().transpose() * self.grad.mat();
      Tensor& gw = w->ensure_grad();
      for (int64_t co = 0; co < cout; ++co)
        for (int64_t ci = 0; ci < cin; ++ci)
          for (int64_t k = 0; k < K; ++k)
            gw[(co * cin + ci) * K + k] += dwcol.at(k * cin + ci, co);
    }
    if (x->active()) {
      Tensor dxcol({T, K * cin});
      dxcol.mat().noalias() = self.grad.mat() * wcol.mat().transpose();
      Tensor& gx = x->ensure_grad();
      for (int64_t t = 0; t < T; ++t) {
        for (int64_t k = 0; k < K; ++k) {
          int64_t src = t + (k - half) * dilation;
          if (src < 0 || src >= T) continue;
          for (int64_t ci = 0; ci < cin; ++ci)
            gx[src * cin + ci] += dxcol[(t * K + k) * cin + ci];
        }
      }
    }
  });
}

Var conv_transpose1d(const Var& x, const Var& w, const Var& b, int64_t stride, int64_t pad) {
  if (x->value.rank() != 2 || w->value.rank() != 3) throw ContractError("conv_transpose1d: bad ranks");
  int64_t T = x->value.dim(0);
  int64_t cin = x->value.dim(1);
  if (w->value.dim(0) != cin) throw ContractError("conv_transpose1d: channel mismatch");
  int64_t cout = w->value.dim(1);
  int64_t K = w->value.dim(2);
  if (stride < 1) throw DomainError("conv_transpose1d: stride must be >= 1");
  int64_t out_len = (T - 1) * stride + K - 2 * pad;
  if (out_len <= 0) throw ContractError("conv_transpose1d: empty output");
  if (b->value.rows() != 1 || b->value.cols() != cout) throw ContractError("conv_transpose1d: bad bias");

  // S = X * Wmat with Wmat [cin, cout*K]; scatter S[t, co*K+k] -> out[t*s+k-pad, co].
  Tensor s({T, cout * K});
  ConstMatMap wmat(w->value.data(), cin, cout * K);
  s.mat().noalias() = x->value.mat() * wmat;
  Tensor out({out_len, cout});
  out.mat().rowwise() += b->value.mat().row(0);
  for (int64_t t = 0; t < T; ++t)
    for (int64_t co = 0; co < cout; ++co)
      for (int64_t k = 0; k < K; ++k) {
        int64_t o = t * stride + k - pad;
        if (o < 0 || o >= out_len) continue;
        out[o * cout + co] += s[(t * cout + co) * K + k];
      }

  bool need = x->active() || w->active() || b->active();
  if (!need) return make_constant(std::move(out));

  return make_op(std::move(out), {x, w, b},
                 [x, w, b, T, cin, cout, K, stride, pad, out_len](Node& self) {
    if (b->active()) b->ensure_grad().mat().row(0) += self.grad.mat().colwise().sum();
    bool nx = x->active();
    bool nw = w->active();
    if (!nx && !nw) return;
    Tensor ds({T, cout * K});
    for (int64_t t = 0; t < T; ++t)
      for (int64_t co = 0; co < cout; ++co)
        for (int64_t k = 0; k < K; ++k) {
          int64_t o = t * stride + k - pad;
          ds[(t * cout + co) * K + k] = (o < 0 || o >= out_len) ? 0.0 : self.grad[o * cout + co];
        }
    ConstMatMap wmat(w->value.data(), cin, cout * K);
    if (nx) x->ensure_grad().mat().noalias() += ds.mat() * wmat.transpose();
    if (nw) {
      MatMap gw(w->ensure_grad().data(), cin, cout * K);
      gw.noalias() += x->value.mat().transpose() * ds.mat();
    }
  });
}

Var conv2d(const Var& x, const Var& w, const Var& b, int64_t stride_h, int64_t stride_w) {
  if (x->value.rank() != 3 || w->value.rank() != 4) throw ContractError("conv2d: bad ranks");
  int64_t cin = x->value.dim(0);
  int64_t H = x->value.dim(1);
  int64_t W = x->value.dim(2);
  if (w->value.dim(1) != cin) throw ContractError("conv2d: channel mismatch");
  int64_t cout = w->value.dim(0);
  int64_t kh = w->value.dim(2);
  int64_t kw = w->value.dim(3);
  if (kh % 2 == 0 || kw % 2 == 0) throw ContractError("conv2d: kernels must be odd");
  if (stride_h < 1 || stride_w < 1) throw DomainError("conv2d: strides must be >= 1");
  if (b->value.rows() != 1 || b->value.cols() != cout) throw ContractError("conv2d: bad bias");
  int64_t ph = (kh - 1) / 2;
  int64_t pw = (kw - 1) / 2;
  int64_t ho = (H + 2 * ph - kh) / stride_h + 1;
  int64_t wo = (W + 2 * pw - kw) / stride_w + 1;

  int64_t cols = cin * kh * kw;
  Tensor xcol({ho * wo, cols});
  for (int64_t oy = 0; oy < ho; ++oy)
    for (int64_t ox = 0; ox < wo; ++ox) {
      double* dst = xcol.data() + (oy * wo + ox) * cols;
      for (int64_t ci = 0; ci < cin; ++ci)
        for (int64_t ky = 0; ky < kh; ++ky) {
          int64_t sy = oy * stride_h + ky - ph;
          for (int64_t kx = 0; kx < kw; ++kx) {
            int64_t sx = ox * stride_w + kx - pw;
            double v = 0.0;
            if (sy >= 0 && sy < H && sx >= 0 && sx < W)
              v = x->value[(ci * H + sy) * W + sx];
            dst[(ci * kh + ky) * kw + kx] = v;
          }
        }
    }
  // w is [cout, cin*kh*kw] when flattened row-major; we need [cols, cout].
  Tensor ycol({ho * wo, cout});
  ycol.mat().noalias() = xcol.mat() * ConstMatMap(w->value.data(), cout, cols).transpose();
  ycol.mat().rowwise() += b->value.mat().row(0);

  Tensor out({cout, ho, wo});
  for (int64_t co = 0; co < cout; ++co)
    for (int64_t i = 0; i < ho * wo; ++i)
      out[co * ho * wo + i] = ycol[i * cout + co];

  bool need = x->active() || w->active() || b->active();
  if (!need) return make_constant(std::move(out));

  return make_op(std::move(out), {x, w, b},
                 [x, w, b, xcol, cin, H, W, cout, kh, kw, ph, pw, ho, wo, stride_h, stride_w,
                  cols](Node& self) {
    Tensor dycol({ho * wo, cout});
    for (int64_t co = 0; co < cout; ++co)
      for (int64_t i = 0; i < ho * wo; ++i)
        dycol[i * cout + co] = self.grad[co * ho * wo + i];
    if (b->active()) b->ensure_grad().mat().row(0) += dycol.mat().colwise().sum();
    if (w->active()) {
      MatMap gw(w->ensure_grad().data(), cout, cols);
      gw.noalias() += dycol.mat().transpose() * xcol.mat();
    }
    if (x->active()) {
      Tensor dxcol({ho * wo, cols});
      dxcol.mat().noalias() = dycol.mat() * ConstMatMap(w->value.data(), cout, cols);
      Tensor& gx = x->ensure_grad();
      for (int64_t oy = 0; oy < ho; ++oy)
        for (int64_t ox = 0; ox < wo; ++ox) {
          const double* src = dxcol.data() + (oy * wo + ox) * cols;
          for (int64_t ci = 0; ci < cin; ++ci)
            for (int64_t ky = 0; ky < kh; ++ky) {
              int64_t sy = oy * stride_h + ky - ph;
              if (sy < 0 || sy >= H) continue;
              for (int64_t kx = 0; kx < kw; ++kx) {
                int64_t sx = ox * stride_w + kx - pw;
                if (sx < 0 || sx >= W) continue;
                gx[(ci * H + sy) * W + sx] += src[(ci * kh + ky) * kw + kx];
              }
            }
        }
    }
  });
}

Var stft_mag(const Var& x, int64_t n_fft, int64_t hop, const std::vector<double>& window) {
  const Tensor& xv = x->value;
  if (!(xv.rank() == 1 || (xv.rank() == 2 && xv.cols() == 1)))
    throw ContractError("stft_mag: signal must be [L] or [L, 1]");
  int64_t L = xv.size();
  int64_t win = static_cast<int64_t>(window.size());
  if (win > n_fft || n_fft != next_pow2(n_fft)) throw DomainError("stft_mag: bad fft size");
  if (hop < 1) throw DomainError("stft_mag: bad hop");
  if (L < win) throw ContractError("stft_mag: signal shorter than analysis window");
  int64_t frames = 1 + (L - win) / hop;
  int64_t bins = n_fft / 2 + 1;

  Tensor re({frames, bins});
  Tensor im({frames, bins});
  Tensor out({frames, bins});
  std::vector<double> buf(static_cast<size_t>(n_fft));
  for (int64_t f = 0; f < frames; ++f) {
    std::fill(buf.begin(), buf.end(), 0.0);
    const double* src = xv.data() + f * hop;
    for (int64_t j = 0; j < win; ++j) buf[static_cast<size_t>(j)] = src[j] * window[static_cast<size_t>(j)];
    rfft(buf.data(), n_fft, re.data() + f * bins, im.data() + f * bins);
    for (int64_t k = 0; k < bins; ++k) {
      double rr = re[f * bins + k];
      double ii = im[f * bins + k];
      out[f * bins + k] = std::sqrt(rr * rr + ii * ii + 1e-24);
    }
  }
  Tensor mag = out;
  return make_op(std::move(out), {x}, [x, re, im, mag, n_fft, hop, window, frames, bins](Node& self) {
    if (!x->active()) return;
    int64_t win = static_cast<int64_t>(window.size());
    Tensor& gx = x->ensure_grad();
    std::vector<double> dre(static_cast<size_t>(bins));
    std::vector<double> dim(static_cast<size_t>(bins));
    std::vector<double> dbuf(static_cast<size_t>(n_fft));
    for (int64_t f = 0; f < frames; ++f) {
      for (int64_t k = 0; k < bins; ++k) {
        double m = mag[f * bins + k];
        double g = self.grad[f * bins + k] / m;
        dre[static_cast<size_t>(k)] = g * re[f * bins + k];
        dim[static_cast<size_t>(k)] = g * im[f * bins + k];
      }
      rfft_adjoint(dre.data(), dim.data(), n_fft, dbuf.data());
      double* dst = gx.data() + f * hop;
      for (int64_t j = 0; j < win; ++j) dst[j] += dbuf[static_cast<size_t>(j)] * window[static_cast<size_t>(j)];
    }
  });
}

}  // namespace svs
