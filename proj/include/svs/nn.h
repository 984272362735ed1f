#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "svs/autodiff.h"
#include "svs/rng.h"

namespace svs {

// Ordered, named parameter registry.  Order is the serialization order, so it
// must be construction-deterministic.
class ParamStore {
 public:
  Var create(const std::string& name, Tensor init);
  Var find(const std::string& name) const;  // nullptr when absent
  const std::vector<std::pair<std::string, Var>>& items() const { return items_; }
  std::vector<Var> vars() const;
  void freeze(bool on);
  void zero_grads();
  int64_t scalar_count() const;

 private:
  std::vector<std::pair<std::string, Var>> items_;
};

Tensor xavier_uniform(std::vector<int64_t> shape, int64_t fan_in, int64_t fan_out, Rng& rng);
Tensor normal_init(std::vector<int64_t> shape, double stddev, Rng& rng);

struct Dense {
  Var w, b;  // w [in, out], b [1, out]
  static Dense create(ParamStore& ps, const std::string& name, int64_t in, int64_t out, Rng& rng);
  Var operator()(const Var& x) const { return add(matmul(x, w), b); }
};

struct Embedding {
  Var table;  // [vocab, dim]
  static Embedding create(ParamStore& ps, const std::string& name, int64_t vocab, int64_t dim,
                          Rng& rng);
  Var operator()(const std::vector<int64_t>& ids) const { return gather_rows(table, ids); }
  int64_t vocab() const { return table->value.rows(); }
};

struct LayerNorm {
  Var g, b;  // [1, dim]
  static LayerNorm create(ParamStore& ps, const std::string& name, int64_t dim);
  Var operator()(const Var& x) const { return layer_norm(x, g, b); }
};

struct Conv1d {
  Var w, b;  // w [out, in, k]
  int64_t dilation = 1;
  static Conv1d create(ParamStore& ps, const std::string& name, int64_t in, int64_t out, int64_t k,
                       int64_t dilation, Rng& rng);
  Var operator()(const Var& x) const { return conv1d(x, w, b, dilation); }
};

struct ConvTranspose1d {
  Var w, b;  // w [in, out, k]
  int64_t stride = 1;
  int64_t pad = 0;
  static ConvTranspose1d create(ParamStore& ps, const std::string& name, int64_t in, int64_t out,
                                int64_t k, int64_t stride, int64_t pad, Rng& rng);
  Var operator()(const Var& x) const { return conv_transpose1d(x, w, b, stride, pad); }
};

struct Conv2d {
  Var w, b;  // w [out, in, kh, kw]
  int64_t stride_h = 1, stride_w = 1;
  static Conv2d create(ParamStore& ps, const std::string& name, int64_t in, int64_t out, int64_t kh,
                       int64_t kw, int64_t stride_h, int64_t stride_w, Rng& rng);
  Var operator()(const Var& x) const { return conv2d(x, w, b, stride_h, stride_w); }
};

// Inverted dropout; identity when train is false or p == 0.
Var dropout(const Var& x, double p, bool train, Rng& rng);

// Sinusoidal positional encoding table [length, dim].
Tensor positional_encoding(int64_t length, int64_t dim);

// Relative error between analytic and central finite-difference gradients of
// `loss_fn` with respect to `n_probes` randomly chosen parameter scalars.
// `loss_fn` must be a deterministic pure function of the parameter values.
// Relative error is |a - b| / max(|a|, |b|, 1e-8).
struct GradCheckResult {
  double max_rel_err = 0.0;
  int probes = 0;
};
GradCheckResult finite_difference_check(const std::vector<Var>& params,
                                        const std::function<Var()>& loss_fn, int n_probes,
                                        double step, Rng& rng);

}  // namespace svs
