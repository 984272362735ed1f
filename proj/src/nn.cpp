#include "svs/nn.h"

#include <algorithm>
#include <cmath>

#include "svs/errors.h"

namespace svs {

Var ParamStore::create(const std::string& name, Tensor init) {
  if (find(name)) throw ConfigError("parameter already registered: " + name);
  Var v = make_param(std::move(init));
  items_.emplace_back(name, v);
  return v;
}

Var ParamStore::find(const std::string& name) const {
  for (const auto& [n, v] : items_)
    if (n == name) return v;
  return nullptr;
}

std::vector<Var> ParamStore::vars() const {
  std::vector<Var> out;
  out.reserve(items_.size());
  for (const auto& [n, v] : items_) out.push_back(v);
  return out;
}

void ParamStore::freeze(bool on) {
  for (auto& [n, v] : items_) v->frozen = on;
}

void ParamStore::zero_grads() {
  for (auto& [n, v] : items_)
    if (!v->grad.empty()) v->grad.fill(0.0);
}

int64_t ParamStore::scalar_count() const {
  int64_t n = 0;
  for (const auto& [name, v] : items_) n += v->value.size();
  return n;
}

Tensor xavier_uniform(std::vector<int64_t> shape, int64_t fan_in, int64_t fan_out, Rng& rng) {
  Tensor t(std::move(shape));
  double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (int64_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-limit, limit);
  return t;
}

Tensor normal_init(std::vector<int64_t> shape, double stddev, Rng& rng) {
  Tensor t(std::move(shape));
  for (int64_t i = 0; i < t.size(); ++i) t[i] = rng.normal(0.0, stddev);
  return t;
}

Dense Dense::create(ParamStore& ps, const std::string& name, int64_t in, int64_t out, Rng& rng) {
  Dense d;
  d.w = ps.create(name + ".w", xavier_uniform({in, out}, in, out, rng));
  d.b = ps.create(name + ".b", Tensor({1, out}));
  return d;
}

Embedding Embedding::create(ParamStore& ps, const std::string& name, int64_t vocab, int64_t dim,
                            Rng& rng) {
  Embedding e;
  e.table = ps.create(name + ".table", normal_init({vocab, dim}, 0.02, rng));
  return e;
}

LayerNorm LayerNorm::create(ParamStore& ps, const std::string& name, int64_t dim) {
  LayerNorm ln;
  ln.g = ps.create(name + ".g", Tensor::full({1, dim}, 1.0));
  ln.b = ps.create(name + ".b", Tensor({1, dim}));
  return ln;
}

Conv1d Conv1d::create(ParamStore& ps, const std::string& name, int64_t in, int64_t out, int64_t k,
                      int64_t dilation, Rng& rng) {
  Conv1d c;
  c.w = ps.create(name + ".w", xavier_uniform({out, in, k}, in * k, out * k, rng));
  c.b = ps.create(name + ".b", Tensor({1, out}));
  c.dilation = dilation;
  return c;
}

ConvTranspose1d ConvTranspose1d::create(ParamStore& ps, const std::string& name, int64_t in,
                                        int64_t out, int64_t k, int64_t stride, int64_t pad,
                                        Rng& rng) {
  ConvTranspose1d c;
  c.w = ps.create(name + ".w", xavier_uniform({in, out, k}, in * k, out * k, rng));
  c.b = ps.create(name + ".b", Tensor({1, out}));
  c.stride = stride;
  c.pad = pad;
  return c;
}

Conv2d Conv2d::create(ParamStore& ps, const std::string& name, int64_t in, int64_t out, int64_t kh,
                      int64_t kw, int64_t stride_h, int64_t stride_w, Rng& rng) {
  Conv2d c;
  c.w = ps.create(name + ".w", xavier_uniform({out, in, kh, kw}, in * kh * kw, out * kh * kw, rng));
  c.b = ps.create(name + ".b", Tensor({1, out}));
  c.stride_h = stride_h;
  c.stride_w = stride_w;
  return c;
}

Var dropout(const Var& x, double p, bool train, Rng& rng) {
  if (!train || p <= 0.0) return x;
  if (p >= 1.0) throw ConfigError("dropout: p must be < 1");
  Tensor mask(x->value.shape());
  double keep = 1.0 - p;
  for (int64_t i = 0; i < mask.size(); ++i)
    mask[i] = rng.uniform() < keep ? 1.0 / keep : 0.0;
  return mul(x, make_constant(std::move(mask)));
}

Tensor positional_encoding(int64_t length, int64_t dim) {
  Tensor pe({length, dim});
  for (int64_t pos = 0; pos < length; ++pos)
    for (int64_t i = 0; i < dim; i += 2) {
      double freq = std::pow(10000.0, -static_cast<double>(i) / static_cast<double>(dim));
      double ang = static_cast<double>(pos) * freq;
      pe.at(pos, i) = std::sin(ang);
      if (i + 1 < dim) pe.at(pos, i + 1) = std::cos(ang);
    }
  return pe;
}

GradCheckResult finite_difference_check(const std::vector<Var>& params,
                                        const std::function<Var()>& loss_fn, int n_probes,
                                        double step, Rng& rng) {
  int64_t total = 0;
  for (const auto& p : params) total += p->value.size();
  if (total == 0) throw ConfigError("finite_difference_check: no parameters");

  struct Probe {
    size_t param;
    int64_t index;
  };
  std::vector<Probe> probes;
  for (int i = 0; i < n_probes; ++i) {
    int64_t flat = rng.uniform_int(0, total - 1);
    for (size_t pi = 0; pi < params.size(); ++pi) {
      int64_t sz = params[pi]->value.size();
      if (flat < sz) {
        probes.push_back({pi, flat});
        break;
      }
      flat -= sz;
    }
  }

  for (const auto& p : params)
    if (!p->grad.empty()) p->grad.fill(0.0);
  Var root = loss_fn();
  backward(root);

  GradCheckResult res;
  res.probes = n_probes;
  for (const Probe& pr : probes) {
    const Var& p = params[pr.param];
    double analytic = p->grad.empty() ? 0.0 : p->grad[pr.index];
    double saved = p->value[pr.index];
    p->value[pr.index] = saved + step;
    double up = loss_fn()->value[0];
    p->value[pr.index] = saved - step;
    double down = loss_fn()->value[0];
    p->value[pr.index] = saved;
    double fd = (up - down) / (2.0 * step);
    double rel = std::abs(fd - analytic) / std::max({std::abs(fd), std::abs(analytic), 1e-8});
    res.max_rel_err = std::max(res.max_rel_err, rel);
  }
  return res;
}

}  // namespace svs
