#include "svs/fft.h"

#include <cmath>
#include <mutex>
#include <unordered_map>

#include "svs/errors.h"

namespace svs {
namespace {

constexpr double kTau = 6.283185307179586477;

struct Plan {
  std::vector<int64_t> bitrev;
  std::vector<double> tw_re;  // twiddles for all stages, forward sign
  std::vector<double> tw_im;
};

const Plan& plan_for(int64_t n) {
  static std::unordered_map<int64_t, Plan> cache;
  static std::mutex mu;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;

  Plan p;
  p.bitrev.resize(static_cast<size_t>(n));
  int bits = 0;
  while ((int64_t{1} << bits) < n) ++bits;
  for (int64_t i = 0; i < n; ++i) {
    int64_t r = 0;
    for (int b = 0; b < bits; ++b)
      if (i & (int64_t{1} << b)) r |= int64_t{1} << (bits - 1 - b);
    p.bitrev[static_cast<size_t>(i)] = r;
  }
  // Stage `len` needs len/2 twiddles; lay them out consecutively.
  for (int64_t len = 2; len <= n; len <<= 1) {
    for (int64_t k = 0; k < len / 2; ++k) {
      double ang = -kTau * static_cast<double>(k) / static_cast<double>(len);
      p.tw_re.push_back(std::cos(ang));
      p.tw_im.push_back(std::sin(ang));
    }
  }
  return cache.emplace(n, std::move(p)).first->second;
}

}  // namespace

int64_t next_pow2(int64_t n) {
  int64_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

void fft_inplace(double* re, double* im, int64_t n, bool inverse) {
  if (n <= 0 || (n & (n - 1)) != 0) throw DomainError("fft: size must be a power of two");
  if (n == 1) return;
  const Plan& p = plan_for(n);
  for (int64_t i = 0; i < n; ++i) {
    int64_t j = p.bitrev[static_cast<size_t>(i)];
    if (j > i) {
      std::swap(re[i], re[j]);
      std::swap(im[i], im[j]);
    }
  }
  size_t tw_base = 0;
  for (int64_t len = 2; len <= n; len <<= 1) {
    int64_t half = len / 2;
    for (int64_t start = 0; start < n; start += len) {
      for (int64_t k = 0; k < half; ++k) {
        double wr = p.tw_re[tw_base + static_cast<size_t>(k)];
        double wi = p.tw_im[tw_base + static_cast<size_t>(k)];
        if (inverse) wi = -wi;
        int64_t a = start + k;
        int64_t b = a + half;
        double xr = re[b] * wr - im[b] * wi;
        double xi = re[b] * wi + im[b] * wr;
        re[b] = re[a] - xr;
        im[b] = im[a] - xi;
        re[a] += xr;
        im[a] += xi;
      }
    }
    tw_base += static_cast<size_t>(half);
  }
}

void rfft(const double* x, int64_t n, double* re_out, double* im_out) {
  std::vector<double> re(x, x + n);
  std::vector<double> im(static_cast<size_t>(n), 0.0);
  fft_inplace(re.data(), im.data(), n, false);
  for (int64_t k = 0; k <= n / 2; ++k) {
    re_out[k] = re[static_cast<size_t>(k)];
    im_out[k] = im[static_cast<size_t>(k)];
  }
}

void rfft_adjoint(const double* dre, const double* dim, int64_t n, double* dx_out) {
  // The adjoint of x -> X[0..n/2] is t -> sum_k g_k e^{+i tau k t / n} with the
  // upper half of the spectrum left at zero; the real part of an unnormalized
  // inverse transform computes it exactly.
  std::vector<double> re(static_cast<size_t>(n), 0.0);
  std::vector<double> im(static_cast<size_t>(n), 0.0);
  for (int64_t k = 0; k <= n / 2; ++k) {
    re[static_cast<size_t>(k)] = dre[k];
    im[static_cast<size_t>(k)] = dim[k];
  }
  fft_inplace(re.data(), im.data(), n, true);
  for (int64_t t = 0; t < n; ++t) dx_out[t] = re[static_cast<size_t>(t)];
}

}  // namespace svs
