#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <complex>
#include <vector>

#include "doctest.h"
#include "svs/errors.h"
#include "svs/fft.h"
#include "svs/rng.h"

namespace {

constexpr double kTau = 6.283185307179586477;

// Naive DFT oracle, O(n^2).
void dft(const std::vector<double>& x, std::vector<std::complex<double>>& out) {
  size_t n = x.size();
  out.assign(n, {0.0, 0.0});
  for (size_t k = 0; k < n; ++k)
    for (size_t t = 0; t < n; ++t) {
      double ang = -kTau * static_cast<double>(k * t % n) / static_cast<double>(n);
      out[k] += x[t] * std::complex<double>(std::cos(ang), std::sin(ang));
    }
}

}  // namespace

TEST_CASE("rfft matches the naive DFT") {
  svs::Rng rng(42);
  for (int64_t n : {8, 64, 256, 1024}) {
    std::vector<double> x(static_cast<size_t>(n));
    for (auto& v : x) v = rng.uniform(-1.0, 1.0);
    std::vector<std::complex<double>> ref;
    dft(x, ref);
    std::vector<double> re(static_cast<size_t>(n / 2 + 1)), im(static_cast<size_t>(n / 2 + 1));
    svs::rfft(x.data(), n, re.data(), im.data());
    for (int64_t k = 0; k <= n / 2; ++k) {
      CHECK(re[static_cast<size_t>(k)] ==
            doctest::Approx(ref[static_cast<size_t>(k)].real()).epsilon(1e-9).scale(1.0));
      CHECK(im[static_cast<size_t>(k)] ==
            doctest::Approx(ref[static_cast<size_t>(k)].imag()).epsilon(1e-9).scale(1.0));
    }
  }
}

TEST_CASE("pure tone lands in a single bin") {
  int64_t n = 512;
  std::vector<double> x(static_cast<size_t>(n));
  int64_t bin = 37;
  for (int64_t t = 0; t < n; ++t)
    x[static_cast<size_t>(t)] = std::sin(kTau * static_cast<double>(bin * t) / static_cast<double>(n));
  std::vector<double> re(static_cast<size_t>(n / 2 + 1)), im(static_cast<size_t>(n / 2 + 1));
  svs::rfft(x.data(), n, re.data(), im.data());
  for (int64_t k = 0; k <= n / 2; ++k) {
    double mag = std::hypot(re[static_cast<size_t>(k)], im[static_cast<size_t>(k)]);
    if (k == bin)
      CHECK(mag == doctest::Approx(static_cast<double>(n) / 2.0).epsilon(1e-9));
    else
      CHECK(mag < 1e-8);
  }
}

TEST_CASE("inverse transform recovers the signal") {
  svs::Rng rng(7);
  int64_t n = 128;
  std::vector<double> re(static_cast<size_t>(n)), im(static_cast<size_t>(n), 0.0);
  for (auto& v : re) v = rng.normal();
  std::vector<double> re2 = re, im2 = im;
  svs::fft_inplace(re2.data(), im2.data(), n, false);
  svs::fft_inplace(re2.data(), im2.data(), n, true);
  for (int64_t i = 0; i < n; ++i) {
    CHECK(re2[static_cast<size_t>(i)] / static_cast<double>(n) ==
          doctest::Approx(re[static_cast<size_t>(i)]).epsilon(1e-10).scale(1.0));
    CHECK(std::abs(im2[static_cast<size_t>(i)]) / static_cast<double>(n) < 1e-10);
  }
}

TEST_CASE("rfft_adjoint is the exact transpose of rfft") {
  // <A x, g> must equal <x, A^T g> for random x and g.
  svs::Rng rng(13);
  int64_t n = 256;
  int64_t bins = n / 2 + 1;
  std::vector<double> x(static_cast<size_t>(n));
  std::vector<double> gre(static_cast<size_t>(bins)), gim(static_cast<size_t>(bins));
  for (auto& v : x) v = rng.normal();
  for (auto& v : gre) v = rng.normal();
  for (auto& v : gim) v = rng.normal();

  std::vector<double> re(static_cast<size_t>(bins)), im(static_cast<size_t>(bins));
  svs::rfft(x.data(), n, re.data(), im.data());
  double lhs = 0.0;
  for (int64_t k = 0; k < bins; ++k)
    lhs += re[static_cast<size_t>(k)] * gre[static_cast<size_t>(k)] +
           im[static_cast<size_t>(k)] * gim[static_cast<size_t>(k)];

  std::vector<double> xt(static_cast<size_t>(n));
  svs::rfft_adjoint(gre.data(), gim.data(), n, xt.data());
  double rhs = 0.0;
  for (int64_t t = 0; t < n; ++t) rhs += x[static_cast<size_t>(t)] * xt[static_cast<size_t>(t)];

  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
}

TEST_CASE("non-power-of-two sizes are rejected") {
  std::vector<double> re(12, 0.0), im(12, 0.0);
  CHECK_THROWS_AS(svs::fft_inplace(re.data(), im.data(), 12, false), svs::DomainError);
}

TEST_CASE("next_pow2") {
  CHECK(svs::next_pow2(1) == 1);
  CHECK(svs::next_pow2(2) == 2);
  CHECK(svs::next_pow2(3) == 4);
  CHECK(svs::next_pow2(960) == 1024);
  CHECK(svs::next_pow2(1024) == 1024);
}
