#pragma once

#include <cstdint>
#include <vector>

namespace svs {

// Iterative radix-2 complex FFT over split real/imaginary arrays.
// `inverse` uses conjugate twiddles and applies no 1/n normalization.
void fft_inplace(double* re, double* im, int64_t n, bool inverse);

int64_t next_pow2(int64_t n);

// Real-input FFT: writes bins 0..n/2 inclusive.  n must be a power of two.
void rfft(const double* x, int64_t n, double* re_out, double* im_out);

// Adjoint (exact transpose) of rfft: maps cotangents on bins 0..n/2 back to
// the n input samples.  Used by the differentiable STFT.
void rfft_adjoint(const double* dre, const double* dim, int64_t n, double* dx_out);

}  // namespace svs
