// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

#include "pgda/tensor.hpp"

namespace pgda {

/// Iterative radix-2 Cooley-Tukey transform for one power-of-two length.
///
/// Operates in place on `count` interleaved signals: sample j of signal c lives
/// at re[j * stride + c]. Signals adjacent in memory are transformed together,
/// so channel-last activations never need transposing. No normalization is
/// applied in either direction.
class FftPlan {
 public:
  explicit FftPlan(std::size_t n);

  std::size_t size() const { return n_; }

  /// Forward uses e^{-2 pi i jk/n}; inverse uses e^{+2 pi i jk/n}.
  void transform(double* re, double* im, std::size_t stride, std::size_t count, bool inverse) const;

 private:
  std::size_t n_;
  std::vector<std::size_t> bitrev_;
  std::vector<double> cos_;
  std::vector<double> sin_;
};

bool is_power_of_two(std::size_t n);

/// Cached plan for length n (per thread).
const FftPlan& fft_plan(std::size_t n);

/// Real 1D forward transform of a rank-1 tensor: floor(n/2)+1 modes,
/// X_k = sum_j x_j e^{-2 pi i jk/n}. Non-power-of-two lengths fall back to a
/// direct sum.
ComplexTensor rfft(const Tensor& x);

/// Inverse of rfft with 1/n normalization. Imaginary parts of the DC mode and
/// (for even n) the Nyquist mode are ignored.
Tensor irfft(const ComplexTensor& spectrum, std::size_t n);

/// Real 2D transform of an [n1 x n2] tensor: [n1 x (n2/2+1)] half spectrum.
ComplexTensor rfft2(const Tensor& x);

/// Inverse of rfft2 with 1/(n1*n2) normalization.
Tensor irfft2(const ComplexTensor& spectrum, std::size_t n2);

}  // namespace pgda
