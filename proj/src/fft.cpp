// SPDX-License-Identifier: Apache-2.0
#include "pgda/fft.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <numbers>

#include "pgda/error.hpp"

namespace pgda {

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

FftPlan::FftPlan(std::size_t n) : n_(n) {
  if (!is_power_of_two(n) || n < 2) throw ParameterError("FFT length must be a power of two >= 2, got " + std::to_string(n));
  std::size_t bits = 0;
  while ((std::size_t{1} << bits) < n) ++bits;
  bitrev_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t r = 0;
    for (std::size_t b = 0; b < bits; ++b)
      if (i & (std::size_t{1} << b)) r |= std::size_t{1} << (bits - 1 - b);
    bitrev_[i] = r;
  }
  cos_.resize(n / 2);
  sin_.resize(n / 2);
  for (std::size_t k = 0; k < n / 2; ++k) {
    const double theta = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
    cos_[k] = std::cos(theta);
    sin_[k] = std::sin(theta);
  }
}

void FftPlan::transform(double* re, double* im, std::size_t stride, std::size_t count, bool inverse) const {
  for (std::size_t i = 0; i < n_; ++i) {
    const std::size_t j = bitrev_[i];
    if (j <= i) continue;
    double* ar = re + i * stride;
    double* br = re + j * stride;
    double* ai = im + i * stride;
    double* bi = im + j * stride;
    for (std::size_t c = 0; c < count; ++c) {
      std::swap(ar[c], br[c]);
      std::swap(ai[c], bi[c]);
    }
  }
  const double sign = inverse ? 1.0 : -1.0;
  for (std::size_t len = 2; len <= n_; len <<= 1) {
    const std::size_t half = len / 2;
    const std::size_t step = n_ / len;
    for (std::size_t start = 0; start < n_; start += len) {
      for (std::size_t j = 0; j < half; ++j) {
        const double wr = cos_[j * step];
        const double wi = sign * sin_[j * step];
        double* ur = re + (start + j) * stride;
        double* ui = im + (start + j) * stride;
        double* vr = re + (start + j + half) * stride;
        double* vi = im + (start + j + half) * stride;
        for (std::size_t c = 0; c < count; ++c) {
          const double tr = wr * vr[c] - wi * vi[c];
          const double ti = wr * vi[c] + wi * vr[c];
          vr[c] = ur[c] - tr;
          vi[c] = ui[c] - ti;
          ur[c] += tr;
          ui[c] += ti;
        }
      }
    }
  }
}

const FftPlan& fft_plan(std::size_t n) {
  thread_local std::map<std::size_t, std::unique_ptr<FftPlan>> cache;
  auto& slot = cache[n];
  if (!slot) slot = std::make_unique<FftPlan>(n);
  return *slot;
}

namespace {

// Full complex transform of length n, either via the plan or a direct sum.
void complex_transform(std::vector<double>& re, std::vector<double>& im, bool inverse) {
  const std::size_t n = re.size();
  if (is_power_of_two(n)) {
    fft_plan(n).transform(re.data(), im.data(), 1, 1, inverse);
    return;
  }
  std::vector<double> out_re(n, 0.0), out_im(n, 0.0);
  const double sign = inverse ? 1.0 : -1.0;
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t j = 0; j < n; ++j) {
      const double theta = 2.0 * std::numbers::pi * static_cast<double>((j * k) % n) / static_cast<double>(n);
      const double c = std::cos(theta), s = sign * std::sin(theta);
      out_re[k] += re[j] * c - im[j] * s;
      out_im[k] += re[j] * s + im[j] * c;
    }
  }
  re.swap(out_re);
  im.swap(out_im);
}

// Fill the full length-n spectrum from a half spectrum using Hermitian symmetry.
void hermitian_extend(const double* hre, const double* him, std::size_t n, std::vector<double>& re,
                      std::vector<double>& im) {
  const std::size_t half = n / 2 + 1;
  re.assign(n, 0.0);
  im.assign(n, 0.0);
  for (std::size_t k = 0; k < half; ++k) {
    re[k] = hre[k];
    im[k] = him[k];
  }
  im[0] = 0.0;
  if (n % 2 == 0) im[n / 2] = 0.0;
  for (std::size_t k = half; k < n; ++k) {
    re[k] = hre[n - k];
    im[k] = -him[n - k];
  }
}

}  // namespace

ComplexTensor rfft(const Tensor& x) {
  if (x.rank() != 1) throw DimensionError("rfft expects a rank-1 tensor, got " + shape_string(x.shape()));
  const std::size_t n = x.size();
  if (n < 2) throw ParameterError("rfft needs at least 2 samples, got " + std::to_string(n));
  std::vector<double> re(x.vec()), im(n, 0.0);
  complex_transform(re, im, false);
  const std::size_t half = n / 2 + 1;
  re.resize(half);
  im.resize(half);
  return ComplexTensor({half}, std::move(re), std::move(im));
}

Tensor irfft(const ComplexTensor& spectrum, std::size_t n) {
  if (n < 2) throw ParameterError("irfft needs at least 2 samples, got " + std::to_string(n));
  if (spectrum.shape().size() != 1 || spectrum.size() != n / 2 + 1)
    throw DimensionError("irfft spectrum " + shape_string(spectrum.shape()) + " does not match length " +
                         std::to_string(n));
  std::vector<double> re, im;
  hermitian_extend(spectrum.re().data(), spectrum.im().data(), n, re, im);
  complex_transform(re, im, true);
  const double inv = 1.0 / static_cast<double>(n);
  for (auto& v : re) v *= inv;
  return Tensor({n}, std::move(re));
}

ComplexTensor rfft2(const Tensor& x) {
  if (x.rank() != 2) throw DimensionError("rfft2 expects a rank-2 tensor, got " + shape_string(x.shape()));
  const std::size_t n1 = x.dim(0), n2 = x.dim(1);
  if (n1 < 2 || n2 < 2) throw ParameterError("rfft2 needs at least 2 samples per axis");
  const std::size_t half = n2 / 2 + 1;
  ComplexTensor out({n1, half});
  std::vector<double> re, im;
  for (std::size_t r = 0; r < n1; ++r) {
    re.assign(x.vec().begin() + static_cast<std::ptrdiff_t>(r * n2),
              x.vec().begin() + static_cast<std::ptrdiff_t>((r + 1) * n2));
    im.assign(n2, 0.0);
    complex_transform(re, im, false);
    for (std::size_t k = 0; k < half; ++k) {
      out.re()[r * half + k] = re[k];
      out.im()[r * half + k] = im[k];
    }
  }
  for (std::size_t k = 0; k < half; ++k) {
    re.resize(n1);
    im.resize(n1);
    for (std::size_t r = 0; r < n1; ++r) {
      re[r] = out.re()[r * half + k];
      im[r] = out.im()[r * half + k];
    }
    complex_transform(re, im, false);
    for (std::size_t r = 0; r < n1; ++r) {
      out.re()[r * half + k] = re[r];
      out.im()[r * half + k] = im[r];
    }
  }
  return out;
}

Tensor irfft2(const ComplexTensor& spectrum, std::size_t n2) {
  if (spectrum.shape().size() != 2 || spectrum.shape()[1] != n2 / 2 + 1)
    throw DimensionError("irfft2 spectrum " + shape_string(spectrum.shape()) + " does not match width " +
                         std::to_string(n2));
  const std::size_t n1 = spectrum.shape()[0];
  const std::size_t half = n2 / 2 + 1;
  std::vector<double> cre(spectrum.re()), cim(spectrum.im());
  std::vector<double> re(n1), im(n1);
  for (std::size_t k = 0; k < half; ++k) {
    for (std::size_t r = 0; r < n1; ++r) {
      re[r] = cre[r * half + k];
      im[r] = cim[r * half + k];
    }
    complex_transform(re, im, true);
    for (std::size_t r = 0; r < n1; ++r) {
      cre[r * half + k] = re[r];
      cim[r * half + k] = im[r];
    }
  }
  Tensor out({n1, n2});
  const double inv = 1.0 / static_cast<double>(n1 * n2);
  for (std::size_t r = 0; r < n1; ++r) {
    hermitian_extend(cre.data() + r * half, cim.data() + r * half, n2, re, im);
    complex_transform(re, im, true);
    for (std::size_t c = 0; c < n2; ++c) out.at(r, c) = re[c] * inv;
  }
  return out;
}

}  // namespace pgda
