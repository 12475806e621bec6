// SPDX-License-Identifier: Apache-2.0
#include "pgda/tape.hpp"

#include <Eigen/Core>
#include <cmath>
#include <numbers>

#include "pgda/error.hpp"
#include "pgda/fft.hpp"

namespace pgda {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

const Tensor& Var::value() const { return tape->value(*this); }
const ComplexTensor& Var::cvalue() const { return tape->cvalue(*this); }

Var Tape::variable(Tensor value) {
  Node& n = nodes_.emplace_back();
  n.value = std::move(value);
  n.requires_grad = true;
  return Var{this, nodes_.size() - 1};
}

Var Tape::complex_variable(ComplexTensor value, bool requires_grad) {
  Node& n = nodes_.emplace_back();
  n.cvalue = std::move(value);
  n.is_complex = true;
  n.requires_grad = requires_grad;
  return Var{this, nodes_.size() - 1};
}

Var Tape::constant(Tensor value) {
  Node& n = nodes_.emplace_back();
  n.value = std::move(value);
  return Var{this, nodes_.size() - 1};
}

Var Tape::record(const char* op, Tensor value, std::initializer_list<Var> inputs, BackwardFn backward) {
  require_finite(value.data(), op);
  bool needs = false;
  for (const Var& in : inputs) {
    if (in.tape != this) throw ContractError(std::string(op) + ": input recorded on a different tape");
    needs = needs || nodes_.at(in.id).requires_grad;
  }
  Node& n = nodes_.emplace_back();
  n.value = std::move(value);
  n.requires_grad = needs;
  if (needs) n.backward = std::move(backward);
  return Var{this, nodes_.size() - 1};
}

Tensor& Tape::grad_buffer(Var v) {
  Node& n = nodes_.at(v.id);
  if (n.is_complex) throw ContractError("real gradient requested for a complex node");
  if (!n.has_grad) {
    n.grad = Tensor(n.value.shape(), 0.0);
    n.has_grad = true;
  }
  return n.grad;
}

ComplexTensor& Tape::complex_grad_buffer(Var v) {
  Node& n = nodes_.at(v.id);
  if (!n.is_complex) throw ContractError("complex gradient requested for a real node");
  if (!n.has_grad) {
    n.cgrad = ComplexTensor(n.cvalue.shape());
    n.has_grad = true;
  }
  return n.cgrad;
}

void Tape::backward(Var loss) {
  if (loss.tape != this) throw ContractError("loss belongs to a different tape");
  Node& root = nodes_.at(loss.id);
  if (root.is_complex || root.value.size() != 1)
    throw ContractError("backward needs a scalar loss, got shape " + shape_string(root.value.shape()));
  grad_buffer(loss)[0] += 1.0;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.has_grad || !n.backward) continue;
    n.backward(*this, n.grad);
  }
}

Tensor Tape::grad(Var v) const {
  const Node& n = nodes_.at(v.id);
  if (n.is_complex) throw ContractError("real gradient requested for a complex node");
  return n.has_grad ? n.grad : Tensor(n.value.shape(), 0.0);
}

ComplexTensor Tape::complex_grad(Var v) const {
  const Node& n = nodes_.at(v.id);
  if (!n.is_complex) throw ContractError("complex gradient requested for a real node");
  return n.has_grad ? n.cgrad : ComplexTensor(n.cvalue.shape());
}

Activation activation_from_string(const std::string& name) {
  if (name == "tanh") return Activation::Tanh;
  if (name == "gelu") return Activation::Gelu;
  if (name == "relu") return Activation::Relu;
  if (name == "identity") return Activation::Identity;
  throw ParameterError("unknown activation '" + name + "' (expected tanh, gelu, relu, identity)");
}

std::string to_string(Activation a) {
  switch (a) {
    case Activation::Tanh: return "tanh";
    case Activation::Gelu: return "gelu";
    case Activation::Relu: return "relu";
    case Activation::Identity: return "identity";
  }
  return "identity";
}

double activate(Activation kind, double x) {
  switch (kind) {
    case Activation::Tanh: return std::tanh(x);
    case Activation::Gelu: return 0.5 * x * (1.0 + std::erf(x * (1.0 / std::numbers::sqrt2)));
    case Activation::Relu: return x > 0.0 ? x : 0.0;
    case Activation::Identity: return x;
  }
  return x;
}

double activate_derivative(Activation kind, double x) {
  switch (kind) {
    case Activation::Tanh: {
      const double t = std::tanh(x);
      return 1.0 - t * t;
    }
    case Activation::Gelu: {
      const double cdf = 0.5 * (1.0 + std::erf(x * (1.0 / std::numbers::sqrt2)));
      const double pdf = std::exp(-0.5 * x * x) * 0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2;
      return cdf + x * pdf;
    }
    case Activation::Relu: return x > 0.0 ? 1.0 : 0.0;
    case Activation::Identity: return 1.0;
  }
  return 1.0;
}

namespace {

void require_rank2(const Tensor& t, const char* op) {
  if (t.rank() != 2) throw DimensionError(std::string(op) + " expects a matrix, got " + shape_string(t.shape()));
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape())
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                         shape_string(b.shape()));
}

}  // namespace

Var matmul(Var a, Var b, bool transpose_a, bool transpose_b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_rank2(av, "matmul");
  require_rank2(bv, "matmul");
  const std::size_t m = transpose_a ? av.dim(1) : av.dim(0);
  const std::size_t k = transpose_a ? av.dim(0) : av.dim(1);
  const std::size_t kb = transpose_b ? bv.dim(1) : bv.dim(0);
  const std::size_t n = transpose_b ? bv.dim(0) : bv.dim(1);
  if (k != kb)
    throw DimensionError("matmul: inner extents differ, " + shape_string(av.shape()) + (transpose_a ? "^T" : "") +
                         " x " + shape_string(bv.shape()) + (transpose_b ? "^T" : ""));
  Tensor out({m, n});
  ConstMap A(av.data().data(), static_cast<Eigen::Index>(av.dim(0)), static_cast<Eigen::Index>(av.dim(1)));
  ConstMap B(bv.data().data(), static_cast<Eigen::Index>(bv.dim(0)), static_cast<Eigen::Index>(bv.dim(1)));
  MutMap C(out.data().data(), static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
  if (!transpose_a && !transpose_b) C.noalias() = A * B;
  else if (transpose_a && !transpose_b) C.noalias() = A.transpose() * B;
  else if (!transpose_a && transpose_b) C.noalias() = A * B.transpose();
  else C.noalias() = A.transpose() * B.transpose();

  return a.tape->record("matmul", std::move(out), {a, b}, [a, b, transpose_a, transpose_b](Tape& t, const Tensor& g) {
    const Tensor& av = t.value(a);
    const Tensor& bv = t.value(b);
    ConstMap A(av.data().data(), static_cast<Eigen::Index>(av.dim(0)), static_cast<Eigen::Index>(av.dim(1)));
    ConstMap B(bv.data().data(), static_cast<Eigen::Index>(bv.dim(0)), static_cast<Eigen::Index>(bv.dim(1)));
    ConstMap G(g.data().data(), static_cast<Eigen::Index>(g.dim(0)), static_cast<Eigen::Index>(g.dim(1)));
    if (t.requires_grad(a)) {
      Tensor& ga = t.grad_buffer(a);
      MutMap GA(ga.data().data(), A.rows(), A.cols());
      if (!transpose_a) {
        if (!transpose_b) GA.noalias() += G * B.transpose();
        else GA.noalias() += G * B;
      } else {
        if (!transpose_b) GA.noalias() += B * G.transpose();
        else GA.noalias() += B.transpose() * G.transpose();
      }
    }
    if (t.requires_grad(b)) {
      Tensor& gb = t.grad_buffer(b);
      MutMap GB(gb.data().data(), B.rows(), B.cols());
      if (!transpose_b) {
        if (!transpose_a) GB.noalias() += A.transpose() * G;
        else GB.noalias() += A * G;
      } else {
        if (!transpose_a) GB.noalias() += G.transpose() * A;
        else GB.noalias() += G.transpose() * A.transpose();
      }
    }
  });
}

Var add(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "add");
  Tensor out = a.value();
  const auto& bv = b.value().vec();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  return a.tape->record("add", std::move(out), {a, b}, [a, b](Tape& t, const Tensor& g) {
    for (Var v : {a, b}) {
      if (!t.requires_grad(v)) continue;
      Tensor& gv = t.grad_buffer(v);
      for (std::size_t i = 0; i < g.size(); ++i) gv[i] += g[i];
    }
  });
}

Var sub(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "sub");
  Tensor out = a.value();
  const auto& bv = b.value().vec();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= bv[i];
  return a.tape->record("sub", std::move(out), {a, b}, [a, b](Tape& t, const Tensor& g) {
    if (t.requires_grad(a)) {
      Tensor& ga = t.grad_buffer(a);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (t.requires_grad(b)) {
      Tensor& gb = t.grad_buffer(b);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
    }
  });
}

Var mul(Var a, Var b) {
  require_same_shape(a.value(), b.value(), "mul");
  Tensor out = a.value();
  const auto& bv = b.value().vec();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  return a.tape->record("mul", std::move(out), {a, b}, [a, b](Tape& t, const Tensor& g) {
    const Tensor& av = t.value(a);
    const Tensor& bv = t.value(b);
    if (t.requires_grad(a)) {
      Tensor& ga = t.grad_buffer(a);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * bv[i];
    }
    if (t.requires_grad(b)) {
      Tensor& gb = t.grad_buffer(b);
      for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * av[i];
    }
  });
}

Var scale(Var a, double s) {
  Tensor out = a.value();
  for (auto& v : out.vec()) v *= s;
  return a.tape->record("scale", std::move(out), {a}, [a, s](Tape& t, const Tensor& g) {
    Tensor& ga = t.grad_buffer(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += s * g[i];
  });
}

Var add_row_bias(Var a, Var bias) {
  const Tensor& av = a.value();
  const Tensor& bv = bias.value();
  require_rank2(av, "add_row_bias");
  const std::size_t rows = av.dim(0), cols = av.dim(1);
  if (bv.size() != cols)
    throw DimensionError("add_row_bias: bias " + shape_string(bv.shape()) + " does not match " +
                         shape_string(av.shape()));
  Tensor out = av;
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] += bv[c];
  return a.tape->record("add_row_bias", std::move(out), {a, bias}, [a, bias, rows, cols](Tape& t, const Tensor& g) {
    if (t.requires_grad(a)) {
      Tensor& ga = t.grad_buffer(a);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (t.requires_grad(bias)) {
      Tensor& gb = t.grad_buffer(bias);
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) gb[c] += g[r * cols + c];
    }
  });
}

Var add_scalar(Var a, Var s) {
  if (s.value().size() != 1) throw DimensionError("add_scalar expects a single-element tensor");
  Tensor out = a.value();
  const double sv = s.value()[0];
  for (auto& v : out.vec()) v += sv;
  return a.tape->record("add_scalar", std::move(out), {a, s}, [a, s](Tape& t, const Tensor& g) {
    if (t.requires_grad(a)) {
      Tensor& ga = t.grad_buffer(a);
      for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
    }
    if (t.requires_grad(s)) {
      double total = 0.0;
      for (double v : g.vec()) total += v;
      t.grad_buffer(s)[0] += total;
    }
  });
}

Var activation(Var x, Activation kind) {
  const Tensor& xv = x.value();
  Tensor out = xv;
  std::vector<double> slope;
  const bool keep = x.tape->requires_grad(x);
  if (keep) slope.resize(xv.size());
  if (kind == Activation::Gelu) {
    constexpr double inv_sqrt2 = 0.70710678118654752440;
    constexpr double inv_sqrt2pi = 0.39894228040143267794;
    for (std::size_t i = 0; i < xv.size(); ++i) {
      const double v = xv[i];
      const double cdf = 0.5 * (1.0 + std::erf(v * inv_sqrt2));
      out[i] = v * cdf;
      if (keep) slope[i] = cdf + v * inv_sqrt2pi * std::exp(-0.5 * v * v);
    }
  } else {
    for (std::size_t i = 0; i < xv.size(); ++i) {
      out[i] = activate(kind, xv[i]);
      if (keep) slope[i] = activate_derivative(kind, xv[i]);
    }
  }
  return x.tape->record("activation", std::move(out), {x}, [x, slope = std::move(slope)](Tape& t, const Tensor& g) {
    Tensor& gx = t.grad_buffer(x);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += g[i] * slope[i];
  });
}

Var reshape(Var a, Shape shape) {
  Tensor out = a.value().reshaped(std::move(shape));
  return a.tape->record("reshape", std::move(out), {a}, [a](Tape& t, const Tensor& g) {
    Tensor& ga = t.grad_buffer(a);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
  });
}

Var sum(Var a) {
  double total = 0.0;
  for (double v : a.value().vec()) total += v;
  return a.tape->record("sum", Tensor::scalar(total), {a}, [a](Tape& t, const Tensor& g) {
    Tensor& ga = t.grad_buffer(a);
    for (auto& v : ga.vec()) v += g[0];
  });
}

Var mean(Var a) { return scale(sum(a), 1.0 / static_cast<double>(a.value().size())); }

Var mse(Var pred, const Tensor& target) {
  const Tensor& pv = pred.value();
  if (pv.shape() != target.shape())
    throw DimensionError("mse: prediction " + shape_string(pv.shape()) + " vs target " +
                         shape_string(target.shape()));
  const double inv = 1.0 / static_cast<double>(pv.size());
  std::vector<double> diff(pv.size());
  double total = 0.0;
  for (std::size_t i = 0; i < diff.size(); ++i) {
    diff[i] = pv[i] - target[i];
    total += diff[i] * diff[i];
  }
  return pred.tape->record("mse", Tensor::scalar(total * inv), {pred},
                           [pred, diff = std::move(diff), inv](Tape& t, const Tensor& g) {
                             Tensor& gp = t.grad_buffer(pred);
                             const double s = 2.0 * inv * g[0];
                             for (std::size_t i = 0; i < diff.size(); ++i) gp[i] += s * diff[i];
                           });
}

namespace {

struct ModeIndex {
  std::size_t k1;
  std::size_t k2;
};

ModeIndex mode_index(const SpectralLayout& L, std::size_t m) {
  if (L.dims == 1) return {m, 0};
  const std::size_t row = m / L.k_max;
  const std::size_t k2 = m % L.k_max;
  const std::size_t k1 = row < L.k_max ? row : L.n - 2 * L.k_max + row;
  return {k1, k2};
}

// Hermitian weight of a retained mode in the half-spectrum inverse.
double mode_weight(const SpectralLayout& L, std::size_t m) {
  const std::size_t k = L.dims == 1 ? m : m % L.k_max;
  return k == 0 ? 1.0 : 2.0;
}

// Forward transform of `lines` real signals of n points x C channels, two at a
// time packed as one complex signal. Bin k < K of line i lands at
// dst + i * line_step + k * k_step (C contiguous values).
template <class Src>
void real_lines_forward(const FftPlan& plan, std::size_t C, std::size_t K, std::size_t lines, Src src,
                        double* dre, double* dim, std::size_t line_step, std::size_t k_step,
                        std::vector<double>& re, std::vector<double>& im) {
  const std::size_t n = plan.size();
  re.resize(n * C);
  im.resize(n * C);
  for (std::size_t a = 0; a < lines; a += 2) {
    const bool pair = a + 1 < lines;
    const double* xa = src(a);
    std::copy(xa, xa + n * C, re.begin());
    if (pair) {
      const double* xb = src(a + 1);
      std::copy(xb, xb + n * C, im.begin());
    } else {
      std::fill(im.begin(), im.end(), 0.0);
    }
    plan.transform(re.data(), im.data(), C, C, false);
    for (std::size_t k = 0; k < K; ++k) {
      const std::size_t kk = (n - k) % n;
      const double* zr = re.data() + k * C;
      const double* zi = im.data() + k * C;
      const double* wr = re.data() + kk * C;
      const double* wi = im.data() + kk * C;
      double* ar = dre + a * line_step + k * k_step;
      double* ai = dim + a * line_step + k * k_step;
      for (std::size_t c = 0; c < C; ++c) {
        ar[c] = 0.5 * (zr[c] + wr[c]);
        ai[c] = 0.5 * (zi[c] - wi[c]);
      }
      if (pair) {
        double* br = ar + line_step;
        double* bi = ai + line_step;
        for (std::size_t c = 0; c < C; ++c) {
          br[c] = 0.5 * (zi[c] + wi[c]);
          bi[c] = 0.5 * (wr[c] - zr[c]);
        }
      }
    }
  }
}

// Real part of the inverse transform of `lines` spectra supported on bins
// k < K (K <= n/2), two lines per complex transform. Bin k of line i is read
// from src + i * line_step + k * k_step; output line i is written to dst(i).
template <class Dst>
void real_lines_inverse(const FftPlan& plan, std::size_t C, std::size_t K, std::size_t lines, const double* sre,
                        const double* sim, std::size_t line_step, std::size_t k_step, Dst dst,
                        std::vector<double>& re, std::vector<double>& im) {
  const std::size_t n = plan.size();
  re.resize(n * C);
  im.resize(n * C);
  for (std::size_t a = 0; a < lines; a += 2) {
    const bool pair = a + 1 < lines;
    std::fill(re.begin(), re.end(), 0.0);
    std::fill(im.begin(), im.end(), 0.0);
    const double* ar = sre + a * line_step;
    const double* ai = sim + a * line_step;
    const double* br = pair ? ar + line_step : nullptr;
    const double* bi = pair ? ai + line_step : nullptr;
    for (std::size_t c = 0; c < C; ++c) {
      re[c] = ar[c];
      if (pair) im[c] = br[c];
    }
    for (std::size_t k = 1; k < K; ++k) {
      double* hr = re.data() + k * C;
      double* hi = im.data() + k * C;
      double* mr = re.data() + (n - k) * C;
      double* mi = im.data() + (n - k) * C;
      const double* xr = ar + k * k_step;
      const double* xi = ai + k * k_step;
      if (pair) {
        const double* yr = br + k * k_step;
        const double* yi = bi + k * k_step;
        for (std::size_t c = 0; c < C; ++c) {
          hr[c] = 0.5 * (xr[c] - yi[c]);
          hi[c] = 0.5 * (xi[c] + yr[c]);
          mr[c] = 0.5 * (xr[c] + yi[c]);
          mi[c] = 0.5 * (yr[c] - xi[c]);
        }
      } else {
        for (std::size_t c = 0; c < C; ++c) {
          hr[c] = 0.5 * xr[c];
          hi[c] = 0.5 * xi[c];
          mr[c] = 0.5 * xr[c];
          mi[c] = -0.5 * xi[c];
        }
      }
    }
    plan.transform(re.data(), im.data(), C, C, true);
    std::copy(re.begin(), re.end(), dst(a));
    if (pair) std::copy(im.begin(), im.end(), dst(a + 1));
  }
}

// Forward transform of x [(batch*points) x C], keeping the retained modes:
// returns re/im planes laid out [mode][batch][C].
void spectral_analysis(const double* x, const SpectralLayout& L, std::size_t C, std::vector<double>& zre,
                       std::vector<double>& zim) {
  const std::size_t P = L.points(), M = L.modes(), n = L.n, K = L.k_max, B = L.batch;
  const FftPlan& plan = fft_plan(n);
  zre.resize(M * B * C);
  zim.resize(M * B * C);
  std::vector<double> re, im;
  if (L.dims == 1) {
    real_lines_forward(plan, C, K, B, [&](std::size_t b) { return x + b * P * C; }, zre.data(), zim.data(), C,
                       B * C, re, im);
    return;
  }
  // Rows first (inner axis), then the outer axis over the K retained columns.
  std::vector<double> tre(n * K * C), tim(n * K * C);
  for (std::size_t b = 0; b < B; ++b) {
    const double* xb = x + b * P * C;
    real_lines_forward(plan, C, K, n, [&](std::size_t r) { return xb + r * n * C; }, tre.data(), tim.data(),
                       K * C, C, re, im);
    plan.transform(tre.data(), tim.data(), K * C, K * C, false);
    for (std::size_t m = 0; m < M; ++m) {
      const auto [k1, k2] = mode_index(L, m);
      const std::size_t src = (k1 * K + k2) * C;
      const std::size_t dst = (m * B + b) * C;
      std::copy_n(tre.data() + src, C, zre.data() + dst);
      std::copy_n(tim.data() + src, C, zim.data() + dst);
    }
  }
}

// Real part of the unnormalized inverse transform of a spectrum supported on
// the retained modes, each mode multiplied by mode_scale[m].
std::vector<double> spectral_synthesis(const std::vector<double>& yre, const std::vector<double>& yim,
                                       const SpectralLayout& L, std::size_t C, const std::vector<double>& mode_scale) {
  const std::size_t P = L.points(), M = L.modes(), n = L.n, K = L.k_max, B = L.batch;
  const FftPlan& plan = fft_plan(n);
  std::vector<double> out(B * P * C);
  std::vector<double> re, im;
  if (L.dims == 1) {
    std::vector<double> sre(M * B * C), sim(M * B * C);
    for (std::size_t m = 0; m < M; ++m)
      for (std::size_t q = m * B * C; q < (m + 1) * B * C; ++q) {
        sre[q] = mode_scale[m] * yre[q];
        sim[q] = mode_scale[m] * yim[q];
      }
    real_lines_inverse(plan, C, K, B, sre.data(), sim.data(), C, B * C,
                       [&](std::size_t b) { return out.data() + b * P * C; }, re, im);
    return out;
  }
  std::vector<double> tre(n * K * C), tim(n * K * C);
  for (std::size_t b = 0; b < B; ++b) {
    std::fill(tre.begin(), tre.end(), 0.0);
    std::fill(tim.begin(), tim.end(), 0.0);
    for (std::size_t m = 0; m < M; ++m) {
      const auto [k1, k2] = mode_index(L, m);
      const std::size_t dst = (k1 * K + k2) * C;
      const std::size_t src = (m * B + b) * C;
      const double sc = mode_scale[m];
      for (std::size_t c = 0; c < C; ++c) {
        tre[dst + c] = sc * yre[src + c];
        tim[dst + c] = sc * yim[src + c];
      }
    }
    plan.transform(tre.data(), tim.data(), K * C, K * C, true);
    double* ob = out.data() + b * P * C;
    real_lines_inverse(plan, C, K, n, tre.data(), tim.data(), K * C, C,
                       [&](std::size_t r) { return ob + r * n * C; }, re, im);
  }
  return out;
}

}  // namespace

Var spectral_conv(Var z, Var weights, const SpectralLayout& L) {
  Tape& tape = *z.tape;
  if (!tape.is_complex(weights)) throw ContractError("spectral_conv weights must be a complex node");
  const Tensor& zv = z.value();
  const ComplexTensor& R = weights.cvalue();
  require_rank2(zv, "spectral_conv");
  if (L.dims != 1 && L.dims != 2) throw ParameterError("spectral_conv supports 1 or 2 dimensions");
  if (!is_power_of_two(L.n)) throw ParameterError("spectral_conv grid must be a power of two, got " + std::to_string(L.n));
  if (L.k_max == 0 || (L.dims == 1 && L.k_max > L.n / 2) || (L.dims == 2 && 2 * L.k_max > L.n))
    throw ParameterError("spectral_conv: k_max " + std::to_string(L.k_max) + " too large for grid " +
                         std::to_string(L.n));
  const std::size_t C = zv.dim(1);
  const std::size_t M = L.modes();
  if (zv.dim(0) != L.batch * L.points())
    throw DimensionError("spectral_conv: input " + shape_string(zv.shape()) + " does not hold " +
                         std::to_string(L.batch) + " grids of " + std::to_string(L.points()) + " points");
  if (R.shape() != Shape{M, C, C})
    throw DimensionError("spectral_conv: weights " + shape_string(R.shape()) + " expected " +
                         shape_string(Shape{M, C, C}));

  std::vector<double> zre, zim;
  spectral_analysis(zv.data().data(), L, C, zre, zim);

  const std::size_t B = L.batch;
  const auto Bi = static_cast<Eigen::Index>(B);
  const auto Ci = static_cast<Eigen::Index>(C);
  std::vector<double> yre(M * B * C), yim(M * B * C);
  for (std::size_t m = 0; m < M; ++m) {
    ConstMap Zr(zre.data() + m * B * C, Bi, Ci), Zi(zim.data() + m * B * C, Bi, Ci);
    ConstMap Wr(R.re().data() + m * C * C, Ci, Ci), Wi(R.im().data() + m * C * C, Ci, Ci);
    MutMap Yr(yre.data() + m * B * C, Bi, Ci), Yi(yim.data() + m * B * C, Bi, Ci);
    Yr.noalias() = Zr * Wr;
    Yr.noalias() -= Zi * Wi;
    Yi.noalias() = Zr * Wi;
    Yi.noalias() += Zi * Wr;
  }

  const double norm = 1.0 / static_cast<double>(L.points());
  std::vector<double> fwd_scale(M);
  for (std::size_t m = 0; m < M; ++m) fwd_scale[m] = mode_weight(L, m) * norm;
  Tensor out(zv.shape(), spectral_synthesis(yre, yim, L, C, fwd_scale));

  return tape.record(
      "spectral_conv", std::move(out), {z, weights},
      [z, weights, L, C, M, B, fwd_scale, zre = std::move(zre), zim = std::move(zim)](Tape& t, const Tensor& g) {
        const auto Bi = static_cast<Eigen::Index>(B);
        const auto Ci = static_cast<Eigen::Index>(C);
        std::vector<double> gre, gim;
        spectral_analysis(g.data().data(), L, C, gre, gim);
        for (std::size_t m = 0; m < M; ++m)
          for (std::size_t k = m * B * C; k < (m + 1) * B * C; ++k) {
            gre[k] *= fwd_scale[m];
            gim[k] *= fwd_scale[m];
          }
        const ComplexTensor& R = t.cvalue(weights);
        if (t.requires_grad(weights)) {
          ComplexTensor& gR = t.complex_grad_buffer(weights);
          for (std::size_t m = 0; m < M; ++m) {
            ConstMap Zr(zre.data() + m * B * C, Bi, Ci), Zi(zim.data() + m * B * C, Bi, Ci);
            ConstMap Gr(gre.data() + m * B * C, Bi, Ci), Gi(gim.data() + m * B * C, Bi, Ci);
            MutMap Rr(gR.re().data() + m * C * C, Ci, Ci), Ri(gR.im().data() + m * C * C, Ci, Ci);
            Rr.noalias() += Zr.transpose() * Gr;
            Rr.noalias() += Zi.transpose() * Gi;
            Ri.noalias() += Zr.transpose() * Gi;
            Ri.noalias() -= Zi.transpose() * Gr;
          }
        }
        if (t.requires_grad(z)) {
          std::vector<double> gzr(M * B * C), gzi(M * B * C);
          for (std::size_t m = 0; m < M; ++m) {
            ConstMap Gr(gre.data() + m * B * C, Bi, Ci), Gi(gim.data() + m * B * C, Bi, Ci);
            ConstMap Wr(R.re().data() + m * C * C, Ci, Ci), Wi(R.im().data() + m * C * C, Ci, Ci);
            MutMap Zr(gzr.data() + m * B * C, Bi, Ci), Zi(gzi.data() + m * B * C, Bi, Ci);
            Zr.noalias() = Gr * Wr.transpose();
            Zr.noalias() += Gi * Wi.transpose();
            Zi.noalias() = Gi * Wr.transpose();
            Zi.noalias() -= Gr * Wi.transpose();
          }
          const std::vector<double> ones(M, 1.0);
          const std::vector<double> dz = spectral_synthesis(gzr, gzi, L, C, ones);
          Tensor& gz = t.grad_buffer(z);
          for (std::size_t i = 0; i < dz.size(); ++i) gz[i] += dz[i];
        }
      });
}

}  // namespace pgda
