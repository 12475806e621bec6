// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <string>
#include <vector>

#include "pgda/tensor.hpp"

namespace pgda {

class Tape;

/// Handle to a node recorded on a Tape.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor& value() const;
  const ComplexTensor& cvalue() const;
};

/// Define-by-run reverse-mode recorder.
///
/// Nodes are appended in evaluation order, so every node only refers to
/// earlier ones and the reverse index order is a valid topological order.
/// A tape lives for a single forward/backward pass.
class Tape {
 public:
  /// Called once during backward with the gradient of the node's output.
  using BackwardFn = std::function<void(Tape&, const Tensor& grad_out)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf that receives a gradient.
  Var variable(Tensor value);
  /// Complex leaf (spectral weights); gradient is d/dRe + i d/dIm.
  Var complex_variable(ComplexTensor value, bool requires_grad = true);
  /// Leaf that never receives a gradient.
  Var constant(Tensor value);

  /// Records the result of a primitive. `op` names it in diagnostics.
  /// `backward` is dropped when no input requires a gradient.
  Var record(const char* op, Tensor value, std::initializer_list<Var> inputs, BackwardFn backward);

  /// Runs the reverse sweep from a scalar node.
  void backward(Var loss);

  bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }
  bool is_complex(Var v) const { return nodes_.at(v.id).is_complex; }
  std::size_t size() const { return nodes_.size(); }

  const Tensor& value(Var v) const { return nodes_.at(v.id).value; }
  const ComplexTensor& cvalue(Var v) const { return nodes_.at(v.id).cvalue; }

  /// Gradient of a real node after backward (zeros if unreached).
  Tensor grad(Var v) const;
  /// Gradient of a complex node after backward (zeros if unreached).
  ComplexTensor complex_grad(Var v) const;

  /// Accumulation buffers used by backward functions; allocated on first use.
  Tensor& grad_buffer(Var v);
  ComplexTensor& complex_grad_buffer(Var v);

 private:
  struct Node {
    Tensor value;
    ComplexTensor cvalue;
    Tensor grad;
    ComplexTensor cgrad;
    bool is_complex = false;
    bool requires_grad = false;
    bool has_grad = false;
    BackwardFn backward;
  };

  std::deque<Node> nodes_;
};

enum class Activation { Tanh, Gelu, Relu, Identity };

Activation activation_from_string(const std::string& name);
std::string to_string(Activation a);

/// Scalar activation value and derivative, shared with the model code.
double activate(Activation kind, double x);
double activate_derivative(Activation kind, double x);

// Differentiable primitives. Shapes follow row-major rank-2 conventions.

/// a [m x k] times b [k x n]; either operand may be used transposed.
Var matmul(Var a, Var b, bool transpose_a = false, bool transpose_b = false);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
/// a [m x n] plus bias [n] on every row.
Var add_row_bias(Var a, Var bias);
/// a plus the single value held by s [1].
Var add_scalar(Var a, Var s);
Var activation(Var x, Activation kind);
Var reshape(Var a, Shape shape);
Var sum(Var a);
Var mean(Var a);
/// Mean squared difference over all elements.
Var mse(Var pred, const Tensor& target);

/// Layout of a channel-last batch of grid functions for spectral convolution.
struct SpectralLayout {
  std::size_t batch = 1;
  std::size_t n = 0;       ///< points per grid axis (power of two)
  std::size_t dims = 1;    ///< 1 or 2
  std::size_t k_max = 0;   ///< retained modes per axis

  /// Number of retained modes: k_max in 1D, 2*k_max*k_max in 2D.
  std::size_t modes() const { return dims == 1 ? k_max : 2 * k_max * k_max; }
  std::size_t points() const { return dims == 1 ? n : n * n; }
};

/// Truncated Fourier-space channel mixing on z [(batch*points) x C] with
/// weights [modes x C x C] (input channel major, output channel minor).
///
/// 1D keeps frequencies 0..k_max-1. 2D keeps the half-spectrum block
/// k2 in 0..k_max-1 with k1 in 0..k_max-1 or n-k_max..n-1; mode index is
/// row * k_max + k2 where row < k_max maps to k1 = row and row >= k_max maps
/// to k1 = n - 2*k_max + row.
Var spectral_conv(Var z, Var weights, const SpectralLayout& layout);

}  // namespace pgda
