// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "pgda/dataset.hpp"

namespace pgda {

/// Fine-mesh resolution used by the 1D reference solvers.
inline constexpr std::size_t kAntiderivativeRefinement = 64;
/// The advection-diffusion mesh keeps h <= eps / kSpMeshPerEpsilon.
inline constexpr double kSpMeshPerEpsilon = 64.0;
inline constexpr double kSpMinEpsilon = 2e-4;
inline constexpr double kSpMaxEpsilon = 0.1;

/// Natural cubic spline through values at x_i = i/(n-1). Linear in the data.
class CubicSpline {
 public:
  explicit CubicSpline(std::vector<double> values);
  double operator()(double x) const;

 private:
  std::vector<double> y_;
  std::vector<double> m_;  // second derivatives at the knots
  double h_;
};

/// u(x) = int_0^x v: cumulative trapezoid over the spline interpolant of v on
/// a kAntiderivativeRefinement-times finer grid. u(0) = 0 exactly.
GridFunction solve_antiderivative(const GridFunction& v);

/// 5-point finite differences for -Laplace(u) = f with zero Dirichlet data,
/// solved by banded Cholesky. Boundary values of f are ignored.
GridFunction solve_poisson2d(const GridFunction& f);

/// Central differences for -eps u'' + u' = f on a uniform fine mesh nested in
/// the training grid, with f spline-interpolated; restricted back to the grid.
GridFunction solve_sp_advdiff(const GridFunction& f, double epsilon);

/// Fine-mesh solve with an analytic right-hand side; returns u at the
/// `intervals + 1` mesh nodes.
std::vector<double> sp_advdiff_mesh(const std::function<double(double)>& f, double epsilon, std::size_t intervals);

/// Dispatch on the equation kind.
GridFunction solve(const EquationSpec& eq, const GridFunction& input);

/// (1, G(1)): the base pair used for translation.
SamplePair constant_input_solution(const EquationSpec& eq);

/// Max-norm of the 5-point residual -Laplace_h(u) - f over interior points,
/// together with the boundary values of u.
double poisson_residual(const GridFunction& u, const GridFunction& f);

/// How far a pair is from solving the discrete problem: the stencil residual
/// for Poisson, |S(v) - u|_inf for the 1D problems.
double pair_residual(const EquationSpec& eq, const SamplePair& pair);

/// `count` GRF inputs with reference solutions. Sample i uses
/// derive_seed(seed, seed_tag::sample, i); output is identical for any
/// thread count.
Dataset generate_dataset(const EquationSpec& eq, const GrfConfig& grf, std::size_t count, std::uint64_t seed,
                         std::size_t threads = 1);

}  // namespace pgda
