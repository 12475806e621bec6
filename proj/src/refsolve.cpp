// SPDX-License-Identifier: Apache-2.0
#include "pgda/refsolve.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "pgda/error.hpp"
#include "pgda/parallel.hpp"
#include "pgda/rng.hpp"

namespace pgda {

namespace {

// Thomas algorithm; sub/diag/super have the system's length (sub[0] and
// super[n-1] unused). Overwrites rhs with the solution.
void solve_tridiagonal(std::vector<double> sub, std::vector<double> diag, std::vector<double> super,
                       std::vector<double>& rhs) {
  const std::size_t n = diag.size();
  for (std::size_t i = 1; i < n; ++i) {
    const double w = sub[i] / diag[i - 1];
    diag[i] -= w * super[i - 1];
    rhs[i] -= w * rhs[i - 1];
  }
  rhs[n - 1] /= diag[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) rhs[i] = (rhs[i] - super[i] * rhs[i + 1]) / diag[i];
}

void require_1d(const GridFunction& g, const char* who) {
  g.grid.validate();
  if (g.grid.dims != 1) throw DimensionError(std::string(who) + " needs a 1D grid function");
  if (g.values.size() != g.grid.n) throw DimensionError(std::string(who) + ": values do not match the grid");
}

}  // namespace

CubicSpline::CubicSpline(std::vector<double> values) : y_(std::move(values)) {
  const std::size_t n = y_.size();
  if (n < 2) throw ParameterError("spline needs at least two knots");
  h_ = 1.0 / static_cast<double>(n - 1);
  m_.assign(n, 0.0);
  if (n < 3) return;
  const std::size_t k = n - 2;
  std::vector<double> sub(k, h_ / 6.0), diag(k, 2.0 * h_ / 3.0), super(k, h_ / 6.0), rhs(k);
  for (std::size_t i = 0; i < k; ++i) rhs[i] = (y_[i + 2] - 2.0 * y_[i + 1] + y_[i]) / h_;
  solve_tridiagonal(std::move(sub), std::move(diag), std::move(super), rhs);
  for (std::size_t i = 0; i < k; ++i) m_[i + 1] = rhs[i];
}

double CubicSpline::operator()(double x) const {
  const std::size_t last = y_.size() - 1;
  std::size_t i = static_cast<std::size_t>(std::clamp(std::floor(x / h_), 0.0, static_cast<double>(last - 1)));
  const double a = static_cast<double>(i + 1) * h_ - x;
  const double b = x - static_cast<double>(i) * h_;
  return m_[i] * a * a * a / (6.0 * h_) + m_[i + 1] * b * b * b / (6.0 * h_) +
         (y_[i] / h_ - m_[i] * h_ / 6.0) * a + (y_[i + 1] / h_ - m_[i + 1] * h_ / 6.0) * b;
}

GridFunction solve_antiderivative(const GridFunction& v) {
  require_1d(v, "solve_antiderivative");
  const std::size_t n = v.grid.n;
  const CubicSpline spline(v.values.vec());
  const std::size_t r = kAntiderivativeRefinement;
  const std::size_t fine = (n - 1) * r;
  const double h = 1.0 / static_cast<double>(fine);
  GridFunction u = GridFunction::zeros(v.grid);
  double acc = 0.0;
  double prev = spline(0.0);
  for (std::size_t k = 1; k <= fine; ++k) {
    const double cur = (k % r == 0) ? v[k / r] : spline(static_cast<double>(k) * h);
    acc += 0.5 * h * (prev + cur);
    prev = cur;
    if (k % r == 0) u[k / r] = acc;
  }
  return u;
}

namespace {

// Banded Cholesky factor of the scaled 5-point matrix (4 on the diagonal, -1
// for neighbours) on an m x m interior block; band[p*(m+1)+d] = L[p][p-d].
const std::vector<double>& poisson_factor(std::size_t m) {
  thread_local std::map<std::size_t, std::vector<double>> cache;
  auto it = cache.find(m);
  if (it != cache.end()) return it->second;
  const std::size_t N = m * m, w = m + 1;
  std::vector<double> band(N * w, 0.0);
  auto entry = [m](std::size_t p, std::size_t q) -> double {  // q <= p
    if (p == q) return 4.0;
    if (p - q == m) return -1.0;
    if (p - q == 1 && p % m != 0) return -1.0;
    return 0.0;
  };
  for (std::size_t p = 0; p < N; ++p) {
    const std::size_t lo = p >= m ? p - m : 0;
    for (std::size_t q = lo; q <= p; ++q) {
      double s = entry(p, q);
      const std::size_t qlo = q >= m ? q - m : 0;
      for (std::size_t r = std::max(lo, qlo); r < q; ++r) s -= band[p * w + (p - r)] * band[q * w + (q - r)];
      if (q == p) {
        if (!(s > 0.0)) throw NumericalError("Poisson matrix factorization failed");
        band[p * w] = std::sqrt(s);
      } else {
        band[p * w + (p - q)] = s / band[q * w];
      }
    }
  }
  return cache.emplace(m, std::move(band)).first->second;
}

}  // namespace

GridFunction solve_poisson2d(const GridFunction& f) {
  f.grid.validate();
  if (f.grid.dims != 2 || f.values.rank() != 2 || f.values.dim(0) != f.values.dim(1) ||
      f.values.dim(0) != f.grid.n)
    throw DimensionError("solve_poisson2d needs a square 2D grid function, got " + shape_string(f.values.shape()));
  const std::size_t n = f.grid.n;
  GridFunction u = GridFunction::zeros(f.grid);
  if (n < 3) return u;
  const std::size_t m = n - 2, N = m * m, w = m + 1;
  const auto& band = poisson_factor(m);
  const double h2 = f.grid.spacing() * f.grid.spacing();
  std::vector<double> x(N);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) x[i * m + j] = h2 * f.values.at(i + 1, j + 1);
  for (std::size_t p = 0; p < N; ++p) {
    double s = x[p];
    const std::size_t lo = p >= m ? p - m : 0;
    for (std::size_t r = lo; r < p; ++r) s -= band[p * w + (p - r)] * x[r];
    x[p] = s / band[p * w];
  }
  for (std::size_t p = N; p-- > 0;) {
    double s = x[p];
    const std::size_t hi = std::min(N - 1, p + m);
    for (std::size_t r = p + 1; r <= hi; ++r) s -= band[r * w + (r - p)] * x[r];
    x[p] = s / band[p * w];
  }
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) u.values.at(i + 1, j + 1) = x[i * m + j];
  return u;
}

double poisson_residual(const GridFunction& u, const GridFunction& f) {
  if (u.grid.dims != 2 || !(u.grid == f.grid)) throw DimensionError("poisson_residual needs matching 2D grids");
  const std::size_t n = u.grid.n;
  const double inv_h2 = 1.0 / (u.grid.spacing() * u.grid.spacing());
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      const double uij = u.values.at(i, j);
      if (i == 0 || j == 0 || i == n - 1 || j == n - 1) {
        worst = std::max(worst, std::abs(uij));
        continue;
      }
      const double lap = (4.0 * uij - u.values.at(i - 1, j) - u.values.at(i + 1, j) - u.values.at(i, j - 1) -
                          u.values.at(i, j + 1)) * inv_h2;
      worst = std::max(worst, std::abs(lap - f.values.at(i, j)));
    }
  return worst;
}

std::vector<double> sp_advdiff_mesh(const std::function<double(double)>& f, double epsilon, std::size_t intervals) {
  if (!(epsilon > 0.0 && epsilon <= kSpMaxEpsilon))
    throw ParameterError("epsilon must lie in (0, 0.1], got " + std::to_string(epsilon));
  if (intervals < 2) throw ParameterError("advection-diffusion mesh needs at least 2 intervals");
  const double h = 1.0 / static_cast<double>(intervals);
  const std::size_t k = intervals - 1;
  const double diff = epsilon / (h * h);
  const double adv = 1.0 / (2.0 * h);
  std::vector<double> sub(k, -diff - adv), diag(k, 2.0 * diff), super(k, -diff + adv), rhs(k);
  for (std::size_t i = 0; i < k; ++i) rhs[i] = f(static_cast<double>(i + 1) * h);
  solve_tridiagonal(std::move(sub), std::move(diag), std::move(super), rhs);
  std::vector<double> u(intervals + 1, 0.0);
  std::copy(rhs.begin(), rhs.end(), u.begin() + 1);
  return u;
}

GridFunction solve_sp_advdiff(const GridFunction& f, double epsilon) {
  require_1d(f, "solve_sp_advdiff");
  if (!(epsilon > 0.0 && epsilon <= kSpMaxEpsilon))
    throw ParameterError("epsilon must lie in (0, 0.1], got " + std::to_string(epsilon));
  if (epsilon < kSpMinEpsilon) {
    std::ostringstream os;
    os << "epsilon " << epsilon << " needs a uniform mesh beyond the size cap (eps >= " << kSpMinEpsilon
       << "); a layer-adapted (Shishkin) mesh is required";
    throw ParameterError(os.str());
  }
  const std::size_t n = f.grid.n;
  const auto r = static_cast<std::size_t>(std::ceil(kSpMeshPerEpsilon / (epsilon * static_cast<double>(n - 1))));
  const std::size_t intervals = (n - 1) * r;
  const CubicSpline spline(f.values.vec());
  std::vector<double> fine = sp_advdiff_mesh(
      [&](double x) {
        const double pos = x * static_cast<double>(n - 1);
        const double nearest = std::round(pos);
        if (std::abs(pos - nearest) < 1e-9) return f[static_cast<std::size_t>(nearest)];
        return spline(x);
      },
      epsilon, intervals);
  GridFunction u = GridFunction::zeros(f.grid);
  for (std::size_t j = 1; j + 1 < n; ++j) u[j] = fine[j * r];
  return u;
}

GridFunction solve(const EquationSpec& eq, const GridFunction& input) {
  if (!(input.grid == eq.grid)) throw DimensionError("input grid does not match the equation grid");
  switch (eq.kind) {
    case EquationKind::Antiderivative: return solve_antiderivative(input);
    case EquationKind::Poisson2D: return solve_poisson2d(input);
    case EquationKind::SingularAdvDiff:
      if (!eq.epsilon) throw ParameterError("singularly perturbed equation needs epsilon");
      return solve_sp_advdiff(input, *eq.epsilon);
  }
  throw ParameterError("unknown equation kind");
}

SamplePair constant_input_solution(const EquationSpec& eq) {
  eq.validate();
  GridFunction one = GridFunction::constant(eq.grid, 1.0);
  GridFunction u = solve(eq, one);
  return SamplePair{std::move(one), std::move(u)};
}

double pair_residual(const EquationSpec& eq, const SamplePair& pair) {
  if (eq.kind == EquationKind::Poisson2D) return poisson_residual(pair.output, pair.input);
  return max_abs_diff(solve(eq, pair.input), pair.output);
}

Dataset generate_dataset(const EquationSpec& eq, const GrfConfig& grf, std::size_t count, std::uint64_t seed,
                         std::size_t threads) {
  eq.validate();
  if (count < 1) throw ParameterError("dataset count must be at least 1");
  if (!(grf.grid == eq.grid)) throw DimensionError("GRF grid does not match the equation grid");
  const GrfSampler sampler(grf);
  Dataset d;
  d.equation = eq;
  d.grf = grf;
  d.master_seed = seed;
  d.source_count = count;
  d.pairs.resize(count);
  parallel_for(count, threads, [&](std::size_t i) {
    GridFunction v = sampler.sample(derive_seed(seed, seed_tag::sample, i));
    GridFunction u = solve(eq, v);
    d.pairs[i] = SamplePair{std::move(v), std::move(u)};
  });
  return d;
}

}  // namespace pgda
