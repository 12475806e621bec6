// SPDX-License-Identifier: Apache-2.0
#include "pgda/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "pgda/error.hpp"

namespace pgda {

double grad_check(const std::function<Var(Tape&, Var)>& f, const Tensor& theta, GradCheckOptions opts) {
  if (!(opts.step > 0.0)) throw ParameterError("grad_check step must be positive");
  Tensor analytic;
  {
    Tape tape;
    Var x = tape.variable(theta);
    tape.backward(f(tape, x));
    analytic = tape.grad(x);
  }
  auto eval = [&](const Tensor& at) {
    Tape tape;
    return f(tape, tape.constant(at)).value()[0];
  };
  double worst = 0.0;
  Tensor probe = theta;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + opts.step;
    const double up = eval(probe);
    probe[i] = orig - opts.step;
    const double down = eval(probe);
    probe[i] = orig;
    const double numeric = (up - down) / (2.0 * opts.step);
    const double denom = std::max({std::abs(analytic[i]), std::abs(numeric), opts.floor});
    worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
  }
  return worst;
}

}  // namespace pgda
