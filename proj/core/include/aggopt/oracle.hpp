#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "aggopt/errors.hpp"
#include "aggopt/problem.hpp"
#include "aggopt/types.hpp"

namespace aggopt {

class NotStrictlyConvexError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Unique minimizer of a problem with an affine, positive-definite global
// gradient: solves H x = -grad(0). Throws NotStrictlyConvexError if H is not
// positive definite and std::domain_error if the residual shows the gradient
// is not affine.
Vector solve_kkt_quadratic(const AggregativeProblem& p);

struct FlowSample {
  double t = 0.0;
  Vector x;
};

struct FlowOptions {
  double step = 1e-3;
  double t_end = 100.0;
  // Stop early once ||grad f|| falls to this level; <= 0 disables.
  double gradient_tolerance = 1e-8;
  std::size_t record_stride = 1;
};

// Fixed-step RK4 integration of x' = -grad f(x) with sigma recomputed
// exactly. The first and last states are always recorded. Throws
// DivergenceError on a non-finite state.
std::vector<FlowSample> centralized_flow(const AggregativeProblem& p, const Vector& x0, const FlowOptions& opts);

struct ErrorSample {
  double t = 0.0;
  double error = 0.0;
};

// Least-squares slope of log(error) against t, negated, over samples with
// error > 1e-10. Throws std::invalid_argument with fewer than 10 usable
// samples.
double fit_decay_rate(std::span<const ErrorSample> series);

}  // namespace aggopt
