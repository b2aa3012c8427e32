#include "aggopt/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "aggopt/rk4.hpp"

namespace aggopt {

namespace {

constexpr double kUsableError = 1e-10;
constexpr std::size_t kMinFitSamples = 10;

}  // namespace

Vector solve_kkt_quadratic(const AggregativeProblem& p) {
  const Matrix h = quadratic_hessian(p);
  Eigen::LLT<Matrix> llt(h);
  if (llt.info() != Eigen::Success) {
    throw NotStrictlyConvexError("global Hessian is not positive definite; instance is not strictly convex");
  }
  const auto n = static_cast<Eigen::Index>(p.dim_x());
  const Vector g0 = p.global_gradient(Vector::Zero(n));
  Vector x = llt.solve(-g0);
  // One step of iterative refinement keeps the residual at round-off level
  // for the poorly scaled dispatch instances.
  x -= llt.solve(p.global_gradient(x));

  const double residual = p.global_gradient(x).norm();
  const double scale = std::max(1.0, g0.norm());
  if (!(residual <= 1e-8 * scale)) {
    throw std::domain_error("first-order residual " + std::to_string(residual) +
                            " after linear solve; global gradient is not affine");
  }
  return x;
}

std::vector<FlowSample> centralized_flow(const AggregativeProblem& p, const Vector& x0, const FlowOptions& opts) {
  if (!(opts.step > 0.0)) throw std::invalid_argument("step must be positive");
  if (!(opts.t_end > 0.0)) throw std::invalid_argument("t_end must be positive");
  if (static_cast<std::size_t>(x0.size()) != p.dim_x()) throw std::invalid_argument("x0 has wrong dimension");
  const std::size_t stride = std::max<std::size_t>(1, opts.record_stride);

  auto rhs = [&p](double, const Vector& x, Vector& dx) { dx = -p.global_gradient(x); };
  Rk4Stepper stepper(x0.size());
  Vector x = x0;
  std::vector<FlowSample> out{{0.0, x}};

  const auto steps = static_cast<std::size_t>(std::ceil(opts.t_end / opts.step - 1e-9));
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * opts.step;
    stepper.step(rhs, t, x, opts.step);
    const double t_next = static_cast<double>(k + 1) * opts.step;
    if (!x.allFinite()) {
      throw DivergenceError("centralized flow produced a non-finite state at t = " + std::to_string(t_next) +
                            "; step " + std::to_string(opts.step) + " is too large");
    }
    const bool done = opts.gradient_tolerance > 0.0 && p.global_gradient(x).norm() <= opts.gradient_tolerance;
    if ((k + 1) % stride == 0 || done || k + 1 == steps) out.push_back({t_next, x});
    if (done) break;
  }
  return out;
}

double fit_decay_rate(std::span<const ErrorSample> series) {
  double st = 0.0, sy = 0.0, stt = 0.0, sty = 0.0;
  std::size_t count = 0;
  for (const auto& s : series) {
    if (!(s.error > kUsableError)) continue;
    const double y = std::log(s.error);
    st += s.t;
    sy += y;
    stt += s.t * s.t;
    sty += s.t * y;
    ++count;
  }
  if (count < kMinFitSamples) {
    throw std::invalid_argument("decay fit needs at least " + std::to_string(kMinFitSamples) +
                                " samples with error > 1e-10, got " + std::to_string(count));
  }
  const double n = static_cast<double>(count);
  const double denom = n * stt - st * st;
  if (!(denom > 0.0)) throw std::invalid_argument("decay fit needs at least two distinct sample times");
  return -(n * sty - st * sy) / denom;
}

}  // namespace aggopt
