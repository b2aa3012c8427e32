#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "aggopt/types.hpp"

namespace aggopt {

inline std::span<const double> as_span(const Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }
inline std::span<double> as_span(Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

/// Local objective f_i(x_i, s) of one agent together with its aggregation
/// map phi_i and the analytic derivatives the dynamics need.
///
/// The span overloads write into caller-owned buffers and are what the
/// simulator's inner loop uses; the Vector overloads allocate and exist for
/// convenience. Implementations override the private do_* hooks.
class LocalObjective {
 public:
  virtual ~LocalObjective() = default;

  virtual std::size_t dim_x() const = 0;
  virtual std::size_t dim_sigma() const = 0;

  double eval(std::span<const double> x, std::span<const double> s) const { return do_eval(x, s); }
  // df_i/dx_i holding the aggregate argument s fixed.
  void grad_x(std::span<const double> x, std::span<const double> s, std::span<double> out) const {
    do_grad_x(x, s, out);
  }
  // df_i/ds at (x, s).
  void grad_sigma(std::span<const double> x, std::span<const double> s, std::span<double> out) const {
    do_grad_sigma(x, s, out);
  }
  void phi(std::span<const double> x, std::span<double> out) const { do_phi(x, out); }
  // Row-major dim_sigma() x dim_x() Jacobian of phi.
  void jac_phi(std::span<const double> x, std::span<double> out) const { do_jac_phi(x, out); }

  double eval(const Vector& x, const Vector& s) const;
  Vector grad_x(const Vector& x, const Vector& s) const;
  Vector grad_sigma(const Vector& x, const Vector& s) const;
  Vector phi(const Vector& x) const;
  Matrix jac_phi(const Vector& x) const;

 private:
  virtual double do_eval(std::span<const double> x, std::span<const double> s) const = 0;
  virtual void do_grad_x(std::span<const double> x, std::span<const double> s, std::span<double> out) const = 0;
  virtual void do_grad_sigma(std::span<const double> x, std::span<const double> s, std::span<double> out) const = 0;
  virtual void do_phi(std::span<const double> x, std::span<double> out) const = 0;
  virtual void do_jac_phi(std::span<const double> x, std::span<double> out) const = 0;
};

// Energy-resource cost with an aggregate-dependent price:
//   f(P, s) = a P^2 + b P + d - (price_intercept - price_slope * s) P,
// phi(P) = P.
struct PricedQuadraticCoefficients {
  double a = 0.0;
  double b = 0.0;
  double d = 0.0;
  double price_intercept = 200.0;
  double price_slope = 0.0;

  friend bool operator==(const PricedQuadraticCoefficients&, const PricedQuadraticCoefficients&) = default;
};

class PricedQuadraticCost final : public LocalObjective {
 public:
  explicit PricedQuadraticCost(PricedQuadraticCoefficients c) : c_(c) {}

  std::size_t dim_x() const override { return 1; }
  std::size_t dim_sigma() const override { return 1; }
  const PricedQuadraticCoefficients& coefficients() const { return c_; }

 private:
  double do_eval(std::span<const double> x, std::span<const double> s) const override;
  void do_grad_x(std::span<const double> x, std::span<const double> s, std::span<double> out) const override;
  void do_grad_sigma(std::span<const double> x, std::span<const double> s, std::span<double> out) const override;
  void do_phi(std::span<const double> x, std::span<double> out) const override;
  void do_jac_phi(std::span<const double> x, std::span<double> out) const override;

  PricedQuadraticCoefficients c_;
};

// Constants of the growth condition ||grad f||^2 >= ||x - x*||^2 / kappa and
// the gradient Lipschitz constant l. Reporting only.
struct RateConstants {
  double kappa = 0.0;
  double lipschitz = 0.0;

  double centralized_rate_bound() const { return kappa / (1.0 + 2.0 * lipschitz); }
};

/// N agents sharing an aggregation dimension m. Decisions are stacked as
/// x = col(x_1, ..., x_N); agent i occupies [offset(i), offset(i) + dim_x(i)).
class AggregativeProblem {
 public:
  explicit AggregativeProblem(std::vector<std::shared_ptr<const LocalObjective>> agents,
                              std::optional<RateConstants> rate = std::nullopt);

  std::size_t num_agents() const { return agents_.size(); }
  std::size_t dim_sigma() const { return dim_sigma_; }
  std::size_t dim_x() const { return offsets_.back(); }
  std::size_t dim_x(std::size_t i) const { return offsets_.at(i + 1) - offsets_.at(i); }
  std::size_t offset(std::size_t i) const { return offsets_.at(i); }
  const LocalObjective& agent(std::size_t i) const { return *agents_.at(i); }
  const std::optional<RateConstants>& rate_constants() const { return rate_; }

  // (1/N) sum_i phi_i(x_i)
  Vector sigma(const Vector& x) const;
  double global_cost(const Vector& x) const;
  // Block i: grad_x_i(x_i, s) + (1/N) jac_phi_i(x_i)^T sum_j grad_sigma_j(x_j, s), s = sigma(x).
  Vector global_gradient(const Vector& x) const;

  Vector block(const Vector& x, std::size_t i) const;

 private:
  void check_dim(const Vector& x) const;

  std::vector<std::shared_ptr<const LocalObjective>> agents_;
  std::vector<std::size_t> offsets_;
  std::size_t dim_sigma_ = 0;
  std::optional<RateConstants> rate_;
};

// Hessian of a problem whose global gradient is affine, recovered column by
// column as grad(e_j) - grad(0) and symmetrized.
Matrix quadratic_hessian(const AggregativeProblem& p);

// kappa = 1 / lambda_min^2 (the smallest constant satisfying the growth
// condition for a quadratic), l = lambda_max. Throws std::domain_error when
// the Hessian is not positive definite.
RateConstants rate_constants_from_hessian(const Matrix& hessian);

AggregativeProblem make_priced_quadratic_instance(std::span<const PricedQuadraticCoefficients> coeffs);

// Four-resource microgrid: a = [1.0 0.5 0.8 0.7], b = [12 10 11 11],
// d = [5 8 6 9], price 200 - 0.1 N s.
std::vector<PricedQuadraticCoefficients> der_coefficients();
AggregativeProblem make_der_instance();
inline constexpr std::array<double, 4> kDerInitialDecision{5.0, 6.0, 3.0, 8.0};
// Published optimum for the four-resource case. It does not satisfy the
// first-order conditions of der_coefficients(); kept for comparison output.
inline constexpr std::array<double, 4> kDerPublishedOptimum{188.0, 377.5, 236.2, 266.9};

// a ~ U[0.0024, 0.0779], b ~ U[8, 35], d ~ U[7, 60], price 200 - 0.1 n s.
std::vector<PricedQuadraticCoefficients> dispatch_coefficients(std::size_t n, std::uint64_t seed);
AggregativeProblem make_dispatch_instance(std::size_t n, std::uint64_t seed);

}  // namespace aggopt
