#include "aggopt/problem.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>
#include <string>

#include <Eigen/Eigenvalues>

namespace aggopt {

double LocalObjective::eval(const Vector& x, const Vector& s) const { return do_eval(as_span(x), as_span(s)); }

Vector LocalObjective::grad_x(const Vector& x, const Vector& s) const {
  Vector out(static_cast<Eigen::Index>(dim_x()));
  do_grad_x(as_span(x), as_span(s), as_span(out));
  return out;
}

Vector LocalObjective::grad_sigma(const Vector& x, const Vector& s) const {
  Vector out(static_cast<Eigen::Index>(dim_sigma()));
  do_grad_sigma(as_span(x), as_span(s), as_span(out));
  return out;
}

Vector LocalObjective::phi(const Vector& x) const {
  Vector out(static_cast<Eigen::Index>(dim_sigma()));
  do_phi(as_span(x), as_span(out));
  return out;
}

Matrix LocalObjective::jac_phi(const Vector& x) const {
  const auto rows = static_cast<Eigen::Index>(dim_sigma());
  const auto cols = static_cast<Eigen::Index>(dim_x());
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> out(rows, cols);
  do_jac_phi(as_span(x), {out.data(), static_cast<std::size_t>(out.size())});
  return out;
}

double PricedQuadraticCost::do_eval(std::span<const double> x, std::span<const double> s) const {
  const double p = x[0];
  return c_.a * p * p + c_.b * p + c_.d - (c_.price_intercept - c_.price_slope * s[0]) * p;
}

void PricedQuadraticCost::do_grad_x(std::span<const double> x, std::span<const double> s,
                                    std::span<double> out) const {
  out[0] = 2.0 * c_.a * x[0] + c_.b - c_.price_intercept + c_.price_slope * s[0];
}

void PricedQuadraticCost::do_grad_sigma(std::span<const double> x, std::span<const double>,
                                        std::span<double> out) const {
  out[0] = c_.price_slope * x[0];
}

void PricedQuadraticCost::do_phi(std::span<const double> x, std::span<double> out) const { out[0] = x[0]; }

void PricedQuadraticCost::do_jac_phi(std::span<const double>, std::span<double> out) const { out[0] = 1.0; }

AggregativeProblem::AggregativeProblem(std::vector<std::shared_ptr<const LocalObjective>> agents,
                                       std::optional<RateConstants> rate)
    : agents_(std::move(agents)), rate_(rate) {
  if (agents_.empty()) throw std::invalid_argument("problem needs at least one agent");
  offsets_.reserve(agents_.size() + 1);
  offsets_.push_back(0);
  dim_sigma_ = agents_.front()->dim_sigma();
  for (std::size_t i = 0; i < agents_.size(); ++i) {
    if (!agents_[i]) throw std::invalid_argument("agent " + std::to_string(i) + " is null");
    if (agents_[i]->dim_sigma() != dim_sigma_) {
      throw std::invalid_argument("agent " + std::to_string(i) + " has aggregation dimension " +
                                  std::to_string(agents_[i]->dim_sigma()) + ", expected " +
                                  std::to_string(dim_sigma_));
    }
    if (agents_[i]->dim_x() == 0 || dim_sigma_ == 0) throw std::invalid_argument("agent dimensions must be positive");
    offsets_.push_back(offsets_.back() + agents_[i]->dim_x());
  }
}

void AggregativeProblem::check_dim(const Vector& x) const {
  if (static_cast<std::size_t>(x.size()) != dim_x()) {
    throw std::invalid_argument("decision vector has dimension " + std::to_string(x.size()) + ", expected " +
                                std::to_string(dim_x()));
  }
}

Vector AggregativeProblem::block(const Vector& x, std::size_t i) const {
  return x.segment(static_cast<Eigen::Index>(offset(i)), static_cast<Eigen::Index>(dim_x(i)));
}

Vector AggregativeProblem::sigma(const Vector& x) const {
  check_dim(x);
  const auto m = static_cast<Eigen::Index>(dim_sigma_);
  Vector s = Vector::Zero(m);
  Vector phi_i(m);
  for (std::size_t i = 0; i < agents_.size(); ++i) {
    agents_[i]->phi(as_span(x).subspan(offset(i), dim_x(i)), as_span(phi_i));
    s += phi_i;
  }
  return s / static_cast<double>(agents_.size());
}

double AggregativeProblem::global_cost(const Vector& x) const {
  const Vector s = sigma(x);
  double total = 0.0;
  for (std::size_t i = 0; i < agents_.size(); ++i) total += agents_[i]->eval(as_span(x).subspan(offset(i), dim_x(i)), as_span(s));
  return total;
}

Vector AggregativeProblem::global_gradient(const Vector& x) const {
  const Vector s = sigma(x);
  const std::size_t m = dim_sigma_;
  const auto xs = as_span(x);
  const auto ss = as_span(s);

  std::vector<double> sum_grad_sigma(m, 0.0);
  std::vector<double> work(std::max(m, dim_x()) * (m + 1));
  for (std::size_t i = 0; i < agents_.size(); ++i) {
    agents_[i]->grad_sigma(xs.subspan(offset(i), dim_x(i)), ss, std::span<double>(work).first(m));
    for (std::size_t r = 0; r < m; ++r) sum_grad_sigma[r] += work[r];
  }

  const double inv_n = 1.0 / static_cast<double>(agents_.size());
  Vector g(x.size());
  for (std::size_t i = 0; i < agents_.size(); ++i) {
    const std::size_t ni = dim_x(i);
    const auto xi = xs.subspan(offset(i), ni);
    auto gi = as_span(g).subspan(offset(i), ni);
    const std::span<double> jac = std::span<double>(work).first(m * ni);
    agents_[i]->grad_x(xi, ss, gi);
    agents_[i]->jac_phi(xi, jac);
    for (std::size_t c = 0; c < ni; ++c) {
      double acc = 0.0;
      for (std::size_t r = 0; r < m; ++r) acc += jac[r * ni + c] * sum_grad_sigma[r];
      gi[c] += inv_n * acc;
    }
  }
  return g;
}

Matrix quadratic_hessian(const AggregativeProblem& p) {
  const auto n = static_cast<Eigen::Index>(p.dim_x());
  const Vector g0 = p.global_gradient(Vector::Zero(n));
  Matrix h(n, n);
  for (Eigen::Index j = 0; j < n; ++j) h.col(j) = p.global_gradient(Vector::Unit(n, j)) - g0;
  return 0.5 * (h + h.transpose());
}

RateConstants rate_constants_from_hessian(const Matrix& hessian) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(hessian, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff();
  const double hi = es.eigenvalues().maxCoeff();
  if (!(lo > 0.0)) throw std::domain_error("Hessian is not positive definite (smallest eigenvalue " + std::to_string(lo) + ")");
  return {1.0 / (lo * lo), hi};
}

AggregativeProblem make_priced_quadratic_instance(std::span<const PricedQuadraticCoefficients> coeffs) {
  std::vector<std::shared_ptr<const LocalObjective>> agents;
  agents.reserve(coeffs.size());
  for (const auto& c : coeffs) agents.push_back(std::make_shared<PricedQuadraticCost>(c));
  AggregativeProblem bare(agents);
  std::optional<RateConstants> rate;
  try {
    rate = rate_constants_from_hessian(quadratic_hessian(bare));
  } catch (const std::domain_error&) {
    rate.reset();
  }
  return AggregativeProblem(std::move(agents), rate);
}

std::vector<PricedQuadraticCoefficients> der_coefficients() {
  constexpr std::array<double, 4> a{1.0, 0.5, 0.8, 0.7};
  constexpr std::array<double, 4> b{12.0, 10.0, 11.0, 11.0};
  constexpr std::array<double, 4> d{5.0, 8.0, 6.0, 9.0};
  const double slope = 0.1 * static_cast<double>(a.size());
  std::vector<PricedQuadraticCoefficients> out;
  for (std::size_t i = 0; i < a.size(); ++i) out.push_back({a[i], b[i], d[i], 200.0, slope});
  return out;
}

AggregativeProblem make_der_instance() { return make_priced_quadratic_instance(der_coefficients()); }

std::vector<PricedQuadraticCoefficients> dispatch_coefficients(std::size_t n, std::uint64_t seed) {
  if (n == 0) throw std::invalid_argument("dispatch instance needs at least one generator");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> a_dist(0.0024, 0.0779);
  std::uniform_real_distribution<double> b_dist(8.0, 35.0);
  std::uniform_real_distribution<double> d_dist(7.0, 60.0);
  const double slope = 0.1 * static_cast<double>(n);
  std::vector<PricedQuadraticCoefficients> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double a = a_dist(rng);
    const double b = b_dist(rng);
    const double d = d_dist(rng);
    out.push_back({a, b, d, 200.0, slope});
  }
  return out;
}

AggregativeProblem make_dispatch_instance(std::size_t n, std::uint64_t seed) {
  return make_priced_quadratic_instance(dispatch_coefficients(n, seed));
}

}  // namespace aggopt
