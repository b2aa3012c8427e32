#pragma once

#include <span>
#include <vector>

#include "aggopt/graph.hpp"
#include "aggopt/problem.hpp"
#include "aggopt/types.hpp"

namespace aggopt {

/// Proportional-integral average-consensus estimator of one agent.
///
/// eta = col(eta_1, eta_2) tracks col(sigma, (1/N) sum_j df_j/ds); w is the
/// integral state. eta_hat and w_hat are the values last broadcast to
/// neighbours and stay constant between that agent's triggering instants.
struct EstimatorState {
  Vector eta;
  Vector w;
  Vector eta_hat;
  Vector w_hat;
  double last_trigger_time = 0.0;
};

// eta = theta(x_i, 0), w = 0, broadcasts equal to the true values at t = 0.
EstimatorState initial_estimator_state(const LocalObjective& obj, const Vector& x_i);

// col(phi_i(x_i), df_i/ds(x_i, eta_i1)). The aggregate argument is the
// agent's own estimate since sigma(x) is not locally available.
Vector theta(const LocalObjective& obj, const Vector& x_i, const Vector& eta_i1);
void theta(const LocalObjective& obj, std::span<const double> x_i, std::span<const double> eta_i1,
           std::span<double> out);

// out = (L kron I_block) v for a stacked vector with `block` entries per node.
void laplacian_apply(const Graph& g, std::size_t block, std::span<const double> v, std::span<double> out);

// Flat form of the estimator right-hand side. Every span is agent-major with
// 2m entries per agent:
//   eta_dot_i = (-eta_i - sum_j (eta_hat_i - eta_hat_j) - sum_j (w_hat_i - w_hat_j) + theta_i) / delta
//   w_dot_i   = sum_j (eta_hat_i - eta_hat_j) / delta
// Neighbour sums only ever see broadcast values.
void estimator_rates(const Graph& g, std::size_t block, std::span<const double> eta,
                     std::span<const double> eta_hat, std::span<const double> w_hat,
                     std::span<const double> thetas, double delta, std::span<double> eta_dot,
                     std::span<double> w_dot);

struct EstimatorRates {
  std::vector<Vector> eta_dot;
  std::vector<Vector> w_dot;
};

EstimatorRates estimator_derivative(const Graph& g, std::span<const EstimatorState> states,
                                    std::span<const Vector> thetas, double delta);

// Max of the Euclidean norms of the three stationarity residuals of the
// closed loop with exact broadcasts:
//   -F(x, eta_1) - eta_2 grad phi(x)
//   -eta - (L kron I) eta - (L kron I) w + Theta
//   (L kron I) eta
// eta and w are agent-major stacks of 2m-blocks.
double equilibrium_residual(const AggregativeProblem& p, const Graph& g, const Vector& x, const Vector& eta,
                            const Vector& w);

struct NetworkEquilibrium {
  Vector x;
  Vector eta;
  Vector w;
};

// Steady state of the estimator with x frozen and exact broadcasts: every
// eta_i is the network mean of Theta_j evaluated at sigma(x), and w is the
// minimum-norm solution of (L kron I) w = Theta - eta. At an optimum x* this
// is the closed-loop equilibrium (x*, eta*, w*).
NetworkEquilibrium estimator_steady_state(const AggregativeProblem& p, const Graph& g, const Vector& x);

}  // namespace aggopt
