#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "aggopt/consensus.hpp"
#include "aggopt/errors.hpp"
#include "aggopt/graph.hpp"
#include "aggopt/problem.hpp"
#include "aggopt/trigger.hpp"
#include "aggopt/types.hpp"

namespace aggopt {

struct SimConfig {
  AggregativeProblem problem;
  Graph graph;
  double delta = 0.1;
  double step = 1e-3;
  double t_end = 200.0;
  Vector x0;
  std::vector<TriggerScheme> schemes;
  std::size_t output_stride = 10;
  // Optimum used for the decision-error column and metrics.
  std::optional<Vector> reference;
  // Hold x at x0 and integrate only the estimator.
  bool freeze_decisions = false;
};

/// Offsets into the flat integrator state [x; eta; w]. eta and w are
/// agent-major stacks of 2m-blocks, eta_i = col(eta_i1, eta_i2).
struct StateLayout {
  std::size_t n_x = 0;
  std::size_t n_agents = 0;
  std::size_t m = 0;

  std::size_t block() const { return 2 * m; }
  std::size_t eta_offset() const { return n_x; }
  std::size_t w_offset() const { return n_x + block() * n_agents; }
  std::size_t size() const { return n_x + 2 * block() * n_agents; }

  static StateLayout of(const AggregativeProblem& p) { return {p.dim_x(), p.num_agents(), p.dim_sigma()}; }
};

struct TrajectoryRecord {
  double t = 0.0;
  Vector x;
  Vector eta;
  Vector w;
  Vector eta_hat;
  Vector w_hat;
  double consensus_error = 0.0;
  double decision_error = 0.0;  // ||x - x*||, NaN without a reference
};

struct SimMetrics {
  Vector final_x;
  Vector final_eta;
  Vector final_w;
  double final_consensus_error = 0.0;
  std::optional<double> final_relative_error;
  std::optional<double> decision_decay_rate;
  std::vector<std::size_t> broadcast_counts;
  std::size_t total_broadcasts = 0;
  std::optional<double> min_inter_event_interval;
  std::size_t steps = 0;
};

struct SimResult {
  std::vector<TrajectoryRecord> trajectory;
  EventLog events;
  SimMetrics metrics;
  SpectralSummary spectrum;
  ValidationReport validation;
  std::vector<std::string> warnings;
};

// Right-hand side of the closed loop with the given broadcasts held:
//   x_dot_i = -grad_x_i(x_i, eta_i1) - jac_phi_i(x_i)^T eta_i2
// plus the estimator rates. Returns a vector laid out like `state`.
Vector closed_loop_derivative(const SimConfig& cfg, const Vector& state, const Vector& eta_hat, const Vector& w_hat);

// Flat initial state: x0, eta_i = theta_i(x0_i, 0), w = 0.
Vector initial_state(const AggregativeProblem& p, const Vector& x0);

// Fixed-step RK4 run. At every grid point each agent's trigger is checked
// first (all agents broadcast at t = 0), then the state advances one step
// with broadcasts held, except that continuous agents expose their live
// state inside the step. Identical configs give bit-identical results.
// Throws std::invalid_argument on an inconsistent config and
// DivergenceError when ||state|| exceeds 1e12 or turns non-finite.
SimResult run(const SimConfig& cfg);

// max_i ||eta_i - (1/N) sum_j theta_j(x_j, eta_j1)||
double consensus_error(const AggregativeProblem& p, const Vector& x, const Vector& eta);
std::vector<double> consensus_error_series(const AggregativeProblem& p, std::span<const TrajectoryRecord> trajectory);

}  // namespace aggopt
