#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "aggopt/consensus.hpp"
#include "aggopt/graph.hpp"

namespace aggopt {

// Broadcast at every integration grid point.
struct ContinuousTrigger {
  friend bool operator==(const ContinuousTrigger&, const ContinuousTrigger&) = default;
};

struct PeriodicTrigger {
  double period = 0.02;
  friend bool operator==(const PeriodicTrigger&, const PeriodicTrigger&) = default;
};

// Broadcast once ||e_i|| >= beta1 * exp(-beta2 * t), t being global time.
struct EventTrigger {
  double beta1 = 1.0;
  double beta2 = 0.1;
  friend bool operator==(const EventTrigger&, const EventTrigger&) = default;
};

using TriggerScheme = std::variant<ContinuousTrigger, PeriodicTrigger, EventTrigger>;

std::string describe(const TriggerScheme& scheme);

// Norm of col(eta_hat - eta, w_hat - w).
double measurement_error(const EstimatorState& s);
double measurement_error(std::span<const double> eta, std::span<const double> eta_hat, std::span<const double> w,
                         std::span<const double> w_hat);

double event_threshold(double t, double beta1, double beta2);

// e_norm >= beta1 * exp(-beta2 * t), compared in log space so that the
// threshold never underflows to zero: e_norm == 0 never triggers.
bool should_trigger(double e_norm, double t, double beta1, double beta2);

// Root T of (m1 + m2) T = beta1 exp(-beta2 T), bisected on [0, beta1 / (m1 + m2)]
// to 1e-12. Throws std::domain_error when m1 + m2 <= 0.
double zeno_lower_bound(double m1, double m2, double beta1, double beta2);

struct ValidationReport {
  double lambda = 0.0;
  bool passed = true;
  std::vector<std::string> warnings;
};

// Hard error (std::invalid_argument) on nonpositive beta or period; a warning
// for each event-triggered agent with beta2 >= lambda.
ValidationReport validate_scheme(std::span<const TriggerScheme> schemes, double lambda);

/// Per-agent triggering instants, strictly increasing.
class EventLog {
 public:
  explicit EventLog(std::size_t n_agents = 0) : times_(n_agents) {}

  void record(std::size_t agent, double t);

  std::size_t num_agents() const { return times_.size(); }
  const std::vector<double>& times(std::size_t agent) const { return times_.at(agent); }
  std::size_t count(std::size_t agent) const { return times_.at(agent).size(); }
  std::size_t total_count() const;
  std::optional<double> min_interval(std::size_t agent) const;
  std::optional<double> min_interval() const;

 private:
  std::vector<std::vector<double>> times_;
};

// Constants for the inter-event lower bound, built from the spectral norms
// of the reduced boundary-layer matrices
//   P = [[-I - L, -L R], [R^T L, 0]],  Q = [[-L, -L R], [R^T L, 0]]
// where the columns of R span the complement of the consensus direction:
//   M1 = ||P|| dev0 + sqrt(N) beta1 ||P|| ||Q|| / |lambda - beta2|
//   M2 = sqrt(N) beta1 ||Q||
// with beta1 the largest and beta2 the smallest event parameter.
struct ZenoConstants {
  double m1 = 0.0;
  double m2 = 0.0;
  double norm_p = 0.0;
  double norm_q = 0.0;
};

ZenoConstants zeno_constants(const Graph& g, double lambda, double beta1_max, double beta2_min,
                             double initial_deviation);

}  // namespace aggopt
