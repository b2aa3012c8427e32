#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "aggopt/engine.hpp"
#include "aggopt/graph.hpp"
#include "aggopt/problem.hpp"

namespace aggopt::cli {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class OutputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ScenarioKind { Der4, Dispatch, Quadratic };
enum class TopologyKind { Ring4, Ring, Random, Edges };
enum class TriggerKind { Event, Periodic, Continuous };

/// Fully resolved scenario: every list has one entry per agent and every
/// default has been applied, so two configs compare equal exactly when they
/// describe the same run.
struct ScenarioConfig {
  ScenarioKind scenario = ScenarioKind::Der4;
  std::size_t agents = 4;
  std::uint64_t seed = 1;
  std::vector<PricedQuadraticCoefficients> coefficients;  // explicit instances only

  TopologyKind topology = TopologyKind::Ring4;
  std::uint64_t topology_seed = 1;
  std::vector<Edge> edges;  // TopologyKind::Edges only

  std::vector<TriggerKind> triggers;
  std::vector<double> beta1;
  std::vector<double> beta2;
  std::vector<double> period;

  double delta = 0.1;
  double step = 1e-3;
  double t_end = 200.0;
  std::vector<double> x0;
  std::string output_dir = "out";
  std::size_t output_stride = 10;
  std::optional<double> compare_periodic;

  friend bool operator==(const ScenarioConfig&, const ScenarioConfig&) = default;
};

struct RawValue {
  std::string text;
  int line = 0;
};

// key -> value, in the documented `key = value` syntax. Entries are separated
// by newlines, ';' or top-level ',' (commas inside [...] or (...) belong to
// the value); '#' starts a comment.
using RawConfig = std::map<std::string, RawValue>;

RawConfig parse_raw(const std::string& text);
ScenarioConfig resolve(const RawConfig& raw);
inline ScenarioConfig parse_config(const std::string& text) { return resolve(parse_raw(text)); }

// Canonical text that parse_config maps back to an identical config.
std::string dump_config(const ScenarioConfig& cfg);

AggregativeProblem build_problem(const ScenarioConfig& cfg);
Graph build_graph(const ScenarioConfig& cfg);
std::vector<TriggerScheme> build_schemes(const ScenarioConfig& cfg);
SimConfig build_sim_config(const ScenarioConfig& cfg, const AggregativeProblem& problem,
                           const std::optional<Vector>& reference);

// Oracle solve plus centralized-flow rate check.
nlohmann::json oracle_report(const ScenarioConfig& cfg);

struct RunOutcome {
  nlohmann::json summary;
  std::optional<nlohmann::json> comparison;
  std::vector<std::string> files;
};

// Oracle solve, distributed run, then trajectory.csv, events.csv and
// summary.json (plus comparison.json when compare_periodic is set) under
// cfg.output_dir. Throws DivergenceError or OutputError.
RunOutcome run_scenario(const ScenarioConfig& cfg);

}  // namespace aggopt::cli
