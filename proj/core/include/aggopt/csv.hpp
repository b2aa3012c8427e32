#pragma once

#include <ostream>
#include <span>
#include <string>

#include "aggopt/engine.hpp"

namespace aggopt {

// Shortest decimal form that parses back to the same double.
std::string format_double(double v);

// Columns: t, x_1..x_n, eta1_1..eta1_N, eta2_1..eta2_N, consensus_error,
// decision_error. Indices are 1-based; with m > 1 estimator columns are
// eta1_<agent>_<component>.
void write_trajectory_csv(std::ostream& os, const AggregativeProblem& p, std::span<const TrajectoryRecord> trajectory);

// Columns: agent_id (1-based), time; ordered by time, then agent.
void write_events_csv(std::ostream& os, const EventLog& events);

}  // namespace aggopt
