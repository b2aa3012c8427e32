#include "aggopt/csv.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <tuple>
#include <vector>

namespace aggopt {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return {buf.data(), res.ptr};
}

void write_trajectory_csv(std::ostream& os, const AggregativeProblem& p, std::span<const TrajectoryRecord> trajectory) {
  const std::size_t n = p.num_agents();
  const std::size_t m = p.dim_sigma();
  const std::size_t b = 2 * m;

  os << "t";
  for (std::size_t k = 0; k < p.dim_x(); ++k) os << ",x_" << k + 1;
  for (std::size_t part = 0; part < 2; ++part) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t c = 0; c < m; ++c) {
        os << ",eta" << part + 1 << '_' << i + 1;
        if (m > 1) os << '_' << c + 1;
      }
    }
  }
  os << ",consensus_error,decision_error\n";

  for (const auto& r : trajectory) {
    os << format_double(r.t);
    for (Eigen::Index k = 0; k < r.x.size(); ++k) os << ',' << format_double(r.x[k]);
    for (std::size_t part = 0; part < 2; ++part) {
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < m; ++c) {
          os << ',' << format_double(r.eta[static_cast<Eigen::Index>(i * b + part * m + c)]);
        }
      }
    }
    os << ',' << format_double(r.consensus_error) << ',' << format_double(r.decision_error) << '\n';
  }
}

void write_events_csv(std::ostream& os, const EventLog& events) {
  std::vector<std::pair<double, std::size_t>> rows;
  rows.reserve(events.total_count());
  for (std::size_t i = 0; i < events.num_agents(); ++i) {
    for (double t : events.times(i)) rows.emplace_back(t, i);
  }
  std::sort(rows.begin(), rows.end());
  os << "agent_id,time\n";
  for (const auto& [t, i] : rows) os << i + 1 << ',' << format_double(t) << '\n';
}

}  // namespace aggopt
