#include "aggopt/trigger.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "aggopt/csv.hpp"

namespace aggopt {

std::string describe(const TriggerScheme& scheme) {
  std::ostringstream os;
  std::visit(
      [&os](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, ContinuousTrigger>) {
          os << "continuous";
        } else if constexpr (std::is_same_v<T, PeriodicTrigger>) {
          os << "periodic(T=" << format_double(s.period) << ")";
        } else {
          os << "event(beta1=" << format_double(s.beta1) << ", beta2=" << format_double(s.beta2) << ")";
        }
      },
      scheme);
  return os.str();
}

double measurement_error(const EstimatorState& s) {
  return std::sqrt((s.eta_hat - s.eta).squaredNorm() + (s.w_hat - s.w).squaredNorm());
}

double measurement_error(std::span<const double> eta, std::span<const double> eta_hat, std::span<const double> w,
                         std::span<const double> w_hat) {
  double acc = 0.0;
  for (std::size_t k = 0; k < eta.size(); ++k) acc += (eta_hat[k] - eta[k]) * (eta_hat[k] - eta[k]);
  for (std::size_t k = 0; k < w.size(); ++k) acc += (w_hat[k] - w[k]) * (w_hat[k] - w[k]);
  return std::sqrt(acc);
}

double event_threshold(double t, double beta1, double beta2) { return beta1 * std::exp(-beta2 * t); }

bool should_trigger(double e_norm, double t, double beta1, double beta2) {
  if (!(e_norm > 0.0)) return false;
  return std::log(e_norm) >= std::log(beta1) - beta2 * t;
}

double zeno_lower_bound(double m1, double m2, double beta1, double beta2) {
  const double m = m1 + m2;
  if (!(m > 0.0)) throw std::domain_error("zeno_lower_bound: M1 + M2 must be positive");
  if (!(beta1 > 0.0) || beta2 < 0.0) throw std::domain_error("zeno_lower_bound: need beta1 > 0 and beta2 >= 0");
  auto g = [&](double t) { return m * t - beta1 * std::exp(-beta2 * t); };
  double lo = 0.0;
  double hi = beta1 / m;
  while (hi - lo > 1e-12) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (g(mid) < 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

ValidationReport validate_scheme(std::span<const TriggerScheme> schemes, double lambda) {
  ValidationReport report;
  report.lambda = lambda;
  for (std::size_t i = 0; i < schemes.size(); ++i) {
    const std::string who = "agent " + std::to_string(i);
    if (const auto* ev = std::get_if<EventTrigger>(&schemes[i])) {
      if (!(ev->beta1 > 0.0)) throw std::invalid_argument(who + ": beta1 must be positive");
      if (!(ev->beta2 > 0.0)) throw std::invalid_argument(who + ": beta2 must be positive");
      if (!(ev->beta2 < lambda)) {
        std::ostringstream os;
        os.precision(6);
        os << who << ": beta2 = " << ev->beta2 << " is not below lambda = " << lambda
           << "; convergence and Zeno exclusion are not guaranteed";
        report.warnings.push_back(os.str());
        report.passed = false;
      }
    } else if (const auto* per = std::get_if<PeriodicTrigger>(&schemes[i])) {
      if (!(per->period > 0.0)) throw std::invalid_argument(who + ": period must be positive");
    }
  }
  return report;
}

void EventLog::record(std::size_t agent, double t) {
  auto& ts = times_.at(agent);
  if (!ts.empty() && !(t > ts.back())) {
    throw std::logic_error("event times for agent " + std::to_string(agent) + " must be strictly increasing");
  }
  ts.push_back(t);
}

std::size_t EventLog::total_count() const {
  std::size_t total = 0;
  for (const auto& ts : times_) total += ts.size();
  return total;
}

std::optional<double> EventLog::min_interval(std::size_t agent) const {
  const auto& ts = times_.at(agent);
  std::optional<double> best;
  for (std::size_t k = 1; k < ts.size(); ++k) {
    const double gap = ts[k] - ts[k - 1];
    if (!best || gap < *best) best = gap;
  }
  return best;
}

std::optional<double> EventLog::min_interval() const {
  std::optional<double> best;
  for (std::size_t i = 0; i < times_.size(); ++i) {
    const auto gap = min_interval(i);
    if (gap && (!best || *gap < *best)) best = gap;
  }
  return best;
}

ZenoConstants zeno_constants(const Graph& g, double lambda, double beta1_max, double beta2_min,
                             double initial_deviation) {
  const Matrix lap = laplacian(g);
  const Eigen::Index n = lap.rows();
  Eigen::SelfAdjointEigenSolver<Matrix> es(lap);
  // Eigenvalues ascend; column 0 is the consensus direction of a connected graph.
  const Matrix r = es.eigenvectors().rightCols(n - 1);
  const Matrix lr = lap * r;

  Matrix p = Matrix::Zero(2 * n - 1, 2 * n - 1);
  p.topLeftCorner(n, n) = -Matrix::Identity(n, n) - lap;
  p.topRightCorner(n, n - 1) = -lr;
  p.bottomLeftCorner(n - 1, n) = lr.transpose();

  Matrix q = Matrix::Zero(2 * n - 1, 2 * n - 1);
  q.topLeftCorner(n, n) = -lap;
  q.topRightCorner(n, n - 1) = -lr;
  q.bottomLeftCorner(n - 1, n) = lr.transpose();

  auto spectral_norm = [](const Matrix& a) { return Eigen::JacobiSVD<Matrix>(a).singularValues()(0); };

  ZenoConstants z;
  z.norm_p = spectral_norm(p);
  z.norm_q = spectral_norm(q);
  const double sqrt_n = std::sqrt(static_cast<double>(n));
  const double gap = std::abs(lambda - beta2_min);
  z.m2 = sqrt_n * beta1_max * z.norm_q;
  z.m1 = z.norm_p * initial_deviation +
         (gap > 0.0 ? sqrt_n * beta1_max * z.norm_p * z.norm_q / gap : std::numeric_limits<double>::infinity());
  return z;
}

}  // namespace aggopt
