#include "aggopt/engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "aggopt/oracle.hpp"
#include "aggopt/rk4.hpp"

namespace aggopt {

namespace {

constexpr double kDivergenceLimit = 1e12;

void validate(const SimConfig& cfg) {
  const auto& p = cfg.problem;
  if (cfg.graph.size() != p.num_agents()) {
    throw std::invalid_argument("graph has " + std::to_string(cfg.graph.size()) + " nodes but the problem has " +
                                std::to_string(p.num_agents()) + " agents");
  }
  if (cfg.schemes.size() != p.num_agents()) throw std::invalid_argument("need one trigger scheme per agent");
  if (static_cast<std::size_t>(cfg.x0.size()) != p.dim_x()) throw std::invalid_argument("x0 has wrong dimension");
  if (!cfg.x0.allFinite()) throw std::invalid_argument("x0 must be finite");
  if (!(cfg.delta > 0.0)) throw std::invalid_argument("delta must be positive");
  if (!(cfg.step > 0.0)) throw std::invalid_argument("step must be positive");
  if (!(cfg.t_end > 0.0)) throw std::invalid_argument("t_end must be positive");
  if (cfg.output_stride == 0) throw std::invalid_argument("output_stride must be positive");
  if (cfg.reference && static_cast<std::size_t>(cfg.reference->size()) != p.dim_x()) {
    throw std::invalid_argument("reference has wrong dimension");
  }
}

std::span<const double> slice(const Vector& v, std::size_t off, std::size_t len) { return as_span(v).subspan(off, len); }
std::span<double> slice(Vector& v, std::size_t off, std::size_t len) { return as_span(v).subspan(off, len); }

// Evaluates the closed-loop right-hand side into preallocated buffers.
class ClosedLoop {
 public:
  explicit ClosedLoop(const SimConfig& cfg)
      : cfg_(cfg),
        layout_(StateLayout::of(cfg.problem)),
        live_(cfg.schemes.size()),
        thetas_(static_cast<Eigen::Index>(layout_.block() * layout_.n_agents)),
        eta_hat_(thetas_.size()),
        w_hat_(thetas_.size()) {
    std::size_t widest = 1;
    for (std::size_t i = 0; i < layout_.n_agents; ++i) {
      live_[i] = std::holds_alternative<ContinuousTrigger>(cfg.schemes[i]);
      widest = std::max(widest, cfg.problem.dim_x(i));
    }
    grad_.resize(widest);
    jac_.resize(widest * layout_.m);
  }

  void operator()(const Vector& state, const Vector& held_eta_hat, const Vector& held_w_hat, Vector& out) {
    const auto& p = cfg_.problem;
    const std::size_t m = layout_.m;
    const std::size_t b = layout_.block();
    const std::size_t eo = layout_.eta_offset();
    const std::size_t wo = layout_.w_offset();

    for (std::size_t i = 0; i < layout_.n_agents; ++i) {
      const auto& obj = p.agent(i);
      const std::size_t ni = p.dim_x(i);
      const auto xi = slice(state, p.offset(i), ni);
      const auto eta1 = slice(state, eo + i * b, m);
      const auto eta2 = slice(state, eo + i * b + m, m);

      theta(obj, xi, eta1, slice(thetas_, i * b, b));

      auto xdot = slice(out, p.offset(i), ni);
      if (cfg_.freeze_decisions) {
        std::fill(xdot.begin(), xdot.end(), 0.0);
        continue;
      }
      const std::span<double> grad(grad_.data(), ni);
      const std::span<double> jac(jac_.data(), ni * m);
      obj.grad_x(xi, eta1, grad);
      obj.jac_phi(xi, jac);
      for (std::size_t c = 0; c < ni; ++c) {
        double acc = grad[c];
        for (std::size_t r = 0; r < m; ++r) acc += jac[r * ni + c] * eta2[r];
        xdot[c] = -acc;
      }
    }

    eta_hat_ = held_eta_hat;
    w_hat_ = held_w_hat;
    for (std::size_t i = 0; i < layout_.n_agents; ++i) {
      if (!live_[i]) continue;
      const auto off = static_cast<Eigen::Index>(i * b);
      const auto len = static_cast<Eigen::Index>(b);
      eta_hat_.segment(off, len) = state.segment(static_cast<Eigen::Index>(eo) + off, len);
      w_hat_.segment(off, len) = state.segment(static_cast<Eigen::Index>(wo) + off, len);
    }

    const std::size_t total = b * layout_.n_agents;
    estimator_rates(cfg_.graph, b, slice(state, eo, total), as_span(eta_hat_), as_span(w_hat_), as_span(thetas_),
                    cfg_.delta, slice(out, eo, total), slice(out, wo, total));
  }

 private:
  const SimConfig& cfg_;
  StateLayout layout_;
  std::vector<bool> live_;
  Vector thetas_;
  Vector eta_hat_;
  Vector w_hat_;
  std::vector<double> grad_;
  std::vector<double> jac_;
};

TrajectoryRecord make_record(const SimConfig& cfg, const StateLayout& layout, double t, const Vector& state,
                             const Vector& eta_hat, const Vector& w_hat) {
  const auto nx = static_cast<Eigen::Index>(layout.n_x);
  const auto ne = static_cast<Eigen::Index>(layout.block() * layout.n_agents);
  TrajectoryRecord r;
  r.t = t;
  r.x = state.segment(0, nx);
  r.eta = state.segment(static_cast<Eigen::Index>(layout.eta_offset()), ne);
  r.w = state.segment(static_cast<Eigen::Index>(layout.w_offset()), ne);
  r.eta_hat = eta_hat;
  r.w_hat = w_hat;
  r.consensus_error = consensus_error(cfg.problem, r.x, r.eta);
  r.decision_error = cfg.reference ? (r.x - *cfg.reference).norm() : std::numeric_limits<double>::quiet_NaN();
  return r;
}

}  // namespace

Vector initial_state(const AggregativeProblem& p, const Vector& x0) {
  const StateLayout layout = StateLayout::of(p);
  Vector state = Vector::Zero(static_cast<Eigen::Index>(layout.size()));
  state.head(x0.size()) = x0;
  const auto m = static_cast<Eigen::Index>(layout.m);
  for (std::size_t i = 0; i < layout.n_agents; ++i) {
    const Vector th = theta(p.agent(i), p.block(x0, i), Vector::Zero(m));
    state.segment(static_cast<Eigen::Index>(layout.eta_offset() + i * layout.block()), th.size()) = th;
  }
  return state;
}

Vector closed_loop_derivative(const SimConfig& cfg, const Vector& state, const Vector& eta_hat, const Vector& w_hat) {
  const StateLayout layout = StateLayout::of(cfg.problem);
  if (static_cast<std::size_t>(state.size()) != layout.size()) throw std::invalid_argument("state has wrong dimension");
  const auto ne = static_cast<Eigen::Index>(layout.block() * layout.n_agents);
  if (eta_hat.size() != ne || w_hat.size() != ne) throw std::invalid_argument("broadcast stacks have wrong dimension");
  if (!state.allFinite() || !eta_hat.allFinite() || !w_hat.allFinite()) {
    throw std::invalid_argument("closed_loop_derivative: non-finite input");
  }
  if (cfg.schemes.size() != layout.n_agents || cfg.graph.size() != layout.n_agents) {
    throw std::invalid_argument("closed_loop_derivative: config does not match the problem size");
  }
  ClosedLoop rhs(cfg);
  Vector out(state.size());
  rhs(state, eta_hat, w_hat, out);
  return out;
}

double consensus_error(const AggregativeProblem& p, const Vector& x, const Vector& eta) {
  const std::size_t n = p.num_agents();
  const auto m = static_cast<Eigen::Index>(p.dim_sigma());
  const auto b = 2 * m;
  Vector mean = Vector::Zero(b);
  for (std::size_t i = 0; i < n; ++i) {
    const auto off = static_cast<Eigen::Index>(i) * b;
    mean += theta(p.agent(i), p.block(x, i), eta.segment(off, m));
  }
  mean /= static_cast<double>(n);
  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    worst = std::max(worst, (eta.segment(static_cast<Eigen::Index>(i) * b, b) - mean).norm());
  }
  return worst;
}

std::vector<double> consensus_error_series(const AggregativeProblem& p, std::span<const TrajectoryRecord> trajectory) {
  std::vector<double> out;
  out.reserve(trajectory.size());
  for (const auto& r : trajectory) out.push_back(consensus_error(p, r.x, r.eta));
  return out;
}

SimResult run(const SimConfig& cfg) {
  validate(cfg);
  const auto& p = cfg.problem;
  const StateLayout layout = StateLayout::of(p);
  const std::size_t n = layout.n_agents;
  const std::size_t b = layout.block();

  SimResult result;
  result.spectrum = spectral_summary(cfg.graph);
  if (!result.spectrum.is_connected) throw std::invalid_argument("communication graph must be connected");
  result.validation = validate_scheme(cfg.schemes, result.spectrum.lambda_bound);
  result.warnings = result.validation.warnings;
  if (cfg.step > cfg.delta / 10.0) {
    std::ostringstream os;
    os << "step " << cfg.step << " exceeds delta/10 = " << cfg.delta / 10.0
       << "; the fast estimator dynamics may be under-resolved";
    result.warnings.push_back(os.str());
  }

  Vector state = initial_state(p, cfg.x0);
  const auto ne = static_cast<Eigen::Index>(b * n);
  const auto eo = static_cast<Eigen::Index>(layout.eta_offset());
  const auto wo = static_cast<Eigen::Index>(layout.w_offset());
  Vector eta_hat = state.segment(eo, ne);
  Vector w_hat = state.segment(wo, ne);

  result.events = EventLog(n);
  std::vector<double> last_trigger(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) result.events.record(i, 0.0);

  ClosedLoop rhs(cfg);
  Rk4Stepper stepper(state.size());
  auto deriv = [&](double, const Vector& y, Vector& dy) { rhs(y, eta_hat, w_hat, dy); };

  const double h = cfg.step;
  const auto steps = static_cast<std::size_t>(std::ceil(cfg.t_end / h - 1e-9));
  result.metrics.steps = steps;
  result.trajectory.reserve(steps / cfg.output_stride + 1);
  result.trajectory.push_back(make_record(cfg, layout, 0.0, state, eta_hat, w_hat));

  for (std::size_t k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * h;
    if (k > 0) {
      for (std::size_t i = 0; i < n; ++i) {
        const auto off = static_cast<Eigen::Index>(i * b);
        const auto len = static_cast<Eigen::Index>(b);
        const bool fire = std::visit(
            [&](const auto& s) -> bool {
              using T = std::decay_t<decltype(s)>;
              if constexpr (std::is_same_v<T, ContinuousTrigger>) {
                return true;
              } else if constexpr (std::is_same_v<T, PeriodicTrigger>) {
                return (t - last_trigger[i]) + 1e-9 * h >= s.period;
              } else {
                const double e = measurement_error(slice(state, layout.eta_offset() + i * b, b), slice(eta_hat, i * b, b),
                                                   slice(state, layout.w_offset() + i * b, b), slice(w_hat, i * b, b));
                return should_trigger(e, t, s.beta1, s.beta2);
              }
            },
            cfg.schemes[i]);
        if (fire) {
          eta_hat.segment(off, len) = state.segment(eo + off, len);
          w_hat.segment(off, len) = state.segment(wo + off, len);
          last_trigger[i] = t;
          result.events.record(i, t);
        }
      }
    }

    stepper.step(deriv, t, state, h);

    const double t_next = static_cast<double>(k + 1) * h;
    const double norm = state.norm();
    if (!std::isfinite(norm) || norm > kDivergenceLimit) {
      std::ostringstream os;
      os << "state diverged at t = " << t_next << " (||state|| = " << norm << "); reduce the step (currently " << h
         << ", delta = " << cfg.delta << ")";
      throw DivergenceError(os.str());
    }
    if ((k + 1) % cfg.output_stride == 0) {
      result.trajectory.push_back(make_record(cfg, layout, t_next, state, eta_hat, w_hat));
    }
  }

  auto& m = result.metrics;
  m.final_x = state.head(static_cast<Eigen::Index>(layout.n_x));
  m.final_eta = state.segment(eo, ne);
  m.final_w = state.segment(wo, ne);
  m.final_consensus_error = consensus_error(p, m.final_x, m.final_eta);
  if (cfg.reference) {
    const double ref_norm = cfg.reference->norm();
    const double err = (m.final_x - *cfg.reference).norm();
    m.final_relative_error = ref_norm > 0.0 ? err / ref_norm : err;
    std::vector<ErrorSample> series;
    series.reserve(result.trajectory.size());
    for (const auto& r : result.trajectory) series.push_back({r.t, r.decision_error});
    try {
      m.decision_decay_rate = fit_decay_rate(series);
    } catch (const std::invalid_argument&) {
      m.decision_decay_rate.reset();
    }
  }
  for (std::size_t i = 0; i < n; ++i) m.broadcast_counts.push_back(result.events.count(i));
  m.total_broadcasts = result.events.total_count();
  m.min_inter_event_interval = result.events.min_interval();
  return result;
}

}  // namespace aggopt
