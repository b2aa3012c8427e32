#include "aggopt/consensus.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

#include <Eigen/QR>

namespace aggopt {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

Eigen::Map<const Vector> view(std::span<const double> s) { return {s.data(), static_cast<Eigen::Index>(s.size())}; }
Eigen::Map<Vector> view(std::span<double> s) { return {s.data(), static_cast<Eigen::Index>(s.size())}; }

}  // namespace

EstimatorState initial_estimator_state(const LocalObjective& obj, const Vector& x_i) {
  const auto m = static_cast<Eigen::Index>(obj.dim_sigma());
  EstimatorState s;
  s.eta = theta(obj, x_i, Vector::Zero(m));
  s.w = Vector::Zero(2 * m);
  s.eta_hat = s.eta;
  s.w_hat = s.w;
  s.last_trigger_time = 0.0;
  return s;
}

Vector theta(const LocalObjective& obj, const Vector& x_i, const Vector& eta_i1) {
  require(static_cast<std::size_t>(x_i.size()) == obj.dim_x(), "theta: decision block has wrong dimension");
  require(static_cast<std::size_t>(eta_i1.size()) == obj.dim_sigma(), "theta: aggregate estimate has wrong dimension");
  Vector out(2 * eta_i1.size());
  theta(obj, as_span(x_i), as_span(eta_i1), as_span(out));
  return out;
}

void theta(const LocalObjective& obj, std::span<const double> x_i, std::span<const double> eta_i1,
           std::span<double> out) {
  const std::size_t m = obj.dim_sigma();
  obj.phi(x_i, out.first(m));
  obj.grad_sigma(x_i, eta_i1, out.subspan(m, m));
}

void laplacian_apply(const Graph& g, std::size_t block, std::span<const double> v, std::span<double> out) {
  for (std::size_t i = 0; i < g.size(); ++i) {
    auto oi = view(out.subspan(i * block, block));
    const auto vi = view(v.subspan(i * block, block));
    oi = static_cast<double>(g.degree(i)) * vi;
    for (std::size_t j : g.neighbors(i)) oi -= view(v.subspan(j * block, block));
  }
}

void estimator_rates(const Graph& g, std::size_t block, std::span<const double> eta,
                     std::span<const double> eta_hat, std::span<const double> w_hat,
                     std::span<const double> thetas, double delta, std::span<double> eta_dot,
                     std::span<double> w_dot) {
  const double inv_delta = 1.0 / delta;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const std::size_t off = i * block;
    for (std::size_t k = 0; k < block; ++k) {
      double eta_diff = 0.0;
      double w_diff = 0.0;
      for (std::size_t j : g.neighbors(i)) {
        eta_diff += eta_hat[off + k] - eta_hat[j * block + k];
        w_diff += w_hat[off + k] - w_hat[j * block + k];
      }
      eta_dot[off + k] = (-eta[off + k] - eta_diff - w_diff + thetas[off + k]) * inv_delta;
      w_dot[off + k] = eta_diff * inv_delta;
    }
  }
}

EstimatorRates estimator_derivative(const Graph& g, std::span<const EstimatorState> states,
                                    std::span<const Vector> thetas, double delta) {
  require(delta > 0.0, "estimator_derivative: delta must be positive");
  require(states.size() == g.size() && thetas.size() == g.size(), "estimator_derivative: one state per node required");
  const auto block = static_cast<std::size_t>(states.front().eta.size());
  const std::size_t total = block * g.size();

  std::vector<double> eta(total), eta_hat(total), w_hat(total), th(total), eta_dot(total), w_dot(total);
  for (std::size_t i = 0; i < g.size(); ++i) {
    require(static_cast<std::size_t>(states[i].eta.size()) == block && static_cast<std::size_t>(thetas[i].size()) == block,
            "estimator_derivative: inconsistent block sizes");
    std::copy_n(states[i].eta.data(), block, eta.begin() + static_cast<std::ptrdiff_t>(i * block));
    std::copy_n(states[i].eta_hat.data(), block, eta_hat.begin() + static_cast<std::ptrdiff_t>(i * block));
    std::copy_n(states[i].w_hat.data(), block, w_hat.begin() + static_cast<std::ptrdiff_t>(i * block));
    std::copy_n(thetas[i].data(), block, th.begin() + static_cast<std::ptrdiff_t>(i * block));
  }
  estimator_rates(g, block, eta, eta_hat, w_hat, th, delta, eta_dot, w_dot);

  EstimatorRates out;
  for (std::size_t i = 0; i < g.size(); ++i) {
    out.eta_dot.push_back(Eigen::Map<const Vector>(eta_dot.data() + i * block, static_cast<Eigen::Index>(block)));
    out.w_dot.push_back(Eigen::Map<const Vector>(w_dot.data() + i * block, static_cast<Eigen::Index>(block)));
  }
  return out;
}

double equilibrium_residual(const AggregativeProblem& p, const Graph& g, const Vector& x, const Vector& eta,
                            const Vector& w) {
  const std::size_t n_agents = p.num_agents();
  const std::size_t m = p.dim_sigma();
  const std::size_t block = 2 * m;
  require(g.size() == n_agents, "equilibrium_residual: graph size differs from agent count");
  require(static_cast<std::size_t>(x.size()) == p.dim_x(), "equilibrium_residual: x has wrong dimension");
  require(static_cast<std::size_t>(eta.size()) == block * n_agents && static_cast<std::size_t>(w.size()) == block * n_agents,
          "equilibrium_residual: estimator stacks have wrong dimension");

  const auto b = static_cast<Eigen::Index>(block);
  const auto mi = static_cast<Eigen::Index>(m);

  Vector decision_res(x.size());
  Vector thetas(eta.size());
  for (std::size_t i = 0; i < n_agents; ++i) {
    const auto& obj = p.agent(i);
    const Vector xi = p.block(x, i);
    const auto off = static_cast<Eigen::Index>(i) * b;
    const Vector eta1 = eta.segment(off, mi);
    const Vector eta2 = eta.segment(off + mi, mi);
    decision_res.segment(static_cast<Eigen::Index>(p.offset(i)), xi.size()) =
        -obj.grad_x(xi, eta1) - obj.jac_phi(xi).transpose() * eta2;
    thetas.segment(off, b) = theta(obj, xi, eta1);
  }

  Vector l_eta(eta.size()), l_w(w.size());
  laplacian_apply(g, block, as_span(eta), as_span(l_eta));
  laplacian_apply(g, block, as_span(w), as_span(l_w));
  const Vector estimator_res = -eta - l_eta - l_w + thetas;

  return std::max({decision_res.norm(), estimator_res.norm(), l_eta.norm()});
}

NetworkEquilibrium estimator_steady_state(const AggregativeProblem& p, const Graph& g, const Vector& x) {
  require(g.size() == p.num_agents(), "estimator_steady_state: graph size differs from agent count");
  const std::size_t n_agents = p.num_agents();
  const auto m = static_cast<Eigen::Index>(p.dim_sigma());
  const auto b = 2 * m;
  const Vector s = p.sigma(x);

  Matrix thetas(b, static_cast<Eigen::Index>(n_agents));
  for (std::size_t i = 0; i < n_agents; ++i) thetas.col(static_cast<Eigen::Index>(i)) = theta(p.agent(i), p.block(x, i), s);
  const Vector mean = thetas.rowwise().mean();

  // Row k of the n x b right-hand side is agent k's (Theta_k - mean).
  const Matrix rhs = (thetas.colwise() - mean).transpose();
  const Matrix w_nodes = laplacian(g).completeOrthogonalDecomposition().pseudoInverse() * rhs;

  NetworkEquilibrium eq;
  eq.x = x;
  eq.eta.resize(b * static_cast<Eigen::Index>(n_agents));
  eq.w.resize(b * static_cast<Eigen::Index>(n_agents));
  for (std::size_t i = 0; i < n_agents; ++i) {
    const auto off = static_cast<Eigen::Index>(i) * b;
    eq.eta.segment(off, b) = mean;
    eq.w.segment(off, b) = w_nodes.row(static_cast<Eigen::Index>(i)).transpose();
  }
  return eq;
}

}  // namespace aggopt
