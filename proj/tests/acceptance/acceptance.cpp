// Acceptance suite: one PASS/FAIL line per criterion.
//
//   aggopt_acceptance            run every criterion
//   aggopt_acceptance 4 7        run the listed criteria (10 = rate bound)
//
// Exit status is nonzero when any selected criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <sstream>
#include <string>

#include <Eigen/Eigenvalues>

#include "aggopt/consensus.hpp"
#include "aggopt/engine.hpp"
#include "aggopt/oracle.hpp"
#include "aggopt/trigger.hpp"
#include "scenario.hpp"
#include "support/test_support.hpp"

namespace {

using namespace aggopt;

// Pinned tolerances.
constexpr double kOracleTol = 1e-5;
constexpr double kDistributedTol = 1e-3;
constexpr double kConsensusTol = 1e-6;
constexpr double kClosedFormTol = 1e-8;
constexpr double kLambertTol = 1e-9;
constexpr double kDerivativeTol = 1e-6;
constexpr double kConstructedResidualTol = 1e-8;
constexpr double kLongRunResidualTol = 1e-4;
constexpr double kDerRuntimeLimit = 60.0;
constexpr double kDispatchRuntimeLimit = 120.0;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

Vector der_x0() { return Eigen::Map<const Vector>(kDerInitialDecision.data(), 4); }

std::vector<TriggerScheme> der_event_schemes() {
  return {EventTrigger{10, 0.01}, EventTrigger{8, 0.1}, EventTrigger{8, 0.15}, EventTrigger{10, 0.05}};
}

SimConfig der_config(std::vector<TriggerScheme> schemes, double t_end = 200.0) {
  const AggregativeProblem p = make_der_instance();
  return SimConfig{p, ring_graph(4), 0.1, 1e-3, t_end, der_x0(), std::move(schemes), 10, solve_kkt_quadratic(p), false};
}

SimConfig dispatch_config(std::uint64_t seed, double t_end) {
  const AggregativeProblem p = make_dispatch_instance(15, seed);
  return SimConfig{p, random_connected_graph(15, seed), 0.1, 1e-3, t_end, Vector::Zero(15),
                   std::vector<TriggerScheme>(15, EventTrigger{6, 0.15}), 100, solve_kkt_quadratic(p), false};
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

FlowOptions flow_options(const AggregativeProblem& p) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(quadratic_hessian(p), Eigen::EigenvaluesOnly);
  FlowOptions opts;
  opts.step = std::min(0.01, 0.0025 / es.eigenvalues().maxCoeff());
  opts.t_end = 60.0 / es.eigenvalues().minCoeff();
  opts.record_stride = 100;
  return opts;
}

Outcome oracle_equivalence() {
  double worst = 0.0;
  auto check = [&worst](const AggregativeProblem& p, const Vector& x0) {
    const Vector x_star = solve_kkt_quadratic(p);
    const auto traj = centralized_flow(p, x0, flow_options(p));
    worst = std::max(worst, (traj.back().x - x_star).norm() / x_star.norm());
  };
  check(make_der_instance(), der_x0());
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const std::size_t n = 2 + seed % 5;
    check(make_dispatch_instance(n, 1000 + seed), Vector::Zero(static_cast<Eigen::Index>(n)));
  }
  return {worst <= kOracleTol, "max relative error " + sci(worst) + " over 4-DER + 10 dispatch (n<=6), tol " +
                                   sci(kOracleTol)};
}

Outcome distributed_convergence() {
  const auto start = std::chrono::steady_clock::now();
  const SimResult r = run(der_config(der_event_schemes()));
  const double elapsed = seconds_since(start);
  const double err = *r.metrics.final_relative_error;
  const Vector published = Eigen::Map<const Vector>(kDerPublishedOptimum.data(), 4);
  const double published_gap = (published - *der_config({}).reference).norm() / der_config({}).reference->norm();
  return {err <= kDistributedTol && elapsed < kDerRuntimeLimit,
          "4-DER event, t_end 200: relative error " + sci(err) + " (tol " + sci(kDistributedTol) + "), " +
              sci(elapsed) + " s; published optimum differs from the oracle by " + sci(published_gap) +
              " relative"};
}

Outcome estimator_consensus() {
  // Frozen decisions on the 4-DER ring with exact broadcasts.
  SimConfig cfg = der_config(std::vector<TriggerScheme>(4, ContinuousTrigger{}), 50 * 0.1);
  cfg.freeze_decisions = true;
  cfg.output_stride = 1;
  const SimResult r = run(cfg);
  double first_below = std::numeric_limits<double>::infinity();
  for (const auto& rec : r.trajectory) {
    if (rec.consensus_error < kConsensusTol) {
      first_below = rec.t;
      break;
    }
  }

  // Two-node linear estimator against its matrix exponential.
  const AggregativeProblem p = make_priced_quadratic_instance(
      std::vector<PricedQuadraticCoefficients>{{1.0, 12, 5, 200, 0.2}, {0.5, 10, 8, 200, 0.2}});
  const Graph g = path_graph(2);
  Vector x0(2);
  x0 << 5, 6;
  const SimConfig two{p, g, 0.1, 1e-4, 2.0, x0, {ContinuousTrigger{}, ContinuousTrigger{}}, 100, std::nullopt, true};
  const SimResult tr = run(two);
  const Vector s0 = initial_state(p, x0);
  Vector thetas(4);
  for (std::size_t i = 0; i < 2; ++i) thetas.segment(2 * i, 2) = theta(p.agent(i), p.block(x0, i), Vector::Zero(1));
  double worst = 0.0;
  for (const auto& rec : tr.trajectory) {
    const Vector z = testing::estimator_closed_form(g, 2, s0.segment(2, 4), s0.segment(6, 4), thetas, 0.1, rec.t);
    worst = std::max(worst, (z.head(4) - rec.eta).cwiseAbs().maxCoeff());
    worst = std::max(worst, (z.tail(4) - rec.w).cwiseAbs().maxCoeff());
  }
  return {first_below <= 50 * 0.1 && worst <= kClosedFormTol,
          "consensus error < " + sci(kConsensusTol) + " at t = " + sci(first_below) + " (limit 5.0); 2-node closed-form deviation " +
              sci(worst) + " (tol " + sci(kClosedFormTol) + ")"};
}

Outcome communication_count() {
  const SimResult ev = run(der_config(der_event_schemes()));
  const std::size_t periodic = static_cast<std::size_t>(std::ceil(200.0 / 0.02)) * 4;
  const double ratio = static_cast<double>(ev.metrics.total_broadcasts) / static_cast<double>(periodic);
  std::ostringstream os;
  os << "event " << ev.metrics.total_broadcasts << " vs periodic " << periodic << " over t_end 200, ratio "
     << sci(ratio) << "; per agent [";
  for (std::size_t i = 0; i < 4; ++i) os << (i ? ", " : "") << ev.metrics.broadcast_counts[i];
  os << "]";
  // Cumulative event counts at shorter horizons, for context.
  for (double horizon : {20.0, 50.0, 100.0}) {
    std::size_t count = 0;
    for (std::size_t i = 0; i < 4; ++i) {
      const auto& t = ev.events.times(i);
      count += static_cast<std::size_t>(std::lower_bound(t.begin(), t.end(), horizon) - t.begin());
    }
    os << "; by t=" << horizon << ": " << count << " vs " << static_cast<std::size_t>(std::ceil(horizon / 0.02)) * 4;
  }
  return {ev.metrics.total_broadcasts < periodic, os.str()};
}

Outcome zeno_exclusion() {
  bool ok = true;
  std::ostringstream os;
  const std::vector<std::pair<std::string, SimConfig>> shipped{
      {"der4", der_config(der_event_schemes())},
      {"dispatch(15,1)", dispatch_config(1, 1000.0)},
  };
  for (const auto& [name, cfg] : shipped) {
    const SimResult r = run(cfg);
    const auto gap = r.metrics.min_inter_event_interval;
    bool finite = true;
    for (std::size_t c : r.metrics.broadcast_counts) finite &= c <= r.metrics.steps;
    ok &= finite && gap && *gap > 0.0;
    os << name << " min gap " << (gap ? sci(*gap) : "none") << ", max count "
       << *std::max_element(r.metrics.broadcast_counts.begin(), r.metrics.broadcast_counts.end()) << "; ";
  }
  double smallest = std::numeric_limits<double>::infinity();
  for (double m1 : {1e-3, 0.1, 1.0, 10.0, 1e3}) {
    for (double m2 : {0.0, 0.5, 100.0}) {
      for (double b1 : {0.1, 1.0, 10.0}) {
        for (double b2 : {1e-3, 0.15, 0.9}) smallest = std::min(smallest, zeno_lower_bound(m1, m2, b1, b2));
      }
    }
  }
  const double lambert = std::abs(zeno_lower_bound(0.5, 0.5, 1.0, 1.0) - 0.5671432904097838);
  ok &= smallest > 0.0 && lambert <= kLambertTol;
  os << "smallest analytic bound " << sci(smallest) << " over 135 cases; omega-constant error " << sci(lambert);
  return {ok, os.str()};
}

Outcome gradient_correctness() {
  double worst = 0.0;
  // Composite gradient of the summed cost: reported separately because its
  // finite difference carries the rounding noise of the whole sum.
  double worst_global = 0.0;
  auto family = [&](const AggregativeProblem& p, double scale, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-scale, scale);
    for (int k = 0; k < 20; ++k) {
      Vector x(static_cast<Eigen::Index>(p.dim_x()));
      for (auto& v : x) v = u(rng);
      worst_global = std::max(worst_global, testing::max_derivative_error(
                                                testing::central_difference(testing::global_cost_fn(p), x),
                                                p.global_gradient(x)));
      for (std::size_t i = 0; i < p.num_agents(); ++i) {
        const LocalObjective& obj = p.agent(i);
        const Vector xi = p.block(x, i);
        Vector s(static_cast<Eigen::Index>(p.dim_sigma()));
        for (auto& v : s) v = u(rng);
        worst = std::max(worst, testing::max_derivative_error(
                                    testing::central_difference([&](const Vector& y) { return obj.eval(y, s); }, xi),
                                    obj.grad_x(xi, s)));
        worst = std::max(worst, testing::max_derivative_error(
                                    testing::central_difference([&](const Vector& y) { return obj.eval(xi, y); }, s),
                                    obj.grad_sigma(xi, s)));
        const Matrix jac = obj.jac_phi(xi);
        for (Eigen::Index r = 0; r < jac.rows(); ++r) {
          worst = std::max(worst, testing::max_derivative_error(
                                      testing::central_difference([&](const Vector& y) { return obj.phi(y)[r]; }, xi),
                                      jac.row(r).transpose()));
        }
      }
    }
  };
  family(make_der_instance(), 100.0, 1);
  family(make_dispatch_instance(15, 1), 300.0, 2);
  family(testing::make_coupled_problem(4, 3), 1.5, 3);
  return {worst <= kDerivativeTol,
          "max error of grad_x, grad_sigma, jac_phi " + sci(worst) +
              " over DER, dispatch and vector-aggregate families (tol " + sci(kDerivativeTol) +
              "); composite global gradient " + sci(worst_global)};
}

Outcome equilibrium_equivalence() {
  double constructed = 0.0;
  for (const auto& [p, g] : {std::pair{make_der_instance(), ring_graph(4)},
                             std::pair{make_dispatch_instance(15, 1), random_connected_graph(15, 1)}}) {
    const NetworkEquilibrium eq = estimator_steady_state(p, g, solve_kkt_quadratic(p));
    constructed = std::max(constructed, equilibrium_residual(p, g, eq.x, eq.eta, eq.w));
  }
  const SimConfig cfg = der_config(std::vector<TriggerScheme>(4, ContinuousTrigger{}));
  const SimResult r = run(cfg);
  const double long_run = equilibrium_residual(cfg.problem, cfg.graph, r.metrics.final_x, r.metrics.final_eta,
                                               r.metrics.final_w);
  return {constructed <= kConstructedResidualTol && long_run <= kLongRunResidualTol,
          "constructed residual " + sci(constructed) + " (tol " + sci(kConstructedResidualTol) +
              "); 4-DER continuous residual at t=200 " + sci(long_run) + " (tol " + sci(kLongRunResidualTol) + ")"};
}

Outcome large_instance() {
  const auto start = std::chrono::steady_clock::now();
  const SimResult r = run(dispatch_config(1, 1000.0));
  const double elapsed = seconds_since(start);
  const double err = *r.metrics.final_relative_error;
  return {err <= kDistributedTol && elapsed < kDispatchRuntimeLimit,
          "dispatch(15, seed 1), random graph, beta (6, 0.15), t_end 1000: relative error " + sci(err) + " (tol " +
              sci(kDistributedTol) + "), " + sci(r.metrics.total_broadcasts) + " broadcasts, " + sci(elapsed) + " s"};
}

Outcome determinism() {
  const auto base = std::filesystem::temp_directory_path() / "aggopt_acceptance_determinism";
  std::filesystem::remove_all(base);
  bool same = true;
  std::size_t compared = 0;
  for (const std::string text : {"scenario = der4\nt_end = 50\ncompare_periodic = 0.02",
                                 "scenario = dispatch(15, 1)\nt_end = 50"}) {
    std::vector<std::vector<std::string>> contents;
    for (int rep = 0; rep < 2; ++rep) {
      cli::ScenarioConfig cfg = cli::parse_config(text);
      cfg.output_dir = (base / ("rep" + std::to_string(rep))).string();
      const auto out = cli::run_scenario(cfg);
      std::vector<std::string> files;
      for (const auto& f : out.files) {
        std::ifstream in(f, std::ios::binary);
        std::ostringstream ss;
        ss << in.rdbuf();
        // Paths differ by construction; compare everything else.
        std::string body = ss.str();
        for (std::size_t pos; (pos = body.find(cfg.output_dir)) != std::string::npos;) body.erase(pos, cfg.output_dir.size());
        files.push_back(body);
      }
      contents.push_back(files);
    }
    same &= contents[0] == contents[1];
    compared += contents[0].size();
  }
  std::filesystem::remove_all(base);
  return {same, std::to_string(compared) + " output files byte-identical across repeated runs"};
}

Outcome rate_bound() {
  const AggregativeProblem p = make_der_instance();
  const Vector x_star = solve_kkt_quadratic(p);
  FlowOptions opts = flow_options(p);
  opts.record_stride = 10;
  std::vector<ErrorSample> errors;
  for (const auto& s : centralized_flow(p, der_x0(), opts)) errors.push_back({s.t, (s.x - x_star).norm()});
  const double fitted = fit_decay_rate(errors);
  const double bound = p.rate_constants()->centralized_rate_bound();
  return {fitted >= bound, "4-DER centralized flow fitted rate " + sci(fitted) + " >= kappa/(1+2l) = " + sci(bound) +
                               " (kappa " + sci(p.rate_constants()->kappa) + ", l " +
                               sci(p.rate_constants()->lipschitz) + ")"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::map<int, std::pair<std::string, std::function<Outcome()>>> criteria{
      {1, {"oracle equivalence", oracle_equivalence}},
      {2, {"distributed convergence", distributed_convergence}},
      {3, {"estimator consensus", estimator_consensus}},
      {4, {"event vs periodic communication", communication_count}},
      {5, {"zeno exclusion", zeno_exclusion}},
      {6, {"gradient correctness", gradient_correctness}},
      {7, {"equilibrium equivalence", equilibrium_equivalence}},
      {8, {"large-instance convergence", large_instance}},
      {9, {"determinism", determinism}},
      {10, {"centralized rate bound", rate_bound}},
  };

  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::stoi(argv[i]));
  if (selected.empty()) {
    for (const auto& [id, _] : criteria) selected.push_back(id);
  }

  int failures = 0;
  for (int id : selected) {
    const auto it = criteria.find(id);
    if (it == criteria.end()) {
      std::printf("FAIL %2d unknown criterion\n", id);
      ++failures;
      continue;
    }
    Outcome o;
    try {
      o = it->second.second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s %2d %s: %s\n", o.pass ? "PASS" : "FAIL", id, it->second.first.c_str(), o.detail.c_str());
    failures += o.pass ? 0 : 1;
  }
  std::fflush(stdout);
  return failures == 0 ? 0 : 1;
}
