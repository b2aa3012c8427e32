#include "scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "aggopt/consensus.hpp"
#include "aggopt/csv.hpp"
#include "aggopt/oracle.hpp"
#include "aggopt/trigger.hpp"

namespace aggopt::cli {

namespace {

using nlohmann::json;

const std::set<std::string> kKnownKeys = {
    "scenario", "agents",  "seed",         "a",       "b",          "d",         "price_intercept",
    "price_slope", "topology", "topology_seed", "edges", "trigger", "agent_triggers", "beta1",
    "beta2",    "period",  "delta",        "step",    "t_end",      "x0",        "output_dir",
    "output_stride", "compare_periodic"};

const std::set<std::string> kCoefficientKeys = {"a", "b", "d", "price_intercept", "price_slope"};

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

[[noreturn]] void fail(const RawValue& v, const std::string& key, const std::string& what) {
  const std::string where = v.line > 0 ? "line " + std::to_string(v.line) : std::string("command line");
  throw ConfigError(where + ": " + what + " for key '" + key + "'");
}

double to_double(const std::string& token, const RawValue& v, const std::string& key) {
  const std::string t = trim(token);
  double out = 0.0;
  const char* end = t.data() + t.size();
  const auto res = std::from_chars(t.data(), end, out);
  if (t.empty() || res.ec != std::errc{} || res.ptr != end || !std::isfinite(out)) {
    fail(v, key, "malformed number '" + t + "'");
  }
  return out;
}

std::uint64_t to_uint(const std::string& token, const RawValue& v, const std::string& key) {
  const std::string t = trim(token);
  std::uint64_t out = 0;
  const char* end = t.data() + t.size();
  const auto res = std::from_chars(t.data(), end, out);
  if (t.empty() || res.ec != std::errc{} || res.ptr != end) fail(v, key, "malformed non-negative integer '" + t + "'");
  return out;
}

// "[a, b, c]" -> {"a", "b", "c"}; a bare scalar is a one-element list.
std::vector<std::string> split_list(const RawValue& v, const std::string& key) {
  std::string body = trim(v.text);
  if (!body.empty() && body.front() == '[') {
    if (body.back() != ']') fail(v, key, "unterminated list '" + body + "'");
    body = body.substr(1, body.size() - 2);
    if (trim(body).empty()) return {};
  }
  std::vector<std::string> items;
  std::stringstream ss(body);
  std::string item;
  while (std::getline(ss, item, ',')) items.push_back(trim(item));
  return items;
}

const RawValue* find(const RawConfig& raw, const std::string& key) {
  const auto it = raw.find(key);
  return it == raw.end() ? nullptr : &it->second;
}

std::vector<double> number_list(const RawConfig& raw, const std::string& key, std::size_t n,
                                const std::vector<double>& fallback) {
  const RawValue* v = find(raw, key);
  if (!v) return fallback;
  std::vector<double> out;
  for (const auto& item : split_list(*v, key)) out.push_back(to_double(item, *v, key));
  if (out.size() == 1 && n > 1) out.assign(n, out.front());
  if (out.size() != n) {
    fail(*v, key, "expected 1 or " + std::to_string(n) + " values, got " + std::to_string(out.size()));
  }
  return out;
}

double number(const RawConfig& raw, const std::string& key, double fallback) {
  const RawValue* v = find(raw, key);
  return v ? to_double(v->text, *v, key) : fallback;
}

TriggerKind trigger_kind(const std::string& text, const RawValue& v, const std::string& key) {
  const std::string t = lower(trim(text));
  if (t == "event") return TriggerKind::Event;
  if (t == "periodic") return TriggerKind::Periodic;
  if (t == "continuous") return TriggerKind::Continuous;
  fail(v, key, "unknown trigger '" + t + "' (expected event, periodic or continuous)");
}

const char* name(TriggerKind k) {
  switch (k) {
    case TriggerKind::Event: return "event";
    case TriggerKind::Periodic: return "periodic";
    case TriggerKind::Continuous: return "continuous";
  }
  return "?";
}

const char* name(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::Der4: return "der4";
    case ScenarioKind::Dispatch: return "dispatch";
    case ScenarioKind::Quadratic: return "quadratic";
  }
  return "?";
}

const char* name(TopologyKind k) {
  switch (k) {
    case TopologyKind::Ring4: return "ring4";
    case TopologyKind::Ring: return "ring";
    case TopologyKind::Random: return "random";
    case TopologyKind::Edges: return "edges";
  }
  return "?";
}

// "name(arg, arg)" -> {"name", {"arg", "arg"}}
std::pair<std::string, std::vector<std::string>> call_form(const std::string& text) {
  const std::string t = trim(text);
  const auto open = t.find('(');
  if (open == std::string::npos || t.back() != ')') return {lower(t), {}};
  std::vector<std::string> args;
  std::stringstream ss(t.substr(open + 1, t.size() - open - 2));
  std::string item;
  while (std::getline(ss, item, ',')) args.push_back(trim(item));
  return {lower(trim(t.substr(0, open))), args};
}

std::string join(const std::vector<double>& xs) {
  std::string out = "[";
  for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? ", " : "") + format_double(xs[i]);
  return out + "]";
}

json to_json(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

Vector to_vector(const std::vector<double>& xs) { return Eigen::Map<const Vector>(xs.data(), static_cast<Eigen::Index>(xs.size())); }

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

RawConfig parse_raw(const std::string& text) {
  RawConfig raw;
  std::string current;
  int line = 1;
  int entry_line = 1;
  int depth = 0;
  bool comment = false;

  auto flush = [&]() {
    const std::string entry = trim(current);
    current.clear();
    if (entry.empty()) return;
    const auto eq = entry.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(entry_line) + ": expected 'key = value', got '" + entry + "'");
    }
    const std::string key = lower(trim(entry.substr(0, eq)));
    const std::string value = trim(entry.substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(entry_line) + ": missing key before '='");
    if (value.empty()) throw ConfigError("line " + std::to_string(entry_line) + ": missing value for key '" + key + "'");
    if (!raw.emplace(key, RawValue{value, entry_line}).second) {
      throw ConfigError("line " + std::to_string(entry_line) + ": duplicate key '" + key + "'");
    }
  };

  for (char c : text) {
    if (c == '\n') {
      comment = false;
      if (depth == 0) {
        flush();
      } else {
        current += ' ';
      }
      ++line;
      if (depth == 0) entry_line = line;
      continue;
    }
    if (comment) continue;
    if (c == '#') {
      comment = true;
      continue;
    }
    if (c == '[' || c == '(') ++depth;
    if (c == ']' || c == ')') depth = std::max(0, depth - 1);
    if (depth == 0 && (c == ';' || c == ',')) {
      flush();
      entry_line = line;
      continue;
    }
    if (current.empty() && (c == ' ' || c == '\t')) continue;
    if (current.empty()) entry_line = line;
    current += c;
  }
  if (depth != 0) throw ConfigError("line " + std::to_string(entry_line) + ": unbalanced brackets");
  flush();
  return raw;
}

ScenarioConfig resolve(const RawConfig& raw) {
  std::vector<std::string> unknown;
  for (const auto& [key, _] : raw) {
    if (!kKnownKeys.count(key)) unknown.push_back(key);
  }
  if (!unknown.empty()) {
    std::string msg = "unknown keys:";
    for (const auto& k : unknown) msg += " " + k;
    throw ConfigError(msg);
  }

  const RawValue* scenario = find(raw, "scenario");
  if (!scenario) throw ConfigError("scenario required");

  ScenarioConfig cfg;
  const auto [kind, args] = call_form(scenario->text);
  if (kind == "der4") {
    cfg.scenario = ScenarioKind::Der4;
    if (!args.empty()) fail(*scenario, "scenario", "der4 takes no arguments");
  } else if (kind == "dispatch") {
    cfg.scenario = ScenarioKind::Dispatch;
    if (args.size() > 2) fail(*scenario, "scenario", "expected dispatch(n[, seed])");
  } else if (kind == "quadratic") {
    cfg.scenario = ScenarioKind::Quadratic;
  } else {
    fail(*scenario, "scenario", "unknown scenario '" + kind + "' (expected der4, dispatch or quadratic)");
  }

  if (cfg.scenario != ScenarioKind::Quadratic) {
    for (const auto& key : kCoefficientKeys) {
      if (const RawValue* v = find(raw, key)) fail(*v, key, "coefficients only apply to scenario = quadratic");
    }
  }

  const RawValue* seed = find(raw, "seed");
  cfg.seed = seed ? to_uint(seed->text, *seed, "seed") : 1;
  if (cfg.scenario == ScenarioKind::Dispatch && args.size() == 2) cfg.seed = to_uint(args[1], *scenario, "scenario");

  const RawValue* agents = find(raw, "agents");
  switch (cfg.scenario) {
    case ScenarioKind::Der4:
      cfg.agents = 4;
      if (agents && to_uint(agents->text, *agents, "agents") != 4) fail(*agents, "agents", "der4 has exactly 4 agents");
      break;
    case ScenarioKind::Dispatch:
      cfg.agents = agents ? to_uint(agents->text, *agents, "agents") : 15;
      if (!args.empty()) cfg.agents = to_uint(args[0], *scenario, "scenario");
      break;
    case ScenarioKind::Quadratic: {
      const RawValue* a = find(raw, "a");
      if (!a) fail(*scenario, "scenario", "quadratic scenario needs per-agent coefficient list 'a'");
      cfg.agents = split_list(*a, "a").size();
      if (agents && to_uint(agents->text, *agents, "agents") != cfg.agents) {
        fail(*agents, "agents", "does not match the length of 'a'");
      }
      break;
    }
  }
  if (cfg.agents == 0) throw ConfigError("at least one agent is required");
  const std::size_t n = cfg.agents;

  if (cfg.scenario == ScenarioKind::Quadratic) {
    const auto a = number_list(raw, "a", n, {});
    const RawValue* bv = find(raw, "b");
    const RawValue* dv = find(raw, "d");
    if (!bv || !dv) fail(*scenario, "scenario", "quadratic scenario needs 'b' and 'd'");
    const auto b = number_list(raw, "b", n, {});
    const auto d = number_list(raw, "d", n, {});
    const auto intercept = number_list(raw, "price_intercept", n, std::vector<double>(n, 200.0));
    const auto slope = number_list(raw, "price_slope", n, std::vector<double>(n, 0.1 * static_cast<double>(n)));
    for (std::size_t i = 0; i < n; ++i) cfg.coefficients.push_back({a[i], b[i], d[i], intercept[i], slope[i]});
  }

  // Topology.
  const RawValue* topo = find(raw, "topology");
  const RawValue* topo_seed = find(raw, "topology_seed");
  cfg.topology_seed = topo_seed ? to_uint(topo_seed->text, *topo_seed, "topology_seed") : cfg.seed;
  if (topo) {
    const auto [tkind, targs] = call_form(topo->text);
    if (tkind == "ring4") {
      cfg.topology = TopologyKind::Ring4;
      if (n != 4) fail(*topo, "topology", "ring4 needs exactly 4 agents");
    } else if (tkind == "ring") {
      cfg.topology = TopologyKind::Ring;
    } else if (tkind == "random") {
      cfg.topology = TopologyKind::Random;
      if (targs.size() > 2) fail(*topo, "topology", "expected random([n[, seed]])");
      if (!targs.empty() && to_uint(targs[0], *topo, "topology") != n) fail(*topo, "topology", "random graph size differs from agent count");
      if (targs.size() == 2) cfg.topology_seed = to_uint(targs[1], *topo, "topology");
    } else if (tkind == "edges") {
      cfg.topology = TopologyKind::Edges;
    } else {
      fail(*topo, "topology", "unknown topology '" + tkind + "' (expected ring4, ring, random or edges)");
    }
  } else {
    cfg.topology = cfg.scenario == ScenarioKind::Der4 ? TopologyKind::Ring4 : TopologyKind::Random;
  }
  const RawValue* edges = find(raw, "edges");
  if (cfg.topology == TopologyKind::Edges) {
    if (!edges) fail(*topo, "topology", "topology = edges needs an 'edges' list");
    for (const auto& item : split_list(*edges, "edges")) {
      const auto dash = item.find('-');
      if (dash == std::string::npos) fail(*edges, "edges", "malformed edge '" + item + "' (expected i-j)");
      cfg.edges.push_back({static_cast<std::size_t>(to_uint(item.substr(0, dash), *edges, "edges")),
                           static_cast<std::size_t>(to_uint(item.substr(dash + 1), *edges, "edges"))});
    }
  } else if (edges) {
    fail(*edges, "edges", "edge list requires topology = edges");
  }

  // Triggers.
  const RawValue* trig = find(raw, "trigger");
  const TriggerKind base = trig ? trigger_kind(trig->text, *trig, "trigger") : TriggerKind::Event;
  cfg.triggers.assign(n, base);
  if (const RawValue* per_agent = find(raw, "agent_triggers")) {
    const auto items = split_list(*per_agent, "agent_triggers");
    if (items.size() != n) fail(*per_agent, "agent_triggers", "expected " + std::to_string(n) + " entries");
    for (std::size_t i = 0; i < n; ++i) cfg.triggers[i] = trigger_kind(items[i], *per_agent, "agent_triggers");
  }
  const bool der = cfg.scenario == ScenarioKind::Der4;
  cfg.beta1 = number_list(raw, "beta1", n, der ? std::vector<double>{10, 8, 8, 10} : std::vector<double>(n, 6.0));
  cfg.beta2 = number_list(raw, "beta2", n,
                          der ? std::vector<double>{0.01, 0.1, 0.15, 0.05} : std::vector<double>(n, 0.15));
  cfg.period = number_list(raw, "period", n, std::vector<double>(n, 0.02));

  // Integration.
  cfg.delta = number(raw, "delta", 0.1);
  cfg.step = number(raw, "step", cfg.delta / 100.0);
  cfg.t_end = number(raw, "t_end", 200.0);
  const RawValue* stride = find(raw, "output_stride");
  cfg.output_stride = stride ? to_uint(stride->text, *stride, "output_stride") : 10;
  if (!(cfg.delta > 0.0)) throw ConfigError("delta must be positive");
  if (!(cfg.step > 0.0)) throw ConfigError("step must be positive");
  if (!(cfg.t_end > 0.0)) throw ConfigError("t_end must be positive");
  if (cfg.output_stride == 0) throw ConfigError("output_stride must be positive");

  std::vector<double> x0_default(n, 0.0);
  if (der) x0_default.assign(kDerInitialDecision.begin(), kDerInitialDecision.end());
  cfg.x0 = number_list(raw, "x0", n, x0_default);

  if (const RawValue* out = find(raw, "output_dir")) {
    cfg.output_dir = trim(out->text);
    if (cfg.output_dir.size() >= 2 && cfg.output_dir.front() == '"' && cfg.output_dir.back() == '"') {
      cfg.output_dir = cfg.output_dir.substr(1, cfg.output_dir.size() - 2);
    }
  }
  if (const RawValue* cmp = find(raw, "compare_periodic")) {
    cfg.compare_periodic = to_double(cmp->text, *cmp, "compare_periodic");
    if (!(*cfg.compare_periodic > 0.0)) fail(*cmp, "compare_periodic", "period must be positive");
  }

  // Resolve to a runnable configuration before anything executes.
  try {
    const Graph g = build_graph(cfg);
    if (!is_connected(g)) throw ConfigError("communication graph is not connected");
    const auto schemes = build_schemes(cfg);
    validate_scheme(schemes, lambda_bound(laplacian(g)));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return cfg;
}

std::string dump_config(const ScenarioConfig& cfg) {
  std::ostringstream os;
  os << "scenario = " << name(cfg.scenario) << '\n';
  os << "agents = " << cfg.agents << '\n';
  os << "seed = " << cfg.seed << '\n';
  if (cfg.scenario == ScenarioKind::Quadratic) {
    std::vector<double> a, b, d, pi, ps;
    for (const auto& c : cfg.coefficients) {
      a.push_back(c.a);
      b.push_back(c.b);
      d.push_back(c.d);
      pi.push_back(c.price_intercept);
      ps.push_back(c.price_slope);
    }
    os << "a = " << join(a) << "\nb = " << join(b) << "\nd = " << join(d) << '\n';
    os << "price_intercept = " << join(pi) << "\nprice_slope = " << join(ps) << '\n';
  }
  os << "topology = " << name(cfg.topology) << '\n';
  os << "topology_seed = " << cfg.topology_seed << '\n';
  if (cfg.topology == TopologyKind::Edges) {
    os << "edges = [";
    for (std::size_t i = 0; i < cfg.edges.size(); ++i) os << (i ? ", " : "") << cfg.edges[i].u << '-' << cfg.edges[i].v;
    os << "]\n";
  }
  os << "trigger = " << name(cfg.triggers.front()) << '\n';
  if (std::any_of(cfg.triggers.begin(), cfg.triggers.end(), [&](TriggerKind k) { return k != cfg.triggers.front(); })) {
    os << "agent_triggers = [";
    for (std::size_t i = 0; i < cfg.triggers.size(); ++i) os << (i ? ", " : "") << name(cfg.triggers[i]);
    os << "]\n";
  }
  os << "beta1 = " << join(cfg.beta1) << '\n';
  os << "beta2 = " << join(cfg.beta2) << '\n';
  os << "period = " << join(cfg.period) << '\n';
  os << "delta = " << format_double(cfg.delta) << '\n';
  os << "step = " << format_double(cfg.step) << '\n';
  os << "t_end = " << format_double(cfg.t_end) << '\n';
  os << "x0 = " << join(cfg.x0) << '\n';
  os << "output_dir = " << cfg.output_dir << '\n';
  os << "output_stride = " << cfg.output_stride << '\n';
  if (cfg.compare_periodic) os << "compare_periodic = " << format_double(*cfg.compare_periodic) << '\n';
  return os.str();
}

AggregativeProblem build_problem(const ScenarioConfig& cfg) {
  switch (cfg.scenario) {
    case ScenarioKind::Der4: return make_der_instance();
    case ScenarioKind::Dispatch: return make_dispatch_instance(cfg.agents, cfg.seed);
    case ScenarioKind::Quadratic: return make_priced_quadratic_instance(cfg.coefficients);
  }
  throw ConfigError("unknown scenario");
}

Graph build_graph(const ScenarioConfig& cfg) {
  switch (cfg.topology) {
    case TopologyKind::Ring4:
    case TopologyKind::Ring: return ring_graph(cfg.agents);
    case TopologyKind::Random: return random_connected_graph(cfg.agents, cfg.topology_seed);
    case TopologyKind::Edges: return Graph(cfg.agents, cfg.edges);
  }
  throw ConfigError("unknown topology");
}

std::vector<TriggerScheme> build_schemes(const ScenarioConfig& cfg) {
  std::vector<TriggerScheme> out;
  for (std::size_t i = 0; i < cfg.agents; ++i) {
    switch (cfg.triggers.at(i)) {
      case TriggerKind::Event: out.emplace_back(EventTrigger{cfg.beta1.at(i), cfg.beta2.at(i)}); break;
      case TriggerKind::Periodic: out.emplace_back(PeriodicTrigger{cfg.period.at(i)}); break;
      case TriggerKind::Continuous: out.emplace_back(ContinuousTrigger{}); break;
    }
  }
  return out;
}

SimConfig build_sim_config(const ScenarioConfig& cfg, const AggregativeProblem& problem,
                           const std::optional<Vector>& reference) {
  return SimConfig{problem,  build_graph(cfg),      cfg.delta,         cfg.step,  cfg.t_end,
                   to_vector(cfg.x0), build_schemes(cfg), cfg.output_stride, reference, false};
}

json oracle_report(const ScenarioConfig& cfg) {
  const AggregativeProblem p = build_problem(cfg);
  const Vector x_star = solve_kkt_quadratic(p);
  const Matrix hessian = quadratic_hessian(p);
  const RateConstants rate = rate_constants_from_hessian(hessian);
  const double lambda_min = 1.0 / std::sqrt(rate.kappa);

  json report;
  report["x_star"] = to_json(x_star);
  report["gradient_residual"] = p.global_gradient(x_star).norm();
  report["global_cost"] = p.global_cost(x_star);
  report["kappa"] = rate.kappa;
  report["lipschitz"] = rate.lipschitz;
  report["hessian_min_eigenvalue"] = lambda_min;
  report["centralized_rate_bound"] = rate.centralized_rate_bound();

  FlowOptions opts;
  opts.step = std::min(0.01, 0.025 / rate.lipschitz);
  opts.t_end = std::min(60.0 / lambda_min, 2e4);
  opts.record_stride = std::max<std::size_t>(1, static_cast<std::size_t>(opts.t_end / opts.step / 2000));
  const auto flow = centralized_flow(p, to_vector(cfg.x0), opts);
  std::vector<ErrorSample> errors;
  for (const auto& s : flow) errors.push_back({s.t, (s.x - x_star).norm()});
  report["centralized_flow"] = {{"step", opts.step},
                                {"t_final", flow.back().t},
                                {"final_error", errors.back().error}};
  try {
    const double fitted = fit_decay_rate(errors);
    report["centralized_flow"]["fitted_rate"] = fitted;
    report["centralized_flow"]["rate_at_least_bound"] = fitted >= rate.centralized_rate_bound();
  } catch (const std::invalid_argument&) {
    report["centralized_flow"]["fitted_rate"] = nullptr;
  }

  if (cfg.scenario == ScenarioKind::Der4) {
    const Vector published = Eigen::Map<const Vector>(kDerPublishedOptimum.data(), 4);
    report["published_optimum"] = to_json(published);
    report["published_optimum_gradient_norm"] = p.global_gradient(published).norm();
    report["published_optimum_relative_difference"] = (published - x_star).norm() / x_star.norm();
    report["note"] =
        "the published optimum does not satisfy the first-order conditions of the stated coefficients; "
        "x_star is the exact solution of those conditions";
  }
  return report;
}

namespace {

json run_summary(const ScenarioConfig& cfg, const AggregativeProblem& p, const SimConfig& sim, const SimResult& r,
                 const Vector& x_star) {
  json s;
  s["config"] = dump_config(cfg);
  s["lambda"] = r.spectrum.lambda_bound;
  s["validation"] = {{"passed", r.validation.passed}, {"warnings", r.validation.warnings}};
  s["warnings"] = r.warnings;
  s["oracle_solution"] = to_json(x_star);
  s["final_decisions"] = to_json(r.metrics.final_x);
  s["relative_error"] = optional_number(r.metrics.final_relative_error);
  s["final_consensus_error"] = r.metrics.final_consensus_error;
  s["equilibrium_residual"] = equilibrium_residual(p, sim.graph, r.metrics.final_x, r.metrics.final_eta, r.metrics.final_w);
  s["decision_decay_rate"] = optional_number(r.metrics.decision_decay_rate);
  s["steps"] = r.metrics.steps;
  s["broadcast_counts"] = r.metrics.broadcast_counts;
  s["total_broadcasts"] = r.metrics.total_broadcasts;
  std::vector<json> min_gaps;
  for (std::size_t i = 0; i < r.events.num_agents(); ++i) min_gaps.push_back(optional_number(r.events.min_interval(i)));
  s["min_inter_event_interval"] = min_gaps;
  s["min_inter_event_interval_overall"] = optional_number(r.metrics.min_inter_event_interval);
  if (const auto& rate = p.rate_constants()) {
    s["kappa"] = rate->kappa;
    s["lipschitz"] = rate->lipschitz;
    s["centralized_rate_bound"] = rate->centralized_rate_bound();
  }

  // Analytic inter-event lower bound for the event-triggered agents.
  std::vector<std::size_t> event_agents;
  double beta1_max = 0.0;
  double beta2_min = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < sim.schemes.size(); ++i) {
    if (const auto* ev = std::get_if<EventTrigger>(&sim.schemes[i])) {
      event_agents.push_back(i);
      beta1_max = std::max(beta1_max, ev->beta1);
      beta2_min = std::min(beta2_min, ev->beta2);
    }
  }
  if (!event_agents.empty()) {
    const NetworkEquilibrium steady = estimator_steady_state(p, sim.graph, sim.x0);
    const Vector start = initial_state(p, sim.x0);
    const StateLayout layout = StateLayout::of(p);
    const auto ne = static_cast<Eigen::Index>(layout.block() * layout.n_agents);
    const Vector eta_dev = start.segment(static_cast<Eigen::Index>(layout.eta_offset()), ne) - steady.eta;
    Matrix w_dev = (start.segment(static_cast<Eigen::Index>(layout.w_offset()), ne) - steady.w)
                       .reshaped(static_cast<Eigen::Index>(layout.block()), static_cast<Eigen::Index>(layout.n_agents));
    w_dev = w_dev.colwise() - w_dev.rowwise().mean();
    const double dev0 = std::sqrt(eta_dev.squaredNorm() + w_dev.squaredNorm());
    const ZenoConstants z = zeno_constants(sim.graph, r.spectrum.lambda_bound, beta1_max, beta2_min, dev0);
    json zeno = {{"m1", z.m1}, {"m2", z.m2}, {"norm_p", z.norm_p}, {"norm_q", z.norm_q}, {"initial_deviation", dev0}};
    std::vector<json> bounds;
    for (std::size_t i : event_agents) {
      const auto& ev = std::get<EventTrigger>(sim.schemes[i]);
      json b = {{"agent", i + 1}};
      b["lower_bound"] = std::isfinite(z.m1) ? json(zeno_lower_bound(z.m1, z.m2, ev.beta1, ev.beta2)) : json(nullptr);
      bounds.push_back(b);
    }
    zeno["per_agent"] = bounds;
    s["zeno_bound"] = zeno;
  }

  if (cfg.scenario == ScenarioKind::Der4) {
    const Vector published = Eigen::Map<const Vector>(kDerPublishedOptimum.data(), 4);
    s["published_optimum"] = to_json(published);
    s["published_optimum_relative_difference"] = (published - x_star).norm() / x_star.norm();
    s["note"] =
        "the published optimum does not satisfy the first-order conditions of the stated coefficients; "
        "relative_error is measured against the exact solution";
  }
  return s;
}

void write_file(const std::filesystem::path& path, const std::string& contents, std::vector<std::string>& files) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw OutputError("cannot open " + path.string() + " for writing");
  out << contents;
  out.close();
  if (!out) throw OutputError("failed writing " + path.string());
  files.push_back(path.string());
}

}  // namespace

RunOutcome run_scenario(const ScenarioConfig& cfg) {
  const AggregativeProblem p = build_problem(cfg);
  const Vector x_star = solve_kkt_quadratic(p);
  const SimConfig sim = build_sim_config(cfg, p, x_star);
  const SimResult result = run(sim);

  RunOutcome outcome;
  outcome.summary = run_summary(cfg, p, sim, result, x_star);

  if (cfg.compare_periodic) {
    SimConfig periodic = sim;
    periodic.schemes.assign(cfg.agents, PeriodicTrigger{*cfg.compare_periodic});
    const SimResult pr = run(periodic);
    json cmp;
    cmp["period"] = *cfg.compare_periodic;
    cmp["t_end"] = cfg.t_end;
    cmp["event_counts"] = result.metrics.broadcast_counts;
    cmp["periodic_counts"] = pr.metrics.broadcast_counts;
    cmp["event_total"] = result.metrics.total_broadcasts;
    cmp["periodic_total"] = pr.metrics.total_broadcasts;
    cmp["ratio"] = static_cast<double>(result.metrics.total_broadcasts) / static_cast<double>(pr.metrics.total_broadcasts);
    cmp["event_fewer"] = result.metrics.total_broadcasts < pr.metrics.total_broadcasts;
    cmp["periodic_relative_error"] = optional_number(pr.metrics.final_relative_error);
    outcome.comparison = cmp;
  }

  std::error_code ec;
  const std::filesystem::path dir(cfg.output_dir);
  std::filesystem::create_directories(dir, ec);
  if (ec) throw OutputError("cannot create output directory " + dir.string() + ": " + ec.message());

  std::ostringstream traj;
  write_trajectory_csv(traj, p, result.trajectory);
  write_file(dir / "trajectory.csv", traj.str(), outcome.files);
  std::ostringstream events;
  write_events_csv(events, result.events);
  write_file(dir / "events.csv", events.str(), outcome.files);
  write_file(dir / "summary.json", outcome.summary.dump(2) + "\n", outcome.files);
  if (outcome.comparison) write_file(dir / "comparison.json", outcome.comparison->dump(2) + "\n", outcome.files);
  return outcome;
}

}  // namespace aggopt::cli
