#include <filesystem>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "aggopt/csv.hpp"
#include "aggopt/oracle.hpp"
#include "scenario.hpp"

namespace {

using namespace aggopt;
using namespace aggopt::cli;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitDivergence = 2;
constexpr int kExitIo = 3;

struct CommonOptions {
  std::string config_path;
  std::string scenario;
  std::string trigger;
  std::string output;
  std::optional<double> delta;
  std::optional<double> step;
  std::optional<double> t_end;
  std::optional<double> compare_periodic;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> agents;
  std::optional<std::size_t> stride;
};

void add_common(CLI::App& app, CommonOptions& o) {
  app.add_option("--config", o.config_path, "Scenario file in key = value syntax")->check(CLI::ExistingFile);
  app.add_option("--scenario", o.scenario, "Scenario: der4, dispatch, dispatch(n[, seed]) or quadratic");
  app.add_option("--trigger", o.trigger, "Trigger for every agent: event, periodic or continuous");
  app.add_option("--delta", o.delta, "Estimator time-scale parameter");
  app.add_option("--step", o.step, "Integration step (default delta/100)");
  app.add_option("--tend", o.t_end, "Final time");
  app.add_option("--seed", o.seed, "Instance seed");
  app.add_option("--agents", o.agents, "Number of agents (dispatch)");
  app.add_option("--stride", o.stride, "Record every k-th integration step");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw OutputError("cannot read " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string number_text(double v) { return format_double(v); }

// Command-line flags override entries of the config file.
ScenarioConfig load(const CommonOptions& o) {
  RawConfig raw = o.config_path.empty() ? RawConfig{} : parse_raw(read_file(o.config_path));
  auto set = [&raw](const std::string& key, const std::string& value) { raw[key] = RawValue{value, 0}; };
  if (!o.scenario.empty()) set("scenario", o.scenario);
  if (!o.trigger.empty()) set("trigger", o.trigger);
  if (!o.output.empty()) set("output_dir", o.output);
  if (o.delta) set("delta", number_text(*o.delta));
  if (o.step) set("step", number_text(*o.step));
  if (o.t_end) set("t_end", number_text(*o.t_end));
  if (o.compare_periodic) set("compare_periodic", number_text(*o.compare_periodic));
  if (o.seed) set("seed", std::to_string(*o.seed));
  if (o.agents) set("agents", std::to_string(*o.agents));
  if (o.stride) set("output_stride", std::to_string(*o.stride));
  return resolve(raw);
}

void print_warnings(const nlohmann::json& summary) {
  for (const auto& w : summary.value("warnings", nlohmann::json::array())) {
    std::cerr << "warning: " << w.get<std::string>() << '\n';
  }
}

int cmd_run(const CommonOptions& o) {
  const ScenarioConfig cfg = load(o);
  const RunOutcome out = run_scenario(cfg);
  print_warnings(out.summary);
  const auto& s = out.summary;
  std::cout << "lambda            " << s["lambda"].get<double>() << '\n';
  if (!s["relative_error"].is_null()) std::cout << "relative error    " << s["relative_error"].get<double>() << '\n';
  std::cout << "consensus error   " << s["final_consensus_error"].get<double>() << '\n';
  std::cout << "broadcasts        " << s["total_broadcasts"].get<std::size_t>() << '\n';
  if (out.comparison) {
    const auto& c = *out.comparison;
    std::cout << "periodic          " << c["periodic_total"].get<std::size_t>() << " (ratio " << c["ratio"].get<double>()
              << ")\n";
  }
  for (const auto& f : out.files) std::cout << "wrote " << f << '\n';
  return kExitOk;
}

int cmd_oracle(const CommonOptions& o) {
  const ScenarioConfig cfg = load(o);
  std::cout << oracle_report(cfg).dump(2) << '\n';
  return kExitOk;
}

int cmd_dump(const CommonOptions& o) {
  std::cout << dump_config(load(o));
  return kExitOk;
}

int cmd_sweep(const CommonOptions& o, const std::vector<double>& deltas, const std::vector<std::uint64_t>& seeds) {
  const ScenarioConfig base = load(o);
  struct Row {
    double delta;
    std::uint64_t seed;
    SimMetrics metrics;
  };
  std::vector<std::future<Row>> jobs;
  for (double d : deltas) {
    for (std::uint64_t seed : seeds) {
      ScenarioConfig cfg = base;
      cfg.delta = d;
      cfg.step = std::min(base.step, d / 100.0);
      cfg.seed = seed;
      if (cfg.topology == TopologyKind::Random) cfg.topology_seed = seed;
      jobs.push_back(std::async(std::launch::async, [cfg]() {
        const AggregativeProblem p = build_problem(cfg);
        const Vector x_star = solve_kkt_quadratic(p);
        SimConfig sim = build_sim_config(cfg, p, x_star);
        sim.output_stride = std::max<std::size_t>(cfg.output_stride, 100);
        return Row{cfg.delta, cfg.seed, run(sim).metrics};
      }));
    }
  }

  std::ostringstream csv;
  csv << "delta,seed,relative_error,final_consensus_error,total_broadcasts,min_inter_event_interval\n";
  for (auto& job : jobs) {
    const Row r = job.get();
    csv << format_double(r.delta) << ',' << r.seed << ','
        << (r.metrics.final_relative_error ? format_double(*r.metrics.final_relative_error) : "") << ','
        << format_double(r.metrics.final_consensus_error) << ',' << r.metrics.total_broadcasts << ','
        << (r.metrics.min_inter_event_interval ? format_double(*r.metrics.min_inter_event_interval) : "") << '\n';
  }
  std::error_code ec;
  std::filesystem::create_directories(base.output_dir, ec);
  if (ec) throw OutputError("cannot create output directory " + base.output_dir + ": " + ec.message());
  const auto path = std::filesystem::path(base.output_dir) / "sweep.csv";
  std::ofstream out(path, std::ios::binary);
  if (!(out << csv.str())) throw OutputError("failed writing " + path.string());
  std::cout << csv.str() << "wrote " << path.string() << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Event-triggered distributed aggregative optimization"};
  app.require_subcommand(1);

  CommonOptions run_opts, oracle_opts, sweep_opts, dump_opts;
  auto* run_cmd = app.add_subcommand("run", "Simulate a scenario and write CSV/JSON outputs");
  add_common(*run_cmd, run_opts);
  run_cmd->add_option("--output", run_opts.output, "Output directory");
  run_cmd->add_option("--compare-periodic", run_opts.compare_periodic, "Also run a periodic baseline with this period");

  auto* oracle_cmd = app.add_subcommand("oracle", "Print the centralized solution and rate constants");
  add_common(*oracle_cmd, oracle_opts);

  std::vector<double> deltas{0.05, 0.1, 0.2};
  std::vector<std::uint64_t> seeds{1};
  auto* sweep_cmd = app.add_subcommand("sweep", "Run a delta/seed grid concurrently and write sweep.csv");
  add_common(*sweep_cmd, sweep_opts);
  sweep_cmd->add_option("--output", sweep_opts.output, "Output directory");
  sweep_cmd->add_option("--deltas", deltas, "Values of delta")->delimiter(',');
  sweep_cmd->add_option("--seeds", seeds, "Instance seeds")->delimiter(',');

  auto* dump_cmd = app.add_subcommand("dump-config", "Print the fully resolved configuration");
  add_common(*dump_cmd, dump_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*run_cmd) return cmd_run(run_opts);
    if (*oracle_cmd) return cmd_oracle(oracle_opts);
    if (*sweep_cmd) return cmd_sweep(sweep_opts, deltas, seeds);
    if (*dump_cmd) return cmd_dump(dump_opts);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const DivergenceError& e) {
    std::cerr << "diverged: " << e.what() << '\n';
    return kExitDivergence;
  } catch (const OutputError& e) {
    std::cerr << "output error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
