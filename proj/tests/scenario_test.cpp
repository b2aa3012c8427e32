#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "scenario.hpp"

namespace aggopt::cli {
namespace {

std::string message_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.what();
  }
  return {};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path scratch(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("aggopt_scenario_test_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

TEST(ParseConfig, MinimalDerPreset) {
  const ScenarioConfig cfg = parse_config("scenario = der4, trigger = event");
  EXPECT_EQ(cfg.scenario, ScenarioKind::Der4);
  EXPECT_EQ(cfg.agents, 4u);
  EXPECT_EQ(cfg.topology, TopologyKind::Ring4);
  EXPECT_EQ(cfg.triggers, std::vector<TriggerKind>(4, TriggerKind::Event));
  EXPECT_EQ(cfg.beta1, (std::vector<double>{10, 8, 8, 10}));
  EXPECT_EQ(cfg.beta2, (std::vector<double>{0.01, 0.1, 0.15, 0.05}));
  EXPECT_EQ(cfg.x0, (std::vector<double>{5, 6, 3, 8}));
  EXPECT_EQ(cfg.delta, 0.1);
  EXPECT_EQ(cfg.step, 0.1 / 100);
  EXPECT_EQ(cfg.t_end, 200.0);
  EXPECT_EQ(cfg.output_stride, 10u);
}

TEST(ParseConfig, StepDefaultsToDeltaOverHundred) {
  EXPECT_EQ(parse_config("scenario = der4\ndelta = 0.05").step, 0.05 / 100);
}

TEST(ParseConfig, Errors) {
  EXPECT_EQ(message_of(""), "scenario required");
  EXPECT_EQ(message_of("# only a comment\n"), "scenario required");
  const std::string unknown = message_of("scenario = der4\nfoo = 1\nbar = 2");
  EXPECT_NE(unknown.find("foo"), std::string::npos);
  EXPECT_NE(unknown.find("bar"), std::string::npos);
  const std::string bad = message_of("scenario = der4\n\ndelta = 0.1x");
  EXPECT_NE(bad.find("line 3"), std::string::npos) << bad;
  EXPECT_NE(bad.find("malformed number"), std::string::npos) << bad;
  EXPECT_NE(message_of("scenario = der4\nbeta2 = [0.1, oops, 0.1, 0.1]").find("line 2"), std::string::npos);
  EXPECT_NE(message_of("scenario = der4\nscenario = der4").find("duplicate"), std::string::npos);
  EXPECT_NE(message_of("scenario der4").find("key = value"), std::string::npos);
  EXPECT_FALSE(message_of("scenario = der4\nbeta2 = 0").empty());
  EXPECT_FALSE(message_of("scenario = der4\ntopology = edges\nedges = [0-1, 2-3]").empty());
  EXPECT_FALSE(message_of("scenario = der4\nbeta1 = [1, 2]").empty());
}

TEST(ParseConfig, DispatchAndTopologies) {
  const ScenarioConfig cfg = parse_config("scenario = dispatch(15, 3)");
  EXPECT_EQ(cfg.agents, 15u);
  EXPECT_EQ(cfg.seed, 3u);
  EXPECT_EQ(cfg.topology, TopologyKind::Random);
  EXPECT_EQ(cfg.topology_seed, 3u);
  EXPECT_EQ(cfg.beta1, std::vector<double>(15, 6.0));
  EXPECT_EQ(cfg.beta2, std::vector<double>(15, 0.15));
  EXPECT_EQ(cfg.x0, std::vector<double>(15, 0.0));

  const ScenarioConfig e = parse_config("scenario = der4; topology = edges; edges = [0-1, 1-2, 2-3]");
  EXPECT_EQ(build_graph(e).edges().size(), 3u);
}

TEST(ParseConfig, ExplicitQuadratic) {
  const ScenarioConfig cfg = parse_config(
      "scenario = quadratic\n"
      "a = [1, 2]   # per agent\n"
      "b = [3, 4]\n"
      "d = 0\n"
      "topology = ring\n");
  ASSERT_EQ(cfg.coefficients.size(), 2u);
  EXPECT_EQ(cfg.coefficients[1].a, 2.0);
  EXPECT_EQ(cfg.coefficients[0].price_slope, 0.2);
  EXPECT_EQ(build_problem(cfg).num_agents(), 2u);
}

TEST(ParseConfig, PerAgentTriggers) {
  const ScenarioConfig cfg =
      parse_config("scenario = der4\nagent_triggers = [event, periodic, continuous, event]\nperiod = 0.05");
  const auto schemes = build_schemes(cfg);
  EXPECT_TRUE(std::holds_alternative<EventTrigger>(schemes[0]));
  EXPECT_EQ(std::get<PeriodicTrigger>(schemes[1]).period, 0.05);
  EXPECT_TRUE(std::holds_alternative<ContinuousTrigger>(schemes[2]));
}

TEST(ParseConfig, ValidationWarningSurfacesInRun) {
  ScenarioConfig cfg = parse_config("scenario = der4\nbeta2 = 5\nt_end = 0.5");
  cfg.output_dir = scratch("warn").string();
  const RunOutcome out = run_scenario(cfg);
  EXPECT_FALSE(out.summary["validation"]["passed"].get<bool>());
  EXPECT_EQ(out.summary["validation"]["warnings"].size(), 4u);
}

// Property: dump_config output re-parses to an identical config.
TEST(DumpConfig, RoundTrip) {
  const std::vector<std::string> inputs{
      "scenario = der4",
      "scenario = dispatch(15, 2)\ndelta = 0.05\ncompare_periodic = 0.02",
      "scenario = dispatch\nagents = 6\nseed = 9\ntopology = ring\ntrigger = periodic\nperiod = 0.1",
      "scenario = quadratic\na = [0.5, 1.5, 0.25]\nb = [1, 2, 3]\nd = [0, 0, 1]\nprice_slope = 0.35\n"
      "topology = edges\nedges = [0-1, 1-2]\nagent_triggers = [continuous, event, periodic]\n"
      "beta1 = [1e-3, 2.5, 7]\nx0 = [0.1, 0.2, 0.3]\nstep = 1.25e-4\noutput_dir = some/dir\noutput_stride = 3",
  };
  for (const auto& text : inputs) {
    const ScenarioConfig cfg = parse_config(text);
    const std::string dumped = dump_config(cfg);
    EXPECT_EQ(parse_config(dumped), cfg) << dumped;
    EXPECT_EQ(dump_config(parse_config(dumped)), dumped);
  }
}

TEST(RunScenario, WritesOutputsAndEmbedsConfig) {
  ScenarioConfig cfg = parse_config("scenario = der4\nt_end = 2\ncompare_periodic = 0.02");
  const auto dir = scratch("run");
  cfg.output_dir = dir.string();
  const RunOutcome out = run_scenario(cfg);
  EXPECT_EQ(out.files.size(), 4u);
  for (const char* f : {"trajectory.csv", "events.csv", "summary.json", "comparison.json"}) {
    EXPECT_TRUE(std::filesystem::exists(dir / f)) << f;
  }
  EXPECT_EQ(parse_config(out.summary["config"].get<std::string>()), cfg);
  EXPECT_TRUE(out.summary.contains("published_optimum"));
  EXPECT_TRUE(out.summary.contains("zeno_bound"));
  EXPECT_TRUE(out.summary.contains("centralized_rate_bound"));
  EXPECT_EQ(slurp(dir / "events.csv").substr(0, 14), "agent_id,time\n");
  const std::string header = slurp(dir / "trajectory.csv").substr(0, 120);
  EXPECT_EQ(header.rfind("t,x_1,x_2,x_3,x_4,eta1_1,", 0), 0u) << header;
  EXPECT_EQ((*out.comparison)["periodic_total"].get<std::size_t>(), 4u * 100u);
}

TEST(RunScenario, UnwritableOutputIsOutputError) {
  ScenarioConfig cfg = parse_config("scenario = der4\nt_end = 0.1");
  const auto blocker = scratch("blocker");
  std::ofstream(blocker.string()) << "x";
  cfg.output_dir = (blocker / "sub").string();
  EXPECT_THROW(run_scenario(cfg), OutputError);
  std::filesystem::remove(blocker);
}

TEST(OracleReport, DerContents) {
  const auto report = oracle_report(parse_config("scenario = der4"));
  EXPECT_NEAR(report["x_star"][0].get<double>(), 59.7415, 1e-4);
  EXPECT_LE(report["gradient_residual"].get<double>(), 1e-8);
  EXPECT_TRUE(report["centralized_flow"]["rate_at_least_bound"].get<bool>());
  EXPECT_GT(report["published_optimum_relative_difference"].get<double>(), 0.5);
}

}  // namespace
}  // namespace aggopt::cli
