#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "mincon/harness.hpp"

namespace {

struct SimulateFlags {
  std::string config;
  std::optional<int> nodes;
  std::optional<double> width, height, radius;
  std::optional<std::string> weights, graph;
  std::optional<int> max_delay, gap_min, gap_max, trials;
  std::optional<double> noise;
  std::optional<long long> rounds;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  bool summary_only = false;
};

mincon::ExperimentConfig resolve(const SimulateFlags& f) {
  mincon::ExperimentConfig c;
  if (!f.config.empty()) {
    c = mincon::load_experiment_config(f.config);
  } else {
    c.model.seed = mincon::default_seed();
  }
  if (f.graph) c.graph_file = *f.graph;
  if (f.nodes) c.geometric.node_count = *f.nodes;
  if (f.width) c.geometric.area_width = *f.width;
  if (f.height) c.geometric.area_height = *f.height;
  if (f.radius) c.geometric.radius = *f.radius;
  if (f.weights) c.geometric.weight_mode = mincon::weight_mode_from_string(*f.weights);
  if (f.max_delay) c.model.max_delay = *f.max_delay;
  if (f.gap_min || f.gap_max) c.model.scheduler = mincon::ModelConfig::Scheduler::kGapUniform;
  if (f.gap_min) c.model.gap_min = *f.gap_min;
  if (f.gap_max) c.model.gap_max = *f.gap_max;
  if (f.noise) {
    c.model.noise = *f.noise > 0.0 ? mincon::ModelConfig::Noise::kUniform : mincon::ModelConfig::Noise::kNone;
    c.model.noise_amplitude = *f.noise;
  }
  if (f.rounds) c.model.horizon = *f.rounds;
  if (f.trials) c.trials = *f.trials;
  if (f.seed) c.model.seed = *f.seed;
  if (f.out) c.out_dir = *f.out;
  if (f.summary_only) c.write_traces = false;
  c.geometric.seed = c.model.seed;
  // Round-trip through the JSON parser for the field checks.
  return mincon::experiment_config_from_json(mincon::experiment_config_to_json(c));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Biased min-consensus simulator and ISS bound checker"};
  app.require_subcommand(1);

  SimulateFlags sf;
  auto* sim = app.add_subcommand("simulate", "Run seeded trials and write traces, summaries and metadata");
  sim->add_option("--config", sf.config, "Experiment JSON");
  sim->add_option("--graph", sf.graph, "Graph JSON instead of a geometric graph");
  sim->add_option("--nodes", sf.nodes);
  sim->add_option("--width-km", sf.width);
  sim->add_option("--height-km", sf.height);
  sim->add_option("--radius-km", sf.radius);
  sim->add_option("--weights", sf.weights, "hop_count or euclidean");
  sim->add_option("--max-delay", sf.max_delay);
  sim->add_option("--sched-gap-min", sf.gap_min);
  sim->add_option("--sched-gap-max", sf.gap_max);
  sim->add_option("--noise-amplitude", sf.noise);
  sim->add_option("--rounds", sf.rounds);
  sim->add_option("--trials", sf.trials);
  sim->add_option("--seed", sf.seed, std::string("Default from ") + mincon::kSeedEnv + " or 1");
  sim->add_option("--out", sf.out);
  sim->add_flag("--summary-only", sf.summary_only, "Skip per-node trace CSVs");

  std::string verify_dir = "out";
  std::optional<std::string> report_path;
  auto* ver = app.add_subcommand("verify", "Re-check a simulate output directory");
  ver->add_option("--out,dir", verify_dir, "Directory written by simulate");
  ver->add_option("--report", report_path, "Report path (default <dir>/verify.json)");

  std::string graph_path;
  int delta = 0, tau = 0;
  double amplitude = 0.0;
  auto* ana = app.add_subcommand("analyze", "Structural constants and bound parameters of a graph");
  ana->add_option("graph", graph_path)->required();
  ana->add_option("--delta", delta);
  ana->add_option("--max-delay", tau);
  ana->add_option("--noise-amplitude", amplitude);

  std::string matrix_path;
  auto* sg = app.add_subcommand("smallgain", "Certify a linear small-gain condition");
  sg->add_option("matrix", matrix_path)->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sim) {
      const auto c = resolve(sf);
      const auto outcome = mincon::cmd_simulate(c);
      for (const auto& t : outcome.trials) {
        std::printf("trial %d: zeta=%.6g D=%d M=%d final_error=%.6g final_bound=%.6g\n", t["trial"].get<int>(),
                    t["zeta"].get<double>(), t["effective_diameter"].get<int>(), t["bound"]["window"].get<int>(),
                    t["final_max_error"].get<double>(), t["final_bound"].get<double>());
      }
      std::printf("metadata: %s\n", outcome.metadata_path.c_str());
      return 0;
    }
    if (*ver) {
      nlohmann::json report;
      const int rc = mincon::cmd_verify(verify_dir, report_path, &report);
      for (const auto& t : report["trials"]) {
        std::printf("trial %d: %s", t["trial"].get<int>(), t["pass"].get<bool>() ? "pass" : "FAIL");
        if (t.contains("error")) std::printf(" (%s)", t["error"].get<std::string>().c_str());
        std::printf("\n");
        if (t.contains("checks"))
          for (const auto& ch : t["checks"])
            if (!ch["pass"].get<bool>()) std::printf("  %s failed at k=%s\n", ch["check"].get<std::string>().c_str(),
                                                     ch["first_violation_k"].dump().c_str());
      }
      return rc;
    }
    if (*ana) {
      std::cout << mincon::cmd_analyze(graph_path, delta, tau, amplitude).dump(2) << '\n';
      return 0;
    }
    if (*sg) {
      nlohmann::json result;
      const int rc = mincon::cmd_smallgain(matrix_path, &result);
      std::cout << result.dump(2) << '\n';
      return rc;
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
