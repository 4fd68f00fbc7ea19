#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mincon/bounds.hpp"
#include "mincon/graph.hpp"
#include "mincon/protocol.hpp"
#include "mincon/smallgain.hpp"

namespace mincon {

// Environment variable consulted for the seed when neither the config nor a
// flag sets one.
inline constexpr const char* kSeedEnv = "MINCON_SEED";

struct VerifyToggles {
  bool lemma1 = true;
  bool window_contraction = true;
  bool razumikhin = true;
  bool bound = true;
  bool k_bounded = true;
  bool expiss_envelope = true;
};

struct ExperimentConfig {
  std::optional<std::string> graph_file;  // otherwise a geometric graph per trial
  GeometricGraphSpec geometric;
  ModelConfig model;
  int trials = 1;
  std::string out_dir = "out";
  bool write_traces = true;
  std::size_t k_bounded_samples = 2000;
  VerifyToggles verify;
};

// Top-level keys: graph {file | nodes, width_km, height_km, radius_km,
// weights, max_attempts}, the model keys, trials, out, write_traces,
// k_bounded_samples, verify {lemma1, window_contraction, razumikhin, bound,
// k_bounded, expiss_envelope}. Unknown keys are rejected.
ExperimentConfig experiment_config_from_json(const nlohmann::json& j);
nlohmann::json experiment_config_to_json(const ExperimentConfig& c);
ExperimentConfig load_experiment_config(const std::string& path);
// Throws std::invalid_argument with the offending field.
void validate(const ExperimentConfig& c);

std::uint64_t default_seed();

struct TrialResult {
  int trial = 0;
  std::shared_ptr<const WeightedGraph> graph;
  int graph_attempts = 1;
  StructuralConstants constants;
  BoundParameters bound;
  TrajectoryTrace trace;
  BoundSeries series;
};

// Builds the graph and model for one trial and runs it in error coordinates.
TrialResult run_trial(const ExperimentConfig& c, int trial);

struct CheckSet {
  std::vector<CheckReport> checks;
  bool pass() const;
  nlohmann::json to_json() const;
};

// All enabled checks on one trial. `pm` is needed for the Lemma 1 branch that
// looks up reads of true constraining nodes.
CheckSet run_checks(const WeightedGraph& g, const StructuralConstants& sc, const BoundParameters& bp,
                    const TrajectoryTrace& trace, const PerturbationModel& pm, const VerifyToggles& t,
                    std::size_t k_bounded_samples, std::uint64_t seed);

// k,max_abs_error,bound,log10_max_error
void write_summary_csv(const TrajectoryTrace& trace, const BoundSeries& series, const std::string& path);

struct SimulateOutcome {
  std::vector<nlohmann::json> trials;  // metadata entries
  std::string metadata_path;
};

// Writes <out>/trial_<t>/{graph.json, summary.csv, trace.csv} and
// <out>/metadata.json. Trials run on a worker pool.
SimulateOutcome cmd_simulate(const ExperimentConfig& c);

// Re-checks the files written by cmd_simulate from their error columns and
// writes <out>/verify.json (or report_path). Returns 0 iff every enabled
// check passes on every trial.
int cmd_verify(const std::string& out_dir, const std::optional<std::string>& report_path,
               nlohmann::json* report = nullptr);

nlohmann::json cmd_analyze(const std::string& graph_path, int delta, int max_delay, double input_norm);

// Returns 0 for a certificate and 1 for an infeasible system.
int cmd_smallgain(const std::string& matrix_path, nlohmann::json* result = nullptr);

}  // namespace mincon
