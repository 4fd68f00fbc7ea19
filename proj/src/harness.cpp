#include "mincon/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <stdexcept>
#include <thread>

namespace mincon {

namespace fs = std::filesystem;

std::uint64_t default_seed() {
  const char* env = std::getenv(kSeedEnv);
  if (env == nullptr || *env == '\0') return 1;
  try {
    std::size_t used = 0;
    const unsigned long long v = std::stoull(env, &used);
    if (used != std::string(env).size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw std::invalid_argument(std::string(kSeedEnv) + " is not an unsigned integer: '" + env + "'");
  }
}

namespace {

[[noreturn]] void bad_field(const std::string& field, const std::string& what) {
  throw std::invalid_argument("config field '" + field + "': " + what);
}

void reject_unknown(const nlohmann::json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, value] : j.items())
    if (!allowed.count(key)) bad_field(where + key, "unknown key");
}

template <typename T>
void read(const nlohmann::json& j, const char* key, const std::string& where, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    bad_field(where + key, e.what());
  }
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::string trial_dir_name(int t) { return "trial_" + std::to_string(t); }

}  // namespace

ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) bad_field("<root>", "expected an object");
  reject_unknown(j, {"graph", "max_delay", "scheduler", "noise", "init", "seed", "horizon", "trials", "out",
                     "write_traces", "k_bounded_samples", "verify"},
                 "");
  ExperimentConfig c;
  c.model = model_config_from_json(j);
  if (!j.contains("seed")) c.model.seed = default_seed();
  if (j.contains("graph")) {
    const auto& g = j.at("graph");
    if (!g.is_object()) bad_field("graph", "expected an object");
    reject_unknown(g, {"file", "nodes", "width_km", "height_km", "radius_km", "weights", "max_attempts"}, "graph.");
    if (g.contains("file")) {
      std::string file;
      read(g, "file", "graph.", file);
      c.graph_file = file;
    }
    read(g, "nodes", "graph.", c.geometric.node_count);
    read(g, "width_km", "graph.", c.geometric.area_width);
    read(g, "height_km", "graph.", c.geometric.area_height);
    read(g, "radius_km", "graph.", c.geometric.radius);
    read(g, "max_attempts", "graph.", c.geometric.max_attempts);
    if (g.contains("weights")) {
      std::string mode;
      read(g, "weights", "graph.", mode);
      try {
        c.geometric.weight_mode = weight_mode_from_string(mode);
      } catch (const std::exception& e) {
        bad_field("graph.weights", e.what());
      }
    }
  }
  read(j, "trials", "", c.trials);
  read(j, "out", "", c.out_dir);
  read(j, "write_traces", "", c.write_traces);
  read(j, "k_bounded_samples", "", c.k_bounded_samples);
  if (j.contains("verify")) {
    const auto& v = j.at("verify");
    reject_unknown(v, {"lemma1", "window_contraction", "razumikhin", "bound", "k_bounded", "expiss_envelope"},
                   "verify.");
    read(v, "lemma1", "verify.", c.verify.lemma1);
    read(v, "window_contraction", "verify.", c.verify.window_contraction);
    read(v, "razumikhin", "verify.", c.verify.razumikhin);
    read(v, "bound", "verify.", c.verify.bound);
    read(v, "k_bounded", "verify.", c.verify.k_bounded);
    read(v, "expiss_envelope", "verify.", c.verify.expiss_envelope);
  }
  c.geometric.seed = c.model.seed;
  validate(c);
  return c;
}

nlohmann::json experiment_config_to_json(const ExperimentConfig& c) {
  nlohmann::json j = model_config_to_json(c.model);
  if (c.graph_file) {
    j["graph"] = {{"file", *c.graph_file}};
  } else {
    j["graph"] = {{"nodes", c.geometric.node_count},   {"width_km", c.geometric.area_width},
                  {"height_km", c.geometric.area_height}, {"radius_km", c.geometric.radius},
                  {"weights", to_string(c.geometric.weight_mode)}, {"max_attempts", c.geometric.max_attempts}};
  }
  j["trials"] = c.trials;
  j["out"] = c.out_dir;
  j["write_traces"] = c.write_traces;
  j["k_bounded_samples"] = c.k_bounded_samples;
  j["verify"] = {{"lemma1", c.verify.lemma1},
                 {"window_contraction", c.verify.window_contraction},
                 {"razumikhin", c.verify.razumikhin},
                 {"bound", c.verify.bound},
                 {"k_bounded", c.verify.k_bounded},
                 {"expiss_envelope", c.verify.expiss_envelope}};
  return j;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  return experiment_config_from_json(read_json(path));
}

void validate(const ExperimentConfig& c) {
  if (c.trials < 1) bad_field("trials", "must be >= 1");
  if (c.out_dir.empty()) bad_field("out", "must not be empty");
  if (!c.graph_file) {
    if (c.geometric.node_count < 2) bad_field("graph.nodes", "must be >= 2");
    if (!(c.geometric.area_width > 0.0)) bad_field("graph.width_km", "must be > 0");
    if (!(c.geometric.area_height > 0.0)) bad_field("graph.height_km", "must be > 0");
    if (!(c.geometric.radius > 0.0)) bad_field("graph.radius_km", "must be > 0");
    if (c.geometric.max_attempts < 1) bad_field("graph.max_attempts", "must be >= 1");
  }
}

TrialResult run_trial(const ExperimentConfig& c, int trial) {
  TrialResult r;
  r.trial = trial;
  if (c.graph_file) {
    r.graph = std::make_shared<const WeightedGraph>(load_graph(*c.graph_file));
  } else {
    GeometricGraphSpec spec = c.geometric;
    spec.seed = c.model.seed;
    spec.substream = static_cast<std::uint64_t>(trial);
    GeometricGraph gg = generate_geometric_layout(spec);
    r.graph_attempts = gg.attempts;
    r.graph = std::make_shared<const WeightedGraph>(std::move(gg.graph));
  }
  const WeightedGraph& g = *r.graph;
  const auto sub = static_cast<std::uint64_t>(trial);
  r.constants = compute_structural_constants(g);
  const PerturbationModel pm = make_model(c.model, g, sub);
  const InitialCondition init = make_initial(c.model, g, r.constants, sub);
  r.bound = bound_params(r.constants, pm.window(), pm.max_delay(), pm.noise_amplitude());
  if (c.model.horizon <= r.bound.window + 1)
    bad_field("horizon", "must exceed M + 1 = " + std::to_string(r.bound.window + 1) + " for trial " +
                             std::to_string(trial));
  r.trace = run_perturbed(g, pm, init, c.model.horizon);
  to_error_coordinates(g, r.trace, r.constants);
  r.series = bound_series(r.bound, r.trace.errors);
  return r;
}

bool CheckSet::pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const CheckReport& r) { return r.pass; });
}

nlohmann::json CheckSet::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& c : checks) arr.push_back(c.to_json());
  return arr;
}

CheckSet run_checks(const WeightedGraph& g, const StructuralConstants& sc, const BoundParameters& bp,
                    const TrajectoryTrace& trace, const PerturbationModel& pm, const VerifyToggles& t,
                    std::size_t k_bounded_samples, std::uint64_t seed) {
  CheckSet out;
  const auto m = static_cast<std::size_t>(bp.window);
  if (t.lemma1) {
    const Lemma1Report l1 = check_lemma1(g, sc, trace, pm, 1e-12);
    out.checks.push_back(l1.step);
    out.checks.push_back(l1.zeta_branch);
  }
  if (t.window_contraction)
    out.checks.push_back(check_window_contraction(trace.errors, bp, trace.input_sup_norm, 1e-12));
  if (t.razumikhin)
    out.checks.push_back(check_razumikhin(trace.errors, trace.input_sup_norm, window_certificate(bp), m, 1e-12));
  if (t.bound) out.checks.push_back(verify_bound(trace.errors, bp).check);
  if (t.expiss_envelope)
    out.checks.push_back(
        check_expiss_envelope(trace.errors, bp.input_norm_bound, envelope(bp), {0, m, m + 1, 0}).check);
  if (t.k_bounded)
    out.checks.push_back(check_k_boundedness(g, sc, pm.max_delay(), pm.window(), k_bounded_samples, seed).check);
  return out;
}

void write_summary_csv(const TrajectoryTrace& trace, const BoundSeries& series, const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (f == nullptr) throw std::runtime_error("cannot write " + path);
  std::fputs("k,max_abs_error,bound,log10_max_error\n", f);
  for (std::size_t k = 0; k < trace.errors.length(); ++k) {
    const double e = sup_norm(trace.errors.at(k));
    const double b = k < series.values.size() ? series.values[k] : std::nan("");
    std::fprintf(f, "%zu,%.17g,%.17g,%.17g\n", k, e, b, std::log10(e));
  }
  if (std::fclose(f) != 0) throw std::runtime_error("write failed for " + path);
}

SimulateOutcome cmd_simulate(const ExperimentConfig& c) {
  validate(c);
  const fs::path root(c.out_dir);
  fs::create_directories(root);

  std::vector<nlohmann::json> meta(static_cast<std::size_t>(c.trials));
  std::vector<std::exception_ptr> failures(static_cast<std::size_t>(c.trials));
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int t = next++; t < c.trials; t = next++) {
      try {
        const TrialResult r = run_trial(c, t);
        const fs::path dir = root / trial_dir_name(t);
        fs::create_directories(dir);
        save_graph(*r.graph, (dir / "graph.json").string());
        write_summary_csv(r.trace, r.series, (dir / "summary.csv").string());
        nlohmann::json files = {{"graph", "graph.json"}, {"summary", "summary.csv"}};
        if (c.write_traces) {
          std::ofstream out(dir / "trace.csv");
          if (!out) throw std::runtime_error("cannot write " + (dir / "trace.csv").string());
          write_trace_csv(r.trace, out);
          if (!out) throw std::runtime_error("write failed for " + (dir / "trace.csv").string());
          files["trace"] = "trace.csv";
        }
        const auto m = static_cast<std::size_t>(r.bound.window);
        meta[static_cast<std::size_t>(t)] = {
            {"trial", t},
            {"dir", trial_dir_name(t)},
            {"seed", c.model.seed},
            {"substream", t},
            {"node_count", r.graph->node_count()},
            {"edge_count", r.graph->edge_count()},
            {"sources", r.graph->sources()},
            {"graph_attempts", r.graph_attempts},
            {"zeta", r.constants.zeta},
            {"effective_diameter", r.constants.effective_diameter},
            {"max_distance", r.constants.max_distance()},
            {"bound", r.bound.to_json()},
            {"initial_norm", r.series.initial_norm},
            {"first_asserted_k", m + 1},
            {"realized_input_norm", r.trace.input_sup_norm},
            {"horizon", r.trace.horizon},
            {"final_max_error", sup_norm(r.trace.errors.at(r.trace.errors.length() - 1))},
            {"final_bound", r.series.values.back()},
            {"files", files}};
      } catch (...) {
        failures[static_cast<std::size_t>(t)] = std::current_exception();
      }
    }
  };
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const int workers = std::min<int>(c.trials, static_cast<int>(hw));
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  for (const auto& f : failures)
    if (f) std::rethrow_exception(f);

  SimulateOutcome out;
  out.trials = meta;
  out.metadata_path = (root / "metadata.json").string();
  write_json(out.metadata_path, {{"config", experiment_config_to_json(c)}, {"trials", meta}});
  return out;
}

namespace {

nlohmann::json verify_trial(const fs::path& root, const ExperimentConfig& c, const nlohmann::json& m) {
  const int t = m.at("trial").get<int>();
  const fs::path dir = root / m.at("dir").get<std::string>();
  const auto& files = m.at("files");
  if (!files.contains("trace"))
    throw std::invalid_argument(dir.string() + ": no trace.csv recorded (simulated summary-only)");

  const WeightedGraph g = graph_from_json(read_json(dir / files.at("graph").get<std::string>()));
  const StructuralConstants sc = compute_structural_constants(g);
  if (sc.zeta != m.at("zeta").get<double>() || sc.effective_diameter != m.at("effective_diameter").get<int>())
    throw std::invalid_argument(dir.string() + ": graph constants disagree with metadata");
  const BoundParameters bp = bound_params_from_json(m.at("bound"));

  const fs::path trace_path = dir / files.at("trace").get<std::string>();
  std::ifstream in(trace_path);
  if (!in) throw std::runtime_error("cannot open " + trace_path.string());
  TrajectoryTrace trace;
  try {
    trace = read_trace_csv(in);
  } catch (const std::invalid_argument& e) {
    throw std::invalid_argument(trace_path.string() + ": " + e.what());
  }
  if (trace.node_count != g.node_count())
    throw std::invalid_argument(trace_path.string() + ": node count disagrees with graph");
  const PerturbationModel pm = make_model(c.model, g, m.at("substream").get<std::uint64_t>());
  trace.max_delay = pm.max_delay();
  trace.window = pm.window();
  trace.input_sup_norm = m.at("realized_input_norm").get<double>();

  const CheckSet checks = run_checks(g, sc, bp, trace, pm, c.verify, c.k_bounded_samples, c.model.seed);
  return {{"trial", t}, {"pass", checks.pass()}, {"checks", checks.to_json()}};
}

}  // namespace

int cmd_verify(const std::string& out_dir, const std::optional<std::string>& report_path,
               nlohmann::json* report) {
  const fs::path root(out_dir);
  const nlohmann::json meta = read_json(root / "metadata.json");
  ExperimentConfig c;
  try {
    c = experiment_config_from_json(meta.at("config"));
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument((root / "metadata.json").string() + ": " + e.what());
  }
  nlohmann::json trials = nlohmann::json::array();
  bool all = true;
  for (const auto& m : meta.at("trials")) {
    nlohmann::json entry;
    try {
      entry = verify_trial(root, c, m);
    } catch (const std::exception& e) {
      entry = {{"trial", m.value("trial", -1)}, {"pass", false}, {"error", e.what()}};
    }
    all = all && entry.at("pass").get<bool>();
    trials.push_back(entry);
  }
  const nlohmann::json out = {{"pass", all}, {"trials", trials}};
  write_json(report_path ? fs::path(*report_path) : root / "verify.json", out);
  if (report) *report = out;
  return all ? 0 : 1;
}

nlohmann::json cmd_analyze(const std::string& graph_path, int delta, int max_delay, double input_norm) {
  const WeightedGraph g = load_graph(graph_path);
  const StructuralConstants sc = compute_structural_constants(g);
  nlohmann::json j = {{"n", g.node_count()},
                      {"edges", g.edge_count()},
                      {"sources", g.sources()},
                      {"distances", sc.distances},
                      {"constraining_sets", sc.constraining_sets},
                      {"zeta", sc.zeta},
                      {"effective_diameter", sc.effective_diameter},
                      {"max_distance", sc.max_distance()}};
  j["bound"] = bound_params(sc, delta, max_delay, input_norm).to_json();
  return j;
}

int cmd_smallgain(const std::string& matrix_path, nlohmann::json* result) {
  const GainSystem gs = gain_system_from_json(read_json(matrix_path));
  const CertifyResult r = certify(gs);
  if (result) *result = certify_result_to_json(r);
  return std::holds_alternative<SmallGainCertificate>(r) ? 0 : 1;
}

}  // namespace mincon
