#include "mincon/protocol.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace mincon {

ConstantDelay::ConstantDelay(int delay) : delay_(delay) {
  if (delay < 0) throw std::invalid_argument("delay must be nonnegative");
}

UniformDelay::UniformDelay(std::uint64_t seed, std::uint64_t substream, int max_delay)
    : rng_(seed, Stream::kDelay, substream), max_(max_delay) {
  if (max_delay < 0) throw std::invalid_argument("max_delay must be nonnegative");
}

int UniformDelay::delay(NodeId a, NodeId b, Round k) const {
  if (max_ == 0) return 0;
  return static_cast<int>(rng_.uniform_int(0, max_, static_cast<std::uint64_t>(a),
                                           static_cast<std::uint64_t>(b),
                                           static_cast<std::uint64_t>(k)));
}

UpdateTable SynchronousSchedule::draw(int node_count, Round horizon) const {
  UpdateTable t(node_count, horizon);
  for (Round k = 1; k <= horizon; ++k)
    for (NodeId i = 0; i < node_count; ++i) t.set(i, k);
  return t;
}

GapUniformSchedule::GapUniformSchedule(std::uint64_t seed, std::uint64_t substream, int min_gap,
                                       int max_gap)
    : rng_(seed, Stream::kSchedule, substream), min_gap_(min_gap), max_gap_(max_gap) {
  if (min_gap < 1 || max_gap < min_gap) throw std::invalid_argument("gap range must satisfy 1 <= min <= max");
}

UpdateTable GapUniformSchedule::draw(int node_count, Round horizon) const {
  UpdateTable t(node_count, horizon);
  for (NodeId i = 0; i < node_count; ++i) {
    Round at = 0;
    for (std::uint64_t m = 0;; ++m) {
      at += rng_.uniform_int(min_gap_, max_gap_, static_cast<std::uint64_t>(i), m);
      if (at > horizon) break;
      t.set(i, at);
    }
  }
  return t;
}

UpdateTable FunctionSchedule::draw(int node_count, Round horizon) const {
  UpdateTable t(node_count, horizon);
  for (Round k = 1; k <= horizon; ++k)
    for (NodeId i = 0; i < node_count; ++i)
      if (fn_(i, k)) t.set(i, k);
  return t;
}

UniformNoise::UniformNoise(std::uint64_t seed, std::uint64_t substream, double amplitude,
                           double w_max)
    : rng_(seed, Stream::kNoise, substream), amplitude_(amplitude), w_max_(w_max) {
  if (!(amplitude >= 0.0) || !std::isfinite(amplitude))
    throw std::invalid_argument("noise amplitude must be finite and nonnegative");
  if (!(w_max > 0.0)) throw std::invalid_argument("w_max must be positive");
}

double UniformNoise::weight(NodeId i, NodeId j, Round k, double nominal) const {
  if (amplitude_ == 0.0) return nominal;
  const double lo = std::max(nominal - amplitude_, 0.0);
  const double hi = std::min(nominal + amplitude_, w_max_);
  const double u = rng_.uniform_open0(static_cast<std::uint64_t>(i), static_cast<std::uint64_t>(j),
                                      static_cast<std::uint64_t>(k));
  return lo + (hi - lo) * u;
}

PerturbationModel PerturbationModel::unperturbed() {
  return {std::make_shared<ConstantDelay>(0), std::make_shared<SynchronousSchedule>(),
          std::make_shared<ExactWeights>()};
}

void validate(const InitialCondition& init, const WeightedGraph& g) {
  if (init.values.size() != static_cast<std::size_t>(g.node_count()))
    throw std::invalid_argument("initial condition has wrong length");
  for (NodeId i = 0; i < g.node_count(); ++i) {
    const double v = init.values[i];
    if (!std::isfinite(v) || v < 0.0)
      throw std::invalid_argument("initial estimate of node " + std::to_string(i) + " must be finite and >= 0");
    if (g.is_source(i) && v != 0.0)
      throw std::invalid_argument("initial estimate of source " + std::to_string(i) + " must be 0");
  }
}

InitialCondition uniform_half_dmax_initial(const WeightedGraph& g, const StructuralConstants& sc,
                                           std::uint64_t seed, std::uint64_t substream) {
  const CounterRng rng(seed, Stream::kInit, substream);
  const double top = sc.max_distance() / 2.0;
  InitialCondition init{std::vector<double>(static_cast<std::size_t>(g.node_count()), 0.0)};
  for (NodeId i = 0; i < g.node_count(); ++i) {
    if (!g.is_source(i)) init.values[i] = top * rng.uniform01(static_cast<std::uint64_t>(i));
  }
  return init;
}

namespace {

[[noreturn]] void config_error(const std::string& field, const std::string& what) {
  throw std::invalid_argument("config field '" + field + "': " + what);
}

template <typename T>
T field(const nlohmann::json& j, const char* key, const std::string& path, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    config_error(path + key, e.what());
  }
}

}  // namespace

ModelConfig model_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) config_error("<root>", "expected an object");
  ModelConfig c;
  c.max_delay = field<int>(j, "max_delay", "", c.max_delay);
  if (c.max_delay < 0) config_error("max_delay", "must be >= 0");
  if (j.contains("scheduler")) {
    const auto& s = j.at("scheduler");
    const auto kind = field<std::string>(s, "kind", "scheduler.", "gap_uniform");
    if (kind == "gap_uniform") {
      c.scheduler = ModelConfig::Scheduler::kGapUniform;
      c.gap_min = field<int>(s, "min", "scheduler.", c.gap_min);
      c.gap_max = field<int>(s, "max", "scheduler.", c.gap_max);
      if (c.gap_min < 1) config_error("scheduler.min", "must be >= 1");
      if (c.gap_max < c.gap_min) config_error("scheduler.max", "must be >= scheduler.min");
    } else if (kind == "synchronous") {
      c.scheduler = ModelConfig::Scheduler::kSynchronous;
    } else {
      config_error("scheduler.kind", "unknown scheduler '" + kind + "'");
    }
  }
  if (j.contains("noise")) {
    const auto& s = j.at("noise");
    const auto kind = field<std::string>(s, "kind", "noise.", "uniform");
    if (kind == "uniform") {
      c.noise = ModelConfig::Noise::kUniform;
      c.noise_amplitude = field<double>(s, "amplitude", "noise.", c.noise_amplitude);
      if (!(c.noise_amplitude >= 0.0)) config_error("noise.amplitude", "must be >= 0");
    } else if (kind == "none") {
      c.noise = ModelConfig::Noise::kNone;
      c.noise_amplitude = 0.0;
    } else {
      config_error("noise.kind", "unknown noise '" + kind + "'");
    }
    if (s.contains("w_max")) c.w_max = field<double>(s, "w_max", "noise.", 0.0);
  }
  if (j.contains("init")) {
    const auto& s = j.at("init");
    const auto kind = field<std::string>(s, "kind", "init.", "uniform_halfdmax");
    if (kind == "uniform_halfdmax") {
      c.init = ModelConfig::Init::kUniformHalfDmax;
    } else if (kind == "explicit") {
      c.init = ModelConfig::Init::kExplicit;
      if (!s.contains("values")) config_error("init.values", "required for explicit init");
      c.init_values = field<std::vector<double>>(s, "values", "init.", {});
    } else {
      config_error("init.kind", "unknown init '" + kind + "'");
    }
  }
  c.seed = field<std::uint64_t>(j, "seed", "", c.seed);
  c.horizon = field<Round>(j, "horizon", "", c.horizon);
  if (c.horizon < 1) config_error("horizon", "must be >= 1");
  return c;
}

nlohmann::json model_config_to_json(const ModelConfig& c) {
  nlohmann::json j;
  j["max_delay"] = c.max_delay;
  if (c.scheduler == ModelConfig::Scheduler::kGapUniform)
    j["scheduler"] = {{"kind", "gap_uniform"}, {"min", c.gap_min}, {"max", c.gap_max}};
  else
    j["scheduler"] = {{"kind", "synchronous"}};
  if (c.noise == ModelConfig::Noise::kUniform)
    j["noise"] = {{"kind", "uniform"}, {"amplitude", c.noise_amplitude}};
  else
    j["noise"] = {{"kind", "none"}};
  if (c.w_max) j["noise"]["w_max"] = *c.w_max;
  if (c.init == ModelConfig::Init::kExplicit)
    j["init"] = {{"kind", "explicit"}, {"values", c.init_values}};
  else
    j["init"] = {{"kind", "uniform_halfdmax"}};
  j["seed"] = c.seed;
  j["horizon"] = c.horizon;
  return j;
}

PerturbationModel make_model(const ModelConfig& c, const WeightedGraph& g, std::uint64_t substream) {
  PerturbationModel pm;
  pm.delays = std::make_shared<UniformDelay>(c.seed, substream, c.max_delay);
  if (c.scheduler == ModelConfig::Scheduler::kGapUniform)
    pm.schedule = std::make_shared<GapUniformSchedule>(c.seed, substream, c.gap_min, c.gap_max);
  else
    pm.schedule = std::make_shared<SynchronousSchedule>();
  const double amplitude = c.noise == ModelConfig::Noise::kUniform ? c.noise_amplitude : 0.0;
  pm.w_max = c.w_max.value_or(g.max_weight() + amplitude);
  if (amplitude > 0.0)
    pm.noise = std::make_shared<UniformNoise>(c.seed, substream, amplitude, pm.w_max);
  else
    pm.noise = std::make_shared<ExactWeights>();
  return pm;
}

InitialCondition make_initial(const ModelConfig& c, const WeightedGraph& g,
                              const StructuralConstants& sc, std::uint64_t substream) {
  InitialCondition init;
  if (c.init == ModelConfig::Init::kExplicit)
    init.values = c.init_values;
  else
    init = uniform_half_dmax_initial(g, sc, c.seed, substream);
  validate(init, g);
  return init;
}

std::optional<Round> TrajectoryTrace::read_time(Round k, NodeId i) const {
  if (k < 1) return std::nullopt;
  const auto delay = effective_delay[at(k, i)];
  if (delay < 0) return std::nullopt;
  return std::max<Round>(k - 1 - delay, 0);
}

std::vector<double> step_nominal(const WeightedGraph& g, std::span<const double> estimates) {
  std::vector<double> next(static_cast<std::size_t>(g.node_count()), 0.0);
  for (NodeId i = 0; i < g.node_count(); ++i) {
    if (g.is_source(i)) continue;
    double best = std::numeric_limits<double>::infinity();
    for (const Neighbor& nb : g.neighbors(i)) best = std::min(best, estimates[nb.node] + nb.weight);
    next[i] = best;
  }
  return next;
}

TrajectoryTrace run_perturbed(const WeightedGraph& g, const PerturbationModel& pm,
                              const InitialCondition& init, Round horizon) {
  if (!pm.delays || !pm.schedule || !pm.noise) throw std::invalid_argument("perturbation model is incomplete");
  validate(init, g);
  const int tau_bar = pm.max_delay();
  const int delta = pm.window();
  if (tau_bar < 0 || delta < 0) throw std::invalid_argument("max delay and window must be nonnegative");
  if (horizon < std::max<Round>(1, delta + tau_bar))
    throw std::invalid_argument("horizon must be >= max(1, delta + max_delay)");

  const int n = g.node_count();
  const auto rows = static_cast<std::size_t>(horizon) + 1;
  const auto cells = rows * static_cast<std::size_t>(n);

  TrajectoryTrace tr;
  tr.node_count = n;
  tr.horizon = horizon;
  tr.max_delay = tau_bar;
  tr.window = delta;
  tr.estimates = StateSeries(static_cast<std::size_t>(n), rows);
  std::copy(init.values.begin(), init.values.end(), tr.estimates.at(0).begin());
  tr.updated.assign(cells, 0);
  tr.constraining.assign(cells, -1);
  tr.effective_delay.assign(cells, -1);
  tr.update_age.assign(cells, -1);
  tr.used_input.assign(cells, 0.0);

  const UpdateTable table = pm.schedule->draw(n, horizon);

  auto checked_weight = [&](NodeId i, NodeId j, Round t, double nominal) {
    const double w = pm.noise->weight(i, j, t, nominal);
    if (!(w > 0.0) || !(w <= pm.w_max))
      throw std::invalid_argument("perturbed weight w_" + std::to_string(i) + "," + std::to_string(j) +
                                  "(" + std::to_string(t) + ") = " + std::to_string(w) +
                                  " is outside (0, w_max]");
    return w;
  };

  struct LastUpdate {
    Round time = 0;  // 0: not updated yet
    NodeId minimizer = -1;
    int delay = -1;
    double input = 0.0;
  };
  std::vector<LastUpdate> last(static_cast<std::size_t>(n));

  for (Round r = 1; r <= horizon; ++r) {
    const Round k = r - 1;
    for (NodeId i = 0; i < n; ++i) {
      const std::size_t cell = tr.at(r, i);
      const bool updates = table.updates(i, r);
      tr.updated[cell] = updates ? 1 : 0;
      if (g.is_source(i)) {
        tr.estimates(static_cast<std::size_t>(r), static_cast<std::size_t>(i)) = 0.0;
        continue;
      }
      LastUpdate& lu = last[i];
      if (updates) {
        double best = std::numeric_limits<double>::infinity();
        for (const Neighbor& nb : g.neighbors(i)) {
          const int tau = pm.delays->delay(std::min(i, nb.node), std::max(i, nb.node), k);
          if (tau < 0 || tau > tau_bar)
            throw std::invalid_argument("delay " + std::to_string(tau) + " outside [0, max_delay]");
          const Round t = std::max<Round>(k - tau, 0);
          const double w = checked_weight(i, nb.node, t, nb.weight);
          const double value = tr.estimates(static_cast<std::size_t>(t), static_cast<std::size_t>(nb.node)) + w;
          if (value < best) {
            best = value;
            lu.minimizer = nb.node;
            lu.delay = tau;
            lu.input = w - nb.weight;
          }
        }
        lu.time = r;
        tr.estimates(static_cast<std::size_t>(r), static_cast<std::size_t>(i)) = best;
      } else {
        if (r - lu.time >= static_cast<Round>(delta) + 1)
          throw std::invalid_argument("schedule breaks its window bound: node " + std::to_string(i) +
                                      " idle through round " + std::to_string(r));
        tr.estimates(static_cast<std::size_t>(r), static_cast<std::size_t>(i)) =
            tr.estimates(static_cast<std::size_t>(k), static_cast<std::size_t>(i));
      }
      if (lu.time > 0) {
        const auto age = static_cast<std::int32_t>(r - lu.time);
        tr.constraining[cell] = lu.minimizer;
        tr.effective_delay[cell] = lu.delay + age;
        tr.update_age[cell] = age;
        tr.used_input[cell] = lu.input;
      }
    }
  }

  tr.input_norm_by_round.assign(rows, 0.0);
  if (pm.noise_amplitude() > 0.0 || dynamic_cast<const ExactWeights*>(pm.noise.get()) == nullptr) {
    for (Round k = 0; k <= horizon; ++k) {
      double m = 0.0;
      for (NodeId i = 0; i < n; ++i)
        for (const Neighbor& nb : g.neighbors(i))
          m = std::max(m, std::abs(checked_weight(i, nb.node, k, nb.weight) - nb.weight));
      tr.input_norm_by_round[static_cast<std::size_t>(k)] = m;
    }
  }
  return tr;
}

void to_error_coordinates(const WeightedGraph& g, TrajectoryTrace& trace,
                          const StructuralConstants& sc) {
  const int n = trace.node_count;
  if (n != g.node_count() || sc.distances.size() != static_cast<std::size_t>(n))
    throw std::invalid_argument("trace, graph and structural constants disagree on node count");
  const auto rows = static_cast<std::size_t>(trace.horizon) + 1;
  trace.errors = StateSeries(static_cast<std::size_t>(n), rows);
  for (std::size_t k = 0; k < rows; ++k)
    for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i)
      trace.errors(k, i) = trace.estimates(k, i) - sc.distances[i];

  if (!trace.input_norm_by_round.empty()) {
    trace.input_sup_norm =
        *std::max_element(trace.input_norm_by_round.begin(), trace.input_norm_by_round.end());
  }
  for (double u : trace.used_input) trace.input_sup_norm = std::max(trace.input_sup_norm, std::abs(u));

  double worst = 0.0;
  for (Round k = 1; k <= trace.horizon; ++k) {
    for (NodeId i = 0; i < n; ++i) {
      const auto ku = static_cast<std::size_t>(k);
      const auto iu = static_cast<std::size_t>(i);
      if (g.is_source(i)) {
        if (trace.errors(ku, iu) != 0.0) throw std::logic_error("source error is nonzero");
        continue;
      }
      const NodeId j = trace.constraining[trace.at(k, i)];
      if (j < 0) {
        worst = std::max(worst, std::abs(trace.errors(ku, iu) - trace.errors(0, iu)));
        continue;
      }
      const auto t = static_cast<std::size_t>(*trace.read_time(k, i));
      const double via = trace.errors(t, static_cast<std::size_t>(j)) + trace.used_input[trace.at(k, i)] +
                         sc.distances[j] + g.weight(i, j) - sc.distances[iu];
      const double scale = std::max({1.0, std::abs(trace.estimates(ku, iu)), sc.distances[iu]});
      worst = std::max(worst, std::abs(via - trace.errors(ku, iu)) / scale);
    }
  }
  trace.max_recursion_residual = worst;
  if (worst > 1e-9)
    throw std::logic_error("recorded minimizers do not reproduce the error recursion (residual " +
                           std::to_string(worst) + ")");
}

std::vector<double> composite_map(const WeightedGraph& g, const StructuralConstants& sc,
                                  const StateSeries& window, std::span<const double> inputs,
                                  std::span<const int> delays,
                                  std::span<const std::uint8_t> never_updated) {
  const auto n = static_cast<std::size_t>(g.node_count());
  if (window.dim() != n || window.length() == 0) throw std::invalid_argument("window has wrong shape");
  if (inputs.size() != g.arc_count() || delays.size() != g.arc_count())
    throw std::invalid_argument("inputs and delays must have one entry per directed arc");
  const std::size_t now = window.length() - 1;
  std::vector<double> out(n, 0.0);
  for (NodeId i = 0; i < g.node_count(); ++i) {
    if (g.is_source(i)) continue;
    if (!never_updated.empty() && never_updated[i]) {
      out[i] = window(0, static_cast<std::size_t>(i));
      continue;
    }
    double best = std::numeric_limits<double>::infinity();
    std::size_t arc = g.first_arc(i);
    for (const Neighbor& nb : g.neighbors(i)) {
      const int delay = delays[arc];
      if (delay < 0 || static_cast<std::size_t>(delay) > now)
        throw std::invalid_argument("effective delay outside the history window");
      const double v = window(now - static_cast<std::size_t>(delay), static_cast<std::size_t>(nb.node)) +
                       inputs[arc] - sc.distances[i] + sc.distances[nb.node] + nb.weight;
      best = std::min(best, v);
      ++arc;
    }
    out[i] = best;
  }
  return out;
}

KBoundednessReport check_k_boundedness(const WeightedGraph& g, const StructuralConstants& sc,
                                       int max_delay, int window, std::size_t samples,
                                       std::uint64_t seed, double tolerance) {
  if (max_delay < 0 || window < 0) throw std::invalid_argument("max_delay and window must be >= 0");
  const auto n = static_cast<std::size_t>(g.node_count());
  const auto depth = static_cast<std::size_t>(max_delay + window) + 1;
  SequentialRng rng(seed, Stream::kFuzz);

  KBoundednessReport rep;
  rep.check.check = "k_boundedness";
  rep.check.worst_slack = std::numeric_limits<double>::infinity();
  rep.check.params = {{"samples", samples}, {"max_delay", max_delay}, {"window", window},
                      {"seed", seed}, {"tolerance", tolerance}};

  StateSeries xi(n, depth);
  std::vector<double> mu(g.arc_count());
  std::vector<int> delays(g.arc_count());
  std::vector<std::uint8_t> never(n);
  for (std::size_t s = 0; s < samples; ++s) {
    // Sample 0 is the origin; the rest mix scales and the physical domain
    // x_j >= -d_j with unconstrained draws.
    const bool origin = s == 0;
    const double scale = origin ? 0.0 : std::pow(10.0, rng.uniform(-3.0, 3.0));
    const double input_scale = origin ? 0.0 : scale * rng.uniform01();
    const bool physical = rng.uniform01() < 0.5;
    const bool allow_stale = rng.uniform01() < 0.2;
    for (std::size_t k = 0; k < depth; ++k) {
      for (std::size_t i = 0; i < n; ++i) {
        const double lo = physical ? -std::min(scale, sc.distances[i]) : -scale;
        xi(k, i) = g.is_source(static_cast<NodeId>(i)) && physical ? 0.0 : rng.uniform(lo, scale);
      }
    }
    for (std::size_t a = 0; a < mu.size(); ++a) {
      mu[a] = rng.uniform(-input_scale, input_scale);
      delays[a] = static_cast<int>(rng.uniform_int(0, static_cast<std::int64_t>(depth) - 1));
    }
    for (std::size_t i = 0; i < n; ++i) never[i] = allow_stale && rng.uniform01() < 0.1 ? 1 : 0;

    const auto out = composite_map(g, sc, xi, mu, delays, never);
    double xi_norm = 0.0;
    for (std::size_t k = 0; k < depth; ++k) xi_norm = std::max(xi_norm, sup_norm(xi.at(k)));
    const double mu_norm = sup_norm(mu);
    const double out_norm = sup_norm(out);
    const double bound = xi_norm + mu_norm;
    if (bound > 0.0) rep.max_ratio = std::max(rep.max_ratio, out_norm / bound);
    const double slack = bound - out_norm;
    ++rep.check.checked;
    rep.check.worst_slack = std::min(rep.check.worst_slack, slack);
    if (slack < -tolerance * std::max(1.0, bound)) {
      ++rep.check.violations;
      if (!rep.violating_sample) rep.violating_sample = s;
      rep.check.pass = false;
    }
  }
  rep.samples = samples;
  if (rep.violating_sample) rep.check.first_violation_k = rep.violating_sample;
  return rep;
}

Lemma1Report check_lemma1(const WeightedGraph& g, const StructuralConstants& sc,
                          const TrajectoryTrace& trace, const PerturbationModel& pm,
                          double tolerance) {
  if (!trace.has_errors()) throw std::invalid_argument("trace has no error coordinates");
  Lemma1Report rep;
  const double u = trace.input_sup_norm;
  const double zeta = sc.zeta;
  const Round first = static_cast<Round>(trace.max_delay) + trace.window;
  for (CheckReport* r : {&rep.step, &rep.zeta_branch, &rep.minimizer_only}) {
    r->worst_slack = std::numeric_limits<double>::infinity();
    r->params = {{"input_norm", u}, {"zeta", zeta}, {"first_k", first}, {"tolerance", tolerance}};
  }
  rep.step.check = "lemma1_step";
  rep.zeta_branch.check = "lemma1_zeta_branch";
  rep.minimizer_only.check = "lemma1_minimizer_only";

  auto record = [tolerance](CheckReport& r, Round k, double slack) {
    ++r.checked;
    r.worst_slack = std::min(r.worst_slack, slack);
    if (slack < -tolerance) {
      ++r.violations;
      if (r.pass) r.first_violation_k = static_cast<std::size_t>(k);
      r.pass = false;
    }
  };
  auto err = [&](Round t, NodeId j) {
    return trace.errors(static_cast<std::size_t>(t), static_cast<std::size_t>(j));
  };

  for (Round k = first; k + 1 <= trace.horizon; ++k) {
    const Round r = k + 1;
    for (NodeId i = 0; i < trace.node_count; ++i) {
      if (g.is_source(i)) continue;
      const NodeId j = trace.constraining[trace.at(r, i)];
      if (j < 0) {
        // Never updated inside the asserted range means the window bound was broken.
        record(rep.step, r, -std::numeric_limits<double>::infinity());
        continue;
      }
      const double x = err(r, i);
      const double ax = std::abs(x);
      const Round t = *trace.read_time(r, i);
      record(rep.minimizer_only, r, std::abs(err(t, j)) + u - ax);
      if (x >= 0.0) {
        ++rep.nonnegative_steps;
        const Round updated_at = r - trace.update_age[trace.at(r, i)];
        for (NodeId c : sc.constraining_sets[i]) {
          const int tau = pm.delays->delay(std::min(i, c), std::max(i, c), updated_at - 1);
          const Round tc = std::max<Round>(updated_at - 1 - tau, 0);
          record(rep.step, r, std::abs(err(tc, c)) + u - ax);
        }
      } else {
        ++rep.negative_steps;
        record(rep.step, r, std::abs(err(t, j)) + u - ax);
        const auto& c = sc.constraining_sets[i];
        if (std::find(c.begin(), c.end(), j) == c.end())
          record(rep.zeta_branch, r, zeta * std::abs(err(t, j)) + zeta * u - ax);
      }
    }
  }
  return rep;
}

namespace {

void append_double(std::string& line, double v) {
  char buf[32];
  const int len = std::snprintf(buf, sizeof buf, "%.17g", v);
  line.append(buf, static_cast<std::size_t>(len));
}

constexpr const char* kTraceHeader = "k,node,estimate,error,updated,constraining_node,effective_delay";

}  // namespace

void write_trace_csv(const TrajectoryTrace& trace, std::ostream& out) {
  if (!trace.has_errors()) throw std::invalid_argument("trace has no error coordinates");
  out << kTraceHeader << '\n';
  std::string line;
  for (Round k = 0; k <= trace.horizon; ++k) {
    for (NodeId i = 0; i < trace.node_count; ++i) {
      const std::size_t cell = trace.at(k, i);
      line = std::to_string(k);
      line += ',';
      line += std::to_string(i);
      line += ',';
      append_double(line, trace.estimates(static_cast<std::size_t>(k), static_cast<std::size_t>(i)));
      line += ',';
      append_double(line, trace.errors(static_cast<std::size_t>(k), static_cast<std::size_t>(i)));
      line += ',';
      line += trace.updated[cell] ? '1' : '0';
      line += ',';
      line += std::to_string(trace.constraining[cell]);
      line += ',';
      line += std::to_string(trace.effective_delay[cell]);
      line += '\n';
      out << line;
    }
  }
}

TrajectoryTrace read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("trace CSV is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kTraceHeader) throw std::invalid_argument("trace CSV header mismatch: '" + line + "'");

  struct Row {
    Round k;
    NodeId node;
    double estimate, error;
    int updated, constraining, delay;
  };
  std::vector<Row> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::array<std::string, 7> cols;
    std::stringstream ss(line);
    for (auto& c : cols) {
      if (!std::getline(ss, c, ','))
        throw std::invalid_argument("trace CSV line " + std::to_string(line_no) + ": expected 7 columns");
    }
    try {
      rows.push_back({std::stoll(cols[0]), static_cast<NodeId>(std::stoi(cols[1])), std::stod(cols[2]),
                      std::stod(cols[3]), std::stoi(cols[4]), std::stoi(cols[5]), std::stoi(cols[6])});
    } catch (const std::exception&) {
      throw std::invalid_argument("trace CSV line " + std::to_string(line_no) + ": malformed number");
    }
  }
  std::size_t n = 0;
  while (n < rows.size() && rows[n].k == 0) ++n;
  if (n == 0 || rows.size() % n != 0) throw std::invalid_argument("trace CSV rows do not form complete rounds");

  TrajectoryTrace tr;
  tr.node_count = static_cast<int>(n);
  tr.horizon = static_cast<Round>(rows.size() / n) - 1;
  const std::size_t len = rows.size() / n;
  tr.estimates = StateSeries(n, len);
  tr.errors = StateSeries(n, len);
  tr.updated.assign(rows.size(), 0);
  tr.constraining.assign(rows.size(), -1);
  tr.effective_delay.assign(rows.size(), -1);
  tr.update_age.assign(rows.size(), -1);
  tr.used_input.assign(rows.size(), 0.0);
  for (std::size_t idx = 0; idx < rows.size(); ++idx) {
    const Row& r = rows[idx];
    if (r.k != static_cast<Round>(idx / n) || r.node != static_cast<NodeId>(idx % n))
      throw std::invalid_argument("trace CSV rows out of order at k=" + std::to_string(r.k) +
                                  ", node=" + std::to_string(r.node));
    tr.estimates(idx / n, idx % n) = r.estimate;
    tr.errors(idx / n, idx % n) = r.error;
    tr.updated[idx] = r.updated ? 1 : 0;
    tr.constraining[idx] = r.constraining;
    tr.effective_delay[idx] = r.delay;
  }
  std::vector<Round> last(n, 0);
  for (Round k = 1; k <= tr.horizon; ++k) {
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t cell = tr.at(k, static_cast<NodeId>(i));
      if (tr.updated[cell]) last[i] = k;
      if (last[i] > 0) tr.update_age[cell] = static_cast<std::int32_t>(k - last[i]);
    }
  }
  return tr;
}

}  // namespace mincon
