// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "mincon/bounds.hpp"
#include "mincon/harness.hpp"
#include "mincon/protocol.hpp"
#include "mincon/smallgain.hpp"
#include "oracles.hpp"

using namespace mincon;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

int failures = 0;

void criterion(int id, const char* title, double budget_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (secs > budget_s) {
    o.pass = false;
    o.detail += " (over time budget)";
  }
  if (!o.pass) ++failures;
  std::printf("[%s] %2d %s: %s (%.2f s, budget %.0f s)\n", o.pass ? "PASS" : "FAIL", id, title, o.detail.c_str(),
              secs, budget_s);
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

GeometricGraphSpec small_rgg(std::uint64_t seed, std::uint64_t substream) {
  GeometricGraphSpec s;
  s.node_count = 50;
  s.area_width = 1.0;
  s.area_height = 1.0;
  s.radius = 0.3;
  s.weight_mode = WeightMode::kHopCount;
  s.seed = seed;
  s.substream = substream;
  return s;
}

struct Run {
  WeightedGraph graph;
  StructuralConstants sc;
  PerturbationModel pm;
  BoundParameters bp;
  TrajectoryTrace trace;
};

// n = 50, tau_bar = 2, gaps {1,2,3}, given noise amplitude.
Run perturbed_run(std::uint64_t seed, double amplitude, Round horizon) {
  WeightedGraph g = generate_geometric(small_rgg(seed, 0));
  StructuralConstants sc = compute_structural_constants(g);
  ModelConfig mc;
  mc.max_delay = 2;
  mc.gap_min = 1;
  mc.gap_max = 3;
  mc.noise = amplitude > 0.0 ? ModelConfig::Noise::kUniform : ModelConfig::Noise::kNone;
  mc.noise_amplitude = amplitude;
  mc.seed = seed;
  mc.horizon = horizon;
  PerturbationModel pm = make_model(mc, g);
  const InitialCondition init = make_initial(mc, g, sc);
  BoundParameters bp = bound_params(sc, pm.window(), pm.max_delay(), pm.noise_amplitude());
  TrajectoryTrace tr = run_perturbed(g, pm, init, horizon);
  to_error_coordinates(g, tr, sc);
  return {std::move(g), std::move(sc), std::move(pm), bp, std::move(tr)};
}

const std::vector<Run>& noisy_runs() {
  static const std::vector<Run> runs = [] {
    std::vector<Run> r;
    for (std::uint64_t s = 1; s <= 10; ++s) r.push_back(perturbed_run(s, 0.01, 600));
    return r;
  }();
  return runs;
}

Outcome c1_structural_oracle() {
  SequentialRng rng(2024, Stream::kFuzz, 1);
  int instances = 0, mismatches = 0;
  for (int n = 2; n <= 7; ++n) {
    for (int rep = 0; rep < 100; ++rep) {
      const double p = rng.uniform(0.0, 0.7);
      const WeightedGraph g = oracle::random_small_graph(rng, n, 3, p);
      const StructuralConstants sc = compute_structural_constants(g);
      const auto d = oracle::distances(g);
      const auto c = oracle::constraining(g, d);
      ++instances;
      if (sc.distances != d || sc.constraining_sets != c || sc.zeta != oracle::zeta(g, d, c) ||
          sc.effective_diameter != oracle::diameter(g, c))
        ++mismatches;
    }
  }
  return {instances >= 500 && mismatches == 0, fmt("%d graphs (n<=7, w<=3), %d mismatches", instances, mismatches)};
}

Outcome c2_reference_constants() {
  const WeightedGraph path(4, {{0, 1, 1}, {1, 2, 1}, {2, 3, 1}}, {0});
  const WeightedGraph tri(3, {{0, 1, 1}, {0, 2, 1}, {1, 2, 1}}, {0});
  const auto a = compute_structural_constants(path);
  const auto b = compute_structural_constants(tri);
  const bool ok = a.zeta == 0.5 && a.effective_diameter == 4 && b.zeta == 0.5 && b.effective_diameter == 2;
  return {ok, fmt("path zeta=%.17g D=%d, triangle zeta=%.17g D=%d", a.zeta, a.effective_diameter, b.zeta,
                  b.effective_diameter)};
}

Outcome c3_nominal_convergence() {
  int converged = 0, latest = 0;
  for (std::uint64_t s = 1; s <= 20; ++s) {
    const WeightedGraph g = generate_geometric(small_rgg(100 + s, 0));
    const auto sc = compute_structural_constants(g);
    const int n = g.node_count();
    const auto init = uniform_half_dmax_initial(g, sc, 100 + s);
    auto tr = run_perturbed(g, PerturbationModel::unperturbed(), init, 2 * n);
    to_error_coordinates(g, tr, sc);
    int first_zero = -1;
    bool stays = true;
    for (int k = 0; k <= 2 * n; ++k) {
      const bool zero = sup_norm(tr.errors.at(static_cast<std::size_t>(k))) == 0.0;
      if (zero && first_zero < 0) first_zero = k;
      if (!zero && first_zero >= 0) stays = false;
    }
    if (first_zero >= 0 && first_zero <= n && stays) ++converged;
    latest = std::max(latest, first_zero);
  }
  return {converged == 20, fmt("%d/20 graphs exactly 0 within n=50 rounds, latest at k=%d", converged, latest)};
}

Outcome c4_lemma1() {
  std::size_t viol = 0, zeta_steps = 0, zeta_viol = 0, literal_viol = 0, literal_steps = 0;
  for (const Run& r : noisy_runs()) {
    const auto rep = check_lemma1(r.graph, r.sc, r.trace, r.pm, 1e-12);
    viol += rep.step.violations;
    zeta_steps += rep.zeta_branch.checked;
    zeta_viol += rep.zeta_branch.violations;
    literal_steps += rep.minimizer_only.checked;
    literal_viol += rep.minimizer_only.violations;
  }
  return {viol == 0 && zeta_viol == 0 && literal_viol == 0 && zeta_steps > 0,
          fmt("%zu update steps: recorded minimizer %zu violations, true constraining node on x>=0 %zu "
              "violations; zeta branch %zu steps, %zu violations",
              literal_steps, literal_viol, viol, zeta_steps, zeta_viol)};
}

Outcome c5_window_inequality() {
  std::size_t checked = 0, viol = 0;
  double worst = INFINITY;
  for (const Run& r : noisy_runs()) {
    const auto rep = check_razumikhin(r.trace.errors, r.trace.input_sup_norm, window_certificate(r.bp),
                                      static_cast<std::size_t>(r.bp.window), 1e-12);
    checked += rep.checked;
    viol += rep.violations;
    worst = std::min(worst, rep.worst_slack);
  }
  return {viol == 0 && checked > 0, fmt("%zu steps, %zu violations, worst slack %.3g", checked, viol, worst)};
}

Outcome c6_bound() {
  std::size_t checked = 0, viol = 0;
  double gap = 1.0;
  for (const Run& r : noisy_runs()) {
    const auto rep = verify_bound(r.trace.errors, r.bp);
    checked += rep.check.checked;
    viol += rep.check.violations;
    gap = std::min(gap, rep.min_ratio_gap);
  }
  return {viol == 0 && checked > 0, fmt("%zu asserted rounds, %zu violations, min 1-|x|/b = %.3g", checked, viol, gap)};
}

constexpr Round kReproHorizon = 5000;

Outcome c7_reproduction() {
  ExperimentConfig c;
  c.model.seed = 1;
  c.model.horizon = kReproHorizon;
  c.trials = 5;
  bool ok = true;
  std::string detail;
  for (int t = 0; t < c.trials; ++t) {
    const TrialResult r = run_trial(c, t);
    const double zeta = r.constants.zeta;
    const int dia = r.constants.effective_diameter;
    int below = -1;
    for (std::size_t k = 0; k < r.trace.errors.length(); ++k)
      if (sup_norm(r.trace.errors.at(k)) < 0.3) {
        below = static_cast<int>(k);
        break;
      }
    const auto rep = verify_bound(r.trace.errors, r.bound);
    const bool a = dia >= 8 && dia <= 20 && zeta > 0.85 && zeta < 0.95;
    const bool b = below >= 0 && below <= 500;
    const bool cc = rep.final_bound >= 0.5 && rep.final_bound <= 4.0;
    const bool d = rep.check.pass;
    ok = ok && a && b && cc && d;
    detail += fmt("%s[t%d D=%d zeta=%.4f <0.3@%d b(K)=%.3f viol=%zu%s]", t ? " " : "", t, dia, zeta, below,
                  rep.final_bound, rep.check.violations, a && b && cc && d ? "" : " !");
  }
  return {ok, fmt("K=%lld ", static_cast<long long>(kReproHorizon)) + detail};
}

Outcome c8_k_bounded() {
  std::size_t samples = 0, viol = 0;
  double ratio = 0.0;
  for (std::uint64_t s = 1; s <= 5; ++s) {
    GeometricGraphSpec spec = small_rgg(300 + s, 0);
    spec.node_count = 20 + 10 * static_cast<int>(s);
    spec.weight_mode = s % 2 ? WeightMode::kHopCount : WeightMode::kEuclidean;
    const WeightedGraph g = generate_geometric(spec);
    const auto sc = compute_structural_constants(g);
    const auto rep = check_k_boundedness(g, sc, 2, 3, 2000, 300 + s);
    samples += rep.samples;
    viol += rep.check.violations;
    ratio = std::max(ratio, rep.max_ratio);
  }
  return {viol == 0 && samples >= 10000, fmt("%zu samples on 5 graphs, %zu violations, max ratio %.6f", samples, viol, ratio)};
}

Outcome c9_small_gain() {
  SequentialRng rng(77, Stream::kFuzz, 9);
  int agree = 0, feasible = 0, sound = 0;
  for (int m = 0; m < 200; ++m) {
    const auto l = static_cast<std::size_t>(rng.uniform_int(1, 6));
    GainSystem gs{l, SlopeMatrix(l, std::vector<double>(l, 0.0)), std::vector<double>(l, 1.0)};
    const double density = rng.uniform(0.2, 0.9);
    const double scale = rng.uniform(0.3, 1.6);
    for (auto& row : gs.slopes)
      for (double& v : row)
        if (rng.uniform01() < density) v = scale * rng.uniform01();
    bool brute_ok = true;
    for (const auto& cyc : oracle::simple_cycles(gs.slopes))
      if (oracle::cycle_log_mean(gs.slopes, cyc) >= -kCycleTolerance) brute_ok = false;
    const auto res = certify(gs);
    const bool cert = std::holds_alternative<SmallGainCertificate>(res);
    if (cert == brute_ok) ++agree;
    if (cert) {
      ++feasible;
      const auto& c = std::get<SmallGainCertificate>(res);
      if (achieved_contraction(gs.slopes, c.sigma) <= c.kappa + 1e-9 && c.kappa < 1.0) ++sound;
    }
  }
  const auto a = certify({2, {{0, 0.8}, {0.9, 0}}, {1, 1}});
  const auto b = certify({2, {{0, 1.0}, {1.1, 0}}, {1, 1}});
  bool examples = false;
  if (const auto* c = std::get_if<SmallGainCertificate>(&a)) {
    if (const auto* w = std::get_if<InfeasibleCycle>(&b))
      examples = std::abs(c->kappa - std::sqrt(0.72)) <= 1e-12 && std::abs(w->product - 1.1) <= 1e-12 &&
                 w->cycle == std::vector<std::size_t>{0, 1};
  }
  return {agree == 200 && sound == feasible && examples,
          fmt("%d/200 agree with cycle enumeration (%d feasible), %d/%d certificates sound, 2x2 examples %s", agree,
              feasible, sound, feasible, examples ? "exact" : "wrong")};
}

Outcome c10_envelope() {
  std::size_t checked = 0, viol = 0;
  double tight = 0.0;
  for (std::uint64_t s = 1; s <= 10; ++s) {
    const Run r = perturbed_run(s, 0.0, 600);
    const auto m = static_cast<std::size_t>(r.bp.window);
    const ExpIssEnvelope env{r.bp.overshoot, r.bp.rate, 0.0};
    const auto rep = check_expiss_envelope(r.trace.errors, 0.0, env, {0, m, m + 1, 0});
    checked += rep.check.checked;
    viol += rep.check.violations;
    tight = std::max(tight, rep.tightest_overshoot / r.bp.overshoot);
  }
  return {viol == 0 && checked > 0,
          fmt("%zu asserted rounds over 10 runs, %zu violations, max needed/actual overshoot %.3g", checked, viol, tight)};
}

}  // namespace

int main() {
  criterion(1, "structural constants match brute force", 30, c1_structural_oracle);
  criterion(2, "reference instance constants", 1, c2_reference_constants);
  criterion(3, "nominal finite-time convergence", 10, c3_nominal_convergence);
  criterion(4, "per-step gain inequality", 60, c4_lemma1);
  criterion(5, "window Lyapunov inequality", 60, c5_window_inequality);
  criterion(6, "exponential bound domination", 60, c6_bound);
  criterion(7, "500-node desk-scale reproduction", 180, c7_reproduction);
  criterion(8, "K-boundedness fuzz", 30, c8_k_bounded);
  criterion(9, "small-gain certifier", 30, c9_small_gain);
  criterion(10, "expISS envelope without noise", 60, c10_envelope);
  std::printf("%s: %d failing criteria\n", failures ? "FAIL" : "PASS", failures);
  return failures ? 1 : 0;
}
