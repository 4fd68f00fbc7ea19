#include "mincon/smallgain.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>
#include <string>

namespace mincon {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_square(const SlopeMatrix& s) {
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i].size() != s.size())
      throw std::invalid_argument("slope matrix row " + std::to_string(i) + " has wrong length");
    for (std::size_t j = 0; j < s.size(); ++j) {
      const double v = s[i][j];
      if (!std::isfinite(v) || v < 0.0)
        throw std::invalid_argument("slope [" + std::to_string(i) + "][" + std::to_string(j) +
                                    "] must be finite and >= 0");
    }
  }
}

// Log-slopes with -inf for absent couplings.
SlopeMatrix log_slopes(const SlopeMatrix& s) {
  SlopeMatrix a(s.size(), std::vector<double>(s.size(), kNegInf));
  for (std::size_t i = 0; i < s.size(); ++i)
    for (std::size_t j = 0; j < s.size(); ++j)
      if (s[i][j] > 0.0) a[i][j] = std::log(s[i][j]);
  return a;
}

// Karp's maximum cycle mean; -inf when acyclic.
double karp(const SlopeMatrix& a) {
  const std::size_t n = a.size();
  if (n == 0) return kNegInf;
  // d[k][v]: heaviest walk of exactly k edges ending at v, from any start.
  std::vector<std::vector<double>> d(n + 1, std::vector<double>(n, kNegInf));
  std::fill(d[0].begin(), d[0].end(), 0.0);
  for (std::size_t k = 1; k <= n; ++k)
    for (std::size_t u = 0; u < n; ++u) {
      if (d[k - 1][u] == kNegInf) continue;
      for (std::size_t v = 0; v < n; ++v)
        if (a[u][v] != kNegInf) d[k][v] = std::max(d[k][v], d[k - 1][u] + a[u][v]);
    }
  double best = kNegInf;
  for (std::size_t v = 0; v < n; ++v) {
    if (d[n][v] == kNegInf) continue;
    double worst = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < n; ++k)
      if (d[k][v] != kNegInf)
        worst = std::min(worst, (d[n][v] - d[k][v]) / static_cast<double>(n - k));
    best = std::max(best, worst);
  }
  return best;
}

// A cycle in the predecessor graph of a Bellman-Ford run that still improves
// after n rounds on weights log(slope) - shift.
std::vector<std::size_t> positive_cycle(const SlopeMatrix& a, double shift) {
  const std::size_t n = a.size();
  std::vector<double> p(n, 0.0);
  std::vector<std::size_t> pred(n, n);
  std::size_t last = n;
  for (std::size_t round = 0; round <= n; ++round) {
    last = n;
    for (std::size_t u = 0; u < n; ++u)
      for (std::size_t v = 0; v < n; ++v) {
        if (a[u][v] == kNegInf) continue;
        const double cand = p[u] + a[u][v] - shift;
        if (cand > p[v]) {
          p[v] = cand;
          pred[v] = u;
          last = v;
        }
      }
    if (last == n) return {};
  }
  std::size_t v = last;
  for (std::size_t i = 0; i < n; ++i) v = pred[v];
  std::vector<std::size_t> cycle;
  for (std::size_t u = v;; u = pred[u]) {
    cycle.push_back(u);
    if (pred[u] == v) break;
  }
  // Predecessors run backwards along the edges.
  std::reverse(cycle.begin(), cycle.end());
  std::rotate(cycle.begin(), std::min_element(cycle.begin(), cycle.end()), cycle.end());
  return cycle;
}

}  // namespace

void validate(const GainSystem& gs) {
  if (gs.slopes.size() != gs.size) throw std::invalid_argument("slope matrix must have l rows");
  check_square(gs.slopes);
  if (!gs.input_slopes.empty() && gs.input_slopes.size() != gs.size)
    throw std::invalid_argument("input_slopes must have l entries");
  for (double v : gs.input_slopes)
    if (!std::isfinite(v) || v < 0.0) throw std::invalid_argument("input slopes must be finite and >= 0");
}

double max_cycle_mean(const SlopeMatrix& slopes) {
  check_square(slopes);
  const double m = karp(log_slopes(slopes));
  return m == kNegInf ? 0.0 : std::exp(m);
}

double achieved_contraction(const SlopeMatrix& slopes, std::span<const double> sigma) {
  double k = 0.0;
  for (std::size_t i = 0; i < slopes.size(); ++i)
    for (std::size_t j = 0; j < slopes.size(); ++j)
      if (slopes[i][j] > 0.0) k = std::max(k, slopes[i][j] * sigma[j] / sigma[i]);
  return k;
}

CertifyResult certify(const GainSystem& gs) {
  validate(gs);
  const std::size_t n = gs.size;
  const SlopeMatrix a = log_slopes(gs.slopes);
  const double mean = karp(a);

  if (mean != kNegInf && mean >= -kCycleTolerance) {
    InfeasibleCycle w;
    w.cycle = positive_cycle(a, mean - 1e-9);
    if (w.cycle.empty()) throw std::logic_error("no witness cycle found for an infeasible gain system");
    w.product = 1.0;
    for (std::size_t i = 0; i < w.cycle.size(); ++i)
      w.product *= gs.slopes[w.cycle[i]][w.cycle[(i + 1) % w.cycle.size()]];
    return w;
  }

  SmallGainCertificate cert;
  cert.max_cycle_mean = mean == kNegInf ? 0.0 : std::exp(mean);
  // Deflate so the heaviest cycle has log-weight 0; potentials are the
  // heaviest walks of at most n - 1 edges leaving each node.
  const double shift = mean == kNegInf ? std::log(0.5) : mean;
  std::vector<double> p(n, 0.0);
  for (std::size_t round = 0; round + 1 < n; ++round) {
    std::vector<double> next = p;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (a[i][j] != kNegInf) next[i] = std::max(next[i], a[i][j] - shift + p[j]);
    p.swap(next);
  }
  const double top = n == 0 ? 0.0 : *std::min_element(p.begin(), p.end());
  cert.sigma.resize(n);
  for (std::size_t i = 0; i < n; ++i) cert.sigma[i] = std::exp(p[i] - top);
  cert.kappa = achieved_contraction(gs.slopes, cert.sigma);
  if (!(cert.kappa < 1.0)) throw std::logic_error("scaling construction did not contract");
  return cert;
}

bool strict_path_condition(const SlopeMatrix& slopes) {
  check_square(slopes);
  const std::size_t n = slopes.size();
  SlopeMatrix walk = slopes;
  for (std::size_t len = 1; len <= n; ++len) {
    for (const auto& row : walk)
      for (double v : row)
        if (v >= 1.0) return false;
    SlopeMatrix next(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t m = 0; m < n; ++m)
        for (std::size_t j = 0; j < n; ++j) next[i][j] = std::max(next[i][j], walk[i][m] * slopes[m][j]);
    walk.swap(next);
  }
  return true;
}

double composite_lyapunov(const SmallGainCertificate& cert, std::span<const double> subsystem_values) {
  if (subsystem_values.size() != cert.sigma.size())
    throw std::invalid_argument("one value per subsystem required");
  double v = 0.0;
  for (std::size_t i = 0; i < subsystem_values.size(); ++i)
    v = std::max(v, subsystem_values[i] / cert.sigma[i]);
  return v;
}

ConsensusGains consensus_gain_system(const WeightedGraph& g, const StructuralConstants& sc) {
  if (!(sc.zeta > 0.0 && sc.zeta < 1.0)) throw std::invalid_argument("zeta must lie in (0, 1)");
  const auto n = static_cast<std::size_t>(g.node_count());
  const int reach = sc.effective_diameter;
  ConsensusGains out;
  out.system.size = n;
  out.system.slopes.assign(n, std::vector<double>(n, 0.0));
  out.system.input_slopes.assign(n, static_cast<double>(reach));
  std::vector<int> hops(n);
  for (NodeId i = 0; i < g.node_count(); ++i) {
    if (g.is_source(i)) continue;
    std::fill(hops.begin(), hops.end(), -1);
    std::deque<NodeId> queue{i};
    hops[i] = 0;
    while (!queue.empty()) {
      const NodeId u = queue.front();
      queue.pop_front();
      if (hops[u] > 0) out.system.slopes[i][u] = sc.zeta;
      if (hops[u] == reach) continue;
      for (const Neighbor& nb : g.neighbors(u)) {
        if (hops[nb.node] >= 0) continue;
        hops[nb.node] = hops[u] + 1;
        queue.push_back(nb.node);
      }
    }
  }
  out.certificate.sigma.assign(n, 1.0);
  out.certificate.kappa = sc.zeta;
  out.certificate.max_cycle_mean = max_cycle_mean(out.system.slopes);
  return out;
}

GainSystem gain_system_from_json(const nlohmann::json& j) {
  GainSystem gs;
  try {
    gs.size = j.at("l").get<std::size_t>();
    gs.slopes = j.at("slopes").get<SlopeMatrix>();
    if (j.contains("input_slopes")) gs.input_slopes = j.at("input_slopes").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("malformed gain matrix: ") + e.what());
  }
  validate(gs);
  return gs;
}

nlohmann::json gain_system_to_json(const GainSystem& gs) {
  return {{"l", gs.size}, {"slopes", gs.slopes}, {"input_slopes", gs.input_slopes}};
}

nlohmann::json certify_result_to_json(const CertifyResult& r) {
  if (const auto* c = std::get_if<SmallGainCertificate>(&r))
    return {{"sigma", c->sigma}, {"kappa", c->kappa}, {"max_cycle_mean", c->max_cycle_mean}};
  const auto& w = std::get<InfeasibleCycle>(r);
  return {{"infeasible_cycle", w.cycle}, {"product", w.product}};
}

}  // namespace mincon
