// Brute-force reference implementations used as test oracles. Deliberately
// naive: exhaustive enumeration straight from the definitions.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include "mincon/graph.hpp"
#include "mincon/rng.hpp"

namespace oracle {

using mincon::NodeId;
using mincon::WeightedGraph;

// Shortest distance to the source set by enumerating every simple path.
inline std::vector<double> distances(const WeightedGraph& g) {
  const int n = g.node_count();
  std::vector<double> d(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
  std::vector<char> on_path(static_cast<std::size_t>(n), 0);
  for (NodeId start = 0; start < n; ++start) {
    std::function<void(NodeId, double)> dfs = [&](NodeId u, double len) {
      if (g.is_source(u)) {
        d[start] = std::min(d[start], len);
        return;
      }
      on_path[u] = 1;
      for (const auto& nb : g.neighbors(u))
        if (!on_path[nb.node]) dfs(nb.node, len + nb.weight);
      on_path[u] = 0;
    };
    dfs(start, 0.0);
  }
  return d;
}

inline std::vector<std::vector<NodeId>> constraining(const WeightedGraph& g, const std::vector<double>& d) {
  std::vector<std::vector<NodeId>> c(static_cast<std::size_t>(g.node_count()));
  for (NodeId i = 0; i < g.node_count(); ++i) {
    if (g.is_source(i)) continue;
    for (NodeId j = 0; j < g.node_count(); ++j)
      if (g.adjacent(i, j) && std::abs(d[j] + g.weight(i, j) - d[i]) <= 1e-9) c[i].push_back(j);
  }
  return c;
}

inline double zeta(const WeightedGraph& g, const std::vector<double>& d,
                   const std::vector<std::vector<NodeId>>& c, double fallback = 0.5) {
  double z = 0.0;
  bool any = false;
  for (NodeId i = 0; i < g.node_count(); ++i)
    for (NodeId l = 0; l < g.node_count(); ++l) {
      if (!g.adjacent(i, l)) continue;
      if (std::find(c[i].begin(), c[i].end(), l) != c[i].end()) continue;
      const double r = d[i] / (d[l] + g.weight(i, l));
      if (r > 0.0) any = true;
      z = std::max(z, r);
    }
  return any ? z : fallback;
}

// Longest sequence i_0, ..., i_h with i_{l-1} in C(i_l), counted in nodes.
inline int diameter(const WeightedGraph& g, const std::vector<std::vector<NodeId>>& c) {
  int best = 0;
  std::function<void(NodeId, int)> walk = [&](NodeId i, int len) {
    best = std::max(best, len);
    for (NodeId j : c[i]) walk(j, len + 1);
  };
  for (NodeId i = 0; i < g.node_count(); ++i) walk(i, 1);
  return best;
}

// Every simple directed cycle of a slope matrix (zero entries are absent),
// each reported once starting from its smallest node.
inline std::vector<std::vector<std::size_t>> simple_cycles(const std::vector<std::vector<double>>& s) {
  const std::size_t n = s.size();
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> path;
  std::vector<char> used(n, 0);
  std::function<void(std::size_t, std::size_t)> dfs = [&](std::size_t start, std::size_t u) {
    for (std::size_t v = start; v < n; ++v) {
      if (s[u][v] <= 0.0) continue;
      if (v == start) {
        out.push_back(path);
      } else if (!used[v]) {
        used[v] = 1;
        path.push_back(v);
        dfs(start, v);
        path.pop_back();
        used[v] = 0;
      }
    }
  };
  for (std::size_t start = 0; start < n; ++start) {
    path = {start};
    used.assign(n, 0);
    used[start] = 1;
    dfs(start, start);
  }
  return out;
}

inline double cycle_product(const std::vector<std::vector<double>>& s, const std::vector<std::size_t>& c) {
  double p = 1.0;
  for (std::size_t i = 0; i < c.size(); ++i) p *= s[c[i]][c[(i + 1) % c.size()]];
  return p;
}

inline double cycle_log_mean(const std::vector<std::vector<double>>& s, const std::vector<std::size_t>& c) {
  double sum = 0.0;
  for (std::size_t i = 0; i < c.size(); ++i) sum += std::log(s[c[i]][c[(i + 1) % c.size()]]);
  return sum / static_cast<double>(c.size());
}

// Connected graph on n nodes with integer weights in [1, max_weight] and a
// random nonempty strict source subset.
inline WeightedGraph random_small_graph(mincon::SequentialRng& rng, int n, int max_weight, double extra_p) {
  std::vector<mincon::Edge> edges;
  std::vector<std::vector<char>> has(static_cast<std::size_t>(n), std::vector<char>(static_cast<std::size_t>(n), 0));
  auto add = [&](NodeId u, NodeId v) {
    if (u == v || has[u][v]) return;
    has[u][v] = has[v][u] = 1;
    edges.push_back({u, v, static_cast<double>(rng.uniform_int(1, max_weight))});
  };
  for (NodeId v = 1; v < n; ++v) add(static_cast<NodeId>(rng.uniform_int(0, v - 1)), v);
  for (NodeId u = 0; u < n; ++u)
    for (NodeId v = u + 1; v < n; ++v)
      if (rng.uniform01() < extra_p) add(u, v);
  std::vector<NodeId> sources;
  while (sources.empty() || static_cast<int>(sources.size()) == n) {
    sources.clear();
    for (NodeId v = 0; v < n; ++v)
      if (rng.uniform01() < 0.3) sources.push_back(v);
  }
  return WeightedGraph(n, std::move(edges), std::move(sources));
}

}  // namespace oracle
