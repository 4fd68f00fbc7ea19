#include "mincon/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <queue>
#include <stdexcept>

#include "mincon/rng.hpp"

namespace mincon {

namespace {

std::string node_str(NodeId i) { return std::to_string(i); }

}  // namespace

bool is_connected(int node_count, std::span<const Edge> edges) {
  if (node_count <= 0) return false;
  std::vector<int> parent(static_cast<std::size_t>(node_count));
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  int components = node_count;
  for (const Edge& e : edges) {
    int a = find(e.u);
    int b = find(e.v);
    if (a != b) {
      parent[a] = b;
      --components;
    }
  }
  return components == 1;
}

WeightedGraph::WeightedGraph(int node_count, std::vector<Edge> edges,
                             std::vector<NodeId> sources)
    : node_count_(node_count), edges_(std::move(edges)), sources_(std::move(sources)) {
  if (node_count_ < 2) throw std::invalid_argument("graph needs at least 2 nodes");
  const auto n = static_cast<std::size_t>(node_count_);

  is_source_.assign(n, 0);
  for (NodeId s : sources_) {
    if (s < 0 || s >= node_count_) throw std::invalid_argument("source index out of range: " + node_str(s));
    if (is_source_[s]) throw std::invalid_argument("duplicate source: " + node_str(s));
    is_source_[s] = 1;
  }
  std::sort(sources_.begin(), sources_.end());
  if (sources_.empty()) throw std::invalid_argument("source set is empty");
  if (sources_.size() == n) throw std::invalid_argument("every node is a source");

  std::vector<std::size_t> degree(n, 0);
  for (Edge& e : edges_) {
    if (e.u < 0 || e.u >= node_count_ || e.v < 0 || e.v >= node_count_)
      throw std::invalid_argument("edge endpoint out of range");
    if (e.u == e.v) throw std::invalid_argument("self-loop at node " + node_str(e.u));
    if (!(e.weight > 0.0) || !std::isfinite(e.weight))
      throw std::invalid_argument("edge weight must be positive and finite");
    if (e.u > e.v) std::swap(e.u, e.v);
    ++degree[e.u];
    ++degree[e.v];
    max_weight_ = std::max(max_weight_, e.weight);
  }
  std::sort(edges_.begin(), edges_.end(), [](const Edge& a, const Edge& b) {
    return a.u != b.u ? a.u < b.u : a.v < b.v;
  });
  for (std::size_t k = 1; k < edges_.size(); ++k) {
    if (edges_[k].u == edges_[k - 1].u && edges_[k].v == edges_[k - 1].v)
      throw std::invalid_argument("duplicate edge {" + node_str(edges_[k].u) + ", " +
                                  node_str(edges_[k].v) + "}");
  }
  if (!is_connected(node_count_, edges_)) throw std::invalid_argument("graph is not connected");

  offsets_.assign(n + 1, 0);
  for (std::size_t i = 0; i < n; ++i) offsets_[i + 1] = offsets_[i] + degree[i];
  adjacency_.resize(offsets_[n]);
  std::vector<std::size_t> fill(offsets_.begin(), offsets_.end() - 1);
  for (const Edge& e : edges_) {
    adjacency_[fill[e.u]++] = {e.v, e.weight};
    adjacency_[fill[e.v]++] = {e.u, e.weight};
  }
  for (std::size_t i = 0; i < n; ++i) {
    std::sort(adjacency_.begin() + static_cast<std::ptrdiff_t>(offsets_[i]),
              adjacency_.begin() + static_cast<std::ptrdiff_t>(offsets_[i + 1]),
              [](const Neighbor& a, const Neighbor& b) { return a.node < b.node; });
  }
}

std::span<const Neighbor> WeightedGraph::neighbors(NodeId i) const {
  const auto k = static_cast<std::size_t>(i);
  return {adjacency_.data() + offsets_[k], offsets_[k + 1] - offsets_[k]};
}

bool WeightedGraph::adjacent(NodeId i, NodeId j) const {
  auto nb = neighbors(i);
  auto it = std::lower_bound(nb.begin(), nb.end(), j,
                             [](const Neighbor& a, NodeId v) { return a.node < v; });
  return it != nb.end() && it->node == j;
}

double WeightedGraph::weight(NodeId i, NodeId j) const {
  auto nb = neighbors(i);
  auto it = std::lower_bound(nb.begin(), nb.end(), j,
                             [](const Neighbor& a, NodeId v) { return a.node < v; });
  if (it == nb.end() || it->node != j)
    throw std::out_of_range("nodes " + node_str(i) + " and " + node_str(j) + " are not adjacent");
  return it->weight;
}

bool operator==(const WeightedGraph& a, const WeightedGraph& b) {
  if (a.node_count_ != b.node_count_ || a.sources_ != b.sources_ ||
      a.edges_.size() != b.edges_.size())
    return false;
  for (std::size_t k = 0; k < a.edges_.size(); ++k) {
    const Edge& x = a.edges_[k];
    const Edge& y = b.edges_[k];
    if (x.u != y.u || x.v != y.v || x.weight != y.weight) return false;
  }
  return true;
}

double StructuralConstants::max_distance() const {
  return distances.empty() ? 0.0 : *std::max_element(distances.begin(), distances.end());
}

std::vector<double> shortest_distances(const WeightedGraph& g) {
  const auto n = static_cast<std::size_t>(g.node_count());
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<double> d(n, kInf);
  using Item = std::pair<double, NodeId>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  for (NodeId s : g.sources()) {
    d[s] = 0.0;
    heap.emplace(0.0, s);
  }
  while (!heap.empty()) {
    auto [dist, i] = heap.top();
    heap.pop();
    if (dist > d[i]) continue;
    for (const Neighbor& nb : g.neighbors(i)) {
      const double cand = dist + nb.weight;
      if (cand < d[nb.node]) {
        d[nb.node] = cand;
        heap.emplace(cand, nb.node);
      }
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (d[i] == kInf) throw std::invalid_argument("node " + std::to_string(i) + " is unreachable");
  }
  return d;
}

std::vector<std::vector<NodeId>> true_constraining_sets(const WeightedGraph& g,
                                                        std::span<const double> d,
                                                        double tolerance) {
  const auto n = static_cast<std::size_t>(g.node_count());
  if (d.size() != n) throw std::invalid_argument("distance vector has wrong length");
  std::vector<std::vector<NodeId>> sets(n);
  for (NodeId i = 0; i < g.node_count(); ++i) {
    if (g.is_source(i)) continue;
    for (const Neighbor& nb : g.neighbors(i)) {
      if (std::abs(d[nb.node] + nb.weight - d[i]) <= tolerance) sets[i].push_back(nb.node);
    }
  }
  return sets;
}

double compute_zeta(const WeightedGraph& g, std::span<const double> d,
                    const std::vector<std::vector<NodeId>>& constraining, double default_zeta) {
  if (!(default_zeta > 0.0 && default_zeta < 1.0))
    throw std::invalid_argument("default zeta must lie in (0, 1)");
  double zeta = 0.0;
  for (NodeId i = 0; i < g.node_count(); ++i) {
    const auto& c = constraining[i];
    for (const Neighbor& nb : g.neighbors(i)) {
      if (std::find(c.begin(), c.end(), nb.node) != c.end()) continue;
      zeta = std::max(zeta, d[i] / (d[nb.node] + nb.weight));
    }
  }
  // Only sources (ratio 0) or nobody had non-constraining neighbors; any
  // value in (0, 1) satisfies the ratio bound.
  if (zeta <= 0.0) return default_zeta;
  return zeta;
}

int effective_diameter(const WeightedGraph& g,
                       const std::vector<std::vector<NodeId>>& constraining, ChainLength mode) {
  const auto n = static_cast<std::size_t>(g.node_count());
  // Edge j -> i whenever j is a true constraining node of i.
  std::vector<int> indegree(n, 0);
  std::vector<std::vector<NodeId>> successors(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (NodeId j : constraining[i]) {
      successors[j].push_back(static_cast<NodeId>(i));
      ++indegree[i];
    }
  }
  std::vector<int> chain(n, 1);
  std::vector<NodeId> ready;
  for (std::size_t i = 0; i < n; ++i)
    if (indegree[i] == 0) ready.push_back(static_cast<NodeId>(i));
  std::size_t visited = 0;
  int longest = 1;
  while (!ready.empty()) {
    NodeId j = ready.back();
    ready.pop_back();
    ++visited;
    longest = std::max(longest, chain[j]);
    for (NodeId i : successors[j]) {
      chain[i] = std::max(chain[i], chain[j] + 1);
      if (--indegree[i] == 0) ready.push_back(i);
    }
  }
  if (visited != n) throw std::logic_error("constraining relation contains a cycle");
  return mode == ChainLength::kNodes ? longest : longest - 1;
}

StructuralConstants compute_structural_constants(const WeightedGraph& g,
                                                 const StructuralOptions& options) {
  StructuralConstants sc;
  sc.distances = shortest_distances(g);
  sc.constraining_sets = true_constraining_sets(g, sc.distances, options.tie_tolerance);
  sc.zeta = compute_zeta(g, sc.distances, sc.constraining_sets, options.default_zeta);
  sc.effective_diameter = effective_diameter(g, sc.constraining_sets, options.chain_length);
  return sc;
}

GeometricGraph generate_geometric_layout(const GeometricGraphSpec& spec) {
  if (spec.node_count < 2) throw std::invalid_argument("geometric graph needs node_count >= 2");
  if (!(spec.radius > 0.0)) throw std::invalid_argument("radius must be positive");
  if (!(spec.area_width > 0.0) || !(spec.area_height > 0.0))
    throw std::invalid_argument("area dimensions must be positive");
  if (spec.max_attempts < 1) throw std::invalid_argument("max_attempts must be >= 1");

  const auto n = static_cast<std::size_t>(spec.node_count);
  const double r2 = spec.radius * spec.radius;
  for (int attempt = 0; attempt < spec.max_attempts; ++attempt) {
    const CounterRng rng(spec.seed, Stream::kGraph,
                         (spec.substream << 20) ^ static_cast<std::uint64_t>(attempt));
    std::vector<Point> pos(n);
    for (std::size_t i = 0; i < n; ++i) {
      pos[i] = {spec.area_width * rng.uniform01(i, 0), spec.area_height * rng.uniform01(i, 1)};
    }
    std::vector<Edge> edges;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const double dx = pos[i].x - pos[j].x;
        const double dy = pos[i].y - pos[j].y;
        const double dist2 = dx * dx + dy * dy;
        if (dist2 > r2) continue;
        double w = 1.0;
        if (spec.weight_mode == WeightMode::kEuclidean) {
          w = std::sqrt(dist2);
          if (!(w > 0.0)) continue;  // coincident points
        }
        edges.push_back({static_cast<NodeId>(i), static_cast<NodeId>(j), w});
      }
    }
    if (!is_connected(spec.node_count, edges)) continue;
    return {WeightedGraph(spec.node_count, std::move(edges), {0}), std::move(pos), attempt + 1};
  }
  throw std::runtime_error("no connected geometric graph after " +
                           std::to_string(spec.max_attempts) + " attempts (radius " +
                           std::to_string(spec.radius) + " km is likely too small)");
}

WeightedGraph generate_geometric(const GeometricGraphSpec& spec) {
  return generate_geometric_layout(spec).graph;
}

nlohmann::json graph_to_json(const WeightedGraph& g) {
  nlohmann::json edges = nlohmann::json::array();
  for (const Edge& e : g.edges()) edges.push_back({e.u, e.v, e.weight});
  return {{"n", g.node_count()}, {"sources", g.sources()}, {"edges", edges}};
}

WeightedGraph graph_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("graph JSON must be an object");
  for (const char* key : {"n", "sources", "edges"}) {
    if (!j.contains(key)) throw std::invalid_argument(std::string("graph JSON missing field '") + key + "'");
  }
  const int n = j.at("n").get<int>();
  auto sources = j.at("sources").get<std::vector<NodeId>>();
  std::vector<Edge> edges;
  for (const auto& e : j.at("edges")) {
    if (!e.is_array() || e.size() != 3)
      throw std::invalid_argument("graph JSON edges must be [i, j, w] triples");
    edges.push_back({e[0].get<NodeId>(), e[1].get<NodeId>(), e[2].get<double>()});
  }
  return WeightedGraph(n, std::move(edges), std::move(sources));
}

WeightedGraph load_graph(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open graph file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
  return graph_from_json(j);
}

void save_graph(const WeightedGraph& g, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write graph file: " + path);
  out << graph_to_json(g).dump() << '\n';
}

const char* to_string(WeightMode mode) {
  return mode == WeightMode::kHopCount ? "hop_count" : "euclidean";
}

WeightMode weight_mode_from_string(const std::string& s) {
  if (s == "hop_count" || s == "hop") return WeightMode::kHopCount;
  if (s == "euclidean") return WeightMode::kEuclidean;
  throw std::invalid_argument("unknown weight mode: " + s);
}

}  // namespace mincon
