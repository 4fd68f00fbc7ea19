#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace mincon {

using NodeId = std::int32_t;

struct Edge {
  NodeId u;
  NodeId v;
  double weight;
};

struct Neighbor {
  NodeId node;
  double weight;
};

// Undirected connected graph with strictly positive nominal weights and a
// nonempty strict subset of source nodes. Immutable after construction.
class WeightedGraph {
 public:
  // Throws std::invalid_argument if the graph is disconnected, has a
  // non-positive or non-finite weight, a self-loop, a duplicate edge, or the
  // source set is empty or covers every node.
  WeightedGraph(int node_count, std::vector<Edge> edges, std::vector<NodeId> sources);

  int node_count() const { return node_count_; }
  std::size_t edge_count() const { return edges_.size(); }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::vector<NodeId>& sources() const { return sources_; }
  bool is_source(NodeId i) const { return is_source_[static_cast<std::size_t>(i)] != 0; }

  // Neighbors sorted by node index.
  std::span<const Neighbor> neighbors(NodeId i) const;
  std::size_t degree(NodeId i) const { return neighbors(i).size(); }

  // Directed arcs (i, j) are numbered in adjacency order; arcs of node i
  // occupy [first_arc(i), first_arc(i) + degree(i)).
  std::size_t first_arc(NodeId i) const { return offsets_[static_cast<std::size_t>(i)]; }
  std::size_t arc_count() const { return adjacency_.size(); }

  // Nominal weight of {i, j}; throws std::out_of_range if not adjacent.
  double weight(NodeId i, NodeId j) const;
  bool adjacent(NodeId i, NodeId j) const;
  double max_weight() const { return max_weight_; }

  friend bool operator==(const WeightedGraph& a, const WeightedGraph& b);

 private:
  int node_count_;
  std::vector<Edge> edges_;
  std::vector<NodeId> sources_;
  std::vector<std::uint8_t> is_source_;
  std::vector<std::size_t> offsets_;
  std::vector<Neighbor> adjacency_;
  double max_weight_ = 0.0;
};

bool is_connected(int node_count, std::span<const Edge> edges);

// Absolute tolerance used when deciding d_j + w_ij == d_i.
inline constexpr double kTieTolerance = 1e-9;

enum class ChainLength { kNodes, kEdges };

struct StructuralOptions {
  double tie_tolerance = kTieTolerance;
  // Used when no non-source node has a non-constraining neighbor.
  double default_zeta = 0.5;
  ChainLength chain_length = ChainLength::kNodes;
};

struct StructuralConstants {
  std::vector<double> distances;
  std::vector<std::vector<NodeId>> constraining_sets;
  double zeta = 0.5;
  int effective_diameter = 1;

  double max_distance() const;
};

// Multi-source Dijkstra: d_i = 0 on sources, min_j (d_j + w_ij) elsewhere.
std::vector<double> shortest_distances(const WeightedGraph& g);

// C(i) = { j in N(i) : d_j + w_ij = d_i } for non-sources, empty for sources.
std::vector<std::vector<NodeId>> true_constraining_sets(const WeightedGraph& g,
                                                        std::span<const double> d,
                                                        double tolerance = kTieTolerance);

// Largest ratio d_i / (d_l + w_il) over non-constraining neighbors l.
double compute_zeta(const WeightedGraph& g, std::span<const double> d,
                    const std::vector<std::vector<NodeId>>& constraining,
                    double default_zeta = 0.5);

// Longest chain i_0, ..., i_h with i_{l-1} in C(i_l). Counts nodes by default.
// Throws std::logic_error if the constraining relation has a cycle.
int effective_diameter(const WeightedGraph& g,
                       const std::vector<std::vector<NodeId>>& constraining,
                       ChainLength mode = ChainLength::kNodes);

StructuralConstants compute_structural_constants(const WeightedGraph& g,
                                                 const StructuralOptions& options = {});

enum class WeightMode { kHopCount, kEuclidean };

struct GeometricGraphSpec {
  int node_count = 500;
  double area_width = 4.0;   // km
  double area_height = 2.0;  // km
  double radius = 0.35;      // km
  WeightMode weight_mode = WeightMode::kHopCount;
  std::uint64_t seed = 1;
  // Selects an independent placement stream, e.g. the trial index.
  std::uint64_t substream = 0;
  int max_attempts = 200;
};

struct Point {
  double x;
  double y;
};

struct GeometricGraph {
  WeightedGraph graph;
  std::vector<Point> positions;
  int attempts;
};

// Uniform placement in the rectangle, edges within radius, node 0 as the
// single source. Redraws on a fresh substream until connected; throws
// std::runtime_error after max_attempts.
GeometricGraph generate_geometric_layout(const GeometricGraphSpec& spec);
WeightedGraph generate_geometric(const GeometricGraphSpec& spec);

// {"n": int, "sources": [int], "edges": [[i, j, w]]}
nlohmann::json graph_to_json(const WeightedGraph& g);
WeightedGraph graph_from_json(const nlohmann::json& j);
WeightedGraph load_graph(const std::string& path);
void save_graph(const WeightedGraph& g, const std::string& path);

const char* to_string(WeightMode mode);
WeightMode weight_mode_from_string(const std::string& s);

}  // namespace mincon
