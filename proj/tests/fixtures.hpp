#pragma once

#include "mincon/graph.hpp"

namespace fixture {

// 0(S) - 1 - 2 - 3, unit weights.
inline mincon::WeightedGraph path4() {
  return mincon::WeightedGraph(4, {{0, 1, 1}, {1, 2, 1}, {2, 3, 1}}, {0});
}

inline mincon::WeightedGraph triangle() {
  return mincon::WeightedGraph(3, {{0, 1, 1}, {0, 2, 1}, {1, 2, 1}}, {0});
}

// 0(S)-1, 0-2, 1-3, 2-3.
inline mincon::WeightedGraph diamond() {
  return mincon::WeightedGraph(4, {{0, 1, 1}, {0, 2, 1}, {1, 3, 1}, {2, 3, 1}}, {0});
}

}  // namespace fixture
