#pragma once

#include "magc/graph.hpp"

#include <vector>

namespace fixture {

using magc::AttributedGraph;
using magc::Edge;

inline AttributedGraph path3() { return AttributedGraph::from_edges(3, {{0, 1}, {1, 2}}); }

inline AttributedGraph triangle() { return AttributedGraph::from_edges(3, {{0, 1}, {1, 2}, {0, 2}}); }

inline std::vector<Edge> two_triangle_edges() {
  return {{0, 1}, {1, 2}, {0, 2}, {3, 4}, {4, 5}, {3, 5}};
}

inline AttributedGraph two_triangles() { return AttributedGraph::from_edges(6, two_triangle_edges()); }

/// Two triangles joined by the bridge 2-3.
inline AttributedGraph bridged_triangles() {
  auto edges = two_triangle_edges();
  edges.push_back({2, 3});
  return AttributedGraph::from_edges(6, edges);
}

inline AttributedGraph cycle4() { return AttributedGraph::from_edges(4, {{0, 1}, {1, 2}, {2, 3}, {3, 0}}); }

inline AttributedGraph star5() { return AttributedGraph::from_edges(5, {{0, 1}, {0, 2}, {0, 3}, {0, 4}}); }

/// Two disjoint cliques on nodes 0..m-1 and m..2m-1.
inline AttributedGraph two_cliques(int m) {
  std::vector<Edge> edges;
  for (int base : {0, m})
    for (int i = 0; i < m; ++i)
      for (int j = i + 1; j < m; ++j) edges.push_back({base + i, base + j});
  return AttributedGraph::from_edges(2 * m, edges);
}

}  // namespace fixture
