#pragma once

#include "qdtree/foliation.hpp"

#include <map>
#include <memory>
#include <string>

namespace qdt {

/// Point on a simplicial tree: offset (in the scaled metric) from the `from`
/// vertex of the edge. Offsets on rays are unbounded.
struct TreePoint {
  int edge = -1;
  double offset = 0.0;
};

struct TreeEdge {
  int id = -1;
  int from = -1;
  int to = -1;  // -1: infinite edge (RAY)
  double length = 0.0;  // scaled metric; ignored for rays
  int gap = -1;         // rays: index of the clip-circle gap they exit through
  bool ray() const { return to < 0; }
};

struct TreeVertex {
  int id = -1;
  std::vector<int> zeros;  // zero ids merged into this vertex
  bool origin_marker = false;
  int incident_edge = -1;
};

struct TreeBuildReport {
  bool tree_identity_ok = false;
  bool ray_count_ok = false;
  int expected_rays = 0;
  int rays = 0;
  std::vector<std::string> ambiguities;
  bool ok() const { return tree_identity_ok && ray_count_ok && ambiguities.empty(); }
};

struct TreeProjectionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Dual R-tree of one foliation of a polynomial quadratic differential, with
/// the leaf-space projection. Distances are in the scaled metric
/// metric_scale * d, d the transverse-measure distance.
class SimplicialTree {
 public:
  double metric_scale = 2.0;
  FoliationKind kind = FoliationKind::vertical;
  PolynomialQD phi;
  std::vector<TreeVertex> vertices;
  std::vector<TreeEdge> edges;
  TreeBuildReport report;

  int degree() const { return phi.degree(); }
  int ray_count() const;
  int finite_edge_count() const;
  int valence(int vertex) const;

  TreePoint vertex_point(int vertex) const;
  TreePoint canonical(TreePoint p) const;
  bool same_point(TreePoint a, TreePoint b, double tol = 1e-9) const;

  double distance(TreePoint a, TreePoint b) const;
  /// distance from a vertex to a point
  double distance_from_vertex(int vertex, TreePoint p) const;

  /// leaf-space projection pi(z)
  TreePoint project(cx z) const;

  /// weighted Frechet mean: the minimizer of sum w_i d(., p_i)^2; unique by
  /// convexity of d on a tree.
  TreePoint weighted_mean(const std::vector<TreePoint>& points,
                          const std::vector<double>& weights) const;

  /// Tree from explicit combinatorics (no projection support); used by the
  /// JSON loader and by tests that need a hand-built target.
  static SimplicialTree synthetic(int n_vertices, std::vector<TreeEdge> edge_list,
                                  double metric_scale = 2.0);

  // projection context (populated by build_leaf_tree)
  struct Context;
  std::shared_ptr<const Context> context;

 private:
  friend SimplicialTree build_leaf_tree(const CriticalGraph&, const PolynomialQD&,
                                        const TraceOptions&);
  std::vector<std::vector<double>> vertex_dist_;  // all-pairs, scaled metric
};

/// Build the dual tree of `graph.kind` for phi. The graph must be complete
/// (no truncated separatrices).
SimplicialTree build_leaf_tree(const CriticalGraph& graph, const PolynomialQD& phi,
                               const TraceOptions& opt = {});

inline SimplicialTree build_leaf_tree(const PolynomialQD& phi, FoliationKind kind,
                                      const TraceOptions& opt = {}) {
  return build_leaf_tree(critical_graph(phi, kind, opt), phi, opt);
}

inline TreePoint project(const PolynomialQD&, const SimplicialTree& tree, cx z,
                         FoliationKind kind) {
  if (kind != tree.kind)
    throw std::invalid_argument("project: kind does not match the tree");
  return tree.project(z);
}

inline double tree_distance(const SimplicialTree& tree, TreePoint a, TreePoint b) {
  return tree.distance(a, b);
}

struct ProductTreePoint {
  TreePoint first, second;
};

double product_distance(const SimplicialTree& t1, const SimplicialTree& t2,
                        const ProductTreePoint& p, const ProductTreePoint& q);

struct InjectivityReport {
  int pairs = 0;
  int violations = 0;
  double min_separation = 0.0;  // over pairs with positive transverse measure
};

/// Random pairs z != w must be separated by the product projection unless
/// both transverse measures between them vanish (Lemma-style spot check).
InjectivityReport injectivity_spot_check(const PolynomialQD& phi,
                                         const SimplicialTree& vertical,
                                         const SimplicialTree& horizontal,
                                         int samples, std::uint64_t seed);

struct ConvexFiberReport {
  bool convex = false;
  double max_violation = 0.0;
  int samples = 0;
};

/// The opposite-tree image of a traced leaf must be an interval of a single
/// geodesic, traversed monotonically.
ConvexFiberReport convex_fiber_spot_check(const PolynomialQD& phi,
                                          const SimplicialTree& other_tree,
                                          const TrajectorySegment& leaf);

}  // namespace qdt
