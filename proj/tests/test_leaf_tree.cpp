#include "doctest.h"

#include "qdtree/leaf_tree.hpp"

#include <cmath>
#include <numbers>

using namespace qdt;

namespace {
PolynomialQD poly(std::initializer_list<cx> cs) { return PolynomialQD(std::vector<cx>(cs)); }
const PolynomialQD kOne = poly({1.0});
const PolynomialQD kZ = poly({0.0, 1.0});
const PolynomialQD kZ2m1 = poly({-1.0, 0.0, 1.0});
// (z^2-1)^2: two double zeros, the Figure-1 configuration
const PolynomialQD kFig1 = poly({1.0, 0.0, -2.0, 0.0, 1.0});
constexpr double kPi = std::numbers::pi;
}  // namespace

TEST_SUITE_BEGIN("leaf_tree");

TEST_CASE("line tree of a constant differential") {
  SimplicialTree t = build_leaf_tree(kOne, FoliationKind::vertical);
  CHECK(t.vertices.size() == 1);
  CHECK(t.vertices[0].origin_marker);
  CHECK(t.ray_count() == 2);
  CHECK(t.finite_edge_count() == 0);
  CHECK(t.report.ok());
}

TEST_CASE("tripod of z dz^2") {
  SimplicialTree t = build_leaf_tree(kZ, FoliationKind::vertical);
  CHECK(t.vertices.size() == 1);
  CHECK(t.ray_count() == 3);
  CHECK(t.valence(0) == 3);
  CHECK(t.report.ok());
}

TEST_CASE("merged vertex of (z^2-1)dz^2, vertical") {
  SimplicialTree t = build_leaf_tree(kZ2m1, FoliationKind::vertical);
  CHECK(t.vertices.size() == 1);
  CHECK(t.vertices[0].zeros.size() == 2);
  CHECK(t.ray_count() == 4);
  CHECK(t.finite_edge_count() == 0);
  CHECK(t.report.ok());
}

TEST_CASE("horizontal tree of (z^2-1)dz^2 has one finite edge of length pi") {
  SimplicialTree t = build_leaf_tree(kZ2m1, FoliationKind::horizontal);
  CHECK(t.vertices.size() == 2);
  CHECK(t.ray_count() == 4);
  REQUIRE(t.finite_edge_count() == 1);
  for (const auto& e : t.edges)
    if (!e.ray()) CHECK(e.length == doctest::Approx(kPi).epsilon(1e-6));
  CHECK(t.report.ok());
}

TEST_CASE("Figure-1 tree: two double zeros") {
  SimplicialTree t = build_leaf_tree(kFig1, FoliationKind::vertical);
  CHECK(t.vertices.size() == 2);
  CHECK(t.ray_count() == 6);
  REQUIRE(t.finite_edge_count() == 1);
  CHECK(t.valence(0) == 4);
  CHECK(t.valence(1) == 4);
  // edge length: 2 * int_{-1}^{1} (1-x^2) dx = 8/3
  for (const auto& e : t.edges)
    if (!e.ray()) CHECK(e.length == doctest::Approx(8.0 / 3.0).epsilon(1e-6));
  CHECK(t.report.ok());
}

TEST_CASE("projection for dz^2 depends only on x") {
  SimplicialTree t = build_leaf_tree(kOne, FoliationKind::vertical);
  TreePoint a = t.project(cx(0.3, 7.0));
  TreePoint b = t.project(cx(0.3, -2.0));
  CHECK(t.distance(a, b) < 1e-12);
  CHECK(t.distance(t.project(cx(0.0)), t.project(cx(1.0))) ==
        doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("projection for z dz^2: sectors and the closed form") {
  SimplicialTree t = build_leaf_tree(kZ, FoliationKind::vertical);
  // pi(0) is the tripod center
  TreePoint center = t.project(cx(0.0));
  CHECK(t.distance(center, t.vertex_point(0)) < 1e-12);
  // d(pi(0), pi(x)) = 2 * (2/3) x^{3/2} for x > 0
  for (double x : {0.3, 0.7, 1.2}) {
    double d = t.distance(center, t.project(cx(x, 0.0)));
    CHECK(d == doctest::Approx(2.0 * (2.0 / 3.0) * std::pow(x, 1.5)).epsilon(1e-7));
  }
  // the three sectors land on three distinct rays
  TreePoint right = t.project(cx(0.8, 0.0));
  TreePoint upleft = t.project(0.8 * std::exp(cx(0, 2.0 * kPi / 3.0)));
  TreePoint downleft = t.project(0.8 * std::exp(cx(0, -2.0 * kPi / 3.0)));
  CHECK(right.edge != upleft.edge);
  CHECK(right.edge != downleft.edge);
  CHECK(upleft.edge != downleft.edge);
  // all at equal distance from the center
  double d0 = t.distance(center, right);
  CHECK(t.distance(center, upleft) == doctest::Approx(d0).epsilon(1e-7));
  CHECK(t.distance(upleft, downleft) == doctest::Approx(2.0 * d0).epsilon(1e-7));
}

TEST_CASE("tree_distance against a subdivision oracle") {
  // synthetic tree: star with 3 finite edges plus a path, lengths arbitrary
  std::vector<TreeEdge> edges = {
      {0, 0, 1, 1.5, -1}, {1, 0, 2, 0.7, -1}, {2, 0, 3, 2.2, -1},
      {3, 3, 4, 0.4, -1}, {4, 4, -1, 0.0, 0}, {5, 1, -1, 0.0, 1},
  };
  SimplicialTree t = SimplicialTree::synthetic(5, edges);
  CHECK(t.distance({0, 0.5}, {0, 0.5}) == 0.0);
  // oracle: dense subdivision + Dijkstra on a path graph is overkill; the
  // unique-path structure lets us check hand-computed values
  CHECK(t.distance({0, 0.4}, {1, 0.3}) == doctest::Approx(0.7));      // via vertex 0
  CHECK(t.distance({0, 1.5}, {3, 0.4}) == doctest::Approx(1.5 + 2.2 + 0.4));
  CHECK(t.distance({4, 2.0}, {5, 1.0}) == doctest::Approx(2.0 + 0.4 + 2.2 + 1.5 + 1.0));
  // symmetry + triangle inequality on random points
  Rng rng(99);
  std::vector<TreePoint> pts;
  for (int i = 0; i < 24; ++i) {
    int e = rng.uniform_int(0, 5);
    double off = t.edges[e].ray() ? rng.uniform(0.0, 3.0)
                                  : rng.uniform(0.0, t.edges[e].length);
    pts.push_back({e, off});
  }
  for (size_t i = 0; i < pts.size(); ++i)
    for (size_t j = 0; j < pts.size(); ++j) {
      CHECK(t.distance(pts[i], pts[j]) == doctest::Approx(t.distance(pts[j], pts[i])));
      for (size_t k = 0; k < pts.size(); ++k)
        CHECK(t.distance(pts[i], pts[j]) <=
              t.distance(pts[i], pts[k]) + t.distance(pts[k], pts[j]) + 1e-12);
    }
}

TEST_CASE("four point condition on projected samples") {
  SimplicialTree t = build_leaf_tree(kZ2m1, FoliationKind::horizontal);
  Rng rng(17);
  std::vector<TreePoint> pts;
  for (int i = 0; i < 12; ++i)
    pts.push_back(t.project(cx(rng.uniform(-1.5, 1.5), rng.uniform(-1.5, 1.5))));
  for (size_t a = 0; a < pts.size(); ++a)
    for (size_t b = a + 1; b < pts.size(); ++b)
      for (size_t c = b + 1; c < pts.size(); ++c)
        for (size_t d = c + 1; d < pts.size(); ++d) {
          double s1 = t.distance(pts[a], pts[b]) + t.distance(pts[c], pts[d]);
          double s2 = t.distance(pts[a], pts[c]) + t.distance(pts[b], pts[d]);
          double s3 = t.distance(pts[a], pts[d]) + t.distance(pts[b], pts[c]);
          double m1 = std::max({s1, s2, s3});
          double m2 = s1 + s2 + s3 - m1 - std::min({s1, s2, s3});
          CHECK(m1 - m2 <= 1e-9 * (1.0 + m1));
        }
}

TEST_CASE("product distance") {
  SimplicialTree t1 = build_leaf_tree(kZ, FoliationKind::vertical);
  SimplicialTree t2 = build_leaf_tree(kZ, FoliationKind::horizontal);
  ProductTreePoint p{t1.project(cx(0.5, 0.2)), t2.project(cx(0.5, 0.2))};
  CHECK(product_distance(t1, t2, p, p) == 0.0);
  // components at distances 3 and 4 combine to 5 on synthetic line trees
  SimplicialTree line = SimplicialTree::synthetic(
      1, {{0, 0, -1, 0.0, 0}, {1, 0, -1, 0.0, 1}});
  ProductTreePoint a{{0, 0.0}, {0, 0.0}};
  ProductTreePoint b{{0, 3.0}, {0, 4.0}};
  CHECK(product_distance(line, line, a, b) == doctest::Approx(5.0));
}

TEST_CASE("constant differential: product space is a scaled flat plane") {
  double k = 2.0;
  PolynomialQD phi = poly({cx(1.0 - k * k, 0.0)});
  SimplicialTree t1 = build_leaf_tree(phi, FoliationKind::vertical);
  SimplicialTree t2 = build_leaf_tree(phi, FoliationKind::horizontal);
  Rng rng(31);
  for (int i = 0; i < 40; ++i) {
    cx z(rng.uniform(-2, 2), rng.uniform(-2, 2));
    cx w(rng.uniform(-2, 2), rng.uniform(-2, 2));
    ProductTreePoint pz{t1.project(z), t2.project(z)};
    ProductTreePoint pw{t1.project(w), t2.project(w)};
    double expected = 2.0 * std::sqrt(std::abs(1.0 - k * k)) * std::abs(z - w);
    CHECK(product_distance(t1, t2, pz, pw) == doctest::Approx(expected).epsilon(1e-10));
  }
}

TEST_CASE("leaf constancy of the projection") {
  PolynomialQD p = poly({cx(0.2, -0.4), cx(1.0, 0.0), cx(0.0, 1.0)});
  SimplicialTree t = build_leaf_tree(p, FoliationKind::vertical);
  TrajectorySegment leaf = trace_trajectory(p, cx(0.6, 0.3), FoliationKind::vertical);
  REQUIRE(leaf.points.size() > 20);
  size_t stride = std::max<size_t>(1, leaf.points.size() / 100);
  TreePoint first = t.project(leaf.points[leaf.points.size() / 2]);
  for (size_t i = 0; i < leaf.points.size(); i += stride) {
    if (std::abs(leaf.points[i]) > 1.9) continue;
    TreePoint q = t.project(leaf.points[i]);
    CHECK(t.distance(first, q) <= 1e-6 * t.metric_scale);
  }
}

TEST_CASE("local isometry on short transversal segments") {
  PolynomialQD p = poly({cx(0.5, 0.1), cx(0.0, -1.0), cx(1.0, 0.0)});
  SimplicialTree t = build_leaf_tree(p, FoliationKind::vertical);
  Rng rng(23);
  int checked = 0;
  for (int i = 0; i < 60 && checked < 25; ++i) {
    cx a(rng.uniform(-1.2, 1.2), rng.uniform(-1.2, 1.2));
    cx b = a + 0.05 * rng.unit();
    double measure;
    try {
      measure = transverse_measure(p, PathPolyline({a, b}), FoliationKind::vertical);
    } catch (const AmbiguousBranchError&) {
      continue;
    }
    if (measure < 1e-3) continue;
    TreePoint pa, pb;
    try {
      pa = t.project(a);
      pb = t.project(b);
    } catch (const TreeProjectionError&) {
      continue;
    }
    double d = t.distance(pa, pb);
    if (d < t.metric_scale * measure - 1e-6) continue;  // folded across a leaf
    CHECK(d == doctest::Approx(t.metric_scale * measure).epsilon(1e-6));
    ++checked;
  }
  CHECK(checked >= 20);
}

TEST_CASE("infinite edge count equals degree + 2 on random polynomials") {
  Rng rng(123);
  int built = 0;
  for (int trial = 0; trial < 8 && built < 5; ++trial) {
    int deg = rng.uniform_int(1, 6);
    std::vector<cx> cs(deg + 1);
    for (auto& c : cs) c = cx(rng.uniform(-1, 1), rng.uniform(-1, 1));
    if (std::abs(cs.back()) < 0.2) cs.back() += cx(1.0, 0.0);
    PolynomialQD p(cs);
    SimplicialTree tv = build_leaf_tree(p, FoliationKind::vertical);
    SimplicialTree th = build_leaf_tree(p, FoliationKind::horizontal);
    CHECK(tv.ray_count() == deg + 2);
    CHECK(th.ray_count() == deg + 2);
    CHECK(tv.report.ok());
    CHECK(th.report.ok());
    ++built;
  }
  CHECK(built == 5);
}

TEST_CASE("injectivity spot check for z dz^2") {
  SimplicialTree tv = build_leaf_tree(kZ, FoliationKind::vertical);
  SimplicialTree th = build_leaf_tree(kZ, FoliationKind::horizontal);
  InjectivityReport rep = injectivity_spot_check(kZ, tv, th, 1000, 77);
  CHECK(rep.pairs > 900);
  CHECK(rep.violations == 0);
  CHECK(rep.min_separation > 0.0);
}

TEST_CASE("convex fibers") {
  // dz^2: a vertical leaf maps onto the whole horizontal line tree monotonically
  SimplicialTree th = build_leaf_tree(kOne, FoliationKind::horizontal);
  TrajectorySegment leaf = trace_trajectory(kOne, cx(0.3, 0.0), FoliationKind::vertical);
  ConvexFiberReport rep = convex_fiber_spot_check(kOne, th, leaf);
  CHECK(rep.convex);

  SimplicialTree th2 = build_leaf_tree(kZ, FoliationKind::horizontal);
  TrajectorySegment leaf2 = trace_trajectory(kZ, cx(0.5, 0.4), FoliationKind::vertical);
  ConvexFiberReport rep2 = convex_fiber_spot_check(kZ, th2, leaf2);
  CHECK(rep2.convex);

  // degenerate single-point "leaf"
  TrajectorySegment point;
  point.kind = FoliationKind::vertical;
  point.points = {cx(0.4, 0.1)};
  point.cum_re = {0.0};
  point.cum_im = {0.0};
  ConvexFiberReport rep3 = convex_fiber_spot_check(kZ, th2, point);
  CHECK(rep3.convex);
}

TEST_CASE("weighted mean on trees") {
  SimplicialTree t = build_leaf_tree(kZ, FoliationKind::vertical);
  TreePoint p = t.project(cx(0.7, 0.1));
  CHECK(t.distance(t.weighted_mean({p}, {2.0}), p) < 1e-12);
  // two points: midpoint of the arc
  TreePoint a = t.project(cx(0.8, 0.0));
  TreePoint b = t.project(0.8 * std::exp(cx(0, 2.0 * kPi / 3.0)));
  TreePoint mid = t.weighted_mean({a, b}, {1.0, 1.0});
  CHECK(t.distance(mid, a) == doctest::Approx(t.distance(mid, b)).epsilon(1e-9));
  CHECK(t.distance(a, mid) + t.distance(mid, b) ==
        doctest::Approx(t.distance(a, b)).epsilon(1e-9));
  // tripod, three symmetric branch points: the center wins
  TreePoint c = t.project(0.8 * std::exp(cx(0, -2.0 * kPi / 3.0)));
  TreePoint center = t.weighted_mean({a, b, c}, {1.0, 1.0, 1.0});
  CHECK(t.distance(center, t.vertex_point(0)) < 1e-9);
  // oracle: center beats epsilon-offsets onto each branch
  auto objective = [&](TreePoint x) {
    double f = 0.0;
    for (const TreePoint& q : {a, b, c}) {
      double d = t.distance(x, q);
      f += d * d;
    }
    return f;
  };
  double f0 = objective(center);
  for (const TreePoint& q : {a, b, c}) {
    TreePoint off{q.edge, 0.05};
    CHECK(objective(off) > f0);
  }
}

TEST_SUITE_END();
