#include "doctest.h"

#include "qdtree/plateau.hpp"

#include <cmath>
#include <numbers>

using namespace qdt;

namespace {
PolynomialQD poly(std::initializer_list<cx> cs) { return PolynomialQD(std::vector<cx>(cs)); }
const PolynomialQD kOne = poly({1.0});
const PolynomialQD kZ = poly({0.0, 1.0});
constexpr double kPi = std::numbers::pi;

std::shared_ptr<SimplicialTree> tree_of(const PolynomialQD& phi, FoliationKind kind) {
  return std::make_shared<SimplicialTree>(build_leaf_tree(phi, kind));
}

PlateauProblem projection_problem(const PolynomialQD& phi, const DiskMesh& mesh,
                                  std::shared_ptr<SimplicialTree> t1,
                                  std::shared_ptr<SimplicialTree> t2) {
  PlateauProblem p;
  p.mesh = &mesh;
  p.tree1 = t1;
  p.tree2 = t2;
  for (int b : mesh.boundary_loop) {
    cx z = mesh.vertices[b];
    p.boundary.push_back({t1->project(z), t2->project(z)});
  }
  (void)phi;
  return p;
}

cx bump(cx z, cx center, double radius, cx amp) {
  double t = std::abs(z - center) / radius;
  if (t >= 1.0) return cx(0.0);
  return amp * std::exp(1.0 - 1.0 / (1.0 - t * t));
}
}  // namespace

TEST_SUITE_BEGIN("plateau");

TEST_CASE("constant boundary gives the constant map") {
  DiskMesh mesh = build_mesh(1.0, 0.15);
  auto t1 = tree_of(kZ, FoliationKind::vertical);
  auto t2 = tree_of(kZ, FoliationKind::horizontal);
  PlateauProblem p;
  p.mesh = &mesh;
  p.tree1 = t1;
  p.tree2 = t2;
  ProductTreePoint target{t1->project(cx(0.6, 0.2)), t2->project(cx(0.6, 0.2))};
  p.boundary.assign(mesh.boundary_loop.size(), target);
  SolverState s = solve(p, PlateauInit::constant);
  CHECK(s.converged);
  CHECK(discrete_energy(s.map, mesh) < 1e-20);
  for (const auto& v : s.map.product_values)
    CHECK(product_distance(*t1, *t2, v, target) < 1e-12);
}

TEST_CASE("line tree: harmonic extension reproduces the projection") {
  DiskMesh mesh = build_mesh(1.0, 0.08);
  auto t1 = tree_of(kOne, FoliationKind::vertical);
  auto t2 = tree_of(kOne, FoliationKind::horizontal);
  PlateauProblem p = projection_problem(kOne, mesh, t1, t2);
  p.tolerance = 1e-16;
  SolverState s = solve(p, PlateauInit::boundary_nearest);
  CHECK(s.converged);
  ProjectionComparison cmp = compare_with_projection(s, kOne, mesh);
  CHECK(cmp.sup_distance <= 1e-6);
  // energy history never increases
  for (size_t i = 1; i < s.energy_history.size(); ++i)
    CHECK(s.energy_history[i] <= s.energy_history[i - 1] + 1e-9);
}

TEST_CASE("boundary values are pinned bitwise") {
  DiskMesh mesh = build_mesh(1.0, 0.12);
  auto t1 = tree_of(kZ, FoliationKind::vertical);
  auto t2 = tree_of(kZ, FoliationKind::horizontal);
  PlateauProblem p = projection_problem(kZ, mesh, t1, t2);
  SolverState s = solve(p);
  for (size_t b = 0; b < mesh.boundary_loop.size(); ++b) {
    const ProductTreePoint& got = s.map.product_values[mesh.boundary_loop[b]];
    CHECK(got.first.edge == p.boundary[b].first.edge);
    CHECK(got.first.offset == p.boundary[b].first.offset);
    CHECK(got.second.edge == p.boundary[b].second.edge);
    CHECK(got.second.offset == p.boundary[b].second.offset);
  }
}

TEST_CASE("tripod solve: energy close to 2 l1 and refinement shrinks the gap") {
  auto t1 = tree_of(kZ, FoliationKind::vertical);
  auto t2 = tree_of(kZ, FoliationKind::horizontal);

  DiskMesh coarse = build_mesh(1.0, 0.05);
  PlateauProblem pc = projection_problem(kZ, coarse, t1, t2);
  SolverState sc = solve(pc);
  CHECK(sc.converged);
  ProjectionComparison cc = compare_with_projection(sc, kZ, coarse);
  CHECK(cc.reference_energy == doctest::Approx(4.0 * kPi / 3.0).epsilon(1e-8));
  CHECK(std::abs(cc.energy_gap) / cc.reference_energy < 0.05);

  DiskMesh fine = build_mesh(1.0, 0.025);
  PlateauProblem pf = projection_problem(kZ, fine, t1, t2);
  SolverState sf = solve(pf);
  ProjectionComparison cf = compare_with_projection(sf, kZ, fine);
  CHECK(cf.sup_distance <= 0.7 * cc.sup_distance);
  CHECK(std::abs(cf.energy_gap) <= std::abs(cc.energy_gap));
}

TEST_CASE("uniqueness: two initializations meet") {
  DiskMesh mesh = build_mesh(1.0, 0.1);
  auto t1 = tree_of(kZ, FoliationKind::vertical);
  auto t2 = tree_of(kZ, FoliationKind::horizontal);
  PlateauProblem p = projection_problem(kZ, mesh, t1, t2);
  p.tolerance = 1e-16;
  p.max_sweeps = 200000;
  SolverState a = solve(p, PlateauInit::projection);
  SolverState b = solve(p, PlateauInit::boundary_nearest);
  CHECK(a.converged);
  CHECK(b.converged);
  double sup = 0.0;
  for (size_t v = 0; v < mesh.vertices.size(); ++v)
    sup = std::max(sup, product_distance(*t1, *t2, a.map.product_values[v],
                                         b.map.product_values[v]));
  CHECK(sup <= 1e-6);
}

TEST_CASE("factor independence") {
  DiskMesh mesh = build_mesh(1.0, 0.12);
  auto t1 = tree_of(kZ, FoliationKind::vertical);
  auto t2 = tree_of(kZ, FoliationKind::horizontal);
  PlateauProblem p1 = projection_problem(kZ, mesh, t1, t2);
  p1.tolerance = 0.0;  // fixed sweep budget so both runs take identical steps
  p1.max_sweeps = 400;
  PlateauProblem p2 = p1;
  ProductTreePoint rigged{t1->vertex_point(0), t2->project(cx(0.4, 0.4))};
  for (auto& b : p2.boundary) b.second = rigged.second;  // factor 2 constant
  SolverState s1 = solve(p1);
  SolverState s2 = solve(p2);
  // factor-1 solutions agree although factor 2 differs
  double sup = 0.0;
  for (size_t v = 0; v < mesh.vertices.size(); ++v)
    sup = std::max(sup, t1->distance(s1.map.product_values[v].first,
                                     s2.map.product_values[v].first));
  CHECK(sup <= 1e-8);
  // and the product energy splits into factor energies
  double e1 = 0.0, e2 = 0.0;
  for (const MeshEdge& e : mesh.edges) {
    double d1 = t1->distance(s1.map.product_values[e.a].first,
                             s1.map.product_values[e.b].first);
    double d2 = t2->distance(s1.map.product_values[e.a].second,
                             s1.map.product_values[e.b].second);
    e1 += 0.5 * e.cot_weight * d1 * d1;
    e2 += 0.5 * e.cot_weight * d2 * d2;
  }
  CHECK(discrete_energy(s1.map, mesh) == doctest::Approx(e1 + e2).epsilon(1e-12));
}

TEST_CASE("perturbed boundary costs energy") {
  DiskMesh mesh = build_mesh(1.0, 0.08);
  auto t1 = tree_of(kZ, FoliationKind::vertical);
  auto t2 = tree_of(kZ, FoliationKind::horizontal);
  PlateauProblem p = projection_problem(kZ, mesh, t1, t2);
  SolverState base = solve(p);
  PlateauProblem q = p;
  for (size_t b = 0; b < q.boundary.size(); ++b)
    if (b % 3 == 0) q.boundary[b].first.offset += 0.1;
  SolverState bumped = solve(q);
  CHECK(discrete_energy(bumped.map, mesh) > discrete_energy(base.map, mesh));
}

TEST_CASE("energy comparison behind the new main inequality") {
  DiskMesh mesh = build_mesh(1.0, 0.05);
  auto id = DiscreteMap::complex_map(mesh, [](cx z) { return z; });
  NmiEnergyComparison trivial = energy_comparison_nmi(kZ, id, id, mesh);
  CHECK(std::abs(trivial.margin) < 1e-9 * (1.0 + trivial.energy_pi));

  auto f1 = DiscreteMap::complex_map(mesh, [](cx z) {
    return z + bump(z, cx(0.25, 0.1), 0.45, cx(0.05, 0.03));
  });
  NmiEnergyComparison one_sided = energy_comparison_nmi(kZ, f1, id, mesh);
  CHECK(one_sided.margin > 0.0);

  NmiEnergyComparison same = energy_comparison_nmi(kZ, f1, f1, mesh);
  CHECK(same.margin >= -1e-9 * (1.0 + same.energy_pi));
}

TEST_SUITE_END();
