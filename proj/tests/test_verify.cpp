#include "doctest.h"

#include "qdtree/verify.hpp"

#include <cmath>
#include <numbers>

using namespace qdt;

namespace {
PolynomialQD poly(std::initializer_list<cx> cs) { return PolynomialQD(std::vector<cx>(cs)); }
const PolynomialQD kZ = poly({0.0, 1.0});
constexpr double kPi = std::numbers::pi;
}  // namespace

TEST_SUITE_BEGIN("verify");

TEST_CASE("nmi trivial cases") {
  DiskMesh mesh = build_mesh(1.0, 0.1);
  BeltramiField zero;
  zero.mu.assign(mesh.triangles.size(), cx(0.0));
  zero.k = 0.0;
  NmiReport rep = check_nmi(kZ, zero, zero, mesh);
  CHECK(rep.lhs == 0.0);
  CHECK(rep.rhs == 0.0);
  CHECK(rep.margin == 0.0);

  // equal nonzero Beltrami fields: the lhs cancels between phi and -phi
  BeltramiField same;
  same.mu.assign(mesh.triangles.size(), cx(0.2, 0.1));
  same.k = std::abs(cx(0.2, 0.1));
  NmiReport rep2 = check_nmi(kZ, same, same, mesh);
  CHECK(std::abs(rep2.lhs) < 1e-14);
  CHECK(rep2.rhs > 0.0);
  CHECK(rep2.margin > 0.0);
}

TEST_CASE("nmi on random boundary-matched bump pairs") {
  DiskMesh mesh = build_mesh(1.0, 0.04);
  Rng rng(1234);
  for (int trial = 0; trial < 12; ++trial) {
    int deg = rng.uniform_int(0, 6);
    std::vector<cx> cs(deg + 1);
    for (auto& c : cs) c = cx(rng.uniform(-1, 1), rng.uniform(-1, 1));
    if (std::abs(cs.back()) < 0.2) cs.back() += cx(0.7, 0.0);
    PolynomialQD phi(cs);
    auto [f1, f2] = generate_boundary_matched_pair(mesh, 1000 + trial, 0.3);
    NmiReport rep = check_nmi(phi, beltrami_of(f1, mesh), beltrami_of(f2, mesh), mesh);
    CHECK(rep.k <= 0.5);
    CHECK(rep.margin >= -1e-9 * (1.0 + rep.rhs));
  }
}

TEST_CASE("nmi continuity bound in phi") {
  DiskMesh mesh = build_mesh(1.0, 0.05);
  Rng rng(77);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<cx> cs(4), ds(4);
    for (auto& c : cs) c = cx(rng.uniform(-1, 1), rng.uniform(-1, 1));
    ds = cs;
    for (auto& d : ds) d += 0.05 * cx(rng.uniform(-1, 1), rng.uniform(-1, 1));
    PolynomialQD phi(cs), p(ds);
    auto [f1, f2] = generate_boundary_matched_pair(mesh, 500 + trial, 0.3);
    BeltramiField b1 = beltrami_of(f1, mesh), b2 = beltrami_of(f2, mesh);
    NmiReport ra = check_nmi(phi, b1, b2, mesh);
    NmiReport rb = check_nmi(p, b1, b2, mesh);
    double k = ra.k;
    double bound = (k + 2.0 * k * k) / (1.0 - k * k) * l1_norm(phi.minus(p), 1.0);
    CHECK(std::abs(ra.margin - rb.margin) <= bound + 1e-12);
  }
}

TEST_CASE("boundary matched pair generation") {
  DiskMesh mesh = build_mesh(1.0, 0.06);
  // amplitude 0: both identity
  auto [f1, f2] = generate_boundary_matched_pair(mesh, 42, 0.0);
  for (size_t v = 0; v < mesh.vertices.size(); ++v) {
    CHECK(std::abs(f1.values[v] - mesh.vertices[v]) == 0.0);
    CHECK(std::abs(f2.values[v] - mesh.vertices[v]) == 0.0);
  }
  // moderate amplitude: small dilatation, exact identity on the boundary
  auto [g1, g2] = generate_boundary_matched_pair(mesh, 43, 0.05);
  CHECK(beltrami_of(g1, mesh).k <= 0.2);
  CHECK(beltrami_of(g2, mesh).k <= 0.2);
  for (int b : mesh.boundary_loop) {
    CHECK(g1.values[b] == mesh.vertices[b]);
    CHECK(g2.values[b] == mesh.vertices[b]);
  }
  // oversize amplitude refuses to build
  std::vector<BumpSpec> too_big{{cx(0.0), 0.3, cx(0.4, 0.0)}};
  CHECK_THROWS(generate_bump_map(mesh, too_big));
}

TEST_CASE("reich-strebel convergence study") {
  auto bump_f = [](cx z) {
    double t = std::abs(z - cx(0.2, 0.1)) / 0.5;
    if (t >= 1.0) return z;
    return z + cx(0.04, 0.02) * std::exp(1.0 - 1.0 / (1.0 - t * t));
  };
  RsConvergenceTable table = verify_reich_strebel(kZ, bump_f, 0.08, 3);
  REQUIRE(table.rows.size() == 3);
  CHECK(table.rows.back().rel_error <= 1e-3);
  CHECK(table.richardson_slope >= 1.8);
  // identity map: both sides vanish at every level
  RsConvergenceTable idt = verify_reich_strebel(kZ, [](cx z) { return z; }, 0.1, 2);
  for (const auto& row : idt.rows) {
    CHECK(std::abs(row.direct) < 1e-9);
    CHECK(std::abs(row.rs) < 1e-12);
  }
}

TEST_CASE("example A") {
  CHECK_THROWS(example_a(1.0, 4.0, 4.0, 0.25));
  for (double k : {0.5, 2.0, 5.0}) {
    ExampleAReport rep = example_a(k, 4.0, 4.0, 0.25);
    // Hopf differentials of h_k and g_k cancel exactly; Eq-(2.2) scale
    CHECK(std::abs(rep.hopf_h - cx((1.0 - k * k) / 4.0, 0.0)) < 1e-12);
    CHECK(rep.hopf_sum_abs == 0.0);
    CHECK(std::abs(rep.beltrami_f - cx((1.0 - k * k) / (1.0 + k * k), 0.0)) < 1e-12);
    CHECK(rep.beltrami_tau_abs < 1e-14);
    CHECK(rep.boundary_discrepancy == 0.0);
    CHECK(rep.interior_discrepancy ==
          doctest::Approx(std::abs(k - 1.0 / k)).epsilon(1e-12));
    // quadrupling boxes quadruple the L1 mass
    for (size_t j = 1; j < rep.l1_growth.size(); ++j)
      CHECK(rep.l1_growth[j][1] / rep.l1_growth[j - 1][1] ==
            doctest::Approx(4.0).epsilon(1e-6));
    CHECK(rep.conformal_hopf_l1 < 1e-12);
    // Bers norm blows up toward the preimage of infinity
    for (size_t j = 1; j < rep.bers_blowup.size(); ++j)
      CHECK(rep.bers_blowup[j][1] > 2.0 * rep.bers_blowup[j - 1][1]);
  }
}

TEST_CASE("stability of the example A pair") {
  DiskMesh rect = build_rect_mesh(-2.0, 2.0, 0.0, 2.0, 0.08);
  Rng rng(5150);
  for (int trial = 0; trial < 6; ++trial) {
    VariationSpec spec;
    spec.center = cx(rng.uniform(-1.2, 1.2), rng.uniform(0.5, 1.5));
    spec.radius = 0.4;
    spec.seed = 900 + trial;
    StabilityReport rep = stability_second_variation_example_a(2.0, rect, spec);
    CHECK(std::abs(rep.first_variation) <= 1e-8 * (1.0 + rep.energy_scale));
    CHECK(rep.second_variation >= -1e-6 * (1.0 + rep.energy_scale));
  }
}

TEST_CASE("stability of the solved projection pair") {
  PolynomialQD phi = kZ;
  DiskMesh mesh = build_mesh(1.0, 0.06);
  auto t1 = std::make_shared<SimplicialTree>(build_leaf_tree(phi, FoliationKind::vertical));
  auto t2 = std::make_shared<SimplicialTree>(build_leaf_tree(phi, FoliationKind::horizontal));
  PlateauProblem problem;
  problem.mesh = &mesh;
  problem.tree1 = t1;
  problem.tree2 = t2;
  for (int b : mesh.boundary_loop) {
    cx z = mesh.vertices[b];
    problem.boundary.push_back({t1->project(z), t2->project(z)});
  }
  problem.tolerance = 1e-15;
  SolverState base = solve(problem);
  REQUIRE(base.converged);

  Rng rng(31337);
  for (int trial = 0; trial < 4; ++trial) {
    VariationSpec spec;
    spec.center = 0.4 * rng.unit();
    spec.radius = 0.35;
    spec.seed = 100 + trial;
    StabilityReport rep = stability_second_variation(phi, mesh, base, spec);
    CHECK(std::abs(rep.first_variation) <= 1e-8 * (1.0 + rep.energy_scale));
    CHECK(rep.second_variation >= -1e-6 * (1.0 + rep.energy_scale));
  }
}

TEST_CASE("approximate by polynomial") {
  // already a polynomial: zero error
  PolynomialApproximation exact =
      approximate_by_polynomial([](cx z) { return 0.3 + z * z; }, 4);
  CHECK(exact.l1_error < 1e-12);
  // geometric target: strictly decreasing errors with degree
  auto target = [](cx z) { return 1.0 / (z - 2.0); };
  double prev = std::numeric_limits<double>::infinity();
  for (int deg : {4, 8, 12}) {
    PolynomialApproximation appr = approximate_by_polynomial(target, deg);
    CHECK(appr.l1_error < prev);
    prev = appr.l1_error;
  }
  // degree 0 on z: the truncation is 0, error = l1 of z
  PolynomialApproximation zero = approximate_by_polynomial([](cx z) { return z; }, 0);
  CHECK(zero.l1_error == doctest::Approx(2.0 * kPi / 3.0).epsilon(1e-8));
}

TEST_SUITE_END();
