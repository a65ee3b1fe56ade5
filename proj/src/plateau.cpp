#include "qdtree/plateau.hpp"

#include <algorithm>
#include <cmath>

namespace qdt {

namespace {

// line trees (two rays at one vertex) are isometric to R; coordinate
// descent there is plain weighted averaging
bool is_line_tree(const SimplicialTree& t) {
  return t.vertices.size() == 1 && t.edges.size() == 2 && t.edges[0].ray() &&
         t.edges[1].ray();
}

double line_coordinate(const TreePoint& p) { return p.edge == 0 ? p.offset : -p.offset; }
TreePoint line_point(double t) { return {t >= 0.0 ? 0 : 1, std::abs(t)}; }

struct FactorSolver {
  const SimplicialTree* tree;
  bool line;

  TreePoint mean(const std::vector<TreePoint>& pts, const std::vector<double>& ws) const {
    if (line) {
      double acc = 0.0, wsum = 0.0;
      for (size_t i = 0; i < pts.size(); ++i) {
        acc += ws[i] * line_coordinate(pts[i]);
        wsum += ws[i];
      }
      return wsum > 0.0 ? line_point(acc / wsum) : pts.front();
    }
    return tree->weighted_mean(pts, ws);
  }

  double local_energy(const TreePoint& x, const std::vector<TreePoint>& pts,
                      const std::vector<double>& ws) const {
    double f = 0.0;
    for (size_t i = 0; i < pts.size(); ++i) {
      double d = tree->distance(x, pts[i]);
      f += ws[i] * d * d;
    }
    return f;
  }
};

}  // namespace

double discrete_energy(const DiscreteMap& map, const DiskMesh& mesh) {
  if (map.target != DiscreteMap::Target::tree_product)
    throw std::invalid_argument("discrete_energy: expects a tree-product map");
  double acc = 0.0;
  for (const MeshEdge& e : mesh.edges) {
    double d1 = map.tree1->distance(map.product_values[e.a].first,
                                    map.product_values[e.b].first);
    double d2 = map.tree2->distance(map.product_values[e.a].second,
                                    map.product_values[e.b].second);
    acc += 0.5 * e.cot_weight * (d1 * d1 + d2 * d2);
  }
  return acc;
}

SolverState solve(const PlateauProblem& problem, PlateauInit init) {
  const DiskMesh& mesh = *problem.mesh;
  DiscreteMap initial;
  initial.target = DiscreteMap::Target::tree_product;
  initial.tree1 = problem.tree1;
  initial.tree2 = problem.tree2;
  if (init == PlateauInit::projection) {
    initial = DiscreteMap::product_projection_map(mesh, problem.tree1, problem.tree2);
  } else {
    initial.product_values.resize(mesh.vertices.size());
    for (size_t v = 0; v < mesh.vertices.size(); ++v) {
      if (init == PlateauInit::constant) {
        initial.product_values[v] = problem.boundary.front();
        continue;
      }
      size_t best = 0;
      double bd = std::numeric_limits<double>::infinity();
      for (size_t b = 0; b < mesh.boundary_loop.size(); ++b) {
        double d = std::abs(mesh.vertices[v] - mesh.vertices[mesh.boundary_loop[b]]);
        if (d < bd) {
          bd = d;
          best = b;
        }
      }
      initial.product_values[v] = problem.boundary[best];
    }
  }
  return solve(problem, std::move(initial));
}

SolverState solve(const PlateauProblem& problem, DiscreteMap initial) {
  const DiskMesh& mesh = *problem.mesh;
  if (problem.boundary.size() != mesh.boundary_loop.size())
    throw std::invalid_argument("solve: boundary values must match the boundary loop");
  if (initial.product_values.size() != mesh.vertices.size())
    throw std::invalid_argument("solve: initial map size mismatch");

  SolverState state;
  state.map = std::move(initial);
  state.map.target = DiscreteMap::Target::tree_product;
  state.map.tree1 = problem.tree1;
  state.map.tree2 = problem.tree2;

  // pin the boundary exactly
  for (size_t b = 0; b < mesh.boundary_loop.size(); ++b)
    state.map.product_values[mesh.boundary_loop[b]] = problem.boundary[b];

  FactorSolver f1{problem.tree1.get(), is_line_tree(*problem.tree1)};
  FactorSolver f2{problem.tree2.get(), is_line_tree(*problem.tree2)};

  std::vector<int> interior;
  for (size_t v = 0; v < mesh.vertices.size(); ++v)
    if (!mesh.is_boundary[v]) interior.push_back(static_cast<int>(v));

  double energy = discrete_energy(state.map, mesh);
  state.energy_history.push_back(energy);
  double tol_abs = problem.tolerance * (energy + 1.0);

  std::vector<TreePoint> pts1, pts2;
  std::vector<double> ws;
  for (long sweep = 0; sweep < problem.max_sweeps; ++sweep) {
    double decrease = 0.0;
    for (int v : interior) {
      pts1.clear();
      pts2.clear();
      ws.clear();
      for (int e : mesh.vertex_edges[v]) {
        const MeshEdge& edge = mesh.edges[e];
        if (edge.cot_weight <= 0.0) continue;
        int other = edge.a == v ? edge.b : edge.a;
        pts1.push_back(state.map.product_values[other].first);
        pts2.push_back(state.map.product_values[other].second);
        ws.push_back(edge.cot_weight);
      }
      if (ws.empty()) continue;
      ProductTreePoint& cur = state.map.product_values[v];
      double before = f1.local_energy(cur.first, pts1, ws) +
                      f2.local_energy(cur.second, pts2, ws);
      ProductTreePoint next{f1.mean(pts1, ws), f2.mean(pts2, ws)};
      double after = f1.local_energy(next.first, pts1, ws) +
                     f2.local_energy(next.second, pts2, ws);
      if (after > before + 1e-12 * (1.0 + before))
        throw std::logic_error("solve: coordinate update increased the local energy");
      // the global energy carries the edge factor 1/2, the vertex star does not
      decrease += 0.5 * (before - after);
      cur = next;
    }
    ++state.sweeps;
    energy -= decrease;  // exact up to rounding; refreshed below for history
    if ((state.sweeps & 0x3f) == 0) energy = discrete_energy(state.map, mesh);
    state.energy_history.push_back(energy);
    if (decrease < tol_abs) {
      state.converged = true;
      break;
    }
  }
  state.energy_history.back() = discrete_energy(state.map, mesh);
  return state;
}

ProjectionComparison compare_with_projection(const SolverState& state,
                                             const PolynomialQD& phi,
                                             const DiskMesh& mesh) {
  ProjectionComparison out;
  const SimplicialTree& t1 = *state.map.tree1;
  const SimplicialTree& t2 = *state.map.tree2;
  DiscreteMap pi = DiscreteMap::product_projection_map(mesh, state.map.tree1, state.map.tree2);
  double sum = 0.0;
  for (size_t v = 0; v < mesh.vertices.size(); ++v) {
    double d = product_distance(t1, t2, state.map.product_values[v], pi.product_values[v]);
    out.sup_distance = std::max(out.sup_distance, d);
    sum += d;
  }
  out.mean_distance = sum / static_cast<double>(mesh.vertices.size());
  for (const MeshEdge& e : mesh.edges) {
    double d1 = t1.distance(state.map.product_values[e.a].first,
                            state.map.product_values[e.b].first);
    double d2 = t2.distance(state.map.product_values[e.a].second,
                            state.map.product_values[e.b].second);
    out.factor_energy[0] += 0.5 * e.cot_weight * d1 * d1;
    out.factor_energy[1] += 0.5 * e.cot_weight * d2 * d2;
  }
  out.solution_energy = out.factor_energy[0] + out.factor_energy[1];
  double radius = mesh.domain == DiskMesh::Domain::disk ? mesh.radius : 1.0;
  out.reference_energy = 2.0 * l1_norm(phi, radius);
  out.energy_gap = out.factor_energy[0] - out.reference_energy;
  return out;
}

NmiEnergyComparison energy_comparison_nmi(const PolynomialQD& phi, const DiscreteMap& f1,
                                          const DiscreteMap& f2, const DiskMesh& mesh) {
  // boundary agreement of the pair
  for (int b : mesh.boundary_loop)
    if (std::abs(f1.values[b] - f2.values[b]) > 1e-12)
      throw std::invalid_argument("energy_comparison_nmi: maps differ on the boundary");

  auto t1 = std::make_shared<SimplicialTree>(build_leaf_tree(phi, FoliationKind::vertical));
  auto t2 = std::make_shared<SimplicialTree>(build_leaf_tree(phi, FoliationKind::horizontal));
  DiscreteMap pi1 = DiscreteMap::projection_map(mesh, t1);
  DiscreteMap pi2 = DiscreteMap::projection_map(mesh, t2);

  NmiEnergyComparison out;
  out.energy_pi = ks_energy(pi1, mesh) + ks_energy(pi2, mesh);
  DiskMesh image1, image2;
  DiscreteMap c1 = compose_with_inverse(pi1, f1, mesh, image1);
  DiscreteMap c2 = compose_with_inverse(pi2, f2, mesh, image2);
  out.energy_composed = ks_energy(c1, image1) + ks_energy(c2, image2);
  out.margin = out.energy_composed - out.energy_pi;
  return out;
}

}  // namespace qdt
