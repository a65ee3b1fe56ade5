#pragma once

#include "qdtree/disk_maps.hpp"

namespace qdt {

/// Fixed-boundary Plateau problem in a product of two simplicial trees.
struct PlateauProblem {
  const DiskMesh* mesh = nullptr;
  std::shared_ptr<const SimplicialTree> tree1, tree2;
  std::vector<ProductTreePoint> boundary;  // one per boundary_loop vertex
  double tolerance = 1e-12;                // sweep decrease, relative to E0
  long max_sweeps = 50000;
};

enum class PlateauInit { projection, boundary_nearest, constant };

struct SolverState {
  DiscreteMap map;  // tree_product map on the problem mesh
  std::vector<double> energy_history;
  long sweeps = 0;
  bool converged = false;
};

/// Cotangent-weight graph energy (1/2) sum_e w_e d(u_i, u_j)^2, both factors.
double discrete_energy(const DiscreteMap& map, const DiskMesh& mesh);

/// Cyclic coordinate descent: every interior vertex moves to the weighted
/// Frechet mean of its neighbors, factor by factor. Energy never increases;
/// stops when one sweep decreases it by less than the tolerance.
SolverState solve(const PlateauProblem& problem, PlateauInit init = PlateauInit::projection);
SolverState solve(const PlateauProblem& problem, DiscreteMap initial);

struct ProjectionComparison {
  double sup_distance = 0.0;
  double mean_distance = 0.0;
  double solution_energy = 0.0;     // total graph energy, both factors
  double factor_energy[2] = {0, 0}; // per-factor graph energies
  double reference_energy = 0.0;    // int_D 2|phi|: one projection's energy
  double energy_gap = 0.0;          // factor_energy[0] - reference_energy
};

ProjectionComparison compare_with_projection(const SolverState& state,
                                             const PolynomialQD& phi,
                                             const DiskMesh& mesh);

struct NmiEnergyComparison {
  double energy_pi = 0.0;        // sum_i E(D, pi_i)
  double energy_composed = 0.0;  // sum_i E(f_i(D), pi_i o f_i^{-1})
  double margin = 0.0;           // energy_composed - energy_pi
};

/// The energy comparison behind the new main inequality: for boundary-matched
/// quasiconformal f_1, f_2, comparing the projection energies against the
/// composed competitors.
NmiEnergyComparison energy_comparison_nmi(const PolynomialQD& phi, const DiscreteMap& f1,
                                          const DiscreteMap& f2, const DiskMesh& mesh);

}  // namespace qdt
