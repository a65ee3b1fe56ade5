#pragma once

#include "qdtree/plateau.hpp"

namespace qdt {

struct NmiReport {
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;  // rhs - lhs, non-negative up to quadrature noise
  double k = 0.0;       // max Beltrami sup norm of the pair
  std::string phi_descriptor;
  std::uint64_t seed = 0;
};

/// Eq-(1.1)-style check for the pair (phi, -phi) against the Beltrami
/// fields of two boundary-matched maps.
NmiReport check_nmi(const PolynomialQD& phi, const BeltramiField& mu1,
                    const BeltramiField& mu2, const DiskMesh& mesh);

struct BumpSpec {
  cx center;
  double radius = 0.0;
  cx amplitude;  // complex displacement scale of the bump
};

/// id + sum of compactly supported smooth bumps; identity on |z| = 1.
/// Throws before returning a non-diffeomorphic sample.
DiscreteMap generate_bump_map(const DiskMesh& mesh, const std::vector<BumpSpec>& bumps);

/// Random boundary-matched pair with dilatation controlled by `amplitude`.
std::pair<DiscreteMap, DiscreteMap> generate_boundary_matched_pair(
    const DiskMesh& mesh, std::uint64_t seed, double amplitude, int max_bumps = 2);

struct RsConvergenceRow {
  double mesh_h = 0.0;
  double direct = 0.0;
  double rs = 0.0;
  double rel_error = 0.0;
};

struct RsConvergenceTable {
  std::vector<RsConvergenceRow> rows;
  double richardson_slope = 0.0;  // log2 error ratio between successive rows
};

/// Reich-Strebel agreement at three mesh refinements, for the projection map
/// of phi composed against the given bump map formulas.
RsConvergenceTable verify_reich_strebel(const PolynomialQD& phi,
                                        const std::function<cx(cx)>& f_formula,
                                        double base_h, int levels = 3);

struct ExampleAReport {
  double k = 0.0;
  cx hopf_h;              // per-triangle Hopf of h_k (constant)
  cx hopf_g;              // per-triangle Hopf of g_k (constant)
  double hopf_sum_abs = 0.0;
  cx beltrami_f;          // constant Beltrami of f_k
  double beltrami_tau_abs = 0.0;
  double boundary_discrepancy = 0.0;  // sup |f_k - tau_k| on eta = 0
  double interior_discrepancy = 0.0;  // sup |f_k - tau_k| on eta = 1
  std::vector<std::array<double, 2>> l1_growth;  // (box scale, int |phi(h_k)|)
  double conformal_hopf_l1 = 0.0;     // int |phi| of the conformal competitor
  std::vector<std::array<double, 2>> bers_blowup;  // (1-|z|, |phi~|/rho at z->1)
};

/// The affine counterexample on half-plane boxes: two minimal maps with the
/// same boundary values, one Hopf differential integrable, the other not.
ExampleAReport example_a(double k, double box_l, double box_h, double mesh_h);

struct VariationSpec {
  cx center;
  double radius = 0.0;   // support disk
  double delta = 0.0;    // FD step; <= 0 picks 1e-3 * radius
  std::uint64_t seed = 0;
};

struct StabilityReport {
  double first_variation = 0.0;   // 5-point Richardson derivative at t = 0
  double second_variation = 0.0;  // 5-point second derivative
  double energy_scale = 0.0;      // E(0)
  double delta = 0.0;
};

/// Second variation of the summed factor energies of the discrete minimal
/// pair for phi (the solved Plateau map) under h -> h o f_t^{-1},
/// f_t = id + tV with V a seeded smooth bump field.
StabilityReport stability_second_variation(const PolynomialQD& phi, const DiskMesh& mesh,
                                           const SolverState& base,
                                           const VariationSpec& variation);

/// Same mechanism for the Example A affine pair on a rectangle mesh.
StabilityReport stability_second_variation_example_a(double k, const DiskMesh& rect,
                                                     const VariationSpec& variation);

struct PolynomialApproximation {
  PolynomialQD polynomial;
  double l1_error = 0.0;
};

/// Taylor truncation of an analytic function (Cauchy coefficients on a
/// circle) with the L1 distance on the unit disk.
PolynomialApproximation approximate_by_polynomial(const std::function<cx(cx)>& target,
                                                  int degree);

}  // namespace qdt
