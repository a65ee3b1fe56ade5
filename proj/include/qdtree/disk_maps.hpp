#pragma once

#include "qdtree/leaf_tree.hpp"
#include "qdtree/mesh.hpp"

#include <memory>

namespace qdt {

/// Per-triangle Beltrami coefficient of a map into the plane.
struct BeltramiField {
  std::vector<cx> mu;
  double k = 0.0;  // sup norm, < 1 for quasiconformal maps
};

/// Per-triangle symmetric pullback metric (g11, g12, g22).
struct MetricSample {
  std::vector<std::array<double, 3>> g;
  size_t size() const { return g.size(); }
};

struct SubdomainMask {
  enum class Kind { all, disk };
  Kind kind = Kind::all;
  cx center{0.0, 0.0};
  double radius = 0.0;
  bool contains(cx z) const {
    return kind == Kind::all || std::abs(z - center) <= radius;
  }
  static SubdomainMask all() { return {}; }
  static SubdomainMask disk(cx center, double radius) {
    return {Kind::disk, center, radius};
  }
};

/// Map sampled at mesh vertices into the plane, a conformal-metric disk, a
/// tree, or a product of two trees. `formula` allows resampling on finer
/// meshes when the map has an analytic expression.
struct DiscreteMap {
  enum class Target { complex_plane, conformal_disk, tree, tree_product };
  Target target = Target::complex_plane;
  std::vector<cx> values;
  std::vector<TreePoint> tree_values;
  std::vector<ProductTreePoint> product_values;
  std::shared_ptr<const SimplicialTree> tree1, tree2;
  ConformalMetric metric = ConformalMetric::flat();
  std::function<cx(cx)> formula;

  size_t size() const;

  static DiscreteMap complex_map(const DiskMesh& mesh, std::function<cx(cx)> f);
  static DiscreteMap conformal_map(const DiskMesh& mesh, std::function<cx(cx)> f,
                                   ConformalMetric m);
  /// Leaf-space projection sampled at the vertices (nudges queries that land
  /// on separatrices within projection tolerance).
  static DiscreteMap projection_map(const DiskMesh& mesh,
                                    std::shared_ptr<const SimplicialTree> tree);
  static DiscreteMap product_projection_map(const DiskMesh& mesh,
                                            std::shared_ptr<const SimplicialTree> vertical,
                                            std::shared_ptr<const SimplicialTree> horizontal);
};

/// mu = f_zbar / f_z per triangle from the affine fit; throws if some
/// triangle is not quasiconformal (|mu| >= 1) or orientation-reversing.
BeltramiField beltrami_of(const DiscreteMap& map, const DiskMesh& mesh);

/// Pullback metric per triangle. Tree targets use the flat triangle with the
/// corner tree distances as side lengths (the piecewise-linear proxy of the
/// Korevaar-Schoen directional metric); product targets sum the factors.
MetricSample pullback_metric(const DiscreteMap& map, const DiskMesh& mesh);

/// e = (g11 + g22) / 2
std::vector<double> energy_density(const MetricSample& g);

/// phi = (g11 - g22 - 2i g12) / 4
std::vector<cx> hopf(const MetricSample& g);

double ks_energy(const DiscreteMap& map, const DiskMesh& mesh,
                 const SubdomainMask& mask = {});
double ks_area(const DiscreteMap& map, const DiskMesh& mesh,
               const SubdomainMask& mask = {});

struct ReichStrebelSides {
  double direct_difference = 0.0;  // E(f(Omega), h o f^-1) - E(Omega, h)
  double rs_integral = 0.0;        // the Reich-Strebel right-hand side
};

/// Both sides of the Reich-Strebel identity. The composed energy is
/// evaluated by barycentric pull-back of h onto a fresh mesh of f(Omega)
/// located inside the pushforward triangulation {f(v)}.
ReichStrebelSides reich_strebel_sides(const DiscreteMap& h, const DiscreteMap& f,
                                      const DiskMesh& mesh);

/// The composed map h o f^-1 on a fresh mesh of f(Omega); exposed for the
/// energy comparisons behind the new main inequality.
DiscreteMap compose_with_inverse(const DiscreteMap& h, const DiscreteMap& f,
                                 const DiskMesh& mesh, DiskMesh& out_mesh);

/// Piecewise-linear evaluation of a discrete map at arbitrary points of its
/// mesh (tree values through the Frechet mean of the corner values).
class MeshInterpolator {
 public:
  explicit MeshInterpolator(const DiskMesh& mesh);
  ~MeshInterpolator();
  MeshInterpolator(MeshInterpolator&&) noexcept;

  cx complex_at(const DiscreteMap& map, cx p) const;
  ProductTreePoint product_at(const DiscreteMap& map, cx p) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  const DiskMesh* mesh_;
};

/// (1/2) sum_e w_e |u_a - u_b|^2; identical to the piecewise-linear flat
/// Korevaar-Schoen energy.
double cotan_energy(const std::vector<cx>& values, const DiskMesh& mesh);

}  // namespace qdt
