#include "qdtree/disk_maps.hpp"

#include <algorithm>
#include <cmath>

namespace qdt {

namespace {

// complex-valued affine derivatives on a triangle: F_x + contributions
void complex_gradient(const DiskMesh& mesh, int t, const cx* f, cx* fx, cx* fy) {
  auto [a, b, c] = mesh.triangles[t];
  cx pa = mesh.vertices[a], pb = mesh.vertices[b], pc = mesh.vertices[c];
  cx d1 = pb - pa, d2 = pc - pa;
  cx f1 = f[1] - f[0], f2 = f[2] - f[0];
  double det = d1.real() * d2.imag() - d1.imag() * d2.real();
  *fx = (f1 * d2.imag() - f2 * d1.imag()) / det;
  *fy = (f2 * d1.real() - f1 * d2.real()) / det;
}

std::array<double, 3> gram_from_jacobian(double ax, double ay, double bx, double by) {
  // columns of J are (ax, bx) and (ay, by): g = J^T J
  return {ax * ax + bx * bx, ax * ay + bx * by, ay * ay + by * by};
}

// flat triangle realizing three side lengths, then the pullback through the
// affine map from the domain triangle onto it. The embedding uses the
// longest side as base, which keeps the law-of-cosines solve stable when
// two corners share a leaf.
std::array<double, 3> tree_corner_gram(const DiskMesh& mesh, int t, double d_ab,
                                       double d_bc, double d_ca) {
  auto [a, b, c] = mesh.triangles[t];
  cx dom[3] = {mesh.vertices[a], mesh.vertices[b], mesh.vertices[c]};
  double side[3] = {d_ab, d_bc, d_ca};  // side r joins corners r and r+1
  int r = 0;
  if (side[1] >= side[0] && side[1] >= side[2]) r = 1;
  if (side[2] >= side[0] && side[2] >= side[1]) r = 2;
  double base = side[r], s1 = side[(r + 1) % 3], s2 = side[(r + 2) % 3];
  cx A(0.0, 0.0), B(base, 0.0), C;
  if (base > 0.0) {
    double x = (base * base + s2 * s2 - s1 * s1) / (2.0 * base);
    double y2 = s2 * s2 - x * x;
    // collinear configurations produce cancellation dust here; a genuine
    // two-dimensional image keeps y2 comparable to the side lengths
    if (y2 < 1e-11 * (base * base + s2 * s2)) y2 = 0.0;
    C = cx(x, y2 > 0.0 ? std::sqrt(y2) : 0.0);
  } else {
    C = cx(0.0, 0.0);  // all three corners on one leaf
  }
  cx pa = dom[r], pb = dom[(r + 1) % 3], pc = dom[(r + 2) % 3];
  cx d1 = pb - pa, d2 = pc - pa;
  cx f1 = B - A, f2 = C - A;
  double det = d1.real() * d2.imag() - d1.imag() * d2.real();
  cx fx = (f1 * d2.imag() - f2 * d1.imag()) / det;
  cx fy = (f2 * d1.real() - f1 * d2.real()) / det;
  return gram_from_jacobian(fx.real(), fy.real(), fx.imag(), fy.imag());
}

struct TriLocator {
  const std::vector<cx>* pts;
  const std::vector<std::array<int, 3>>* tris;
  double minx, miny, cell;
  int nx, ny;
  std::vector<std::vector<int>> buckets;

  void build(const std::vector<cx>& positions, const std::vector<std::array<int, 3>>& triangles) {
    pts = &positions;
    tris = &triangles;
    minx = miny = std::numeric_limits<double>::infinity();
    double maxx = -minx, maxy = -minx;
    for (cx p : positions) {
      minx = std::min(minx, p.real());
      maxx = std::max(maxx, p.real());
      miny = std::min(miny, p.imag());
      maxy = std::max(maxy, p.imag());
    }
    nx = ny = std::max(1, static_cast<int>(std::sqrt(triangles.size() / 2.0)));
    cell = std::max((maxx - minx) / nx, (maxy - miny) / ny) + 1e-30;
    nx = std::max(1, static_cast<int>((maxx - minx) / cell) + 1);
    ny = std::max(1, static_cast<int>((maxy - miny) / cell) + 1);
    buckets.assign(static_cast<size_t>(nx) * ny, {});
    for (size_t t = 0; t < triangles.size(); ++t) {
      auto [a, b, c] = triangles[t];
      double tx0 = std::min({positions[a].real(), positions[b].real(), positions[c].real()});
      double tx1 = std::max({positions[a].real(), positions[b].real(), positions[c].real()});
      double ty0 = std::min({positions[a].imag(), positions[b].imag(), positions[c].imag()});
      double ty1 = std::max({positions[a].imag(), positions[b].imag(), positions[c].imag()});
      int i0 = clampi((tx0 - minx) / cell), i1 = clampi((tx1 - minx) / cell);
      int j0 = clampj((ty0 - miny) / cell), j1 = clampj((ty1 - miny) / cell);
      for (int i = i0; i <= i1; ++i)
        for (int j = j0; j <= j1; ++j)
          buckets[static_cast<size_t>(j) * nx + i].push_back(static_cast<int>(t));
    }
  }
  int clampi(double v) const { return std::clamp(static_cast<int>(v), 0, nx - 1); }
  int clampj(double v) const { return std::clamp(static_cast<int>(v), 0, ny - 1); }

  // barycentric coordinates of p in triangle t
  std::array<double, 3> bary(int t, cx p) const {
    auto [a, b, c] = (*tris)[t];
    cx pa = (*pts)[a], pb = (*pts)[b], pc = (*pts)[c];
    double det = (pb - pa).real() * (pc - pa).imag() - (pb - pa).imag() * (pc - pa).real();
    double wb = ((p - pa).real() * (pc - pa).imag() - (p - pa).imag() * (pc - pa).real()) / det;
    double wc = ((pb - pa).real() * (p - pa).imag() - (pb - pa).imag() * (p - pa).real()) / det;
    return {1.0 - wb - wc, wb, wc};
  }

  // triangle containing p, or the best (least-negative bary) fallback
  std::pair<int, std::array<double, 3>> locate(cx p) const {
    int i = clampi((p.real() - minx) / cell), j = clampj((p.imag() - miny) / cell);
    int best_t = -1;
    double best_neg = -std::numeric_limits<double>::infinity();
    std::array<double, 3> best_w{};
    for (int r = 0; r < std::max(nx, ny); ++r) {
      for (int ii = std::max(0, i - r); ii <= std::min(nx - 1, i + r); ++ii)
        for (int jj = std::max(0, j - r); jj <= std::min(ny - 1, j + r); ++jj) {
          if (std::max(std::abs(ii - i), std::abs(jj - j)) != r) continue;
          for (int t : buckets[static_cast<size_t>(jj) * nx + ii]) {
            auto w = bary(t, p);
            double neg = std::min({w[0], w[1], w[2]});
            if (neg > best_neg) {
              best_neg = neg;
              best_t = t;
              best_w = w;
            }
          }
        }
      if (best_neg >= -1e-9) break;  // inside (or on the boundary) found
    }
    if (best_t < 0) throw std::runtime_error("TriLocator: empty triangulation");
    for (auto& w : best_w) w = std::max(w, 0.0);
    double s = best_w[0] + best_w[1] + best_w[2];
    for (auto& w : best_w) w /= s;
    return {best_t, best_w};
  }
};

cx interpolate_complex(const DiscreteMap& map, const std::array<int, 3>& tri,
                       const std::array<double, 3>& w) {
  return w[0] * map.values[tri[0]] + w[1] * map.values[tri[1]] + w[2] * map.values[tri[2]];
}

TreePoint interpolate_tree(const SimplicialTree& tree, const TreePoint* vals,
                           const std::array<double, 3>& w) {
  std::vector<TreePoint> pts{vals[0], vals[1], vals[2]};
  std::vector<double> ws{w[0] + 1e-15, w[1] + 1e-15, w[2] + 1e-15};
  return tree.weighted_mean(pts, ws);
}

}  // namespace

size_t DiscreteMap::size() const {
  switch (target) {
    case Target::tree:
      return tree_values.size();
    case Target::tree_product:
      return product_values.size();
    default:
      return values.size();
  }
}

DiscreteMap DiscreteMap::complex_map(const DiskMesh& mesh, std::function<cx(cx)> f) {
  DiscreteMap m;
  m.target = Target::complex_plane;
  m.values.reserve(mesh.vertices.size());
  for (cx v : mesh.vertices) m.values.push_back(f(v));
  m.formula = std::move(f);
  return m;
}

DiscreteMap DiscreteMap::conformal_map(const DiskMesh& mesh, std::function<cx(cx)> f,
                                       ConformalMetric metric) {
  DiscreteMap m = complex_map(mesh, std::move(f));
  m.target = Target::conformal_disk;
  m.metric = std::move(metric);
  return m;
}

namespace {

TreePoint project_with_nudge(const SimplicialTree& tree, cx z) {
  double eps = 1e-9 * (1.0 + std::abs(z));
  const cx nudges[5] = {cx(0, 0), cx(eps, 0), cx(0, eps), cx(-eps, 0), cx(0, -eps)};
  for (int i = 0; i < 5; ++i) {
    try {
      return tree.project(z + nudges[i]);
    } catch (const TreeProjectionError&) {
      if (i == 4) throw;
    }
  }
  throw TreeProjectionError("unreachable");
}

}  // namespace

DiscreteMap DiscreteMap::projection_map(const DiskMesh& mesh,
                                        std::shared_ptr<const SimplicialTree> tree) {
  DiscreteMap m;
  m.target = Target::tree;
  m.tree1 = std::move(tree);
  m.tree_values.reserve(mesh.vertices.size());
  for (cx v : mesh.vertices) m.tree_values.push_back(project_with_nudge(*m.tree1, v));
  return m;
}

DiscreteMap DiscreteMap::product_projection_map(
    const DiskMesh& mesh, std::shared_ptr<const SimplicialTree> vertical,
    std::shared_ptr<const SimplicialTree> horizontal) {
  DiscreteMap m;
  m.target = Target::tree_product;
  m.tree1 = std::move(vertical);
  m.tree2 = std::move(horizontal);
  m.product_values.reserve(mesh.vertices.size());
  for (cx v : mesh.vertices)
    m.product_values.push_back(
        {project_with_nudge(*m.tree1, v), project_with_nudge(*m.tree2, v)});
  return m;
}

BeltramiField beltrami_of(const DiscreteMap& map, const DiskMesh& mesh) {
  if (map.target != DiscreteMap::Target::complex_plane &&
      map.target != DiscreteMap::Target::conformal_disk)
    throw std::invalid_argument("beltrami_of: map must take values in the plane");
  BeltramiField out;
  out.mu.resize(mesh.triangles.size());
  for (size_t t = 0; t < mesh.triangles.size(); ++t) {
    auto [a, b, c] = mesh.triangles[t];
    cx f[3] = {map.values[a], map.values[b], map.values[c]};
    cx fx, fy;
    complex_gradient(mesh, static_cast<int>(t), f, &fx, &fy);
    cx fz = 0.5 * (fx - cx(0, 1) * fy);
    cx fzb = 0.5 * (fx + cx(0, 1) * fy);
    double jac = std::norm(fz) - std::norm(fzb);
    if (jac <= 0.0)
      throw std::runtime_error("beltrami_of: orientation-reversing triangle " +
                               std::to_string(t));
    out.mu[t] = fzb / fz;
    out.k = std::max(out.k, std::abs(out.mu[t]));
  }
  if (out.k >= 1.0) throw std::runtime_error("beltrami_of: map is not quasiconformal");
  return out;
}

MetricSample pullback_metric(const DiscreteMap& map, const DiskMesh& mesh) {
  MetricSample out;
  out.g.resize(mesh.triangles.size());
  for (size_t t = 0; t < mesh.triangles.size(); ++t) {
    auto [a, b, c] = mesh.triangles[t];
    switch (map.target) {
      case DiscreteMap::Target::complex_plane:
      case DiscreteMap::Target::conformal_disk: {
        cx f[3] = {map.values[a], map.values[b], map.values[c]};
        cx fx, fy;
        complex_gradient(mesh, static_cast<int>(t), f, &fx, &fy);
        double lambda = 1.0;
        if (map.target == DiscreteMap::Target::conformal_disk)
          lambda = map.metric((f[0] + f[1] + f[2]) / 3.0);
        auto g = gram_from_jacobian(fx.real(), fy.real(), fx.imag(), fy.imag());
        out.g[t] = {lambda * g[0], lambda * g[1], lambda * g[2]};
        break;
      }
      case DiscreteMap::Target::tree: {
        const SimplicialTree& tree = *map.tree1;
        double dab = tree.distance(map.tree_values[a], map.tree_values[b]);
        double dbc = tree.distance(map.tree_values[b], map.tree_values[c]);
        double dca = tree.distance(map.tree_values[c], map.tree_values[a]);
        out.g[t] = tree_corner_gram(mesh, static_cast<int>(t), dab, dbc, dca);
        break;
      }
      case DiscreteMap::Target::tree_product: {
        const SimplicialTree& t1 = *map.tree1;
        const SimplicialTree& t2 = *map.tree2;
        const ProductTreePoint &pa = map.product_values[a], &pb = map.product_values[b],
                               &pc = map.product_values[c];
        auto g1 = tree_corner_gram(mesh, static_cast<int>(t), t1.distance(pa.first, pb.first),
                                   t1.distance(pb.first, pc.first),
                                   t1.distance(pc.first, pa.first));
        auto g2 = tree_corner_gram(mesh, static_cast<int>(t),
                                   t2.distance(pa.second, pb.second),
                                   t2.distance(pb.second, pc.second),
                                   t2.distance(pc.second, pa.second));
        out.g[t] = {g1[0] + g2[0], g1[1] + g2[1], g1[2] + g2[2]};
        break;
      }
    }
  }
  return out;
}

std::vector<double> energy_density(const MetricSample& g) {
  std::vector<double> e(g.size());
  for (size_t t = 0; t < g.size(); ++t) e[t] = 0.5 * (g.g[t][0] + g.g[t][2]);
  return e;
}

std::vector<cx> hopf(const MetricSample& g) {
  std::vector<cx> phi(g.size());
  for (size_t t = 0; t < g.size(); ++t)
    phi[t] = 0.25 * cx(g.g[t][0] - g.g[t][2], -2.0 * g.g[t][1]);
  return phi;
}

double ks_energy(const DiscreteMap& map, const DiskMesh& mesh, const SubdomainMask& mask) {
  MetricSample g = pullback_metric(map, mesh);
  double acc = 0.0;
  for (size_t t = 0; t < g.size(); ++t) {
    if (!mask.contains(mesh.centroids[t])) continue;
    acc += mesh.areas[t] * 0.5 * (g.g[t][0] + g.g[t][2]);
  }
  return acc;
}

double ks_area(const DiscreteMap& map, const DiskMesh& mesh, const SubdomainMask& mask) {
  MetricSample g = pullback_metric(map, mesh);
  double acc = 0.0;
  for (size_t t = 0; t < g.size(); ++t) {
    if (!mask.contains(mesh.centroids[t])) continue;
    double det = g.g[t][0] * g.g[t][2] - g.g[t][1] * g.g[t][1];
    acc += mesh.areas[t] * std::sqrt(std::max(det, 0.0));
  }
  return acc;
}

DiscreteMap compose_with_inverse(const DiscreteMap& h, const DiscreteMap& f,
                                 const DiskMesh& mesh, DiskMesh& out_mesh) {
  if (f.target != DiscreteMap::Target::complex_plane)
    throw std::invalid_argument("compose_with_inverse: f must be a planar map");
  if (h.size() != mesh.vertices.size() || f.size() != mesh.vertices.size())
    throw std::invalid_argument("compose_with_inverse: size mismatch");

  // image mesh of f(Omega); f maps our domains onto domains of the same kind
  if (mesh.domain == DiskMesh::Domain::disk) {
    out_mesh = build_mesh(mesh.radius, mesh.target_edge_length);
  } else {
    double ix0 = std::numeric_limits<double>::infinity(), ix1 = -ix0, iy0 = ix0, iy1 = -ix0;
    for (cx corner : {cx(mesh.x0, mesh.y0), cx(mesh.x1, mesh.y0), cx(mesh.x0, mesh.y1),
                      cx(mesh.x1, mesh.y1)}) {
      cx im = f.formula ? f.formula(corner) : corner;
      ix0 = std::min(ix0, im.real());
      ix1 = std::max(ix1, im.real());
      iy0 = std::min(iy0, im.imag());
      iy1 = std::max(iy1, im.imag());
    }
    out_mesh = build_rect_mesh(ix0, ix1, iy0, iy1, mesh.target_edge_length);
  }

  TriLocator locator;
  locator.build(f.values, mesh.triangles);

  DiscreteMap out;
  out.target = h.target;
  out.tree1 = h.tree1;
  out.tree2 = h.tree2;
  out.metric = h.metric;
  size_t nv = out_mesh.vertices.size();

  // analytic refinement: when f has a formula and h is a projection (or has
  // its own formula), the composition can be sampled exactly through a
  // Newton inversion of f instead of barycentric interpolation
  bool exact_h = (h.target == DiscreteMap::Target::tree && h.tree1 &&
                  h.tree1->context) ||
                 (h.target == DiscreteMap::Target::tree_product && h.tree1 &&
                  h.tree1->context && h.tree2 && h.tree2->context) ||
                 ((h.target == DiscreteMap::Target::complex_plane ||
                   h.target == DiscreteMap::Target::conformal_disk) &&
                  h.formula);
  if (f.formula && exact_h) {
    for (size_t v = 0; v < nv; ++v) {
      cx target_pt = out_mesh.vertices[v];
      cx x = target_pt;
      for (int it = 0; it < 40; ++it) {
        cx residual = f.formula(x) - target_pt;
        if (std::abs(residual) < 1e-14 * (1.0 + std::abs(target_pt))) break;
        x -= residual;  // contraction for id + small perturbation
      }
      switch (h.target) {
        case DiscreteMap::Target::complex_plane:
        case DiscreteMap::Target::conformal_disk:
          out.values.push_back(h.formula(x));
          break;
        case DiscreteMap::Target::tree:
          out.tree_values.push_back(h.tree1->project(x));
          break;
        case DiscreteMap::Target::tree_product:
          out.product_values.push_back({h.tree1->project(x), h.tree2->project(x)});
          break;
      }
    }
    return out;
  }

  for (size_t v = 0; v < nv; ++v) {
    auto [t, w] = locator.locate(out_mesh.vertices[v]);
    const auto& tri = mesh.triangles[t];
    switch (h.target) {
      case DiscreteMap::Target::complex_plane:
      case DiscreteMap::Target::conformal_disk:
        out.values.push_back(interpolate_complex(h, tri, w));
        break;
      case DiscreteMap::Target::tree: {
        TreePoint vals[3] = {h.tree_values[tri[0]], h.tree_values[tri[1]],
                             h.tree_values[tri[2]]};
        out.tree_values.push_back(interpolate_tree(*h.tree1, vals, w));
        break;
      }
      case DiscreteMap::Target::tree_product: {
        TreePoint first[3] = {h.product_values[tri[0]].first, h.product_values[tri[1]].first,
                              h.product_values[tri[2]].first};
        TreePoint second[3] = {h.product_values[tri[0]].second,
                               h.product_values[tri[1]].second,
                               h.product_values[tri[2]].second};
        out.product_values.push_back({interpolate_tree(*h.tree1, first, w),
                                      interpolate_tree(*h.tree2, second, w)});
        break;
      }
    }
  }
  return out;
}

struct MeshInterpolator::Impl {
  TriLocator locator;
};

MeshInterpolator::MeshInterpolator(const DiskMesh& mesh)
    : impl_(std::make_unique<Impl>()), mesh_(&mesh) {
  impl_->locator.build(mesh.vertices, mesh.triangles);
}
MeshInterpolator::~MeshInterpolator() = default;
MeshInterpolator::MeshInterpolator(MeshInterpolator&&) noexcept = default;

cx MeshInterpolator::complex_at(const DiscreteMap& map, cx p) const {
  auto [t, w] = impl_->locator.locate(p);
  return interpolate_complex(map, mesh_->triangles[t], w);
}

ProductTreePoint MeshInterpolator::product_at(const DiscreteMap& map, cx p) const {
  auto [t, w] = impl_->locator.locate(p);
  const auto& tri = mesh_->triangles[t];
  TreePoint first[3] = {map.product_values[tri[0]].first, map.product_values[tri[1]].first,
                        map.product_values[tri[2]].first};
  TreePoint second[3] = {map.product_values[tri[0]].second,
                         map.product_values[tri[1]].second,
                         map.product_values[tri[2]].second};
  return {interpolate_tree(*map.tree1, first, w), interpolate_tree(*map.tree2, second, w)};
}

double cotan_energy(const std::vector<cx>& values, const DiskMesh& mesh) {
  double acc = 0.0;
  for (const MeshEdge& e : mesh.edges)
    acc += 0.5 * e.cot_weight * std::norm(values[e.a] - values[e.b]);
  return acc;
}

ReichStrebelSides reich_strebel_sides(const DiscreteMap& h, const DiscreteMap& f,
                                      const DiskMesh& mesh) {
  BeltramiField mu = beltrami_of(f, mesh);  // validates orientation and k < 1

  MetricSample g = pullback_metric(h, mesh);
  std::vector<double> e = energy_density(g);
  std::vector<cx> phi = hopf(g);

  ReichStrebelSides out;
  for (size_t t = 0; t < mesh.triangles.size(); ++t) {
    double m2 = std::norm(mu.mu[t]);
    double denom = 1.0 - m2;
    out.rs_integral += mesh.areas[t] * (-4.0 * (phi[t] * mu.mu[t] / denom).real() +
                                        2.0 * e[t] * m2 / denom);
  }

  double e_before = ks_energy(h, mesh);
  DiskMesh image_mesh;
  DiscreteMap composed = compose_with_inverse(h, f, mesh, image_mesh);
  double e_after = ks_energy(composed, image_mesh);
  out.direct_difference = e_after - e_before;
  return out;
}

}  // namespace qdt
