#include "qdtree/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

namespace qdt {

namespace {

constexpr double kPi = std::numbers::pi;

// Lawson flips until every interior edge is Delaunay; keeps all interior
// cotangent weights non-negative so the clamp below stays idle.
void delaunay_flips(DiskMesh& mesh) {
  auto opposite_sum_exceeds_pi = [&](int ta, int tb, int va, int vb, int oa, int ob) {
    (void)ta;
    (void)tb;
    cx A = mesh.vertices[va], B = mesh.vertices[vb];
    cx C = mesh.vertices[oa], D = mesh.vertices[ob];
    auto angle_at = [](cx p, cx q, cx r) {
      cx u = q - p, v = r - p;
      double dot = u.real() * v.real() + u.imag() * v.imag();
      double crs = u.real() * v.imag() - u.imag() * v.real();
      return std::atan2(std::abs(crs), dot);
    };
    return angle_at(C, A, B) + angle_at(D, A, B) > kPi + 1e-14;
  };

  bool changed = true;
  int rounds = 0;
  while (changed && rounds++ < 64) {
    changed = false;
    std::map<std::pair<int, int>, std::vector<int>> edge_tris;
    for (size_t t = 0; t < mesh.triangles.size(); ++t) {
      auto [a, b, c] = mesh.triangles[t];
      edge_tris[std::minmax(a, b)].push_back(static_cast<int>(t));
      edge_tris[std::minmax(b, c)].push_back(static_cast<int>(t));
      edge_tris[std::minmax(c, a)].push_back(static_cast<int>(t));
    }
    for (const auto& [key, tris] : edge_tris) {
      if (tris.size() != 2) continue;
      int ta = tris[0], tb = tris[1];
      auto find_opposite = [&](int t) {
        for (int v : mesh.triangles[t])
          if (v != key.first && v != key.second) return v;
        return -1;
      };
      int oa = find_opposite(ta), ob = find_opposite(tb);
      if (oa < 0 || ob < 0 || oa == ob) continue;
      if (!opposite_sum_exceeds_pi(ta, tb, key.first, key.second, oa, ob)) continue;
      // only flip across a convex quad: the new diagonal must cross the old
      cx A = mesh.vertices[key.first], B = mesh.vertices[key.second];
      cx C = mesh.vertices[oa], D = mesh.vertices[ob];
      auto side = [](cx p, cx q, cx r) {
        return (q - p).real() * (r - p).imag() - (q - p).imag() * (r - p).real();
      };
      if (side(C, D, A) * side(C, D, B) >= 0.0) continue;
      if (side(A, B, C) * side(A, B, D) >= 0.0) continue;
      // flip (key.first,key.second) to (oa,ob), preserving orientation
      auto orient = [&](int u, int v, int w) -> std::array<int, 3> {
        cx pu = mesh.vertices[u], pv = mesh.vertices[v], pw = mesh.vertices[w];
        double area = (pv - pu).real() * (pw - pu).imag() -
                      (pv - pu).imag() * (pw - pu).real();
        if (area <= 0.0) return {u, w, v};
        return {u, v, w};
      };
      mesh.triangles[ta] = orient(key.first, oa, ob);
      mesh.triangles[tb] = orient(key.second, ob, oa);
      changed = true;
    }
  }
}

void finalize(DiskMesh& mesh) {
  delaunay_flips(mesh);
  size_t nv = mesh.vertices.size();
  mesh.is_boundary.assign(nv, false);
  for (int v : mesh.boundary_loop) mesh.is_boundary[v] = true;

  mesh.areas.resize(mesh.triangles.size());
  mesh.centroids.resize(mesh.triangles.size());
  mesh.min_angle_deg = 180.0;
  std::map<std::pair<int, int>, double> cot_sum;
  for (size_t t = 0; t < mesh.triangles.size(); ++t) {
    auto [a, b, c] = mesh.triangles[t];
    cx pa = mesh.vertices[a], pb = mesh.vertices[b], pc = mesh.vertices[c];
    double area = 0.5 * ((pb - pa).real() * (pc - pa).imag() -
                         (pb - pa).imag() * (pc - pa).real());
    if (area <= 0.0) throw std::runtime_error("mesh: non-positive triangle area");
    mesh.areas[t] = area;
    mesh.centroids[t] = (pa + pb + pc) / 3.0;
    const int idx[3] = {a, b, c};
    const cx pos[3] = {pa, pb, pc};
    for (int k = 0; k < 3; ++k) {
      // angle at corner k, opposite edge (k+1, k+2)
      cx u = pos[(k + 1) % 3] - pos[k], v = pos[(k + 2) % 3] - pos[k];
      double dot = u.real() * v.real() + u.imag() * v.imag();
      double crs = u.real() * v.imag() - u.imag() * v.real();
      double ang = std::atan2(std::abs(crs), dot);
      mesh.min_angle_deg = std::min(mesh.min_angle_deg, ang * 180.0 / kPi);
      double cot = dot / std::abs(crs);
      int i = idx[(k + 1) % 3], j = idx[(k + 2) % 3];
      cot_sum[std::minmax(i, j)] += 0.5 * cot;
    }
  }
  mesh.edges.clear();
  mesh.clamped_weights = 0;
  for (auto& [key, w] : cot_sum) {
    if (w < 0.0) {
      w = 0.0;
      ++mesh.clamped_weights;
    }
    mesh.edges.push_back({key.first, key.second, w});
  }
  mesh.vertex_edges.assign(nv, {});
  for (size_t e = 0; e < mesh.edges.size(); ++e) {
    mesh.vertex_edges[mesh.edges[e].a].push_back(static_cast<int>(e));
    mesh.vertex_edges[mesh.edges[e].b].push_back(static_cast<int>(e));
  }
}

}  // namespace

int DiskMesh::euler_characteristic() const {
  return static_cast<int>(vertices.size()) - static_cast<int>(edges.size()) +
         static_cast<int>(triangles.size());
}

double DiskMesh::total_area() const {
  double s = 0.0;
  for (double a : areas) s += a;
  return s;
}

void DiskMesh::triangle_gradient(int t, const std::array<double, 3>& f, double* dx,
                                 double* dy) const {
  auto [a, b, c] = triangles[t];
  cx pa = vertices[a], pb = vertices[b], pc = vertices[c];
  double det = 2.0 * areas[t];
  *dx = ((f[1] - f[0]) * (pc - pa).imag() - (f[2] - f[0]) * (pb - pa).imag()) / det;
  *dy = ((f[2] - f[0]) * (pb - pa).real() - (f[1] - f[0]) * (pc - pa).real()) / det;
}

DiskMesh build_mesh(double radius, double target_edge_length) {
  if (radius <= 0.0) throw std::invalid_argument("build_mesh: radius must be positive");
  if (target_edge_length <= 0.0 || target_edge_length > 2.0 * radius)
    throw std::invalid_argument("build_mesh: infeasible edge length");

  int n_rings = std::max(1, static_cast<int>(std::round(radius / (target_edge_length * 0.75))));
  double dr = radius / n_rings;

  DiskMesh mesh;
  mesh.domain = DiskMesh::Domain::disk;
  mesh.radius = radius;
  mesh.target_edge_length = target_edge_length;
  mesh.vertices.push_back(cx(0.0, 0.0));
  std::vector<std::vector<int>> rings(n_rings + 1);
  rings[0] = {0};
  for (int k = 1; k <= n_rings; ++k) {
    int n = 6 * k;
    rings[k].resize(n);
    for (int i = 0; i < n; ++i) {
      double t = 2.0 * kPi * i / n;
      rings[k][i] = static_cast<int>(mesh.vertices.size());
      mesh.vertices.push_back(k * dr * cx(std::cos(t), std::sin(t)));
    }
  }

  // annulus triangulation by two-pointer angular sweep
  for (int k = 0; k < n_rings; ++k) {
    const auto& inner = rings[k];
    const auto& outer = rings[k + 1];
    int ni = static_cast<int>(inner.size()), no = static_cast<int>(outer.size());
    if (ni == 1) {
      for (int j = 0; j < no; ++j)
        mesh.triangles.push_back({outer[j], outer[(j + 1) % no], inner[0]});
      continue;
    }
    auto angle = [&](int vid) {
      double a = std::arg(mesh.vertices[vid]);
      return a < 0.0 ? a + 2.0 * kPi : a;
    };
    int i = 0, j = 0;
    while (i < ni || j < no) {
      bool advance_outer;
      if (i == ni)
        advance_outer = true;
      else if (j == no)
        advance_outer = false;
      else {
        double next_inner = i + 1 < ni ? angle(inner[i + 1]) : 2.0 * kPi;
        double next_outer = j + 1 < no ? angle(outer[j + 1]) : 2.0 * kPi;
        advance_outer = next_outer <= next_inner;
      }
      if (advance_outer && j < no) {
        mesh.triangles.push_back({outer[j], outer[(j + 1) % no], inner[i % ni]});
        ++j;
      } else {
        mesh.triangles.push_back({inner[i % ni], outer[j % no], inner[(i + 1) % ni]});
        ++i;
      }
    }
  }
  mesh.boundary_loop = rings[n_rings];
  finalize(mesh);
  return mesh;
}

DiskMesh build_rect_mesh(double x0, double x1, double y0, double y1,
                         double target_edge_length) {
  if (x1 <= x0 || y1 <= y0) throw std::invalid_argument("build_rect_mesh: empty box");
  if (target_edge_length <= 0.0)
    throw std::invalid_argument("build_rect_mesh: infeasible edge length");
  int nx = std::max(1, static_cast<int>(std::round((x1 - x0) / target_edge_length)));
  int ny = std::max(1, static_cast<int>(std::round((y1 - y0) / target_edge_length)));

  DiskMesh mesh;
  mesh.domain = DiskMesh::Domain::rect;
  mesh.x0 = x0;
  mesh.x1 = x1;
  mesh.y0 = y0;
  mesh.y1 = y1;
  mesh.target_edge_length = target_edge_length;
  auto vid = [&](int i, int j) { return j * (nx + 1) + i; };
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i)
      mesh.vertices.push_back(cx(x0 + (x1 - x0) * i / nx, y0 + (y1 - y0) * j / ny));
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      int v00 = vid(i, j), v10 = vid(i + 1, j), v01 = vid(i, j + 1), v11 = vid(i + 1, j + 1);
      if ((i + j) % 2 == 0) {
        mesh.triangles.push_back({v00, v10, v11});
        mesh.triangles.push_back({v00, v11, v01});
      } else {
        mesh.triangles.push_back({v00, v10, v01});
        mesh.triangles.push_back({v10, v11, v01});
      }
    }
  for (int i = 0; i <= nx; ++i) mesh.boundary_loop.push_back(vid(i, 0));
  for (int j = 1; j <= ny; ++j) mesh.boundary_loop.push_back(vid(nx, j));
  for (int i = nx - 1; i >= 0; --i) mesh.boundary_loop.push_back(vid(i, ny));
  for (int j = ny - 1; j >= 1; --j) mesh.boundary_loop.push_back(vid(0, j));
  finalize(mesh);
  return mesh;
}

}  // namespace qdt
