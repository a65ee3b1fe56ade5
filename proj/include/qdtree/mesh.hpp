#pragma once

#include "qdtree/poly_qd.hpp"

#include <array>

namespace qdt {

struct MeshEdge {
  int a = -1, b = -1;      // a < b
  double cot_weight = 0.0;  // clamped at 0
};

/// Triangulated disk (rings of near-equilateral triangles) or rectangle.
/// Triangles are positively oriented; the boundary loop is ordered ccw.
struct DiskMesh {
  enum class Domain { disk, rect };
  Domain domain = Domain::disk;
  double radius = 0.0;                      // disk
  double x0 = 0.0, x1 = 0.0, y0 = 0.0, y1 = 0.0;  // rect

  std::vector<cx> vertices;
  std::vector<std::array<int, 3>> triangles;
  std::vector<int> boundary_loop;
  std::vector<MeshEdge> edges;
  std::vector<std::vector<int>> vertex_edges;  // edge ids incident to a vertex
  std::vector<bool> is_boundary;
  std::vector<double> areas;      // per triangle
  std::vector<cx> centroids;      // per triangle
  double min_angle_deg = 0.0;
  int clamped_weights = 0;        // negative cotangent weights set to zero
  double target_edge_length = 0.0;

  int euler_characteristic() const;
  double total_area() const;
  /// piecewise-linear gradient row: value differences to (d/dx, d/dy)
  void triangle_gradient(int t, const std::array<double, 3>& f, double* dx,
                         double* dy) const;
};

/// Disk of the given radius meshed by concentric rings, ring k carrying
/// ~6k vertices; target_edge_length controls the ring spacing.
DiskMesh build_mesh(double radius, double target_edge_length);

/// Axis-aligned rectangle [x0,x1] x [y0,y1] on a structured grid with
/// alternating diagonals.
DiskMesh build_rect_mesh(double x0, double x1, double y0, double y1,
                         double target_edge_length);

}  // namespace qdt
