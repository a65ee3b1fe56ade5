#pragma once

#include "qdtree/poly_qd.hpp"

#include <optional>

namespace qdt {

/// Unit direction of the `kind` foliation line field at z: a unit vector v
/// with phi(z) v^2 negative real (vertical) or positive real (horizontal),
/// normalized to Re v >= 0 (Im v > 0 on the boundary of that half plane).
/// Defined up to sign; throws at zeros of phi.
cx direction_field(const PolynomialQD& phi, cx z, FoliationKind kind);

struct TraceOptions {
  double step = 0.01;          // max sample spacing along the trajectory
  double clip_radius = 0.0;    // <= 0: use 2 + 2 max|zero|
  long max_steps = 400000;
  double rk_tol = 1e-10;
  double guard_factor = 1e-3;  // guard radius = factor * (1 + max|zero|)
};

/// Sampled trajectory of the foliation line field. cum_re/cum_im hold the
/// cumulative |Re dw| and |Im dw| at each sample, w = int sqrt(phi) dz
/// branch-continued along the curve; for a vertical trajectory |Re dw|
/// accumulates (near) zero and |Im dw| is the distance crossed in the
/// horizontal leaf space, and symmetrically.
struct TrajectorySegment {
  std::vector<cx> points;
  std::vector<double> cum_re, cum_im;
  FoliationKind kind = FoliationKind::vertical;
  int source_zero = -1;   // >= 0: separatrix launched from that zero
  int prong_index = -1;
  std::optional<double> clipped_at;
  bool truncated = false;     // step budget exhausted
  int ended_at_zero = -1;     // saddle connection target
  int start_hit_zero = -1;    // regular trace whose backward end hit a zero

  double own_measure() const {
    double m = kind == FoliationKind::vertical ? cum_re.back() : cum_im.back();
    return points.empty() ? 0.0 : m;
  }
  double cross_measure() const {
    double m = kind == FoliationKind::vertical ? cum_im.back() : cum_re.back();
    return points.empty() ? 0.0 : m;
  }
  double euclid_length() const;
};

/// Zero locations plus the guard/clip radii every tracing routine shares.
struct ZeroContext {
  ZeroSet zeros;
  double guard = 0.0;
  double clip_radius = 0.0;
  static ZeroContext make(const PolynomialQD& phi, const TraceOptions& opt);
};

/// Tangent directions of the `kind` separatrices at a zero, one angle per
/// prong; a zero of multiplicity m has m+2 of them.
std::vector<double> prong_angles(const PolynomialQD& phi, const Zero& zero,
                                 FoliationKind kind);

/// Trace the leaf through a regular point z0, both directions, until the
/// clip circle, a zero's guard disk, or the step budget.
TrajectorySegment trace_trajectory(const PolynomialQD& phi, cx z0, FoliationKind kind,
                                   const TraceOptions& opt = {});
TrajectorySegment trace_trajectory(const PolynomialQD& phi, const ZeroContext& ctx,
                                   cx z0, FoliationKind kind, const TraceOptions& opt);

/// Trace the separatrix leaving zero `zero_id` along prong `prong`.
TrajectorySegment trace_separatrix(const PolynomialQD& phi, const ZeroContext& ctx,
                                   int zero_id, int prong, FoliationKind kind,
                                   const TraceOptions& opt = {});

/// One direction only (the field orientation at z0, or its negative).
/// `stop_chord`, when set, is evaluated on every accepted step chord and
/// ends the trace once it returns true (used to stop at the first crossing
/// of a critical graph without tracing out to the clip circle).
TrajectorySegment trace_half(const PolynomialQD& phi, const ZeroContext& ctx, cx z0,
                             FoliationKind kind, bool backward,
                             const TraceOptions& opt = {},
                             const std::function<bool(cx, cx)>* stop_chord = nullptr);

struct CriticalGraph {
  PolynomialQD phi;
  FoliationKind kind = FoliationKind::vertical;
  ZeroSet zeros;
  double guard = 0.0;
  double clip_radius = 0.0;
  std::vector<TrajectorySegment> separatrices;

  bool complete() const {
    for (const auto& s : separatrices)
      if (s.truncated) return false;
    return true;
  }
};

/// All (multiplicity+2) separatrices per zero of the `kind` foliation.
CriticalGraph critical_graph(const PolynomialQD& phi, FoliationKind kind,
                             const TraceOptions& opt = {});

}  // namespace qdt
