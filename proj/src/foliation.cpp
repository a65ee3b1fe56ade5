#include "qdtree/foliation.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace qdt {

namespace {

constexpr double kPi = std::numbers::pi;

cx raw_direction(const PolynomialQD& phi, cx z, FoliationKind kind) {
  cx p = phi(z);
  double a = std::arg(p);
  double theta = kind == FoliationKind::vertical ? 0.5 * (kPi - a) : -0.5 * a;
  return cx(std::cos(theta), std::sin(theta));
}

cx align(cx v, cx ref) {
  return (v.real() * ref.real() + v.imag() * ref.imag()) < 0.0 ? -v : v;
}

double dist_to_nearest_zero(const ZeroSet& zeros, cx z, int* which = nullptr) {
  double best = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < zeros.zeros.size(); ++i) {
    double d = std::abs(z - zeros.zeros[i].location);
    if (d < best) {
      best = d;
      if (which) *which = static_cast<int>(i);
    }
  }
  return best;
}

// integral of sqrt(phi) dz along the straight ray from a zero, with the
// substitution t = eps * u^{2/(m+2)} that removes the t^{m/2} singularity
cx ray_sqrt_integral(const PolynomialQD& phi, cx zero, cx dir, double eps, int mult) {
  const int n_nodes = 24;
  double p = 2.0 / (mult + 2.0);
  cx acc(0.0);
  SqrtBranchTracker tracker;
  bool primed = false;
  for (int i = 0; i < n_nodes; ++i) {
    // midpoint rule in u; integrand smooth after substitution
    double u = (i + 0.5) / n_nodes;
    double t = eps * std::pow(u, p);
    double jac = eps * p * std::pow(u, p - 1.0);
    cx val = phi(zero + t * dir);
    cx s;
    if (!primed) {
      tracker.reset(val);
      s = tracker.value(val);
      primed = true;
    } else {
      s = tracker.value(val);
    }
    acc += s * jac / static_cast<double>(n_nodes);
  }
  return acc * dir;
}

struct StepResult {
  cx z_new;
  double err;
};

// Dormand-Prince 5(4) step on dz/ds = field(z), field the sign-aligned unit
// direction; returns the 5th order point and the embedded error estimate.
template <typename Field>
StepResult dp45_step(const Field& field, cx z, cx ref, double h) {
  static const double a21 = 1.0 / 5;
  static const double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static const double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static const double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                      a53 = 64448.0 / 6561, a54 = -212.0 / 729;
  static const double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                      a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static const double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                      b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  static const double c1 = 5179.0 / 57600, c3 = 7571.0 / 16695, c4 = 393.0 / 640,
                      c5 = -92097.0 / 339200, c6 = 187.0 / 2100, c7 = 1.0 / 40;

  cx k1 = field(z, ref);
  cx k2 = field(z + h * a21 * k1, ref);
  cx k3 = field(z + h * (a31 * k1 + a32 * k2), ref);
  cx k4 = field(z + h * (a41 * k1 + a42 * k2 + a43 * k3), ref);
  cx k5 = field(z + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4), ref);
  cx k6 = field(z + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5), ref);
  cx z5 = z + h * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
  cx k7 = field(z5, ref);
  cx z4 = z + h * (c1 * k1 + c3 * k3 + c4 * k4 + c5 * k5 + c6 * k6 + c7 * k7);
  return {z5, std::abs(z5 - z4)};
}

struct TraceState {
  std::vector<cx> points;
  std::vector<double> cum_re, cum_im;
  SqrtBranchTracker tracker;
  double re_acc = 0.0, im_acc = 0.0;

  void start(const PolynomialQD& phi, cx z, double re0 = 0.0, double im0 = 0.0,
             const SqrtBranchTracker* seeded = nullptr) {
    points = {z};
    re_acc = re0;
    im_acc = im0;
    cum_re = {re_acc};
    cum_im = {im_acc};
    if (seeded)
      tracker = *seeded;
    else
      tracker.reset(phi(z));
  }

  void push(const PolynomialQD& phi, cx z) {
    cx dw = segment_sqrt_integral(phi, points.back(), z, tracker, 8);
    re_acc += std::abs(dw.real());
    im_acc += std::abs(dw.imag());
    points.push_back(z);
    cum_re.push_back(re_acc);
    cum_im.push_back(im_acc);
  }
};

// single-direction trace; fills everything except gluing concerns. A trace
// launched from a prong starts inside its own guard disk, so that zero is
// ignored until the trace has moved clear of it.
void trace_one_direction(const PolynomialQD& phi, const ZeroContext& ctx,
                         FoliationKind kind, cx start_dir, const TraceOptions& opt,
                         TraceState& st, std::optional<double>& clipped_at,
                         bool& truncated, int& ended_at_zero, int source_zero = -1,
                         const std::function<bool(cx, cx)>* stop_chord = nullptr) {
  auto field = [&](cx z, cx ref) { return align(raw_direction(phi, z, kind), ref); };

  cx ref = start_dir;
  double h = opt.step;
  long steps = 0;
  clipped_at.reset();
  truncated = false;
  ended_at_zero = -1;
  bool clear_of_source = source_zero < 0;

  while (steps++ < opt.max_steps) {
    cx z = st.points.back();
    int near_id = -1;
    double dz0 = dist_to_nearest_zero(ctx.zeros, z, &near_id);
    double h_cap = opt.step;
    if (std::isfinite(dz0) && dz0 > 0.0) h_cap = std::min(h_cap, 0.4 * dz0);
    h = std::min(h, h_cap);
    h = std::max(h, 1e-12);

    StepResult r = dp45_step(field, z, ref, h);
    double tol = opt.rk_tol * (1.0 + std::abs(z));
    if (r.err > tol && h > 1e-11) {
      h *= std::max(0.2, 0.9 * std::pow(tol / (r.err + 1e-300), 0.2));
      --steps;
      continue;
    }

    cx z_new = r.z_new;

    // clip-circle exit: bisect the step size so the final sample is a
    // genuine trajectory point on the circle
    if (std::abs(z_new) >= ctx.clip_radius) {
      double h_lo = 0.0, h_hi = h;
      cx z_end = z_new;
      for (int it = 0; it < 60; ++it) {
        double h_mid = 0.5 * (h_lo + h_hi);
        cx z_mid = dp45_step(field, z, ref, h_mid).z_new;
        if (std::abs(z_mid) < ctx.clip_radius) {
          h_lo = h_mid;
        } else {
          h_hi = h_mid;
          z_end = z_mid;
        }
      }
      st.push(phi, z_end);
      clipped_at = ctx.clip_radius;
      return;
    }

    // guard-disk entry: terminate at the zero (saddle connection)
    int hit = -1;
    double d_new = dist_to_nearest_zero(ctx.zeros, z_new, &hit);
    if (!clear_of_source &&
        std::abs(z_new - ctx.zeros.zeros[source_zero].location) > 1.5 * ctx.guard)
      clear_of_source = true;
    if (!clear_of_source && hit == source_zero) {
      ref = align(field(z_new, ref), ref);
      st.push(phi, z_new);
      continue;
    }
    if (d_new <= ctx.guard && hit >= 0) {
      st.push(phi, z_new);
      cx zloc = ctx.zeros.zeros[hit].location;
      if (std::abs(z_new - zloc) > 0.0) {
        cx dw = -ray_sqrt_integral(phi, zloc, (z_new - zloc) / std::abs(z_new - zloc),
                                   std::abs(z_new - zloc),
                                   ctx.zeros.zeros[hit].multiplicity);
        st.re_acc += std::abs(dw.real());
        st.im_acc += std::abs(dw.imag());
        st.points.push_back(zloc);
        st.cum_re.push_back(st.re_acc);
        st.cum_im.push_back(st.im_acc);
      }
      ended_at_zero = hit;
      return;
    }

    ref = align(field(z_new, ref), ref);
    st.push(phi, z_new);
    if (stop_chord && (*stop_chord)(z, z_new)) return;
    if (r.err > 0.0) h *= std::min(5.0, 0.9 * std::pow(tol / r.err, 0.2));
  }
  truncated = true;
}

}  // namespace

cx direction_field(const PolynomialQD& phi, cx z, FoliationKind kind) {
  cx p = phi(z);
  if (std::abs(p) == 0.0)
    throw std::invalid_argument("direction_field: z is a zero of phi");
  cx v = raw_direction(phi, z, kind);
  if (v.real() < 0.0 || (v.real() == 0.0 && v.imag() < 0.0)) v = -v;
  // exact-boundary tie handling under rounding
  if (std::abs(v.real()) < 1e-15 && v.imag() < 0.0) v = -v;
  return v;
}

double TrajectorySegment::euclid_length() const {
  double l = 0.0;
  for (size_t i = 0; i + 1 < points.size(); ++i) l += std::abs(points[i + 1] - points[i]);
  return l;
}

ZeroContext ZeroContext::make(const PolynomialQD& phi, const TraceOptions& opt) {
  ZeroContext ctx;
  if (phi.degree() >= 1) ctx.zeros = find_zeros(phi);
  double mz = ctx.zeros.max_abs();
  ctx.guard = opt.guard_factor * (1.0 + mz);
  ctx.clip_radius = opt.clip_radius > 0.0 ? opt.clip_radius : 2.0 + 2.0 * mz;
  return ctx;
}

std::vector<double> prong_angles(const PolynomialQD& phi, const Zero& zero,
                                 FoliationKind kind) {
  int m = zero.multiplicity;
  // local model phi(z) ~ c (z - z0)^m, c the leading Taylor coefficient
  PolynomialQD dm = phi.derivative_poly(m);
  cx c = dm(zero.location);
  for (int j = 2; j <= m; ++j) c /= static_cast<double>(j);
  double base = kind == FoliationKind::vertical ? (kPi - std::arg(c)) / (m + 2.0)
                                                : -std::arg(c) / (m + 2.0);
  std::vector<double> out(m + 2);
  for (int j = 0; j < m + 2; ++j) out[j] = base + 2.0 * kPi * j / (m + 2.0);
  return out;
}

TrajectorySegment trace_trajectory(const PolynomialQD& phi, const ZeroContext& ctx,
                                   cx z0, FoliationKind kind, const TraceOptions& opt) {
  if (dist_to_nearest_zero(ctx.zeros, z0) <= ctx.guard)
    throw std::invalid_argument(
        "trace_trajectory: start inside a zero guard disk; use trace_separatrix");

  cx v = raw_direction(phi, z0, kind);

  TrajectorySegment out;
  out.kind = kind;

  TraceState back;
  back.start(phi, z0);
  std::optional<double> clip_b;
  bool trunc_b;
  int zero_b;
  trace_one_direction(phi, ctx, kind, -v, opt, back, clip_b, trunc_b, zero_b);

  TraceState fwd;
  fwd.start(phi, z0);
  std::optional<double> clip_f;
  bool trunc_f;
  int zero_f;
  trace_one_direction(phi, ctx, kind, v, opt, fwd, clip_f, trunc_f, zero_f);

  // glue: reversed backward half + forward half
  double total_re_b = back.cum_re.back(), total_im_b = back.cum_im.back();
  for (size_t i = back.points.size(); i-- > 0;) {
    out.points.push_back(back.points[i]);
    out.cum_re.push_back(total_re_b - back.cum_re[i]);
    out.cum_im.push_back(total_im_b - back.cum_im[i]);
  }
  for (size_t i = 1; i < fwd.points.size(); ++i) {
    out.points.push_back(fwd.points[i]);
    out.cum_re.push_back(total_re_b + fwd.cum_re[i]);
    out.cum_im.push_back(total_im_b + fwd.cum_im[i]);
  }
  out.truncated = trunc_b || trunc_f;
  if (clip_f) out.clipped_at = clip_f;
  if (clip_b && !out.clipped_at) out.clipped_at = clip_b;
  out.ended_at_zero = zero_f;
  out.start_hit_zero = zero_b;
  return out;
}

TrajectorySegment trace_trajectory(const PolynomialQD& phi, cx z0, FoliationKind kind,
                                   const TraceOptions& opt) {
  return trace_trajectory(phi, ZeroContext::make(phi, opt), z0, kind, opt);
}

TrajectorySegment trace_separatrix(const PolynomialQD& phi, const ZeroContext& ctx,
                                   int zero_id, int prong, FoliationKind kind,
                                   const TraceOptions& opt) {
  const Zero& zero = ctx.zeros.zeros.at(zero_id);
  std::vector<double> angles = prong_angles(phi, zero, kind);
  double theta = angles.at(prong);
  cx dir(std::cos(theta), std::sin(theta));
  double eps = 0.5 * ctx.guard;

  // launch arc from the zero to the guard boundary along the tangent ray
  cx dw0 = ray_sqrt_integral(phi, zero.location, dir, eps, zero.multiplicity);
  cx z_start = zero.location + eps * dir;

  TrajectorySegment out;
  out.kind = kind;
  out.source_zero = zero_id;
  out.prong_index = prong;
  out.points = {zero.location};
  out.cum_re = {0.0};
  out.cum_im = {0.0};

  TraceState st;
  SqrtBranchTracker seed(phi(z_start));
  st.start(phi, z_start, std::abs(dw0.real()), std::abs(dw0.imag()), &seed);
  std::optional<double> clip;
  bool trunc;
  int ended;
  trace_one_direction(phi, ctx, kind, dir, opt, st, clip, trunc, ended, zero_id);

  out.points.insert(out.points.end(), st.points.begin(), st.points.end());
  out.cum_re.insert(out.cum_re.end(), st.cum_re.begin(), st.cum_re.end());
  out.cum_im.insert(out.cum_im.end(), st.cum_im.begin(), st.cum_im.end());
  out.clipped_at = clip;
  out.truncated = trunc;
  out.ended_at_zero = ended;
  return out;
}

TrajectorySegment trace_half(const PolynomialQD& phi, const ZeroContext& ctx, cx z0,
                             FoliationKind kind, bool backward,
                             const TraceOptions& opt,
                             const std::function<bool(cx, cx)>* stop_chord) {
  if (dist_to_nearest_zero(ctx.zeros, z0) <= ctx.guard)
    throw std::invalid_argument("trace_half: start inside a zero guard disk");
  cx v = raw_direction(phi, z0, kind);
  TraceState st;
  st.start(phi, z0);
  TrajectorySegment out;
  out.kind = kind;
  trace_one_direction(phi, ctx, kind, backward ? -v : v, opt, st, out.clipped_at,
                      out.truncated, out.ended_at_zero, -1, stop_chord);
  out.points = std::move(st.points);
  out.cum_re = std::move(st.cum_re);
  out.cum_im = std::move(st.cum_im);
  return out;
}

CriticalGraph critical_graph(const PolynomialQD& phi, FoliationKind kind,
                             const TraceOptions& opt) {
  CriticalGraph g;
  g.phi = phi;
  g.kind = kind;
  ZeroContext ctx = ZeroContext::make(phi, opt);
  g.zeros = ctx.zeros;
  g.guard = ctx.guard;
  g.clip_radius = ctx.clip_radius;
  if (ctx.clip_radius < 2.0 * ctx.zeros.max_abs())
    throw std::invalid_argument("critical_graph: clip radius must exceed 2 max|zero|");
  for (size_t zi = 0; zi < ctx.zeros.zeros.size(); ++zi) {
    int prongs = ctx.zeros.zeros[zi].multiplicity + 2;
    for (int p = 0; p < prongs; ++p)
      g.separatrices.push_back(
          trace_separatrix(phi, ctx, static_cast<int>(zi), p, kind, opt));
  }
  return g;
}

}  // namespace qdt
