#include "qdtree/poly_qd.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace qdt {

namespace {

// Gauss-Legendre nodes/weights on [-1,1], computed once per order by Newton
// iteration on the Legendre polynomial.
struct GaussRule {
  std::vector<double> nodes, weights;
};

const GaussRule& gauss_rule(int n) {
  static std::vector<GaussRule> cache(65);
  GaussRule& rule = cache.at(n);
  if (!rule.nodes.empty()) return rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      double dp = n * (x * p1 - p0) / (x * x - 1.0);
      double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-15) break;
    }
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    double dp = n * (x * p1 - p0) / (x * x - 1.0);
    rule.nodes[i] = x;
    rule.weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return rule;
}

}  // namespace

PolynomialQD::PolynomialQD(std::vector<cx> coeffs) : coeffs_(std::move(coeffs)) {
  if (coeffs_.empty()) throw std::invalid_argument("PolynomialQD: empty coefficient list");
  while (coeffs_.size() > 1 && std::abs(coeffs_.back()) == 0.0) coeffs_.pop_back();
}

bool PolynomialQD::is_zero() const {
  return coeffs_.size() == 1 && std::abs(coeffs_[0]) == 0.0;
}

cx PolynomialQD::operator()(cx z) const {
  cx acc = coeffs_.back();
  for (auto it = coeffs_.rbegin() + 1; it != coeffs_.rend(); ++it) acc = acc * z + *it;
  return acc;
}

cx PolynomialQD::derivative(cx z) const {
  int n = degree();
  if (n == 0) return cx(0.0);
  cx acc = static_cast<double>(n) * coeffs_.back();
  for (int j = n - 1; j >= 1; --j) acc = acc * z + static_cast<double>(j) * coeffs_[j];
  return acc;
}

PolynomialQD PolynomialQD::derivative_poly(int order) const {
  std::vector<cx> c = coeffs_;
  for (int o = 0; o < order; ++o) {
    if (c.size() == 1) {
      c = {cx(0.0)};
      break;
    }
    std::vector<cx> d(c.size() - 1);
    for (size_t j = 1; j < c.size(); ++j) d[j - 1] = static_cast<double>(j) * c[j];
    c = std::move(d);
  }
  return PolynomialQD(std::move(c));
}

PolynomialQD PolynomialQD::negated() const { return scaled(cx(-1.0)); }

PolynomialQD PolynomialQD::scaled(cx c) const {
  std::vector<cx> out = coeffs_;
  for (auto& a : out) a *= c;
  return PolynomialQD(std::move(out));
}

PolynomialQD PolynomialQD::minus(const PolynomialQD& other) const {
  std::vector<cx> out(std::max(coeffs_.size(), other.coeffs_.size()), cx(0.0));
  for (size_t j = 0; j < coeffs_.size(); ++j) out[j] += coeffs_[j];
  for (size_t j = 0; j < other.coeffs_.size(); ++j) out[j] -= other.coeffs_[j];
  return PolynomialQD(std::move(out));
}

double PolynomialQD::coeff_scale() const {
  double m = 0.0;
  for (const auto& a : coeffs_) m = std::max(m, std::abs(a));
  return m;
}

std::string PolynomialQD::describe() const {
  std::ostringstream os;
  os.precision(12);
  for (size_t j = 0; j < coeffs_.size(); ++j) {
    if (j) os << ";";
    os << coeffs_[j].real() << "," << coeffs_[j].imag();
  }
  return os.str();
}

int ZeroSet::total_multiplicity() const {
  int s = 0;
  for (const auto& z : zeros) s += z.multiplicity;
  return s;
}

double ZeroSet::max_abs() const {
  double m = 0.0;
  for (const auto& z : zeros) m = std::max(m, std::abs(z.location));
  return m;
}

ZeroSet find_zeros(const PolynomialQD& phi, double tol) {
  ZeroSet out;
  int n = phi.degree();
  if (n == 0) return out;
  if (phi.is_zero()) throw std::invalid_argument("find_zeros: zero polynomial");

  // companion matrix of the monic normalization
  Eigen::MatrixXcd companion = Eigen::MatrixXcd::Zero(n, n);
  cx lead = phi.leading();
  for (int i = 1; i < n; ++i) companion(i, i - 1) = 1.0;
  for (int i = 0; i < n; ++i) companion(i, n - 1) = -phi.coeffs()[i] / lead;
  Eigen::ComplexEigenSolver<Eigen::MatrixXcd> solver(companion, false);
  std::vector<cx> roots(n);
  for (int i = 0; i < n; ++i) roots[i] = solver.eigenvalues()[i];

  // Newton polish on simple-root candidates
  for (auto& r : roots) {
    for (int it = 0; it < 12; ++it) {
      cx p = phi(r), dp = phi.derivative(r);
      if (std::abs(dp) == 0.0) break;
      cx step = p / dp;
      if (!std::isfinite(step.real()) || !std::isfinite(step.imag())) break;
      r -= step;
      if (std::abs(step) < 1e-15 * (1.0 + std::abs(r))) break;
    }
  }

  double max_root = 0.0;
  for (const auto& r : roots) max_root = std::max(max_root, std::abs(r));
  double cluster_radius = tol * (1.0 + max_root);

  std::sort(roots.begin(), roots.end(), [](cx a, cx b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
  });
  std::vector<bool> used(roots.size(), false);
  for (size_t i = 0; i < roots.size(); ++i) {
    if (used[i]) continue;
    std::vector<cx> cluster{roots[i]};
    used[i] = true;
    for (size_t j = i + 1; j < roots.size(); ++j) {
      if (used[j]) continue;
      for (const auto& c : cluster) {
        if (std::abs(roots[j] - c) <= 2.0 * cluster_radius) {
          cluster.push_back(roots[j]);
          used[j] = true;
          break;
        }
      }
    }
    cx center(0.0);
    for (const auto& c : cluster) center += c;
    center /= static_cast<double>(cluster.size());
    int mult = static_cast<int>(cluster.size());
    if (mult > 1) {
      // a multiplicity-m zero is a simple zero of the (m-1)st derivative
      PolynomialQD d = phi.derivative_poly(mult - 1);
      for (int it = 0; it < 30; ++it) {
        cx p = d(center), dp = d.derivative(center);
        if (std::abs(dp) == 0.0) break;
        cx step = p / dp;
        if (std::abs(step) > cluster_radius * 4.0) break;
        center -= step;
        if (std::abs(step) < 1e-15 * (1.0 + std::abs(center))) break;
      }
    }
    out.zeros.push_back({center, mult});
  }
  return out;
}

PathPolyline::PathPolyline(std::vector<cx> pts, bool close)
    : points(std::move(pts)), closed(close) {
  if (points.size() < 2) throw std::invalid_argument("PathPolyline: need at least 2 points");
  for (size_t i = 0; i + 1 < points.size(); ++i)
    if (points[i] == points[i + 1])
      throw std::invalid_argument("PathPolyline: consecutive points coincide");
}

cx segment_sqrt_integral(const PolynomialQD& phi, cx a, cx b,
                         SqrtBranchTracker& tracker, int gauss_order) {
  const GaussRule& rule = gauss_rule(gauss_order);
  cx d = b - a;
  cx acc(0.0);
  // nodes must be visited in increasing order for the branch continuation
  std::vector<int> order(rule.nodes.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  std::sort(order.begin(), order.end(),
            [&](int i, int j) { return rule.nodes[i] < rule.nodes[j]; });
  for (int idx : order) {
    double t = 0.5 * (rule.nodes[idx] + 1.0);
    cx s = tracker.value(phi(a + t * d));
    acc += rule.weights[idx] * 0.5 * s;
  }
  return acc * d;
}

namespace {

// Splits [0,1] along the segment until phi varies slowly on each piece, so
// branch continuation between breakpoint evaluations is unambiguous.
void branch_breakpoints(const PolynomialQD& phi, cx a, cx b, double t0, double t1,
                        int depth, std::vector<double>& out) {
  cx pa = phi(a + t0 * (b - a));
  cx pb = phi(a + t1 * (b - a));
  cx pm = phi(a + 0.5 * (t0 + t1) * (b - a));
  double scale = std::abs(pa) + std::abs(pb) + std::abs(pm);
  bool ok = std::abs(pb - pa) <= 0.30 * scale && std::abs(pm - pa) <= 0.30 * scale;
  if (ok || depth >= 24) {
    out.push_back(t1);
    return;
  }
  branch_breakpoints(phi, a, b, t0, 0.5 * (t0 + t1), depth + 1, out);
  branch_breakpoints(phi, a, b, 0.5 * (t0 + t1), t1, depth + 1, out);
}

struct MeasureAccum {
  double value = 0.0;
  bool vertical;
  double take(cx dw) const {
    return vertical ? std::abs(dw.real()) : std::abs(dw.imag());
  }
};

// |Re/Im integral sqrt(phi) dz| over [t0,t1] of the segment. The signed
// component of sqrt(phi)*dz may change sign inside; recurse until each piece
// is one-signed, then the absolute value of the signed integral is exact
// (the signed integral itself is path-independent). A global branch flip of
// one piece leaves its contribution unchanged, so each piece can seed its
// own tracker.
double measure_piece(const PolynomialQD& phi, cx a, cx b, double t0, double t1,
                     cx s0, cx s1, bool vertical, double tol, int depth) {
  cx d = b - a;
  auto comp = [&](cx s) {
    cx v = s * d;
    return vertical ? v.real() : v.imag();
  };
  double tm = 0.5 * (t0 + t1);
  cx sm = std::sqrt(phi(a + tm * d));
  if (sm.real() * (s0 + s1).real() + sm.imag() * (s0 + s1).imag() < 0.0) sm = -sm;

  double c0 = comp(s0), cm = comp(sm), c1 = comp(s1);
  bool same_sign = (c0 >= 0 && cm >= 0 && c1 >= 0) || (c0 <= 0 && cm <= 0 && c1 <= 0);

  SqrtBranchTracker tr(s0 * s0);
  cx sub_a = a + t0 * d, sub_b = a + t1 * d;
  cx dw = segment_sqrt_integral(phi, sub_a, sub_b, tr, 12);
  double coarse = std::abs(vertical ? dw.real() : dw.imag());

  if (depth >= 30) return coarse;
  if (same_sign) {
    SqrtBranchTracker trl(s0 * s0), trr(sm * sm);
    cx dwl = segment_sqrt_integral(phi, sub_a, a + tm * d, trl, 12);
    cx dwr = segment_sqrt_integral(phi, a + tm * d, sub_b, trr, 12);
    double fine = std::abs((vertical ? (dwl + dwr).real() : (dwl + dwr).imag()));
    if (std::abs(fine - coarse) <= tol) return fine;
  }
  double left = measure_piece(phi, a, b, t0, tm, s0, sm, vertical, 0.5 * tol, depth + 1);
  double right = measure_piece(phi, a, b, tm, t1, sm, s1, vertical, 0.5 * tol, depth + 1);
  return left + right;
}

}  // namespace

double transverse_measure(const PolynomialQD& phi, const PathPolyline& path,
                          FoliationKind kind, double abs_tol) {
  bool vertical = (kind == FoliationKind::vertical);
  std::vector<cx> pts = path.points;
  if (path.closed && pts.back() != pts.front()) pts.push_back(pts.front());

  double total = 0.0;
  int n_segments = static_cast<int>(pts.size()) - 1;
  double seg_tol = abs_tol / std::max(1, n_segments);
  for (int s = 0; s < n_segments; ++s) {
    cx a = pts[s], b = pts[s + 1];
    std::vector<double> ts{0.0};
    branch_breakpoints(phi, a, b, 0.0, 1.0, 0, ts);

    // branch values at breakpoints, continued along the segment. A zero of
    // phi that dominates a macroscopic parameter range (as opposed to an
    // isolated transversal crossing) makes the branch genuinely ambiguous.
    std::vector<cx> sv(ts.size());
    SqrtBranchTracker tracker(phi(a));
    double phi_floor = 1e-11 * (phi.coeff_scale() + 1.0);
    double last_clean_t = 0.0;
    for (size_t i = 0; i < ts.size(); ++i) {
      cx p = phi(a + ts[i] * (b - a));
      if (std::abs(p) >= phi_floor) {
        last_clean_t = ts[i];
      } else if (ts[i] - last_clean_t > 0.02) {
        throw AmbiguousBranchError(
            "transverse_measure: path runs along a zero of phi");
      }
      sv[i] = tracker.value(p);
    }
    double piece_tol = seg_tol / static_cast<double>(ts.size());
    for (size_t i = 0; i + 1 < ts.size(); ++i)
      total += measure_piece(phi, a, b, ts[i], ts[i + 1], sv[i], sv[i + 1], vertical,
                             piece_tol, 0);
  }
  return total;
}

namespace {

// adaptive 2D quadrature of |f| over polar/cartesian panels
struct Panel {
  double u0, u1, v0, v1;
};

double panel_integral(const std::function<double(double, double)>& g, const Panel& p,
                      int order) {
  const GaussRule& rule = gauss_rule(order);
  double acc = 0.0;
  for (size_t i = 0; i < rule.nodes.size(); ++i) {
    double u = 0.5 * (p.u0 + p.u1) + 0.5 * (p.u1 - p.u0) * rule.nodes[i];
    for (size_t j = 0; j < rule.nodes.size(); ++j) {
      double v = 0.5 * (p.v0 + p.v1) + 0.5 * (p.v1 - p.v0) * rule.nodes[j];
      acc += rule.weights[i] * rule.weights[j] * g(u, v);
    }
  }
  return acc * 0.25 * (p.u1 - p.u0) * (p.v1 - p.v0);
}

double adaptive_panels(const std::function<double(double, double)>& g, Panel p,
                       double tol, int depth, int max_depth) {
  double coarse = panel_integral(g, p, 6);
  double um = 0.5 * (p.u0 + p.u1), vm = 0.5 * (p.v0 + p.v1);
  Panel q[4] = {{p.u0, um, p.v0, vm}, {um, p.u1, p.v0, vm},
                {p.u0, um, vm, p.v1}, {um, p.u1, vm, p.v1}};
  double fine = 0.0;
  for (const auto& c : q) fine += panel_integral(g, c, 6);
  if (std::abs(fine - coarse) <= tol || depth >= max_depth) return fine;
  double acc = 0.0;
  for (const auto& c : q) acc += adaptive_panels(g, c, 0.25 * tol, depth + 1, max_depth);
  return acc;
}

}  // namespace

double l1_norm(const std::function<cx(cx)>& f, double radius, QuadratureSpec spec) {
  if (radius <= 0.0) throw std::invalid_argument("l1_norm: radius must be positive");
  auto g = [&](double r, double t) {
    return std::abs(f(cx(r * std::cos(t), r * std::sin(t)))) * r;
  };
  Panel whole{0.0, radius, 0.0, 2.0 * std::numbers::pi};
  // split the angular range so panels are not too anisotropic
  double acc = 0.0;
  for (int k = 0; k < 4; ++k) {
    Panel p = whole;
    p.v0 = whole.v1 * k / 4.0;
    p.v1 = whole.v1 * (k + 1) / 4.0;
    acc += adaptive_panels(g, p, spec.abs_tol / 4.0, 0, spec.max_depth);
  }
  return acc;
}

double l1_norm(const PolynomialQD& phi, double radius, QuadratureSpec spec) {
  return l1_norm(std::function<cx(cx)>([&phi](cx z) { return phi(z); }), radius, spec);
}

double l1_norm_rect(const std::function<cx(cx)>& f, double x0, double x1, double y0,
                    double y1, QuadratureSpec spec) {
  if (x1 <= x0 || y1 <= y0) throw std::invalid_argument("l1_norm_rect: empty box");
  auto g = [&](double x, double y) { return std::abs(f(cx(x, y))); };
  return adaptive_panels(g, Panel{x0, x1, y0, y1}, spec.abs_tol, 0, spec.max_depth);
}

double bers_norm(const PolynomialQD& phi, GridSpec grid) {
  if (phi.is_zero()) return 0.0;
  auto value = [&phi](double x, double y) {
    double r2 = x * x + y * y;
    if (r2 >= 1.0) return 0.0;
    double w = 1.0 - r2;
    return std::abs(phi(cx(x, y))) * w * w * 0.25;
  };
  double best = 0.0, bx = 0.0, by = 0.0;
  for (int i = 0; i < grid.radial; ++i) {
    // cluster radii toward the boundary
    double u = (i + 0.5) / grid.radial;
    double r = 1.0 - (1.0 - u) * (1.0 - u);
    for (int j = 0; j < grid.angular; ++j) {
      double t = 2.0 * std::numbers::pi * j / grid.angular;
      double x = r * std::cos(t), y = r * std::sin(t);
      double v = value(x, y);
      if (v > best) {
        best = v;
        bx = x;
        by = y;
      }
    }
  }
  {
    double v = value(0.0, 0.0);
    if (v > best) {
      best = v;
      bx = 0.0;
      by = 0.0;
    }
  }
  // shrinking pattern search refinement
  double h = 2.0 / grid.radial;
  for (int it = 0; it < 60; ++it) {
    bool moved = false;
    const double dx[4] = {h, -h, 0.0, 0.0};
    const double dy[4] = {0.0, 0.0, h, -h};
    for (int d = 0; d < 4; ++d) {
      double v = value(bx + dx[d], by + dy[d]);
      if (v > best) {
        best = v;
        bx += dx[d];
        by += dy[d];
        moved = true;
      }
    }
    if (!moved) h *= 0.5;
    if (h < 1e-13) break;
  }
  return best;
}

cx cayley(cx z, CayleyDirection direction) {
  if (direction == CayleyDirection::disk_to_halfplane) {
    if (std::abs(z - cx(1.0)) < 1e-14)
      throw std::invalid_argument("cayley: z = 1 maps to infinity");
    return cx(0.0, 1.0) * (cx(1.0) + z) / (cx(1.0) - z);
  }
  if (std::abs(z + cx(0.0, 1.0)) < 1e-14)
    throw std::invalid_argument("cayley: w = -i is the excluded boundary point");
  return (z - cx(0.0, 1.0)) / (z + cx(0.0, 1.0));
}

double hyperbolic_density(cx z) {
  double r2 = std::norm(z);
  if (r2 >= 1.0) throw std::invalid_argument("hyperbolic_density: |z| must be < 1");
  double w = 1.0 - r2;
  return 4.0 / (w * w);
}

ConformalMetric ConformalMetric::flat() {
  return {Tag::flat, [](cx) { return 1.0; }};
}

ConformalMetric ConformalMetric::hyperbolic() {
  return {Tag::hyperbolic, [](cx w) { return hyperbolic_density(w); }};
}

ConformalMetric ConformalMetric::cayley_pullback(bool printed_form) {
  return {Tag::cayley_pullback, [printed_form](cx z) {
            cx dc = cx(0.0, 2.0) / ((cx(1.0) - z) * (cx(1.0) - z));
            double a = std::abs(dc);
            return printed_form ? a : a * a;
          }};
}

ConformalMetric ConformalMetric::custom(std::function<double(cx)> density) {
  return {Tag::custom, std::move(density)};
}

}  // namespace qdt
