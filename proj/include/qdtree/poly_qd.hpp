#pragma once

#include <complex>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace qdt {

using cx = std::complex<double>;

/// Which foliation of phi dz^2 we are working with. The vertical foliation
/// consists of curves on which phi dz^2 is negative real; its transverse
/// measure is |Re sqrt(phi) dz|. The horizontal foliation of phi is the
/// vertical foliation of -phi.
enum class FoliationKind { vertical, horizontal };

inline FoliationKind opposite(FoliationKind k) {
  return k == FoliationKind::vertical ? FoliationKind::horizontal
                                      : FoliationKind::vertical;
}

inline const char* to_string(FoliationKind k) {
  return k == FoliationKind::vertical ? "vertical" : "horizontal";
}

/// Polynomial quadratic differential phi(z) dz^2, phi(z) = sum_j a_j z^j.
/// The zero polynomial is represented by the single coefficient 0.
class PolynomialQD {
 public:
  PolynomialQD() : coeffs_{cx(0.0, 0.0)} {}
  explicit PolynomialQD(std::vector<cx> coeffs);

  int degree() const { return static_cast<int>(coeffs_.size()) - 1; }
  bool is_zero() const;
  const std::vector<cx>& coeffs() const { return coeffs_; }
  cx leading() const { return coeffs_.back(); }

  cx operator()(cx z) const;
  cx derivative(cx z) const;
  PolynomialQD derivative_poly(int order = 1) const;

  /// -phi: the differential whose vertical foliation is the horizontal
  /// foliation of phi.
  PolynomialQD negated() const;
  PolynomialQD scaled(cx c) const;
  PolynomialQD minus(const PolynomialQD& other) const;

  double coeff_scale() const;  // max_j |a_j|
  std::string describe() const;

 private:
  std::vector<cx> coeffs_;  // a_0 .. a_n, a_n != 0 unless the zero polynomial
};

inline cx eval_qd(const PolynomialQD& phi, cx z) { return phi(z); }

struct Zero {
  cx location;
  int multiplicity = 1;
};

struct ZeroSet {
  std::vector<Zero> zeros;
  int total_multiplicity() const;
  double max_abs() const;
};

/// All roots of phi with multiplicities, via companion-matrix eigenvalues
/// followed by Newton polishing. Roots closer than tol*(1+max|root|) are
/// clustered into one multiple zero; the default covers the accuracy floor
/// of companion eigenvalues at multiple roots (~sqrt(eps)). Degree 0 gives
/// an empty set.
ZeroSet find_zeros(const PolynomialQD& phi, double tol = 1e-6);

struct PathPolyline {
  std::vector<cx> points;
  bool closed = false;
  PathPolyline() = default;
  explicit PathPolyline(std::vector<cx> pts, bool close = false);
};

struct AmbiguousBranchError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Continuation of sqrt(phi) along a path: each call returns the square root
/// of the given value whose sign agrees with the previously returned one.
/// Sound as long as consecutive phi values subtend an angle < pi at 0.
class SqrtBranchTracker {
 public:
  SqrtBranchTracker() = default;
  explicit SqrtBranchTracker(cx first) { reset(first); }
  void reset(cx value) {
    prev_ = std::sqrt(value);
    primed_ = true;
  }
  cx value(cx v) {
    cx s = std::sqrt(v);
    if (primed_ && (s.real() * prev_.real() + s.imag() * prev_.imag()) < 0.0)
      s = -s;
    prev_ = s;
    primed_ = true;
    return s;
  }

 private:
  cx prev_{1.0, 0.0};
  bool primed_ = false;
};

/// Signed integral of sqrt(phi) dz over the straight segment [a,b], branch
/// continued from the tracker state. The segment must not cross a zero of
/// phi (endpoints at a zero are fine, the integrand just vanishes there).
cx segment_sqrt_integral(const PolynomialQD& phi, cx a, cx b,
                         SqrtBranchTracker& tracker, int gauss_order = 8);

/// Integral of |Re sqrt(phi) dz| (vertical kind) or |Im sqrt(phi) dz|
/// (horizontal kind) along the polyline, with continuous branch tracking.
/// Paths running along a zero of phi raise AmbiguousBranchError; isolated
/// transversal crossings are integrated through.
double transverse_measure(const PolynomialQD& phi, const PathPolyline& path,
                          FoliationKind kind, double abs_tol = 1e-10);

struct QuadratureSpec {
  double abs_tol = 1e-9;
  int max_depth = 13;
};

struct GridSpec {
  int radial = 400;
  int angular = 512;
};

/// integral over the disk of radius `radius` of |phi| dx dy
double l1_norm(const PolynomialQD& phi, double radius, QuadratureSpec spec = {});
double l1_norm(const std::function<cx(cx)>& f, double radius, QuadratureSpec spec = {});
double l1_norm_rect(const std::function<cx(cx)>& f, double x0, double x1,
                    double y0, double y1, QuadratureSpec spec = {});

/// sup over the unit disk of |phi(z)| / rho(z), rho the hyperbolic density
/// 4/(1-|z|^2)^2. Grid search with boundary refinement, then a local
/// shrinking pattern search.
double bers_norm(const PolynomialQD& phi, GridSpec grid = {});

enum class CayleyDirection { disk_to_halfplane, halfplane_to_disk };

/// C(z) = i(1+z)/(1-z) maps D onto the upper half plane H, C(0) = i.
/// The excluded boundary points (1 for D -> H, -i for H -> D) throw.
cx cayley(cx z, CayleyDirection direction);

/// density of the curvature -1 hyperbolic metric on D: 4/(1-|z|^2)^2
double hyperbolic_density(cx z);

/// Conformal metric lambda(w)|dw|^2 on a disk-like domain.
struct ConformalMetric {
  enum class Tag { flat, hyperbolic, cayley_pullback, custom };
  Tag tag = Tag::flat;
  std::function<double(cx)> density;

  double operator()(cx w) const { return density ? density(w) : 1.0; }

  static ConformalMetric flat();
  static ConformalMetric hyperbolic();
  /// |C'(z)|^2 |dz|^2, the genuine pullback of the flat metric under the
  /// Cayley transform. `printed_form` selects |C'(z)| |dz|^2 instead.
  static ConformalMetric cayley_pullback(bool printed_form = false);
  static ConformalMetric custom(std::function<double(cx)> density);
};

/// Deterministic uniform doubles from a raw 64-bit generator state; used
/// instead of std::uniform_real_distribution so seeded runs are portable.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ULL) {}
  std::uint64_t next_u64() {
    // xorshift64*
    state_ ^= state_ >> 12;
    state_ ^= state_ << 25;
    state_ ^= state_ >> 27;
    return state_ * 0x2545F4914F6CDD1DULL;
  }
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int uniform_int(int lo, int hi) {  // inclusive bounds
    return lo + static_cast<int>(next_u64() % static_cast<std::uint64_t>(hi - lo + 1));
  }
  cx unit() {
    double t = uniform(0.0, 6.283185307179586);
    return cx(std::cos(t), std::sin(t));
  }

 private:
  std::uint64_t state_;
};

}  // namespace qdt
