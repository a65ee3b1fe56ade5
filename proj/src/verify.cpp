#include "qdtree/verify.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace qdt {

namespace {

constexpr double kPi = std::numbers::pi;

double bump_profile(double t) {
  if (t >= 1.0) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - t * t));
}

// sup over [0,1) of |d/dt bump_profile|; fixed by the profile
double bump_profile_slope() {
  static const double m = [] {
    double best = 0.0;
    for (int i = 1; i < 4096; ++i) {
      double t = i / 4096.0;
      double p = bump_profile(t);
      double dp = p * (-2.0 * t / ((1.0 - t * t) * (1.0 - t * t)));
      best = std::max(best, std::abs(dp));
    }
    return best;
  }();
  return m;
}

cx bump_value(cx z, const BumpSpec& b) {
  double t = std::abs(z - b.center) / b.radius;
  return b.amplitude * bump_profile(t);
}

}  // namespace

NmiReport check_nmi(const PolynomialQD& phi, const BeltramiField& mu1,
                    const BeltramiField& mu2, const DiskMesh& mesh) {
  if (mu1.k >= 1.0 || mu2.k >= 1.0)
    throw std::invalid_argument("check_nmi: Beltrami sup norm must be < 1");
  NmiReport rep;
  rep.k = std::max(mu1.k, mu2.k);
  rep.phi_descriptor = phi.describe();
  for (size_t t = 0; t < mesh.triangles.size(); ++t) {
    cx p = phi(mesh.centroids[t]);
    double a = mesh.areas[t];
    // phi_1 = phi with mu_1, phi_2 = -phi with mu_2
    cx m1 = mu1.mu[t], m2 = mu2.mu[t];
    rep.lhs += a * (p * m1 / (1.0 - std::norm(m1)) - p * m2 / (1.0 - std::norm(m2))).real();
    rep.rhs += a * std::abs(p) *
               (std::norm(m1) / (1.0 - std::norm(m1)) + std::norm(m2) / (1.0 - std::norm(m2)));
  }
  rep.margin = rep.rhs - rep.lhs;
  return rep;
}

DiscreteMap generate_bump_map(const DiskMesh& mesh, const std::vector<BumpSpec>& bumps) {
  double slope_budget = 0.0;
  for (const BumpSpec& b : bumps) {
    if (b.radius <= 0.0) throw std::invalid_argument("generate_bump_map: radius <= 0");
    if (std::abs(b.center) + b.radius >= 0.98)
      throw std::invalid_argument("generate_bump_map: bump support must stay inside the disk");
    slope_budget += std::abs(b.amplitude) * bump_profile_slope() / b.radius;
  }
  if (slope_budget >= 0.95)
    throw std::invalid_argument("generate_bump_map: amplitude too large for a diffeomorphism");
  auto formula = [bumps](cx z) {
    cx acc = z;
    for (const BumpSpec& b : bumps) acc += bump_value(z, b);
    return acc;
  };
  return DiscreteMap::complex_map(mesh, formula);
}

std::pair<DiscreteMap, DiscreteMap> generate_boundary_matched_pair(const DiskMesh& mesh,
                                                                   std::uint64_t seed,
                                                                   double amplitude,
                                                                   int max_bumps) {
  Rng rng(seed);
  auto draw = [&](int n_bumps) {
    std::vector<BumpSpec> bumps;
    for (int i = 0; i < n_bumps; ++i) {
      BumpSpec b;
      double cr = rng.uniform(0.0, 0.5);
      b.center = cr * rng.unit();
      b.radius = rng.uniform(0.2, std::min(0.38, 0.95 - cr));
      double strength = amplitude * rng.uniform(0.4, 1.0) / n_bumps;
      b.amplitude = strength * b.radius / bump_profile_slope() * rng.unit();
      bumps.push_back(b);
    }
    return generate_bump_map(mesh, bumps);
  };
  int n1 = rng.uniform_int(1, max_bumps);
  int n2 = rng.uniform_int(1, max_bumps);
  DiscreteMap f1 = draw(n1);
  DiscreteMap f2 = draw(n2);
  return {std::move(f1), std::move(f2)};
}

RsConvergenceTable verify_reich_strebel(const PolynomialQD& phi,
                                        const std::function<cx(cx)>& f_formula,
                                        double base_h, int levels) {
  auto t1 = std::make_shared<SimplicialTree>(build_leaf_tree(phi, FoliationKind::vertical));
  RsConvergenceTable table;
  double h = base_h;
  for (int level = 0; level < levels; ++level, h *= 0.5) {
    DiskMesh mesh = build_mesh(1.0, h);
    DiscreteMap pi = DiscreteMap::projection_map(mesh, t1);
    DiscreteMap f = DiscreteMap::complex_map(mesh, f_formula);
    ReichStrebelSides sides = reich_strebel_sides(pi, f, mesh);
    double scale = std::max({std::abs(sides.rs_integral), std::abs(sides.direct_difference),
                             1e-3 * ks_energy(pi, mesh)});
    RsConvergenceRow row;
    row.mesh_h = h;
    row.direct = sides.direct_difference;
    row.rs = sides.rs_integral;
    row.rel_error = std::abs(sides.direct_difference - sides.rs_integral) / scale;
    table.rows.push_back(row);
  }
  if (table.rows.size() >= 2) {
    double acc = 0.0;
    for (size_t i = 0; i + 1 < table.rows.size(); ++i)
      acc += std::log2(table.rows[i].rel_error /
                       std::max(table.rows[i + 1].rel_error, 1e-300));
    table.richardson_slope = acc / static_cast<double>(table.rows.size() - 1);
  }
  return table;
}

ExampleAReport example_a(double k, double box_l, double box_h, double mesh_h) {
  if (k <= 0.0) throw std::invalid_argument("example_a: k must be positive");
  if (k == 1.0) throw std::invalid_argument("example_a: k must differ from 1");

  ExampleAReport rep;
  rep.k = k;
  DiskMesh rect = build_rect_mesh(-box_l, box_l, 0.0, box_h, mesh_h);

  auto hk = DiscreteMap::complex_map(rect, [k](cx z) { return cx(z.real(), k * z.imag()); });
  auto gk = DiscreteMap::complex_map(rect, [k](cx z) { return cx(k * z.real(), z.imag()); });
  auto fk = DiscreteMap::complex_map(
      rect, [k](cx z) { return cx(z.real() / k, k * z.imag()); });
  auto tau = DiscreteMap::complex_map(rect, [k](cx z) { return z / k; });

  std::vector<cx> hopf_h = hopf(pullback_metric(hk, rect));
  std::vector<cx> hopf_g = hopf(pullback_metric(gk, rect));
  rep.hopf_h = hopf_h.front();
  rep.hopf_g = hopf_g.front();
  for (size_t t = 0; t < hopf_h.size(); ++t)
    rep.hopf_sum_abs = std::max(rep.hopf_sum_abs, std::abs(hopf_h[t] + hopf_g[t]));

  BeltramiField bf = beltrami_of(fk, rect);
  rep.beltrami_f = bf.mu.front();
  BeltramiField bt = beltrami_of(tau, rect);
  rep.beltrami_tau_abs = bt.k;

  for (int i = 0; i <= 256; ++i) {
    double xi = -box_l + 2.0 * box_l * i / 256.0;
    cx on_axis(xi, 0.0);
    cx at_one(xi, 1.0);
    rep.boundary_discrepancy =
        std::max(rep.boundary_discrepancy,
                 std::abs(fk.formula(on_axis) - tau.formula(on_axis)));
    rep.interior_discrepancy =
        std::max(rep.interior_discrepancy, std::abs(fk.formula(at_one) - tau.formula(at_one)));
  }

  // L1 growth of phi(h_k) over doubling boxes: |1-k^2|/4 * area
  cx hopf_const = rep.hopf_h;
  for (int j = 0; j < 4; ++j) {
    double scale = std::pow(2.0, j);
    double val = l1_norm_rect([&](cx) { return hopf_const; }, -box_l * scale,
                              box_l * scale, 0.0, box_h * scale);
    rep.l1_growth.push_back({scale, val});
  }

  // the conformal competitor's factor maps have vanishing Hopf differential
  auto phik = DiscreteMap::complex_map(
      rect, [k](cx z) { return z / std::sqrt(k); });
  std::vector<cx> hopf_conf = hopf(pullback_metric(phik, rect));
  for (size_t t = 0; t < hopf_conf.size(); ++t)
    rep.conformal_hopf_l1 += rect.areas[t] * std::abs(hopf_conf[t]);

  // Bers norm of the Cayley-conjugated Hopf differential blows up toward the
  // preimage of infinity (z = 1 under C(z) = i(1+z)/(1-z))
  for (int j = 2; j <= 9; ++j) {
    double r = 1.0 - std::pow(2.0, -j);
    cx z(r, 0.0);
    cx dc = cx(0.0, 2.0) / ((cx(1.0) - z) * (cx(1.0) - z));
    double value = std::abs(hopf_const * dc * dc) / hyperbolic_density(z);
    rep.bers_blowup.push_back({1.0 - r, value});
  }
  return rep;
}

namespace {

struct VariationField {
  cx center;
  double radius = 0.0;
  cx alpha, beta;

  cx operator()(cx z) const {
    double t = std::abs(z - center) / radius;
    if (t >= 1.0) return cx(0.0);
    return bump_profile(t) * (alpha + beta * (z - center) / radius);
  }
};

VariationField make_field(const VariationSpec& spec) {
  Rng rng(spec.seed);
  VariationField f;
  f.center = spec.center;
  f.radius = spec.radius;
  f.alpha = 0.05 * spec.radius * rng.unit() * rng.uniform(0.5, 1.0);
  f.beta = 0.05 * spec.radius * rng.unit() * rng.uniform(0.5, 1.0);
  return f;
}

cx invert_id_plus(const std::function<cx(cx)>& v, double t, cx target) {
  cx x = target;
  for (int it = 0; it < 8; ++it) x = target - t * v(x);
  return x;
}

template <typename EnergyAt>
StabilityReport five_point_stencil(double delta, const EnergyAt& energy_at) {
  double e_m2 = energy_at(-2.0 * delta);
  double e_m1 = energy_at(-delta);
  double e_0 = energy_at(0.0);
  double e_p1 = energy_at(delta);
  double e_p2 = energy_at(2.0 * delta);
  StabilityReport rep;
  rep.energy_scale = e_0;
  rep.delta = delta;
  rep.first_variation = (-e_p2 + 8.0 * e_p1 - 8.0 * e_m1 + e_m2) / (12.0 * delta);
  rep.second_variation =
      (-e_p2 + 16.0 * e_p1 - 30.0 * e_0 + 16.0 * e_m1 - e_m2) / (12.0 * delta * delta);
  return rep;
}

void check_diffeo(const DiskMesh& mesh, const std::function<cx(cx)>& v, double t) {
  for (const auto& tri : mesh.triangles) {
    cx a = mesh.vertices[tri[0]], b = mesh.vertices[tri[1]], c = mesh.vertices[tri[2]];
    cx fa = a + t * v(a), fb = b + t * v(b), fc = c + t * v(c);
    double area = (fb - fa).real() * (fc - fa).imag() - (fb - fa).imag() * (fc - fa).real();
    if (area <= 0.0)
      throw std::runtime_error("stability: variation breaks the diffeomorphism property");
  }
}

}  // namespace

StabilityReport stability_second_variation(const PolynomialQD& phi, const DiskMesh& mesh,
                                           const SolverState& base,
                                           const VariationSpec& variation) {
  (void)phi;
  VariationField field = make_field(variation);
  double delta = variation.delta > 0.0 ? variation.delta : 1e-3 * variation.radius;
  auto v = [&field](cx z) { return field(z); };
  check_diffeo(mesh, v, 2.0 * delta);
  check_diffeo(mesh, v, -2.0 * delta);

  MeshInterpolator interp(mesh);
  auto energy_at = [&](double t) {
    if (t == 0.0) return discrete_energy(base.map, mesh);
    DiscreteMap moved = base.map;
    for (size_t i = 0; i < mesh.vertices.size(); ++i) {
      if (mesh.is_boundary[i]) continue;
      cx pre = invert_id_plus(v, t, mesh.vertices[i]);
      moved.product_values[i] = interp.product_at(base.map, pre);
    }
    return discrete_energy(moved, mesh);
  };
  return five_point_stencil(delta, energy_at);
}

StabilityReport stability_second_variation_example_a(double k, const DiskMesh& rect,
                                                     const VariationSpec& variation) {
  if (k == 1.0) throw std::invalid_argument("stability: k must differ from 1");
  auto hk = DiscreteMap::complex_map(rect, [k](cx z) { return cx(z.real(), k * z.imag()); });
  auto gk = DiscreteMap::complex_map(rect, [k](cx z) { return cx(k * z.real(), z.imag()); });

  VariationField field = make_field(variation);
  double delta = variation.delta > 0.0 ? variation.delta : 1e-3 * variation.radius;
  auto v = [&field](cx z) { return field(z); };
  check_diffeo(rect, v, 2.0 * delta);
  check_diffeo(rect, v, -2.0 * delta);

  MeshInterpolator interp(rect);
  auto energy_at = [&](double t) {
    if (t == 0.0) return cotan_energy(hk.values, rect) + cotan_energy(gk.values, rect);
    std::vector<cx> mh = hk.values, mg = gk.values;
    for (size_t i = 0; i < rect.vertices.size(); ++i) {
      if (rect.is_boundary[i]) continue;
      cx pre = invert_id_plus(v, t, rect.vertices[i]);
      mh[i] = interp.complex_at(hk, pre);
      mg[i] = interp.complex_at(gk, pre);
    }
    return cotan_energy(mh, rect) + cotan_energy(mg, rect);
  };
  return five_point_stencil(delta, energy_at);
}

PolynomialApproximation approximate_by_polynomial(const std::function<cx(cx)>& target,
                                                  int degree) {
  if (degree < 0) throw std::invalid_argument("approximate_by_polynomial: degree < 0");
  const int n = 1024;
  std::vector<cx> samples(n);
  for (int i = 0; i < n; ++i) {
    double t = 2.0 * kPi * i / n;
    samples[i] = target(cx(std::cos(t), std::sin(t)));
  }
  std::vector<cx> coeffs(degree + 1);
  for (int j = 0; j <= degree; ++j) {
    cx acc(0.0);
    for (int i = 0; i < n; ++i) {
      double t = 2.0 * kPi * i / n;
      acc += samples[i] * std::exp(cx(0.0, -j * t));
    }
    coeffs[j] = acc / static_cast<double>(n);
  }
  PolynomialApproximation out{PolynomialQD(std::move(coeffs)), 0.0};
  const PolynomialQD& p = out.polynomial;
  out.l1_error = l1_norm(std::function<cx(cx)>([&](cx z) { return target(z) - p(z); }), 1.0);
  return out;
}

}  // namespace qdt
