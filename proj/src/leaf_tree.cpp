#include "qdtree/leaf_tree.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <set>
#include <sstream>

namespace qdt {

namespace {

double cross2(cx a, cx b) { return a.real() * b.imag() - a.imag() * b.real(); }

double measure_component(cx dw, FoliationKind tree_kind) {
  return tree_kind == FoliationKind::vertical ? std::abs(dw.real())
                                              : std::abs(dw.imag());
}

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int find(int x) { return parent[x] == x ? x : parent[x] = find(parent[x]); }
  void unite(int a, int b) { parent[find(a)] = find(b); }
};

struct Event {
  double s = 0.0;
  int comp = -1;
  double tangency = 1.0;  // |sin| of the crossing angle
};

}  // namespace

struct SimplicialTree::Context {
  ZeroContext zctx;
  TraceOptions opt;
  std::vector<int> comp_of_zero;

  struct Seg {
    cx a, b;
    int comp;
  };
  std::vector<Seg> segs;
  double cell = 1.0;
  int nx = 0;
  std::vector<std::vector<int>> buckets;

  std::vector<double> gap_angles;  // sorted clip endpoints of the graph
  std::vector<int> ray_edge_by_gap;
  std::map<std::pair<int, int>, int> edge_by_pair;
  cx sqrt_lead{1.0, 0.0};  // degree-0 closed form

  void build_grid() {
    double clip = zctx.clip_radius;
    nx = 96;
    cell = 2.0 * clip / nx;
    buckets.assign(static_cast<size_t>(nx) * nx, {});
    for (size_t i = 0; i < segs.size(); ++i) insert_seg(static_cast<int>(i));
  }

  void cell_range(cx a, cx b, int& i0, int& i1, int& j0, int& j1) const {
    double clip = zctx.clip_radius;
    auto cx0 = [&](double x) {
      return std::clamp(static_cast<int>((x + clip) / cell), 0, nx - 1);
    };
    i0 = cx0(std::min(a.real(), b.real()));
    i1 = cx0(std::max(a.real(), b.real()));
    j0 = cx0(std::min(a.imag(), b.imag()));
    j1 = cx0(std::max(a.imag(), b.imag()));
  }

  void insert_seg(int idx) {
    int i0, i1, j0, j1;
    cell_range(segs[idx].a, segs[idx].b, i0, i1, j0, j1);
    for (int i = i0; i <= i1; ++i)
      for (int j = j0; j <= j1; ++j)
        buckets[static_cast<size_t>(j) * nx + i].push_back(idx);
  }

  void query(cx a, cx b, std::vector<int>& out) const {
    out.clear();
    int i0, i1, j0, j1;
    cell_range(a, b, i0, i1, j0, j1);
    for (int i = i0; i <= i1; ++i)
      for (int j = j0; j <= j1; ++j)
        for (int idx : buckets[static_cast<size_t>(j) * nx + i]) out.push_back(idx);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
  }

  int gap_of_angle(double theta) const {
    if (gap_angles.empty()) return 0;
    auto it = std::upper_bound(gap_angles.begin(), gap_angles.end(), theta);
    int j = static_cast<int>(it - gap_angles.begin());
    int n = static_cast<int>(gap_angles.size());
    return (j - 1 + n) % n;
  }

  int nearest_zero(cx z, double* dist) const {
    int best = -1;
    double bd = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < zctx.zeros.zeros.size(); ++i) {
      double d = std::abs(z - zctx.zeros.zeros[i].location);
      if (d < bd) {
        bd = d;
        best = static_cast<int>(i);
      }
    }
    if (dist) *dist = bd;
    return best;
  }

  // crossings of the trace against the critical graph, sorted by the
  // tree-kind measure along the trace; coalesces repeats at a vertex.
  // drop_initial discards crossings at measure ~0 (for probes launched on
  // the critical graph itself).
  std::vector<Event> find_events(const PolynomialQD& phi, FoliationKind tree_kind,
                                 const TrajectorySegment& probe,
                                 std::vector<std::string>* ambiguities,
                                 bool drop_initial = true) const {
    std::vector<Event> raw;
    std::vector<int> hits;
    double s_tol = 1e-8 * (1.0 + zctx.clip_radius);
    for (size_t j = 0; j + 1 < probe.points.size(); ++j) {
      cx p = probe.points[j], q = probe.points[j + 1];
      query(p, q, hits);
      for (int idx : hits) {
        const Seg& sg = segs[idx];
        cx d1 = q - p, d2 = sg.b - sg.a;
        double den = cross2(d1, d2);
        double scale = std::abs(d1) * std::abs(d2);
        if (scale == 0.0) continue;
        if (std::abs(den) < 1e-14 * scale) continue;  // parallel
        cx rel = sg.a - p;
        double t = cross2(rel, d2) / den;
        double u = cross2(rel, d1) / den;
        if (t < -1e-12 || t > 1.0 + 1e-12 || u < -1e-12 || u > 1.0 + 1e-12) continue;
        cx x = p + t * d1;
        // Both polylines sag off their true curves by O(step^2); the exact
        // leaf-space coordinate of the crossing is recovered by sliding
        // along the chord until the branch-tracked integral from a true
        // separatrix sample has vanishing tree-kind component (the leaf
        // through that sample is the level set of this component).
        cx anchor = std::abs(x - sg.a) < std::abs(x - sg.b) ? sg.a : sg.b;
        auto leaf_gap = [&](double tt) {
          SqrtBranchTracker tr(phi(anchor));
          cx dw = segment_sqrt_integral(phi, anchor, p + tt * d1, tr, 8);
          return tree_kind == FoliationKind::vertical ? dw.real() : dw.imag();
        };
        double t0 = t, t1 = t + 0.05 * (t < 0.5 ? 1.0 : -1.0);
        double g0 = leaf_gap(t0), g1 = leaf_gap(t1);
        for (int it2 = 0; it2 < 40 && std::abs(g1) > 1e-14 && g1 != g0; ++it2) {
          double t2 = t1 - g1 * (t1 - t0) / (g1 - g0);
          t2 = std::clamp(t2, -0.5, 1.5);
          t0 = t1;
          g0 = g1;
          t1 = t2;
          g1 = leaf_gap(t1);
          if (std::abs(t1 - t0) < 1e-15) break;
        }
        if (std::abs(g1) < std::abs(leaf_gap(t))) t = t1;
        x = p + t * d1;
        SqrtBranchTracker tr(phi(p));
        cx dw = segment_sqrt_integral(phi, p, x, tr, 8);
        Event ev;
        ev.s = (tree_kind == FoliationKind::vertical ? probe.cum_re[j] : probe.cum_im[j]) +
               measure_component(dw, tree_kind);
        ev.comp = sg.comp;
        ev.tangency = std::abs(den) / scale;
        // collinear contact right at a vertex is expected saddle geometry
        double dz_x;
        nearest_zero(x, &dz_x);
        if (dz_x <= 2.0 * zctx.guard) ev.tangency = 1.0;
        raw.push_back(ev);
      }
    }
    if (probe.ended_at_zero >= 0) {
      Event ev;
      ev.s = tree_kind == FoliationKind::vertical ? probe.cum_re.back()
                                                  : probe.cum_im.back();
      ev.comp = comp_of_zero[probe.ended_at_zero];
      raw.push_back(ev);
    }
    std::sort(raw.begin(), raw.end(), [](const Event& a, const Event& b) { return a.s < b.s; });

    std::vector<Event> out;
    for (const Event& ev : raw) {
      if (drop_initial && ev.s < s_tol) continue;  // the launch vertex itself
      if (ev.tangency < 0.05 && ambiguities)
        ambiguities->push_back("near-tangent crossing along a probe");
      if (!out.empty() && ev.comp == out.back().comp && ev.s - out.back().s <= s_tol)
        continue;
      if (!out.empty() && ev.comp != out.back().comp && ev.s - out.back().s <= s_tol &&
          ambiguities)
        ambiguities->push_back("two components crossed within tolerance");
      out.push_back(ev);
    }
    return out;
  }
};

int SimplicialTree::ray_count() const {
  int n = 0;
  for (const auto& e : edges) n += e.ray() ? 1 : 0;
  return n;
}

int SimplicialTree::finite_edge_count() const {
  return static_cast<int>(edges.size()) - ray_count();
}

int SimplicialTree::valence(int vertex) const {
  int n = 0;
  for (const auto& e : edges) {
    if (e.from == vertex) ++n;
    if (!e.ray() && e.to == vertex) ++n;
  }
  return n;
}

TreePoint SimplicialTree::vertex_point(int vertex) const {
  const TreeVertex& v = vertices.at(vertex);
  const TreeEdge& e = edges.at(v.incident_edge);
  return {e.id, e.from == vertex ? 0.0 : e.length};
}

TreePoint SimplicialTree::canonical(TreePoint p) const {
  const TreeEdge& e = edges.at(p.edge);
  double snap = 1e-12 * (1.0 + metric_scale * (1.0 + phi.coeff_scale()));
  if (p.offset < snap) return vertex_point(e.from);
  if (!e.ray() && p.offset > e.length - snap) return vertex_point(e.to);
  return p;
}

bool SimplicialTree::same_point(TreePoint a, TreePoint b, double tol) const {
  return distance(a, b) <= tol;
}

double SimplicialTree::distance(TreePoint a, TreePoint b) const {
  if (a.edge == b.edge) return std::abs(a.offset - b.offset);
  const TreeEdge& ea = edges.at(a.edge);
  const TreeEdge& eb = edges.at(b.edge);
  double best = std::numeric_limits<double>::infinity();
  auto ends = [&](const TreeEdge& e, double off, int which) -> std::pair<int, double> {
    if (which == 0) return {e.from, off};
    return {e.to, e.length - off};
  };
  int na = ea.ray() ? 1 : 2, nb = eb.ray() ? 1 : 2;
  for (int i = 0; i < na; ++i) {
    auto [va, ca] = ends(ea, a.offset, i);
    for (int j = 0; j < nb; ++j) {
      auto [vb, cb] = ends(eb, b.offset, j);
      best = std::min(best, ca + vertex_dist_[va][vb] + cb);
    }
  }
  return best;
}

double SimplicialTree::distance_from_vertex(int vertex, TreePoint p) const {
  const TreeEdge& e = edges.at(p.edge);
  double best = p.offset + vertex_dist_[e.from][vertex];
  if (!e.ray()) best = std::min(best, e.length - p.offset + vertex_dist_[e.to][vertex]);
  return best;
}

TreePoint SimplicialTree::project(cx z) const {
  const Context& c = *context;
  if (degree() == 0) {
    cx w = c.sqrt_lead * z;
    double t = kind == FoliationKind::vertical ? w.real() : w.imag();
    return {t >= 0.0 ? 0 : 1, metric_scale * std::abs(t)};
  }
  double dz;
  int nz = c.nearest_zero(z, &dz);
  if (dz <= c.zctx.guard) return vertex_point(c.comp_of_zero[nz]);

  FoliationKind probe_kind = opposite(kind);
  // stop each transversal at its first genuine crossing of the graph
  std::vector<int> scratch;
  std::function<bool(cx, cx)> stop = [&](cx a, cx b) -> bool {
    c.query(a, b, scratch);
    for (int idx : scratch) {
      const Context::Seg& sg = c.segs[idx];
      cx d1 = b - a, d2 = sg.b - sg.a;
      double den = cross2(d1, d2);
      if (std::abs(den) < 1e-14 * std::abs(d1) * std::abs(d2)) continue;
      cx rel = sg.a - a;
      double t = cross2(rel, d2) / den;
      double u = cross2(rel, d1) / den;
      if (t >= -1e-12 && t <= 1.0 + 1e-12 && u >= -1e-12 && u <= 1.0 + 1e-12) return true;
    }
    return false;
  };
  TrajectorySegment fwd = trace_half(phi, c.zctx, z, probe_kind, false, c.opt, &stop);
  TrajectorySegment bwd = trace_half(phi, c.zctx, z, probe_kind, true, c.opt, &stop);
  std::vector<Event> ef = c.find_events(phi, kind, fwd, nullptr, false);
  std::vector<Event> eb = c.find_events(phi, kind, bwd, nullptr, false);

  double snap = 1e-9 * (1.0 + c.zctx.clip_radius);
  bool has_f = !ef.empty(), has_b = !eb.empty();
  if (has_f && ef.front().s < snap) return vertex_point(ef.front().comp);
  if (has_b && eb.front().s < snap) return vertex_point(eb.front().comp);

  auto ray_point = [&](int comp, int gap, double s) -> TreePoint {
    if (gap < 0 || gap >= static_cast<int>(c.ray_edge_by_gap.size()) ||
        c.ray_edge_by_gap[gap] < 0)
      throw TreeProjectionError("project: no ray registered for the exit gap");
    const TreeEdge& e = edges[c.ray_edge_by_gap[gap]];
    if (e.from != comp)
      throw TreeProjectionError("project: exit gap inconsistent with nearest vertex");
    return {e.id, metric_scale * s};
  };

  if (has_f && has_b) {
    int va = ef.front().comp, vb = eb.front().comp;
    double sa = ef.front().s;
    if (va == vb) throw TreeProjectionError("project: transversal hits one vertex twice");
    auto it = c.edge_by_pair.find({std::min(va, vb), std::max(va, vb)});
    if (it == c.edge_by_pair.end())
      throw TreeProjectionError("project: crossed components are not edge-adjacent");
    const TreeEdge& e = edges[it->second];
    double off = e.from == va ? metric_scale * sa : e.length - metric_scale * sa;
    return {e.id, std::clamp(off, 0.0, e.length)};
  }
  if (has_f && bwd.clipped_at)
    return ray_point(ef.front().comp, c.gap_of_angle(std::arg(bwd.points.back())),
                     ef.front().s);
  if (has_b && fwd.clipped_at)
    return ray_point(eb.front().comp, c.gap_of_angle(std::arg(fwd.points.back())),
                     eb.front().s);
  throw TreeProjectionError("project: no crossing with the critical graph found");
}

TreePoint SimplicialTree::weighted_mean(const std::vector<TreePoint>& points,
                                        const std::vector<double>& weights) const {
  if (points.empty() || points.size() != weights.size())
    throw std::invalid_argument("weighted_mean: need matching nonempty lists");
  if (points.size() == 1) return points[0];
  double wsum = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw std::invalid_argument("weighted_mean: negative weight");
    wsum += w;
  }
  if (wsum == 0.0) return points[0];

  size_t np = points.size();
  size_t nv = vertices.size();
  std::vector<std::vector<double>> dvp(np, std::vector<double>(nv));
  for (size_t j = 0; j < np; ++j)
    for (size_t u = 0; u < nv; ++u)
      dvp[j][u] = distance_from_vertex(static_cast<int>(u), points[j]);

  double best_val = std::numeric_limits<double>::infinity();
  TreePoint best;
  std::vector<double> bps;
  for (const TreeEdge& e : edges) {
    double limit = e.ray() ? 0.0 : e.length;
    if (e.ray())
      for (size_t j = 0; j < np; ++j)
        if (points[j].edge == e.id) limit = std::max(limit, points[j].offset);
    bps.clear();
    bps.push_back(0.0);
    bps.push_back(limit);
    for (size_t j = 0; j < np; ++j) {
      if (points[j].edge == e.id) {
        bps.push_back(std::clamp(points[j].offset, 0.0, limit));
      } else if (!e.ray()) {
        double tstar = 0.5 * (e.length + dvp[j][e.to] - dvp[j][e.from]);
        if (tstar > 0.0 && tstar < limit) bps.push_back(tstar);
      }
    }
    std::sort(bps.begin(), bps.end());
    for (size_t k = 0; k + 1 < bps.size(); ++k) {
      double lo = bps[k], hi = bps[k + 1];
      if (hi - lo < 1e-15 && k + 2 < bps.size()) continue;
      double mid = 0.5 * (lo + hi);
      // F(t) = sum w (sigma t + c)^2 on [lo,hi]
      double A = 0.0, B = 0.0;
      std::vector<double> sigma(np), cc(np);
      for (size_t j = 0; j < np; ++j) {
        double sg, c0;
        if (points[j].edge == e.id) {
          double tj = points[j].offset;
          if (mid < tj) {
            sg = -1.0;
            c0 = tj;
          } else {
            sg = 1.0;
            c0 = -tj;
          }
        } else if (!e.ray()) {
          double via_from = mid + dvp[j][e.from];
          double via_to = e.length - mid + dvp[j][e.to];
          if (via_from <= via_to) {
            sg = 1.0;
            c0 = dvp[j][e.from];
          } else {
            sg = -1.0;
            c0 = e.length + dvp[j][e.to];
          }
        } else {
          sg = 1.0;
          c0 = dvp[j][e.from];
        }
        sigma[j] = sg;
        cc[j] = c0;
        A += weights[j];
        B += weights[j] * sg * c0;
      }
      double t_hat = std::clamp(-B / A, lo, hi);
      double val = 0.0;
      for (size_t j = 0; j < np; ++j) {
        double d = sigma[j] * t_hat + cc[j];
        val += weights[j] * d * d;
      }
      if (val < best_val) {
        best_val = val;
        best = {e.id, t_hat};
      }
    }
  }
  return canonical(best);
}

SimplicialTree SimplicialTree::synthetic(int n_vertices, std::vector<TreeEdge> edge_list,
                                         double metric_scale) {
  SimplicialTree tree;
  tree.metric_scale = metric_scale;
  tree.vertices.resize(n_vertices);
  for (int v = 0; v < n_vertices; ++v) tree.vertices[v] = {v, {}, false, -1};
  tree.edges = std::move(edge_list);
  for (const auto& e : tree.edges) {
    if (tree.vertices[e.from].incident_edge < 0) tree.vertices[e.from].incident_edge = e.id;
    if (!e.ray() && tree.vertices[e.to].incident_edge < 0)
      tree.vertices[e.to].incident_edge = e.id;
  }
  constexpr double kInf = std::numeric_limits<double>::infinity();
  tree.vertex_dist_.assign(n_vertices, std::vector<double>(n_vertices, kInf));
  for (int v = 0; v < n_vertices; ++v) tree.vertex_dist_[v][v] = 0.0;
  for (const auto& e : tree.edges)
    if (!e.ray()) {
      tree.vertex_dist_[e.from][e.to] = std::min(tree.vertex_dist_[e.from][e.to], e.length);
      tree.vertex_dist_[e.to][e.from] = tree.vertex_dist_[e.from][e.to];
    }
  for (int k = 0; k < n_vertices; ++k)
    for (int i = 0; i < n_vertices; ++i)
      for (int j = 0; j < n_vertices; ++j)
        tree.vertex_dist_[i][j] =
            std::min(tree.vertex_dist_[i][j], tree.vertex_dist_[i][k] + tree.vertex_dist_[k][j]);
  tree.report.tree_identity_ok = true;
  tree.report.ray_count_ok = true;
  return tree;
}

double product_distance(const SimplicialTree& t1, const SimplicialTree& t2,
                        const ProductTreePoint& p, const ProductTreePoint& q) {
  double d1 = t1.distance(p.first, q.first);
  double d2 = t2.distance(p.second, q.second);
  return std::hypot(d1, d2);
}

SimplicialTree build_leaf_tree(const CriticalGraph& graph, const PolynomialQD& phi,
                               const TraceOptions& opt) {
  if (!graph.complete())
    throw std::invalid_argument("build_leaf_tree: critical graph has truncated separatrices");

  SimplicialTree tree;
  tree.kind = graph.kind;
  tree.phi = phi;
  tree.metric_scale = 2.0;

  auto ctx = std::make_shared<SimplicialTree::Context>();
  ctx->zctx.zeros = graph.zeros;
  ctx->zctx.guard = graph.guard;
  ctx->zctx.clip_radius = graph.clip_radius;
  ctx->opt = opt;

  int nz = static_cast<int>(graph.zeros.zeros.size());
  if (nz == 0) {
    if (phi.is_zero())
      throw std::invalid_argument("build_leaf_tree: the zero differential has no leaf space");
    ctx->sqrt_lead = std::sqrt(phi.coeffs()[0]);
    tree.vertices.push_back({0, {}, true, 0});
    tree.edges.push_back({0, 0, -1, 0.0, 0});
    tree.edges.push_back({1, 0, -1, 0.0, 1});
    tree.vertex_dist_ = {{0.0}};
    ctx->ray_edge_by_gap = {0, 1};
    tree.report.tree_identity_ok = true;
    tree.report.ray_count_ok = true;
    tree.report.expected_rays = 2;
    tree.report.rays = 2;
    tree.context = ctx;
    return tree;
  }

  // vertices: zeros merged along own-kind saddle connections
  UnionFind uf(nz);
  for (const auto& s : graph.separatrices)
    if (s.ended_at_zero >= 0) uf.unite(s.source_zero, s.ended_at_zero);
  std::map<int, int> root_to_vertex;
  ctx->comp_of_zero.resize(nz);
  for (int i = 0; i < nz; ++i) {
    int r = uf.find(i);
    auto [it, inserted] = root_to_vertex.try_emplace(r, static_cast<int>(root_to_vertex.size()));
    ctx->comp_of_zero[i] = it->second;
  }
  int nv = static_cast<int>(root_to_vertex.size());
  tree.vertices.resize(nv);
  for (int v = 0; v < nv; ++v) tree.vertices[v] = {v, {}, false, -1};
  for (int i = 0; i < nz; ++i) tree.vertices[ctx->comp_of_zero[i]].zeros.push_back(i);

  // graph polylines as segments in a grid, clip endpoints as the gap table
  for (const auto& s : graph.separatrices) {
    int comp = ctx->comp_of_zero[s.source_zero];
    for (size_t j = 0; j + 1 < s.points.size(); ++j)
      ctx->segs.push_back({s.points[j], s.points[j + 1], comp});
    if (s.clipped_at) ctx->gap_angles.push_back(std::arg(s.points.back()));
  }
  ctx->build_grid();
  std::sort(ctx->gap_angles.begin(), ctx->gap_angles.end());
  int n_gaps = std::max<int>(1, static_cast<int>(ctx->gap_angles.size()));

  // probes: separatrices of the opposite foliation
  CriticalGraph probes = critical_graph(phi, opposite(graph.kind), opt);

  TreeBuildReport& rep = tree.report;
  struct EdgeCandidate {
    double length;
    int count;
  };
  std::map<std::pair<int, int>, EdgeCandidate> finite;
  std::map<int, int> ray_vertex;  // gap -> vertex

  double len_tol = 1e-6 * (1.0 + graph.clip_radius);
  for (const auto& probe : probes.separatrices) {
    if (probe.truncated) {
      rep.ambiguities.push_back("truncated probe");
      continue;
    }
    std::vector<Event> events =
        ctx->find_events(phi, graph.kind, probe, &rep.ambiguities);
    int prev_comp = ctx->comp_of_zero[probe.source_zero];
    double prev_s = 0.0;
    bool bad = false;
    for (const Event& ev : events) {
      if (ev.comp == prev_comp) {
        if (ev.s - prev_s > len_tol) {
          rep.ambiguities.push_back("probe revisits a vertex (self edge)");
          bad = true;
          break;
        }
        continue;
      }
      double len = tree.metric_scale * (ev.s - prev_s);
      auto key = std::minmax(prev_comp, ev.comp);
      auto [it, inserted] = finite.try_emplace({key.first, key.second}, EdgeCandidate{len, 1});
      if (!inserted) {
        if (std::abs(it->second.length - len) > len_tol * tree.metric_scale)
          rep.ambiguities.push_back("edge length mismatch between probes");
        ++it->second.count;
      }
      prev_comp = ev.comp;
      prev_s = ev.s;
    }
    if (bad) continue;
    if (probe.clipped_at) {
      int gap = ctx->gap_of_angle(std::arg(probe.points.back()));
      auto [it, inserted] = ray_vertex.try_emplace(gap, prev_comp);
      if (!inserted && it->second != prev_comp)
        rep.ambiguities.push_back("two vertices claim one clip gap");
    }
  }

  for (const auto& [key, cand] : finite) {
    int id = static_cast<int>(tree.edges.size());
    tree.edges.push_back({id, key.first, key.second, cand.length, -1});
    ctx->edge_by_pair[key] = id;
  }
  for (const auto& [gap, vert] : ray_vertex) {
    int id = static_cast<int>(tree.edges.size());
    tree.edges.push_back({id, vert, -1, 0.0, gap});
  }
  ctx->ray_edge_by_gap.assign(n_gaps, -1);
  for (const auto& e : tree.edges)
    if (e.ray() && e.gap >= 0 && e.gap < n_gaps) ctx->ray_edge_by_gap[e.gap] = e.id;

  for (const auto& e : tree.edges) {
    if (tree.vertices[e.from].incident_edge < 0) tree.vertices[e.from].incident_edge = e.id;
    if (!e.ray() && tree.vertices[e.to].incident_edge < 0)
      tree.vertices[e.to].incident_edge = e.id;
  }

  // all-pairs distances over the finite tree
  constexpr double kInf = std::numeric_limits<double>::infinity();
  tree.vertex_dist_.assign(nv, std::vector<double>(nv, kInf));
  for (int v = 0; v < nv; ++v) tree.vertex_dist_[v][v] = 0.0;
  for (const auto& e : tree.edges)
    if (!e.ray()) {
      tree.vertex_dist_[e.from][e.to] = std::min(tree.vertex_dist_[e.from][e.to], e.length);
      tree.vertex_dist_[e.to][e.from] = tree.vertex_dist_[e.from][e.to];
    }
  for (int k = 0; k < nv; ++k)
    for (int i = 0; i < nv; ++i)
      for (int j = 0; j < nv; ++j)
        tree.vertex_dist_[i][j] =
            std::min(tree.vertex_dist_[i][j], tree.vertex_dist_[i][k] + tree.vertex_dist_[k][j]);

  bool connected = true;
  for (int i = 0; i < nv; ++i)
    for (int j = 0; j < nv; ++j) connected = connected && std::isfinite(tree.vertex_dist_[i][j]);
  rep.tree_identity_ok = connected && tree.finite_edge_count() == nv - 1;
  rep.expected_rays = phi.degree() + 2;
  rep.rays = tree.ray_count();
  rep.ray_count_ok = rep.rays == rep.expected_rays;

  tree.context = ctx;
  return tree;
}

InjectivityReport injectivity_spot_check(const PolynomialQD& phi,
                                         const SimplicialTree& vertical,
                                         const SimplicialTree& horizontal,
                                         int samples, std::uint64_t seed) {
  Rng rng(seed);
  InjectivityReport rep;
  rep.min_separation = std::numeric_limits<double>::infinity();
  for (int i = 0; i < samples; ++i) {
    cx z(rng.uniform(-1, 1), rng.uniform(-1, 1));
    cx w(rng.uniform(-1, 1), rng.uniform(-1, 1));
    if (std::abs(z - w) < 1e-6) continue;
    ++rep.pairs;
    ProductTreePoint pz{vertical.project(z), horizontal.project(z)};
    ProductTreePoint pw{vertical.project(w), horizontal.project(w)};
    double sep = product_distance(vertical, horizontal, pz, pw);
    double mv, mh;
    try {
      PathPolyline seg({z, w});
      mv = transverse_measure(phi, seg, FoliationKind::vertical, 1e-8);
      mh = transverse_measure(phi, seg, FoliationKind::horizontal, 1e-8);
    } catch (const AmbiguousBranchError&) {
      continue;
    }
    if (std::max(mv, mh) > 1e-7) {
      if (sep <= 1e-9)
        ++rep.violations;
      else
        rep.min_separation = std::min(rep.min_separation, sep);
    }
  }
  return rep;
}

ConvexFiberReport convex_fiber_spot_check(const PolynomialQD&,
                                          const SimplicialTree& other_tree,
                                          const TrajectorySegment& leaf) {
  ConvexFiberReport rep;
  size_t n = leaf.points.size();
  if (n == 0) return rep;
  size_t stride = std::max<size_t>(1, n / 48);
  std::vector<TreePoint> pts;
  for (size_t i = 0; i < n; i += stride) pts.push_back(other_tree.project(leaf.points[i]));
  if ((n - 1) % stride != 0) pts.push_back(other_tree.project(leaf.points[n - 1]));
  rep.samples = static_cast<int>(pts.size());
  if (pts.size() < 3) {
    rep.convex = true;
    return rep;
  }
  double tol = 1e-6 * (1.0 + other_tree.metric_scale);
  rep.convex = true;
  double prev = 0.0;
  for (size_t i = 1; i < pts.size(); ++i) {
    double d0i = other_tree.distance(pts[0], pts[i]);
    if (d0i < prev - tol) {
      rep.convex = false;
      rep.max_violation = std::max(rep.max_violation, prev - d0i);
    }
    prev = d0i;
  }
  // collinearity: distances along the chain add up
  double span = other_tree.distance(pts[0], pts.back());
  double chain = 0.0;
  for (size_t i = 1; i < pts.size(); ++i) chain += other_tree.distance(pts[i - 1], pts[i]);
  double gap = std::abs(chain - span);
  rep.max_violation = std::max(rep.max_violation, gap);
  if (gap > tol * static_cast<double>(pts.size())) rep.convex = false;
  return rep;
}

}  // namespace qdt
