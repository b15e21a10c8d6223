#include "qsurg/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <stdexcept>

namespace qsurg::lattice {

namespace {

// Edge/vertex/face numbering of the standard rows x cols patch. Everything
// that maps between patches of different sizes goes through this table.
struct Index {
  int R = 0;
  int C = 0;

  int num_edges() const { return 2 * R * C + R + 3 * C + 2; }
  int num_vertices() const { return (R + 1) * (C + 1) + 2 * (C + 1); }
  int num_faces() const { return R * C + 2 * C; }

  int h(int x, int y) const { return y * C + x; }  // x in [0,C), y in [0,R]
  int v(int x, int y) const {  // x in [0,C], y in [0,R)
    return C * (R + 1) + y * (C + 1) + x;
  }
  int td(int x) const { return C * (R + 1) + R * (C + 1) + x; }
  int bd(int x) const { return C * (R + 1) + R * (C + 1) + (C + 1) + x; }

  int grid(int x, int y) const { return y * (C + 1) + x; }
  int outer_top(int x) const { return (R + 1) * (C + 1) + x; }
  int outer_bottom(int x) const { return (R + 1) * (C + 1) + (C + 1) + x; }

  int f_interior(int x, int y) const { return y * C + x; }
  int f_top(int x) const { return R * C + x; }
  int f_bottom(int x) const { return R * C + C + x; }
};

// Sign of an edge within a face: +1 when the face center lies to the right
// of the edge direction.
int face_sign(const PatchGeometry& g, int edge, double cx, double cy) {
  const Edge& e = g.edges[edge];
  double mx = 0.5 * (g.vertices[e.tail].x + g.vertices[e.head].x);
  double my = 0.5 * (g.vertices[e.tail].y + g.vertices[e.head].y);
  double dx = e.axis == 0 ? 1.0 : 0.0;
  double dy = e.axis == 0 ? 0.0 : 1.0;
  double cross = dx * (cy - my) - dy * (cx - mx);
  if (std::abs(cross) < 1e-9)
    throw std::logic_error("face_sign: face center on the edge line");
  return cross < 0.0 ? 1 : -1;
}

void add_face(PatchGeometry& g, double cx, double cy, bool open,
              const std::vector<int>& edge_ids) {
  FaceSite f;
  f.id = static_cast<int>(g.faces.size());
  f.x = cx;
  f.y = cy;
  f.stabilized = true;
  f.open = open;
  for (int e : edge_ids) f.boundary.push_back({e, face_sign(g, e, cx, cy)});
  g.faces.push_back(std::move(f));
}

// Star lists follow from the edge endpoints alone.
void rebuild_stars(PatchGeometry& g) {
  for (auto& v : g.vertices) v.star.clear();
  for (int e = 0; e < static_cast<int>(g.edges.size()); ++e) {
    g.vertices.at(g.edges[e].tail).star.push_back({e, +1});
    g.vertices.at(g.edges[e].head).star.push_back({e, -1});
  }
}

bool is_standard(const PatchGeometry& g) {
  if (g.rows < 0 || g.cols < 0) return false;
  PatchGeometry ref = build_patch(g.d, g.rows, g.cols);
  if (g.edges.size() != ref.edges.size()) return false;
  if (g.vertices.size() != ref.vertices.size()) return false;
  if (g.faces.size() != ref.faces.size()) return false;
  for (size_t e = 0; e < g.edges.size(); ++e) {
    if (g.edges[e].tail != ref.edges[e].tail) return false;
    if (g.edges[e].head != ref.edges[e].head) return false;
    if (g.edges[e].axis != ref.edges[e].axis) return false;
  }
  return true;
}

void require_standard(const PatchGeometry& g, const char* who) {
  if (!is_standard(g))
    throw std::invalid_argument(std::string(who) +
                                ": requires a standard patch");
}

std::string site_label(const char* kind, int id) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s %d", kind, id);
  return buf;
}

}  // namespace

PatchGeometry build_patch(int d, int rows, int cols) {
  check_dim(d);
  if (rows < 0 || cols < 0)
    throw std::invalid_argument("build_patch: negative size");
  const int R = rows, C = cols;
  Index ix{R, C};

  PatchGeometry g;
  g.d = d;
  g.rows = R;
  g.cols = C;

  g.vertices.resize(ix.num_vertices());
  for (int y = 0; y <= R; ++y)
    for (int x = 0; x <= C; ++x) {
      VertexSite& v = g.vertices[ix.grid(x, y)];
      v.id = ix.grid(x, y);
      v.x = x;
      v.y = y;
      v.stabilized = true;
    }
  for (int x = 0; x <= C; ++x) {
    VertexSite& t = g.vertices[ix.outer_top(x)];
    t.id = ix.outer_top(x);
    t.x = x;
    t.y = R + 1;
    t.stabilized = false;
    VertexSite& b = g.vertices[ix.outer_bottom(x)];
    b.id = ix.outer_bottom(x);
    b.x = x;
    b.y = -1;
    b.stabilized = false;
  }

  g.edges.resize(ix.num_edges());
  for (int y = 0; y <= R; ++y)
    for (int x = 0; x < C; ++x)
      g.edges[ix.h(x, y)] = {ix.grid(x, y), ix.grid(x + 1, y), 0};
  for (int y = 0; y < R; ++y)
    for (int x = 0; x <= C; ++x)
      g.edges[ix.v(x, y)] = {ix.grid(x, y), ix.grid(x, y + 1), 1};
  for (int x = 0; x <= C; ++x) {
    g.edges[ix.td(x)] = {ix.grid(x, R), ix.outer_top(x), 1};
    g.edges[ix.bd(x)] = {ix.outer_bottom(x), ix.grid(x, 0), 1};
  }
  rebuild_stars(g);

  for (int y = 0; y < R; ++y)
    for (int x = 0; x < C; ++x)
      add_face(g, x + 0.5, y + 0.5, false,
               {ix.h(x, y), ix.h(x, y + 1), ix.v(x, y), ix.v(x + 1, y)});
  for (int x = 0; x < C; ++x)
    add_face(g, x + 0.5, R + 0.5, true, {ix.h(x, R), ix.td(x), ix.td(x + 1)});
  for (int x = 0; x < C; ++x)
    add_face(g, x + 0.5, -0.5, true, {ix.h(x, 0), ix.bd(x), ix.bd(x + 1)});

  for (int x = 0; x <= C; ++x) g.x_path.crossings.push_back({ix.td(x), -1});
  g.z_path.steps.push_back({ix.td(0), +1});
  for (int y = R - 1; y >= 0; --y) g.z_path.steps.push_back({ix.v(0, y), +1});
  g.z_path.steps.push_back({ix.bd(0), +1});
  return g;
}

SplicedPatch build_spliced(const PatchGeometry& a, const PatchGeometry& b) {
  require_standard(a, "build_spliced");
  require_standard(b, "build_spliced");
  if (a.d != b.d) throw std::invalid_argument("build_spliced: d mismatch");
  if (a.cols != b.cols)
    throw std::invalid_argument("build_spliced: width mismatch");
  const int C = a.cols;
  const int Rb = b.rows;
  const double dy = Rb + 3;  // vertical offset applied to every a vertex
  Index ia{a.rows, C}, ib{Rb, C};
  const int Vb = static_cast<int>(b.vertices.size());
  const int Eb = static_cast<int>(b.edges.size());
  const int Ea = static_cast<int>(a.edges.size());

  SplicedPatch sp;
  PatchGeometry& g = sp.geom;
  g.d = a.d;
  g.rows = -1;  // not a standard rectangle
  g.cols = C;

  g.vertices = b.vertices;
  for (int x = 0; x <= C; ++x) {
    VertexSite& j = g.vertices[ib.outer_top(x)];  // becomes junction J(x)
    j.stabilized = true;
  }
  for (const VertexSite& av : a.vertices) {
    VertexSite v = av;
    v.id += Vb;
    v.y += dy;
    g.vertices.push_back(v);
  }
  for (int x = 0; x <= C; ++x)
    g.vertices[Vb + ia.outer_bottom(x)].stabilized = true;  // J'(x)

  g.edges = b.edges;
  for (const Edge& ae : a.edges)
    g.edges.push_back({ae.tail + Vb, ae.head + Vb, ae.axis});
  for (int x = 0; x <= C; ++x)
    g.edges.push_back({ib.outer_top(x), Vb + ia.outer_bottom(x), 1});
  rebuild_stars(g);

  sp.b_edges.resize(Eb);
  for (int e = 0; e < Eb; ++e) sp.b_edges[e] = e;
  sp.a_edges.resize(Ea);
  for (int e = 0; e < Ea; ++e) sp.a_edges[e] = Eb + e;
  for (int x = 0; x <= C; ++x) sp.seam_edges.push_back(Eb + Ea + x);
  for (int x = 0; x <= C; ++x) {
    sp.junction_vertices.push_back(ib.outer_top(x));
    sp.junction_vertices.push_back(Vb + ia.outer_bottom(x));
  }

  for (const FaceSite& f : b.faces) {
    if (f.open && f.y > Rb) continue;  // b's top open faces disappear
    std::vector<int> edge_ids;
    for (auto [e, s] : f.boundary) edge_ids.push_back(e);
    add_face(g, f.x, f.y, f.open, edge_ids);
  }
  for (const FaceSite& f : a.faces) {
    if (f.open && f.y < 0) continue;  // a's bottom open faces disappear
    std::vector<int> edge_ids;
    for (auto [e, s] : f.boundary) edge_ids.push_back(Eb + e);
    add_face(g, f.x, f.y + dy, f.open, edge_ids);
  }
  for (int x = 0; x < C; ++x) {
    sp.wide_faces.push_back(static_cast<int>(g.faces.size()));
    add_face(g, x + 0.5, Rb + 1.5, false,
             {ib.h(x, Rb), ib.td(x), ib.td(x + 1), Eb + Ea + x,
              Eb + Ea + x + 1, Eb + ia.bd(x), Eb + ia.bd(x + 1),
              Eb + ia.h(x, 0)});
  }

  for (auto [e, s] : a.x_path.crossings)
    g.x_path.crossings.push_back({Eb + e, s});
  for (auto [e, c] : a.z_path.steps) g.z_path.steps.push_back({Eb + e, c});
  g.z_path.steps.push_back({Eb + Ea + 0, +1});
  for (auto [e, c] : b.z_path.steps) g.z_path.steps.push_back({e, c});
  return sp;
}

MergedPatch build_merged(const PatchGeometry& a, const PatchGeometry& b) {
  require_standard(a, "build_merged");
  require_standard(b, "build_merged");
  if (a.d != b.d) throw std::invalid_argument("build_merged: d mismatch");
  if (a.rows != b.rows)
    throw std::invalid_argument("build_merged: height mismatch");
  const int R = a.rows, Ca = a.cols, Cb = b.cols;
  Index ia{R, Ca}, ib{R, Cb}, im{R, Ca + Cb + 1};

  MergedPatch mp;
  mp.geom = build_patch(a.d, R, Ca + Cb + 1);

  mp.a_edges.resize(a.edges.size());
  for (int y = 0; y <= R; ++y)
    for (int x = 0; x < Ca; ++x) mp.a_edges[ia.h(x, y)] = im.h(x, y);
  for (int y = 0; y < R; ++y)
    for (int x = 0; x <= Ca; ++x) mp.a_edges[ia.v(x, y)] = im.v(x, y);
  for (int x = 0; x <= Ca; ++x) {
    mp.a_edges[ia.td(x)] = im.td(x);
    mp.a_edges[ia.bd(x)] = im.bd(x);
  }

  const int off = Ca + 1;  // b's vertex columns start here
  mp.b_edges.resize(b.edges.size());
  for (int y = 0; y <= R; ++y)
    for (int x = 0; x < Cb; ++x) mp.b_edges[ib.h(x, y)] = im.h(off + x, y);
  for (int y = 0; y < R; ++y)
    for (int x = 0; x <= Cb; ++x) mp.b_edges[ib.v(x, y)] = im.v(off + x, y);
  for (int x = 0; x <= Cb; ++x) {
    mp.b_edges[ib.td(x)] = im.td(off + x);
    mp.b_edges[ib.bd(x)] = im.bd(off + x);
  }

  for (int y = 0; y <= R; ++y) mp.seam_edges.push_back(im.h(Ca, y));
  for (int y = 0; y < R; ++y) mp.seam_faces.push_back(im.f_interior(Ca, y));
  mp.seam_faces.push_back(im.f_top(Ca));
  mp.seam_faces.push_back(im.f_bottom(Ca));
  return mp;
}

SplitPlan plan_smooth_split(const PatchGeometry& g, int at) {
  require_standard(g, "plan_smooth_split");
  if (at < 0 || at >= g.cols)
    throw std::invalid_argument("plan_smooth_split: column out of range");
  const int R = g.rows, C = g.cols;
  Index ig{R, C}, i1{R, at}, i2{R, C - 1 - at};

  SplitPlan plan;
  plan.first = build_patch(g.d, R, at);
  plan.second = build_patch(g.d, R, C - 1 - at);

  for (int y = 0; y <= R; ++y) plan.cut_edges.push_back(ig.h(at, y));

  plan.first_edges.resize(plan.first.edges.size());
  for (int y = 0; y <= R; ++y)
    for (int x = 0; x < at; ++x) plan.first_edges[i1.h(x, y)] = ig.h(x, y);
  for (int y = 0; y < R; ++y)
    for (int x = 0; x <= at; ++x) plan.first_edges[i1.v(x, y)] = ig.v(x, y);
  for (int x = 0; x <= at; ++x) {
    plan.first_edges[i1.td(x)] = ig.td(x);
    plan.first_edges[i1.bd(x)] = ig.bd(x);
  }

  const int off = at + 1;
  plan.second_edges.resize(plan.second.edges.size());
  for (int y = 0; y <= R; ++y)
    for (int x = 0; x < C - 1 - at; ++x)
      plan.second_edges[i2.h(x, y)] = ig.h(off + x, y);
  for (int y = 0; y < R; ++y)
    for (int x = 0; x <= C - 1 - at; ++x)
      plan.second_edges[i2.v(x, y)] = ig.v(off + x, y);
  for (int x = 0; x <= C - 1 - at; ++x) {
    plan.second_edges[i2.td(x)] = ig.td(off + x);
    plan.second_edges[i2.bd(x)] = ig.bd(off + x);
  }
  return plan;
}

PatchGeometry rotate_geometry(const PatchGeometry& g) {
  PatchGeometry r;
  r.d = g.d;
  r.rows = -1;
  r.cols = -1;
  r.edges = g.edges;
  for (const FaceSite& f : g.faces) {
    VertexSite v;
    v.id = f.id;
    v.x = f.x;
    v.y = f.y;
    v.stabilized = f.stabilized;
    v.star = f.boundary;
    r.vertices.push_back(std::move(v));
  }
  for (const VertexSite& v : g.vertices) {
    FaceSite f;
    f.id = v.id;
    f.x = v.x;
    f.y = v.y;
    f.stabilized = v.stabilized;
    f.open = v.star.size() < 4;
    f.boundary = v.star;
    r.faces.push_back(std::move(f));
  }
  r.x_path.crossings = g.z_path.steps;
  r.z_path.steps = g.x_path.crossings;
  return r;
}

ValidationReport validate_patch(const PatchGeometry& g) {
  ValidationReport rep;
  const int d = g.d;
  const int E = static_cast<int>(g.edges.size());
  auto fail = [&](std::string msg) { rep.errors.push_back(std::move(msg)); };

  check_dim(d);
  for (int e = 0; e < E; ++e) {
    const Edge& ed = g.edges[e];
    if (ed.tail < 0 || ed.tail >= static_cast<int>(g.vertices.size()) ||
        ed.head < 0 || ed.head >= static_cast<int>(g.vertices.size()))
      fail("edge " + std::to_string(e) + " has a dangling endpoint");
  }
  for (const VertexSite& v : g.vertices)
    for (auto [e, s] : v.star) {
      if (e < 0 || e >= E || (s != 1 && s != -1)) {
        fail(site_label("bad star entry at vertex", v.id));
        continue;
      }
      int want = s == 1 ? g.edges[e].tail : g.edges[e].head;
      if (want != v.id) fail(site_label("star sign mismatch at vertex", v.id));
    }
  for (const FaceSite& f : g.faces)
    for (auto [e, s] : f.boundary)
      if (e < 0 || e >= E || (s != 1 && s != -1))
        fail(site_label("bad boundary entry at face", f.id));
  if (!rep.errors.empty()) return rep;

  rep.stabilizers_commute = true;
  for (const FaceSite& f : g.faces) {
    if (!f.stabilized) continue;
    std::map<int, int> fsign;
    for (auto [e, s] : f.boundary) fsign[e] += s;
    for (const VertexSite& v : g.vertices) {
      if (!v.stabilized) continue;
      long long acc = 0;
      for (auto [e, s] : v.star)
        if (auto it = fsign.find(e); it != fsign.end())
          acc += static_cast<long long>(s) * it->second;
      if (mod_d(acc, d) != 0) {
        rep.stabilizers_commute = false;
        fail(site_label("face", f.id) + " does not commute with " +
             site_label("vertex", v.id));
      }
    }
  }

  rep.projectors_idempotent = true;
  try {
    for (const VertexSite& v : g.vertices) {
      if (!v.stabilized) continue;
      for (int j = 0; j < d; ++j) {
        sim::LocalOperator p = vertex_projector(g, v.id, j);
        bool ok = sim::approx_equal(sim::compose(p, p), p, kTolTight) &&
                  sim::approx_equal(sim::adjoint(p), p, kTolTight);
        if (!ok) {
          rep.projectors_idempotent = false;
          fail(site_label("vertex projector not idempotent at", v.id));
        }
      }
    }
    for (const FaceSite& f : g.faces) {
      if (!f.stabilized) continue;
      for (int j = 0; j < d; ++j) {
        sim::LocalOperator p = face_projector(g, f.id, j);
        bool ok = sim::approx_equal(sim::compose(p, p), p, kTolTight) &&
                  sim::approx_equal(sim::adjoint(p), p, kTolTight);
        if (!ok) {
          rep.projectors_idempotent = false;
          fail(site_label("face projector not idempotent at", f.id));
        }
      }
    }

    // operator-level commutation across every pair of stabilized sites,
    // all label combinations
    struct SiteRef {
      bool face;
      int id;
    };
    std::vector<SiteRef> sites;
    for (const FaceSite& f : g.faces)
      if (f.stabilized) sites.push_back({true, f.id});
    for (const VertexSite& v : g.vertices)
      if (v.stabilized) sites.push_back({false, v.id});
    auto projector_at = [&](const SiteRef& s, int j) {
      return s.face ? face_projector(g, s.id, j) : vertex_projector(g, s.id, j);
    };
    for (size_t a = 0; a + 1 < sites.size(); ++a)
      for (size_t b = a + 1; b < sites.size(); ++b) {
        bool pair_ok = true;
        for (int j = 0; j < d && pair_ok; ++j) {
          sim::LocalOperator pa = projector_at(sites[a], j);
          for (int k = 0; k < d && pair_ok; ++k) {
            sim::LocalOperator pb = projector_at(sites[b], k);
            pair_ok = sim::approx_equal(sim::compose(pa, pb),
                                        sim::compose(pb, pa), kTolTight);
          }
        }
        if (!pair_ok) {
          rep.stabilizers_commute = false;
          auto label = [](const SiteRef& s) {
            return site_label(s.face ? "face" : "vertex", s.id);
          };
          fail("projectors at " + label(sites[a]) + " and " +
               label(sites[b]) + " do not commute");
        }
      }
  } catch (const std::exception& ex) {
    rep.projectors_idempotent = false;
    fail(std::string("projector construction failed: ") + ex.what());
  }

  std::map<int, int> xs, zc;
  for (auto [e, s] : g.x_path.crossings) xs[e] += s;
  for (auto [e, c] : g.z_path.steps) zc[e] += c;

  rep.logicals_commute_with_stabilizers = true;
  for (const FaceSite& f : g.faces) {
    if (!f.stabilized) continue;
    long long acc = 0;
    for (auto [e, s] : f.boundary)
      if (auto it = xs.find(e); it != xs.end())
        acc += static_cast<long long>(s) * it->second;
    if (mod_d(acc, d) != 0) {
      rep.logicals_commute_with_stabilizers = false;
      fail(site_label("x string clashes with face", f.id));
    }
  }
  for (const VertexSite& v : g.vertices) {
    if (!v.stabilized) continue;
    long long acc = 0;
    for (auto [e, s] : v.star)
      if (auto it = zc.find(e); it != zc.end())
        acc += static_cast<long long>(s) * it->second;
    if (mod_d(acc, d) != 0) {
      rep.logicals_commute_with_stabilizers = false;
      fail(site_label("z string clashes with vertex", v.id));
    }
  }

  long long pair = 0;
  for (auto [e, c] : zc)
    if (auto it = xs.find(e); it != xs.end())
      pair += static_cast<long long>(c) * it->second;
  rep.logical_pair_weyl = mod_d(pair + 1, d) == 0;
  if (!rep.logical_pair_weyl) fail("logical pair commutation phase is off");

  try {
    rep.vacuum_rank = vacuum_rank_by_trace(g);
  } catch (const std::exception& ex) {
    fail(std::string("rank computation failed: ") + ex.what());
  }
  if (std::abs(rep.vacuum_rank - d) > 1e-9)
    fail("ground space dimension is " + std::to_string(rep.vacuum_rank) +
         ", expected " + std::to_string(d));

  rep.ok = rep.errors.empty() && rep.stabilizers_commute &&
           rep.projectors_idempotent && rep.logicals_commute_with_stabilizers &&
           rep.logical_pair_weyl;
  return rep;
}

namespace {

// Counts assignments Z_d^n with all listed linear forms zero mod d. The
// odometer walks all d^n tuples; each digit change is +1 mod d, so each
// form updates in O(1) per touched position.
long long count_flat_assignments(
    int d, int n, const std::vector<std::vector<std::pair<int, int>>>& forms,
    const std::vector<std::vector<std::pair<int, int>>>& by_position) {
  double total_ld = std::pow(static_cast<double>(d), n);
  if (total_ld > static_cast<double>(size_t{1} << 26))
    throw std::length_error("exact rank enumeration too large");
  const long long total = static_cast<long long>(std::llround(total_ld));

  std::vector<int> args(forms.size(), 0);
  int nonzero = 0;
  auto bump = [&](int position) {
    for (auto [form, sign] : by_position[position]) {
      int before = args[form];
      int after = mod_d(before + sign, d);
      args[form] = after;
      if (before == 0 && after != 0) ++nonzero;
      if (before != 0 && after == 0) --nonzero;
    }
  };

  std::vector<int> digits(n, 0);
  long long count = 0;
  for (long long it = 0; it < total; ++it) {
    if (nonzero == 0) ++count;
    for (int p = 0; p < n; ++p) {
      bump(p);
      if (++digits[p] < d) break;
      digits[p] = 0;
    }
  }
  return count;
}

}  // namespace

double vacuum_rank_by_trace(const PatchGeometry& g) {
  const int d = g.d;
  const int E = static_cast<int>(g.edges.size());

  // Face-flat edge configurations.
  std::vector<std::vector<std::pair<int, int>>> face_forms;
  std::vector<std::vector<std::pair<int, int>>> by_edge(E);
  for (const FaceSite& f : g.faces) {
    if (!f.stabilized) continue;
    int idx = static_cast<int>(face_forms.size());
    std::vector<std::pair<int, int>> form;
    for (auto [e, s] : f.boundary) {
      form.push_back({e, s});
      by_edge[e].push_back({idx, s});
    }
    face_forms.push_back(std::move(form));
  }
  long long flat = count_flat_assignments(d, E, face_forms, by_edge);

  // Vertex exponent fields with zero net shift on every edge.
  std::vector<int> vslot(g.vertices.size(), -1);
  int nv = 0;
  for (const VertexSite& v : g.vertices)
    if (v.stabilized) vslot[v.id] = nv++;
  std::vector<std::vector<std::pair<int, int>>> edge_forms(E);
  std::vector<std::vector<std::pair<int, int>>> by_vertex(nv);
  for (const VertexSite& v : g.vertices) {
    if (!v.stabilized) continue;
    for (auto [e, s] : v.star) {
      edge_forms[e].push_back({vslot[v.id], s});
      by_vertex[vslot[v.id]].push_back({e, s});
    }
  }
  long long kernel = count_flat_assignments(d, nv, edge_forms, by_vertex);

  return static_cast<double>(flat) * static_cast<double>(kernel) /
         std::pow(static_cast<double>(d), nv);
}

namespace {

// Sorts (edge, weight) pairs by edge id and rejects duplicates, producing
// the support plus aligned weights of a one-site operator.
void sorted_support(std::vector<std::pair<int, int>> pairs, const char* who,
                    std::vector<int>* support, std::vector<int>* weights) {
  std::sort(pairs.begin(), pairs.end());
  for (size_t i = 0; i + 1 < pairs.size(); ++i)
    if (pairs[i].first == pairs[i + 1].first)
      throw std::invalid_argument(std::string(who) + ": repeated edge");
  for (auto [e, w] : pairs) {
    support->push_back(e);
    weights->push_back(w);
  }
}

}  // namespace

sim::LocalOperator vertex_shift(const PatchGeometry& g, int vertex,
                                int power) {
  const VertexSite& v = g.vertices.at(vertex);
  sim::LocalOperator op;
  op.d = g.d;
  std::vector<int> w;
  sorted_support(v.star, "vertex_shift", &op.support, &w);
  kernels::Term t;
  t.coeff = 1.0;
  t.phase.assign(w.size(), 0);
  for (int s : w) t.shift.push_back(mod_d(static_cast<long long>(s) * power, g.d));
  op.terms.push_back(std::move(t));
  op.canonicalize();
  return op;
}

sim::LocalOperator face_phase(const PatchGeometry& g, int face, int power) {
  const FaceSite& f = g.faces.at(face);
  sim::LocalOperator op;
  op.d = g.d;
  std::vector<int> w;
  sorted_support(f.boundary, "face_phase", &op.support, &w);
  kernels::Term t;
  t.coeff = 1.0;
  t.shift.assign(w.size(), 0);
  for (int s : w) t.phase.push_back(mod_d(static_cast<long long>(s) * power, g.d));
  op.terms.push_back(std::move(t));
  op.canonicalize();
  return op;
}

sim::LocalOperator vertex_projector(const PatchGeometry& g, int vertex,
                                    int j) {
  const VertexSite& v = g.vertices.at(vertex);
  if (!v.stabilized)
    throw std::invalid_argument("vertex_projector: unstabilized vertex");
  sim::LocalOperator op;
  op.d = g.d;
  std::vector<int> w;
  sorted_support(v.star, "vertex_projector", &op.support, &w);
  for (int gpow = 0; gpow < g.d; ++gpow) {
    kernels::Term t;
    t.coeff = omega(g.d, -static_cast<long long>(j) * gpow) / double(g.d);
    t.phase.assign(w.size(), 0);
    for (int s : w)
      t.shift.push_back(mod_d(static_cast<long long>(s) * gpow, g.d));
    op.terms.push_back(std::move(t));
  }
  op.canonicalize();
  return op;
}

sim::LocalOperator face_projector(const PatchGeometry& g, int face, int j) {
  const FaceSite& f = g.faces.at(face);
  if (!f.stabilized)
    throw std::invalid_argument("face_projector: unstabilized face");
  sim::LocalOperator op;
  op.d = g.d;
  std::vector<int> w;
  sorted_support(f.boundary, "face_projector", &op.support, &w);
  for (int h = 0; h < g.d; ++h) {
    kernels::Term t;
    t.coeff = omega(g.d, -static_cast<long long>(j) * h) / double(g.d);
    t.shift.assign(w.size(), 0);
    for (int s : w)
      t.phase.push_back(mod_d(static_cast<long long>(s) * h, g.d));
    op.terms.push_back(std::move(t));
  }
  op.canonicalize();
  return op;
}

sim::LocalOperator x_string_operator(int d, const XString& s, int label) {
  check_dim(d);
  std::map<int, long long> acc;
  for (auto [e, sign] : s.crossings)
    acc[e] += static_cast<long long>(sign) * label;
  sim::LocalOperator op;
  op.d = d;
  kernels::Term t;
  t.coeff = 1.0;
  for (auto [e, total] : acc) {
    op.support.push_back(e);
    t.shift.push_back(mod_d(total, d));
    t.phase.push_back(0);
  }
  op.terms.push_back(std::move(t));
  op.canonicalize();
  return op;
}

sim::LocalOperator z_string_operator(int d, const ZString& s, int label) {
  check_dim(d);
  std::map<int, long long> acc;
  for (auto [e, c] : s.steps) acc[e] += static_cast<long long>(c) * label;
  sim::LocalOperator op;
  op.d = d;
  kernels::Term t;
  t.coeff = 1.0;
  for (auto [e, total] : acc) {
    op.support.push_back(e);
    t.shift.push_back(0);
    t.phase.push_back(mod_d(total, d));
  }
  op.terms.push_back(std::move(t));
  op.canonicalize();
  return op;
}

sim::LocalOperator z_delta_string_operator(int d, const ZString& s, int h) {
  check_dim(d);
  std::map<int, long long> acc;
  for (auto [e, c] : s.steps) acc[e] += c;
  sim::LocalOperator op;
  op.d = d;
  for (int m = 0; m < d; ++m) {
    kernels::Term t;
    t.coeff = omega(d, static_cast<long long>(-h) * m) / double(d);
    for (auto [e, total] : acc) {
      if (m == 0) op.support.push_back(e);
      t.phase.push_back(mod_d(total * m, d));
      t.shift.push_back(0);
    }
    op.terms.push_back(std::move(t));
  }
  op.canonicalize();
  return op;
}

ZString z_string_downward(const PatchGeometry& g, int vertex) {
  ZString s;
  int v = vertex;
  while (g.vertices.at(v).stabilized) {
    int best = -1;
    for (auto [e, sign] : g.vertices[v].star)
      if (sign == -1 && g.edges[e].axis == 1 && (best < 0 || e < best))
        best = e;
    if (best < 0)
      throw std::logic_error("z_string_downward: no downward edge at vertex " +
                             std::to_string(v));
    s.steps.push_back({best, +1});
    if (s.steps.size() > g.edges.size())
      throw std::logic_error("z_string_downward: path does not terminate");
    v = g.edges[best].tail;
  }
  return s;
}

XString x_string_leftward(const PatchGeometry& g, int face) {
  XString s;
  int f = face;
  for (;;) {
    int best = -1;
    for (auto [e, sign] : g.faces.at(f).boundary)
      if (sign == +1 && g.edges[e].axis == 1 && (best < 0 || e < best))
        best = e;
    if (best < 0)
      throw std::logic_error("x_string_leftward: no exit edge at face " +
                             std::to_string(f));
    s.crossings.push_back({best, +1});
    if (s.crossings.size() > g.edges.size())
      throw std::logic_error("x_string_leftward: path does not terminate");
    int next = -1;
    for (const FaceSite& f2 : g.faces) {
      if (f2.id == f) continue;
      for (auto [e, sign] : f2.boundary)
        if (e == best && sign == -1) next = f2.id;
    }
    if (next < 0) break;  // crossed into the outer region
    f = next;
  }
  return s;
}

int find_vertex(const PatchGeometry& g, double x, double y) {
  for (const VertexSite& v : g.vertices)
    if (std::abs(v.x - x) < 1e-9 && std::abs(v.y - y) < 1e-9) return v.id;
  return -1;
}

int find_edge(const PatchGeometry& g, int tail, int head) {
  for (int e = 0; e < static_cast<int>(g.edges.size()); ++e)
    if (g.edges[e].tail == tail && g.edges[e].head == head) return e;
  return -1;
}

int face_argument(const PatchGeometry& g, int face,
                  const std::vector<int>& config) {
  if (config.size() != g.edges.size())
    throw std::invalid_argument("face_argument: config size mismatch");
  long long acc = 0;
  for (auto [e, s] : g.faces.at(face).boundary)
    acc += static_cast<long long>(s) * config[e];
  return mod_d(acc, g.d);
}

int star_argument(const PatchGeometry& g, int vertex,
                  const std::vector<int>& config) {
  if (config.size() != g.edges.size())
    throw std::invalid_argument("star_argument: config size mismatch");
  long long acc = 0;
  for (auto [e, s] : g.vertices.at(vertex).star)
    acc += static_cast<long long>(s) * config[e];
  return mod_d(acc, g.d);
}

}  // namespace qsurg::lattice
