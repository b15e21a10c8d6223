#include <map>
#include <set>
#include <vector>

#include "doctest.h"
#include "oracles.hpp"
#include "qsurg/lattice.hpp"

using namespace qsurg;
using namespace qsurg::lattice;

namespace {

const double kTol = 1e-12;

int find_face(const PatchGeometry& g, double x, double y) {
  for (const auto& f : g.faces)
    if (std::abs(f.x - x) < 1e-9 && std::abs(f.y - y) < 1e-9) return f.id;
  return -1;
}

int grid(const PatchGeometry& g, int x, int y) {
  return find_vertex(g, x, y);
}

int edge_between(const PatchGeometry& g, int va, int vb) {
  int e = find_edge(g, va, vb);
  REQUIRE(e >= 0);
  return e;
}

}  // namespace

TEST_CASE("standard patch layout") {
  const int d = 3;
  for (auto [R, C] : std::vector<std::pair<int, int>>{
           {0, 0}, {0, 1}, {1, 0}, {1, 1}, {2, 2}}) {
    PatchGeometry g = build_patch(d, R, C);
    CHECK(static_cast<int>(g.edges.size()) == 2 * R * C + R + 3 * C + 2);
    CHECK(static_cast<int>(g.vertices.size()) == (R + 1) * (C + 1) + 2 * (C + 1));
    CHECK(static_cast<int>(g.faces.size()) == R * C + 2 * C);

    int stabilized_vertices = 0;
    for (const auto& v : g.vertices) stabilized_vertices += v.stabilized;
    CHECK(stabilized_vertices == (R + 1) * (C + 1));
    for (const auto& f : g.faces) CHECK(f.stabilized);

    REQUIRE(static_cast<int>(g.x_path.crossings.size()) == C + 1);
    for (auto [e, s] : g.x_path.crossings) {
      CHECK(s == -1);
      CHECK(g.edges[e].axis == 1);
      CHECK(!g.vertices[g.edges[e].head].stabilized);  // top dangling
    }
    REQUIRE(static_cast<int>(g.z_path.steps.size()) == R + 2);
    for (auto [e, c] : g.z_path.steps) {
      CHECK(c == 1);
      CHECK(g.edges[e].axis == 1);
    }
  }
  CHECK_THROWS_AS(build_patch(3, -1, 0), std::invalid_argument);
}

TEST_CASE("standard patches validate and encode one qudit") {
  for (int d : {2, 3})
    for (auto [R, C] : std::vector<std::pair<int, int>>{
             {0, 0}, {0, 1}, {1, 0}, {1, 1}}) {
      PatchGeometry g = build_patch(d, R, C);
      ValidationReport rep = validate_patch(g);
      CAPTURE(d);
      CAPTURE(R);
      CAPTURE(C);
      for (const auto& e : rep.errors) CAPTURE(e);
      CHECK(rep.ok);
      CHECK(rep.stabilizers_commute);
      CHECK(rep.projectors_idempotent);
      CHECK(rep.logicals_commute_with_stabilizers);
      CHECK(rep.logical_pair_weyl);
      CHECK(rep.vacuum_rank == doctest::Approx(double(d)).epsilon(1e-12));
    }
}

TEST_CASE("vacuum rank agrees with the dense projector trace") {
  for (auto [d, R, C] : std::vector<std::tuple<int, int, int>>{
           {2, 1, 1}, {2, 0, 1}, {3, 0, 1}, {3, 1, 0}, {5, 0, 0}}) {
    PatchGeometry g = build_patch(d, R, C);
    oracle::EMat P = oracle::dense_vacuum_projector(g);
    CHECK(std::abs(P.trace().real() - vacuum_rank_by_trace(g)) < 1e-9);
    CHECK(std::abs(P.trace().imag()) < 1e-9);
    // commuting orthogonal projectors multiply to an orthogonal projector
    CHECK(oracle::max_diff(P * P, P) < 1e-9);
    CHECK(oracle::max_diff(P.adjoint(), P) < 1e-9);
  }
}

TEST_CASE("site operators match the independent sign-list expansion") {
  for (auto [d, R, C] : std::vector<std::tuple<int, int, int>>{
           {2, 1, 1}, {3, 0, 1}}) {
    PatchGeometry g = build_patch(d, R, C);
    const int E = static_cast<int>(g.edges.size());
    oracle::EMat eye = oracle::EMat::Identity(
        static_cast<Eigen::Index>(oracle::ipow(d, E)),
        static_cast<Eigen::Index>(oracle::ipow(d, E)));

    for (const auto& f : g.faces) {
      oracle::EMat sum = oracle::EMat::Zero(eye.rows(), eye.cols());
      for (int j = 0; j < d; ++j) {
        oracle::EMat lib =
            oracle::dense_local_operator(face_projector(g, f.id, j), E);
        oracle::EMat ind = oracle::dense_face_projector(g, f.id, j);
        CHECK(oracle::max_diff(lib, ind) < kTol);
        sum += ind;
        for (int k = 0; k < d; ++k) {
          oracle::EMat other = oracle::dense_face_projector(g, f.id, k);
          CHECK(oracle::max_diff(ind * other, k == j ? ind : oracle::EMat(0.0 * ind)) <
                kTol);
        }
      }
      CHECK(oracle::max_diff(sum, eye) < kTol);

      for (int h = 0; h < d; ++h) {
        oracle::EMat ph =
            oracle::dense_local_operator(face_phase(g, f.id, h), E);
        oracle::EMat want = oracle::EMat::Zero(eye.rows(), eye.cols());
        for (Eigen::Index x = 0; x < eye.rows(); ++x) {
          long long arg = 0;
          for (auto [e, s] : f.boundary)
            arg += static_cast<long long>(s) *
                   oracle::digit(static_cast<size_t>(x), d, e);
          want(x, x) = omega(d, h * arg);
        }
        CHECK(oracle::max_diff(ph, want) < kTol);
      }
    }

    for (const auto& v : g.vertices) {
      if (!v.stabilized) continue;
      oracle::EMat sum = oracle::EMat::Zero(eye.rows(), eye.cols());
      for (int j = 0; j < d; ++j) {
        oracle::EMat lib =
            oracle::dense_local_operator(vertex_projector(g, v.id, j), E);
        oracle::EMat ind = oracle::dense_vertex_projector(g, v.id, j);
        CHECK(oracle::max_diff(lib, ind) < kTol);
        sum += ind;
      }
      CHECK(oracle::max_diff(sum, eye) < kTol);
      for (int p = 0; p < d; ++p) {
        oracle::EMat shift =
            oracle::dense_local_operator(vertex_shift(g, v.id, p), E);
        oracle::EMat gen =
            oracle::dense_local_operator(vertex_shift(g, v.id, 1), E);
        oracle::EMat want = eye;
        for (int k = 0; k < p; ++k) want = gen * want;
        CHECK(oracle::max_diff(shift, want) < kTol);
      }
    }

    CHECK_THROWS_AS(vertex_projector(g, g.vertices.back().id, 0),
                    std::invalid_argument);
  }
}

TEST_CASE("closed strings reproduce the site stabilizers") {
  for (int d : {2, 3}) {
    PatchGeometry g = build_patch(d, 1, 1);
    for (const auto& f : g.faces) {
      ZString loop;
      loop.steps = f.boundary;
      for (int m = 0; m < d; ++m)
        CHECK(sim::approx_equal(z_string_operator(d, loop, m),
                                face_phase(g, f.id, m), kTol));
      for (int h = 0; h < d; ++h)
        CHECK(sim::approx_equal(z_delta_string_operator(d, loop, h),
                                face_projector(g, f.id, h), kTol));
    }
    for (const auto& v : g.vertices) {
      XString loop;
      loop.crossings = v.star;
      for (int l = 0; l < d; ++l)
        CHECK(sim::approx_equal(x_string_operator(d, loop, l),
                                vertex_shift(g, v.id, l), kTol));
    }
  }
}

TEST_CASE("string operators compose and concatenate") {
  const int d = 3;
  PatchGeometry g = build_patch(d, 1, 1);
  ZString zl;
  zl.steps = g.z_path.steps;
  XString xl;
  xl.crossings = g.x_path.crossings;

  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) {
      CHECK(sim::approx_equal(
          sim::compose(z_string_operator(d, zl, a), z_string_operator(d, zl, b)),
          z_string_operator(d, zl, mod_d(a + b, d)), kTol));
      CHECK(sim::approx_equal(
          sim::compose(x_string_operator(d, xl, a), x_string_operator(d, xl, b)),
          x_string_operator(d, xl, mod_d(a + b, d)), kTol));
    }

  // a path split anywhere acts as the product of its pieces
  ZString front, back;
  front.steps = {zl.steps[0]};
  back.steps = {zl.steps.begin() + 1, zl.steps.end()};
  for (int m = 0; m < d; ++m)
    CHECK(sim::approx_equal(
        sim::compose(z_string_operator(d, front, m), z_string_operator(d, back, m)),
        z_string_operator(d, zl, m), kTol));

  XString xfront, xback;
  xfront.crossings = {xl.crossings[0]};
  xback.crossings = {xl.crossings.begin() + 1, xl.crossings.end()};
  for (int l = 0; l < d; ++l)
    CHECK(sim::approx_equal(
        sim::compose(x_string_operator(d, xfront, l),
                     x_string_operator(d, xback, l)),
        x_string_operator(d, xl, l), kTol));
}

TEST_CASE("strings deform across stabilizers without changing the action") {
  const int d = 3;
  PatchGeometry g = build_patch(d, 1, 1);

  int g00 = grid(g, 0, 0), g10 = grid(g, 1, 0);
  int g01 = grid(g, 0, 1), g11 = grid(g, 1, 1);
  int ot0 = find_vertex(g, 0, 2), ot1 = find_vertex(g, 1, 2);
  int ob0 = find_vertex(g, 0, -1), ob1 = find_vertex(g, 1, -1);
  REQUIRE(ot0 >= 0);
  REQUIRE(ob1 >= 0);

  int td0 = edge_between(g, g01, ot0), td1 = edge_between(g, g11, ot1);
  int bd0 = edge_between(g, ob0, g00), bd1 = edge_between(g, ob1, g10);
  int v00 = edge_between(g, g00, g01), v10 = edge_between(g, g10, g11);

  // x string pushed from the top boundary to the middle row
  XString mid;
  mid.crossings = {{v00, -1}, {v10, -1}};
  for (int l = 0; l < d; ++l) {
    sim::LocalOperator lhs = sim::compose(
        sim::compose(x_string_operator(d, g.x_path, l), vertex_shift(g, g01, l)),
        vertex_shift(g, g11, l));
    CHECK(sim::approx_equal(lhs, x_string_operator(d, mid, l), kTol));
  }

  // z string pushed from column 0 to column 1 by the full face column
  int ftop = find_face(g, 0.5, 1.5);
  int fint = find_face(g, 0.5, 0.5);
  int fbot = find_face(g, 0.5, -0.5);
  REQUIRE(ftop >= 0);
  REQUIRE(fint >= 0);
  REQUIRE(fbot >= 0);
  ZString col1;
  col1.steps = {{td1, +1}, {v10, +1}, {bd1, +1}};
  for (int m = 0; m < d; ++m) {
    sim::LocalOperator faces = sim::compose(
        sim::compose(face_phase(g, ftop, mod_d(-m, d)),
                     face_phase(g, fint, mod_d(-m, d))),
        face_phase(g, fbot, mod_d(-m, d)));
    sim::LocalOperator lhs =
        sim::compose(z_string_operator(d, g.z_path, m), faces);
    CHECK(sim::approx_equal(lhs, z_string_operator(d, col1, m), kTol));
  }

  // canonical paths for reference
  CHECK(g.z_path.steps == std::vector<std::pair<int, int>>{
                              {td0, +1}, {v00, +1}, {bd0, +1}});
  CHECK(g.x_path.crossings ==
        std::vector<std::pair<int, int>>{{td0, -1}, {td1, -1}});
}

TEST_CASE("correction paths walk to the open boundary") {
  const int d = 3;
  PatchGeometry g = build_patch(d, 1, 1);
  int g00 = grid(g, 0, 0), g01 = grid(g, 0, 1), g10 = grid(g, 1, 0);
  int ob0 = find_vertex(g, 0, -1), ob1 = find_vertex(g, 1, -1);
  int v00 = edge_between(g, g00, g01);
  int bd0 = edge_between(g, ob0, g00), bd1 = edge_between(g, ob1, g10);

  ZString down = z_string_downward(g, g01);
  CHECK(down.steps == std::vector<std::pair<int, int>>{{v00, +1}, {bd0, +1}});
  ZString down2 = z_string_downward(g, g10);
  CHECK(down2.steps == std::vector<std::pair<int, int>>{{bd1, +1}});

  int fint = find_face(g, 0.5, 0.5);
  int ftop = find_face(g, 0.5, 1.5);
  int fbot = find_face(g, 0.5, -0.5);
  int td0 = edge_between(g, g01, find_vertex(g, 0, 2));
  XString left = x_string_leftward(g, fint);
  CHECK(left.crossings == std::vector<std::pair<int, int>>{{v00, +1}});
  CHECK(x_string_leftward(g, ftop).crossings ==
        std::vector<std::pair<int, int>>{{td0, +1}});
  CHECK(x_string_leftward(g, fbot).crossings ==
        std::vector<std::pair<int, int>>{{bd0, +1}});

  // two-column walk
  PatchGeometry w = build_patch(d, 1, 2);
  int f1 = find_face(w, 1.5, 0.5);
  REQUIRE(f1 >= 0);
  XString two = x_string_leftward(w, f1);
  REQUIRE(two.crossings.size() == 2);
  CHECK(two.crossings[0].second == 1);
  CHECK(two.crossings[1].second == 1);
  int va = two.crossings[0].first, vb = two.crossings[1].first;
  CHECK(w.edges[va].axis == 1);
  CHECK(w.edges[vb].axis == 1);
  CHECK(w.vertices[w.edges[va].tail].x == doctest::Approx(1.0));
  CHECK(w.vertices[w.edges[vb].tail].x == doctest::Approx(0.0));
}

TEST_CASE("open string endpoints carry syndromes") {
  const int d = 3;
  PatchGeometry g = build_patch(d, 0, 1);
  const int E = static_cast<int>(g.edges.size());
  int g00 = grid(g, 0, 0);

  // Z string ending at a stabilized vertex: the star picks up a phase
  ZString down = z_string_downward(g, g00);
  REQUIRE(down.steps.size() == 1);
  for (int m = 1; m < d; ++m) {
    oracle::EMat Z =
        oracle::dense_local_operator(z_string_operator(d, down, m), E);
    oracle::EMat A =
        oracle::dense_local_operator(vertex_shift(g, g00, 1), E);
    // the path leaves downward through the star, sign -1 at the head
    CHECK(oracle::max_diff(oracle::EMat(A * Z),
                           oracle::EMat(omega(d, m) * (Z * A))) < kTol);
  }

  // X string ending between faces: the face phases pick up shifts
  int ftop = find_face(g, 0.5, 0.5);
  XString left = x_string_leftward(g, ftop);
  for (int l = 1; l < d; ++l) {
    oracle::EMat X =
        oracle::dense_local_operator(x_string_operator(d, left, l), E);
    oracle::EMat B = oracle::dense_local_operator(face_phase(g, ftop, 1), E);
    bool plus = oracle::max_diff(oracle::EMat(B * X),
                                 oracle::EMat(omega(d, l) * (X * B))) < kTol;
    bool minus = oracle::max_diff(oracle::EMat(B * X),
                                  oracle::EMat(omega(d, -l) * (X * B))) < kTol;
    CHECK((plus || minus));
    CHECK(plus != minus);
  }
}

TEST_CASE("rotation is an involution that preserves the pairing") {
  for (int d : {2, 3, 5}) {
    for (auto [R, C] :
         std::vector<std::pair<int, int>>{{0, 0}, {1, 1}, {0, 1}}) {
      PatchGeometry g = build_patch(d, R, C);
      PatchGeometry r = rotate_geometry(g);
      CHECK(r.vertices.size() == g.faces.size());
      CHECK(r.faces.size() == g.vertices.size());
      CHECK(r.edges.size() == g.edges.size());
      CHECK(r.x_path.crossings == g.z_path.steps);
      CHECK(r.z_path.steps == g.x_path.crossings);

      long long pair = 0;
      std::map<int, int> xs;
      for (auto [e, s] : r.x_path.crossings) xs[e] += s;
      for (auto [e, c] : r.z_path.steps)
        if (xs.count(e)) pair += static_cast<long long>(c) * xs[e];
      CHECK(mod_d(pair + 1, d) == 0);

      PatchGeometry rr = rotate_geometry(r);
      REQUIRE(rr.edges.size() == g.edges.size());
      for (size_t e = 0; e < g.edges.size(); ++e) {
        CHECK(rr.edges[e].tail == g.edges[e].tail);
        CHECK(rr.edges[e].head == g.edges[e].head);
        CHECK(rr.edges[e].axis == g.edges[e].axis);
      }
      REQUIRE(rr.vertices.size() == g.vertices.size());
      for (size_t v = 0; v < g.vertices.size(); ++v) {
        CHECK(rr.vertices[v].star == g.vertices[v].star);
        CHECK(rr.vertices[v].stabilized == g.vertices[v].stabilized);
      }
      REQUIRE(rr.faces.size() == g.faces.size());
      for (size_t f = 0; f < g.faces.size(); ++f) {
        CHECK(rr.faces[f].boundary == g.faces[f].boundary);
        CHECK(rr.faces[f].stabilized == g.faces[f].stabilized);
      }
      CHECK(rr.x_path.crossings == g.x_path.crossings);
      CHECK(rr.z_path.steps == g.z_path.steps);
    }
  }
}

TEST_CASE("joined and split geometries stay valid") {
  for (int d : {2, 3}) {
    PatchGeometry a = build_patch(d, 0, 0);
    PatchGeometry b = build_patch(d, 0, 0);

    MergedPatch mp = build_merged(a, b);
    CHECK(mp.geom.rows == 0);
    CHECK(mp.geom.cols == 1);
    CHECK(mp.geom.edges.size() == 5);
    CHECK(mp.seam_edges.size() == 1);
    CHECK(mp.geom.edges[mp.seam_edges[0]].axis == 0);
    CHECK(mp.a_edges.size() == a.edges.size());
    CHECK(mp.b_edges.size() == b.edges.size());
    for (size_t e = 0; e < mp.a_edges.size(); ++e)
      CHECK(mp.geom.edges[mp.a_edges[e]].axis == a.edges[e].axis);
    CHECK(mp.seam_faces.size() == 2);
    ValidationReport mrep = validate_patch(mp.geom);
    CHECK(mrep.ok);

    SplicedPatch sp = build_spliced(a, b);
    CHECK(sp.geom.edges.size() == 5);
    CHECK(sp.seam_edges.size() == 1);
    CHECK(sp.junction_vertices.size() == 2);
    CHECK(sp.wide_faces.empty());
    ValidationReport srep = validate_patch(sp.geom);
    for (const auto& e : srep.errors) CAPTURE(e);
    CHECK(srep.ok);
    CHECK(srep.vacuum_rank == doctest::Approx(double(d)));

    PatchGeometry wide = build_patch(d, 0, 1);
    SplitPlan plan = plan_smooth_split(wide, 0);
    CHECK(plan.first.cols == 0);
    CHECK(plan.second.cols == 0);
    CHECK(plan.cut_edges.size() == 1);
    CHECK(plan.first_edges.size() == 2);
    CHECK(plan.second_edges.size() == 2);
    CHECK(validate_patch(plan.first).ok);
    CHECK(validate_patch(plan.second).ok);

    CHECK_THROWS_AS(plan_smooth_split(wide, 1), std::invalid_argument);
    CHECK_THROWS_AS(build_spliced(a, build_patch(d, 0, 1)),
                    std::invalid_argument);
  }
}

TEST_CASE("geometry queries") {
  PatchGeometry g = build_patch(3, 1, 1);
  CHECK(find_vertex(g, 0, 0) >= 0);
  CHECK(find_vertex(g, 7, 7) == -1);
  int g00 = grid(g, 0, 0), g01 = grid(g, 0, 1);
  int e = find_edge(g, g00, g01);
  CHECK(e >= 0);
  CHECK(find_edge(g, g01, g00) == -1);  // oriented

  std::vector<int> config(g.edges.size(), 0);
  config[e] = 2;
  int fint = find_face(g, 0.5, 0.5);
  // v00 sits on the left boundary of the interior face with sign +1
  CHECK(face_argument(g, fint, config) == 2);
  CHECK(star_argument(g, g00, config) == 2);   // tail end, sign +1
  CHECK(star_argument(g, g01, config) == 1);   // head end, sign -1 -> -2 mod 3
}
