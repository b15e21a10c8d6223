#pragma once

#include <string>
#include <utility>
#include <vector>

#include "qsurg/sim.hpp"
#include "qsurg/types.hpp"

namespace qsurg::lattice {

// Oriented edge. Horizontal edges point toward +x, vertical edges toward
// +y; all sign conventions below derive from these directions.
struct Edge {
  int tail = -1;
  int head = -1;
  int axis = 0;  // 0: along x, 1: along y
};

// sign = +1 if the edge points away from the vertex (tail here), -1 if it
// points into it. The vertex action with exponent g shifts each star edge
// by sign * g; unstabilized vertices are open string endpoints.
struct VertexSite {
  int id = -1;
  double x = 0.0;
  double y = 0.0;
  bool stabilized = true;
  std::vector<std::pair<int, int>> star;  // (edge id, sign)
};

// sign = +1 if the face lies to the right of the edge direction. The face
// argument at configuration x is sum sign_e * x_e mod d.
struct FaceSite {
  int id = -1;
  double x = 0.0;
  double y = 0.0;
  bool stabilized = true;
  bool open = false;  // boundary face with fewer than four edges
  std::vector<std::pair<int, int>> boundary;  // (edge id, sign)
};

// A logical shift string: with label l it applies X^{sign_e * l} on each
// listed edge (edges crossed by a dual path, sign from the crossing
// orientation).
struct XString {
  std::vector<std::pair<int, int>> crossings;  // (edge id, sign)
};

// A logical phase string: with label m it multiplies by q^{m * coeff_e *
// x_e} over the listed edges (a primal path; coeff +1 when the path runs
// against the edge direction).
struct ZString {
  std::vector<std::pair<int, int>> steps;  // (edge id, coeff)
};

struct PatchGeometry {
  int d = 0;
  int rows = 0;
  int cols = 0;
  std::vector<Edge> edges;
  std::vector<VertexSite> vertices;
  std::vector<FaceSite> faces;
  // Canonical logical representatives. x_path crosses the top boundary
  // left to right; z_path runs down the leftmost vertical chain between
  // open endpoints.
  XString x_path;
  ZString z_path;
};

// Rectangular patch with rows x cols faces, dangling vertical edges plus
// open faces on the top and bottom boundaries, closed sides. Encodes one
// qudit of dimension d.
PatchGeometry build_patch(int d, int rows, int cols);

// Result of joining patch `a` (on top) with equal-width patch `b` (below)
// by per-column three-edge chains b_top_dangle -> junction -> seam ->
// junction' -> a_bottom_dangle. Junction vertices carry weight-2 star
// stabilizers; between neighbouring chains sit weight-8 faces.
struct SplicedPatch {
  PatchGeometry geom;
  std::vector<int> a_edges;            // geom edge id of each edge of a
  std::vector<int> b_edges;            // geom edge id of each edge of b
  std::vector<int> seam_edges;         // one per vertex column
  std::vector<int> junction_vertices;  // J(0), J'(0), J(1), J'(1), ...
  std::vector<int> wide_faces;         // one per face column
};
SplicedPatch build_spliced(const PatchGeometry& a, const PatchGeometry& b);

// Side-by-side join of two equal-height patches into one standard patch of
// width a.cols + b.cols + 1, with one new column of horizontal seam edges.
struct MergedPatch {
  PatchGeometry geom;
  std::vector<int> a_edges;     // geom edge id of each edge of a
  std::vector<int> b_edges;     // geom edge id of each edge of b
  std::vector<int> seam_edges;  // new horizontal edges, bottom row first
  std::vector<int> seam_faces;  // the face column between a and b
};
MergedPatch build_merged(const PatchGeometry& a, const PatchGeometry& b);

// Cutting a standard patch along face column `at`: the pieces are standard
// patches of `at` and cols-at-1 face columns, and the cut removes the
// horizontal edges of that column.
struct SplitPlan {
  PatchGeometry first;   // columns 0 .. at-1
  PatchGeometry second;  // columns at+1 .. cols-1
  std::vector<int> cut_edges;     // parent edge ids, bottom row first
  std::vector<int> first_edges;   // parent edge id of each first-piece edge
  std::vector<int> second_edges;  // parent edge id of each second-piece edge
};
SplitPlan plan_smooth_split(const PatchGeometry& g, int at);

// Fourier rotation of the geometry: faces become vertex sites with star =
// old boundary (signs verbatim) and vertices become face sites. Edges keep
// their ids. The logical paths swap roles verbatim (crossings become steps
// and vice versa), which preserves the Weyl pairing sum. Rotating twice
// restores the geometry exactly; the antipode shows up in the transversal
// map instead, since the edge Fourier gate squares to index negation.
PatchGeometry rotate_geometry(const PatchGeometry& g);

struct ValidationReport {
  bool ok = false;
  bool stabilizers_commute = false;
  bool projectors_idempotent = false;
  bool logicals_commute_with_stabilizers = false;
  bool logical_pair_weyl = false;  // Z_L X_L = q^{-1} X_L Z_L
  double vacuum_rank = -1.0;
  std::vector<std::string> errors;
};

// Structural checks plus the ground-space dimension, computed as the trace
// of the product of all outcome-0 projectors (an orthogonal projector, so
// trace = rank). Expect vacuum_rank == d for a single encoded qudit.
ValidationReport validate_patch(const PatchGeometry& g);

// Trace of prod_p P_p(0) prod_v P_v(0) by counting: (number of face-flat
// edge configurations) * (number of vertex exponent fields with zero net
// shift) / d^{#stabilized vertices}. Exact integer arithmetic.
double vacuum_rank_by_trace(const PatchGeometry& g);

// --- site operators -------------------------------------------------------

// prod_{e in star(v)} X^{sign * g} as a one-term operator.
sim::LocalOperator vertex_shift(const PatchGeometry& g, int vertex, int power);
// diag(q^{h * face_arg(x)}) as a one-term operator.
sim::LocalOperator face_phase(const PatchGeometry& g, int face, int power);
// P_v(j) = (1/d) sum_g q^{-jg} A(v)^g.
sim::LocalOperator vertex_projector(const PatchGeometry& g, int vertex, int j);
// P_p(j) = (1/d) sum_h q^{-jh} B(p)^h.
sim::LocalOperator face_projector(const PatchGeometry& g, int face, int j);

sim::LocalOperator x_string_operator(int d, const XString& s, int label);
sim::LocalOperator z_string_operator(int d, const ZString& s, int label);
// Indicator-basis Z string: (1/d) sum_m q^{-hm} (Z string with label m).
// A closed loop of this kind is the projector onto face argument h.
sim::LocalOperator z_delta_string_operator(int d, const ZString& s, int h);

// --- correction paths ------------------------------------------------------

// Primal path from `vertex` straight down (following vertical edges head to
// tail) until an unstabilized endpoint; all coefficients +1. Throws if the
// path gets stuck at a stabilized vertex with no downward edge.
ZString z_string_downward(const PatchGeometry& g, int vertex);

/// Dual path from `face` leftward: repeatedly cross the lowest-id vertical
// boundary edge with sign +1 into the neighbouring face until none exists
// (the outer region); all crossing signs +1.
XString x_string_leftward(const PatchGeometry& g, int face);

// --- queries ----------------------------------------------------------------

int find_vertex(const PatchGeometry& g, double x, double y);  // -1 if absent
int find_edge(const PatchGeometry& g, int tail, int head);    // -1 if absent
int face_argument(const PatchGeometry& g, int face,
                  const std::vector<int>& config);  // sum sign*x mod d
int star_argument(const PatchGeometry& g, int vertex,
                  const std::vector<int>& config);

}  // namespace qsurg::lattice
