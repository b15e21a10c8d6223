#pragma once

#include <random>
#include <string>
#include <utility>
#include <vector>

#include "qsurg/surgery.hpp"
#include "qsurg/types.hpp"

namespace qsurg::zx {

// --- generators ---------------------------------------------------------------

// green(m->n, a) = sum_i q^{ai} |i..i><i..i|  (exact, no scalar)
Mat green_matrix(int d, int m, int n, int phase);
// red(m->n, b) = H^{(x)n} green(m->n, b) Hdag^{(x)m}
//             = d^{1-(m+n)/2} [sum(in) + b == sum(out)]
Mat red_matrix(int d, int m, int n, int phase);
// H = (1/sqrt d) sum_{j,k} q^{-jk} |k><j|, unitary
Mat fourier_matrix(int d, bool dagger);
Mat antipode_matrix(int d);  // |i> -> |-i>
Mat cup_matrix(int d);       // 0->2: sum_h |h,-h>
Mat cap_matrix(int d);       // 2->0: sum_h <h,-h|

// --- diagrams ------------------------------------------------------------------

enum class NodeKind { Green, Red, Fourier, Antipode, Cup, Cap };

struct Node {
  NodeKind kind = NodeKind::Green;
  int ins = 0;
  int outs = 0;
  int phase = 0;        // green/red label
  bool dagger = false;  // fourier only
};

// node == kDiagramInput: port indexes the diagram input list (a producer).
// node == kDiagramOutput: port indexes the diagram output list (a consumer).
inline constexpr int kDiagramInput = -1;
inline constexpr int kDiagramOutput = -2;

struct Endpoint {
  int node = 0;
  int port = 0;
  bool operator==(const Endpoint&) const = default;
};

struct Wire {
  Endpoint from;  // producing end (an out port or a diagram input)
  Endpoint to;    // consuming end (an in port or a diagram output)
};

// Directed port graph. Every out port, in port, diagram input and diagram
// output is covered by exactly one wire; bending a wire around requires an
// explicit Cup or Cap node. `scalar` multiplies the evaluated tensor and is
// where rewrite steps deposit their bookkeeping factors.
struct Diagram {
  int d = 0;
  int num_inputs = 0;
  int num_outputs = 0;
  std::vector<Node> nodes;
  std::vector<Wire> wires;
  Cx scalar = 1.0;

  int add_node(NodeKind kind, int ins, int outs, int phase = 0,
               bool dagger = false);
  void connect(Endpoint from, Endpoint to);
  void validate() const;  // throws std::invalid_argument on bad wiring
};

Mat node_matrix(const Node& node, int d);

// Contracts the diagram to a matrix with rows indexing outputs (output 0 as
// the most significant digit) and columns indexing inputs likewise,
// including the scalar. Throws if the diagram has a directed cycle.
Mat evaluate(const Diagram& diagram);

// Graph isomorphism respecting kinds, phases and boundary order, treating
// spider legs (and cup/cap legs) as unordered.
bool isomorphic(const Diagram& a, const Diagram& b);

// --- rewriting -----------------------------------------------------------------

// SpiderFuse      same-colour spiders joined by wires melt into one (exact)
// IdentityRemove  phase-0 1->1 spider, or Fourier then FourierDagger (exact)
// ColorChange     red = Fourier on every leg + green, both directions (exact)
// Bialgebra       green merge then red split = red splits, crossed wires,
//                 green merges; scalar sqrt(d) on the left
// AntipodeCancel  S.S -> wire, and Fourier.Fourier (same dagger) -> S (exact)
// CupCapSnake     cup into cap straightens to a wire (exact)
// CupExpand       cup = green(0->2) with S on the second leg, and the cap
//                 counterpart (exact)
// AntipodeSlide   S on one cup (or cap) leg moves to the other (exact)
// DualBend        cup leg into a red input = red output, verbatim; the green
//                 version adds S on the freed leg (exact)
enum class RewriteRule {
  SpiderFuse,
  IdentityRemove,
  ColorChange,
  Bialgebra,
  AntipodeCancel,
  CupCapSnake,
  CupExpand,
  AntipodeSlide,
  DualBend,
};

std::string rule_name(RewriteRule r);

struct Match {
  RewriteRule rule = RewriteRule::SpiderFuse;
  int node_a = -1;
  int node_b = -1;
  int port_a = -1;
  int port_b = -1;
  bool reverse = false;  // apply the rule right to left
};

std::vector<Match> find_matches(const Diagram& diagram, RewriteRule rule);
Diagram apply_match(const Diagram& diagram, const Match& match);

// Arity-consistent random diagram over all node kinds, acyclic, with small
// boundary; every generated diagram passes validate().
Diagram random_diagram(int d, int max_nodes, std::mt19937_64& rng);

// --- controlled-add diagrams ------------------------------------------------------

// Four presentations of the controlled adder (inputs: control, target):
//   1  green copy on the control feeding a red merge on the target
//   2  red split on the target, antipode on the middle wire, green merge
//   3  cup with green merge on one leg, antipode and red merge on the other
//   4  mirror of 3 with the antipode on the first cup leg
// Each evaluates to d^{-1/2} CX.
Diagram cx_diagram(int d, int variant);

// Rewrites variant 2, 3 or 4 down to variant 1, returning every stage
// (label, diagram) starting with the input diagram. Every stage evaluates
// to the same matrix, and the last stage is isomorphic to cx_diagram(d, 1).
std::vector<std::pair<std::string, Diagram>> cx_rewrite_chain(int d,
                                                              int variant);

// --- surgery dictionary ----------------------------------------------------------

enum class DictRow {
  SmoothUnit,
  RoughUnit,
  SmoothSplit,
  RoughSplit,
  SmoothMerge,
  RoughMerge,
  SmoothCounit,
  RoughCounit,
  Rotation,
};

std::string dict_row_name(DictRow row);

// Generator tensor the row translates to, as a matrix.
Mat dictionary_generator_matrix(DictRow row, int d);
// Smallest surgery procedure realizing the row, with inputs for each map leg.
surgery::Procedure dictionary_procedure(DictRow row, int d);
// The scalar relating the extracted branch-0 Kraus operator to the
// generator matrix. Units and counits pick up 1/sqrt d, as does the rough
// split (its smallest procedure rides on an auxiliary merge); the rest
// match exactly.
double dictionary_expected_factor(DictRow row, int d);

struct DictionaryCheck {
  DictRow row = DictRow::SmoothUnit;
  surgery::LogicalMap map;
  Cx factor = 0.0;        // measured: K_0 = factor * generator
  double map_error = 0.0; // ||K_0 - factor * generator||_max
  bool ok = false;
};

// Runs the procedure, extracts the logical map, checks the branch-0 Kraus
// against the generator matrix and the whole family for completeness.
DictionaryCheck verify_dictionary_row(DictRow row, int d, double tol);

// Translates a procedure into its dictionary diagram (reduction branches
// postselected on 0). Supported steps: build (units and inputs), merge,
// split, counit, fourier.
Diagram from_surgery(const surgery::Procedure& proc);

// --- closure analysis -------------------------------------------------------------

// BFS closure of the generator set under multiplication, identifying
// matrices equal up to global phase. Throws std::length_error if the
// closure exceeds `cap`.
std::vector<Mat> phase_closure(const std::vector<Mat>& generators, double tol,
                               size_t cap = 100000);
bool in_set_up_to_scalar(const Mat& m, const std::vector<Mat>& set,
                         double tol);

// Single-qudit maps expressible as words of length <= depth in the
// dictionary pieces (rows with a spare leg closed by a unit or counit
// branch, every reduction label), deduplicated up to scalar.
std::vector<Mat> producible_single_qudit_maps(int d, int depth);

// x = a + b q with integers a, b (d <= 3 only: the ring Z[q] has rank <= 2).
bool cyclotomic_integer(Cx x, int d, double tol);

}  // namespace qsurg::zx
