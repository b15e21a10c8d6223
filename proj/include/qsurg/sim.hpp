#pragma once

#include <optional>
#include <random>

#include "qsurg/kernels.hpp"
#include "qsurg/types.hpp"

namespace qsurg::sim {

// Cap on state-vector size: allocation of a register with d^E amplitudes
// above the budget throws std::length_error.
inline constexpr size_t kDefaultBudget = size_t{1} << 24;

size_t state_budget();
void set_state_budget(size_t amplitudes);

size_t checked_size(int d, int num_edges);  // d^E, budget-enforced

// Dense pure state over `num_edges` qudits of dimension d, little-endian
// mixed radix (edge 0 least significant). Operations return new states;
// existing values are never mutated in place.
struct PureState {
  int d = 0;
  int num_edges = 0;
  std::vector<Cx> amps;

  PureState() = default;
  PureState(int dim, int edges);  // all-zero amplitudes
  static PureState basis(int dim, int edges, const std::vector<int>& config);
  static PureState product(int dim, const std::vector<std::vector<Cx>>& factors);

  size_t size() const { return amps.size(); }
  double norm() const;
};

PureState normalize(const PureState& s);
Cx overlap(const PureState& a, const PureState& b);  // <a|b>
bool approx_equal(const PureState& a, const PureState& b, double tol);
bool approx_equal_up_to_phase(const PureState& a, const PureState& b,
                              double tol);

// Linear operator on a subset of edges, stored as a sum of shift/phase
// terms: sum_t coeff_t * diag(q^{<phase_t, x>}) * Shift(shift_t), with the
// diagonal evaluated on the output configuration. This form covers vertex
// and face actions, projectors and string operators exactly.
struct LocalOperator {
  int d = 0;
  std::vector<int> support;  // edge indices, strictly increasing
  std::vector<kernels::Term> terms;

  // Merges parallel terms and drops negligible ones; sorts by key.
  void canonicalize(double tol = 1e-15);
};

LocalOperator compose(const LocalOperator& after, const LocalOperator& first);
LocalOperator adjoint(const LocalOperator& op);
bool approx_equal(const LocalOperator& a, const LocalOperator& b, double tol);

PureState apply(const PureState& s, const LocalOperator& op);
// Dense gate on k edges; matrix is d^k x d^k row-major, targets[0] least
// significant within the block index.
PureState apply_gate(const PureState& s, const Mat& matrix,
                     const std::vector<int>& targets);

enum class MeasureMode { Enumerate, Sample };
enum class EdgeBasis { Z, X };  // Z: group basis; X: Fourier states

// One measurement branch. Zero-probability branches are kept in enumerate
// mode with probability 0 and no state. States are normalized.
struct Branch {
  int outcome = 0;
  double probability = 0.0;
  std::optional<PureState> state;
};

// Projective measurement given one projector per outcome. Enumerate mode
// returns all d branches in ascending outcome order; sample mode returns
// the single branch drawn with the given generator.
std::vector<Branch> measure_projectors(
    const PureState& s, const std::vector<LocalOperator>& projectors,
    MeasureMode mode, std::mt19937_64* rng = nullptr);

// Measures one edge in the Z or X basis and removes it from the register.
// Branch states have num_edges - 1 edges.
std::vector<Branch> measure_edge(const PureState& s, int edge, EdgeBasis basis,
                                 MeasureMode mode,
                                 std::mt19937_64* rng = nullptr);

// Inserts a fresh edge at `position` in the state |ket> (length d).
PureState adjoin_edge(const PureState& s, int position,
                      const std::vector<Cx>& ket);

// Reorders edges: new edge p carries the digit of old edge perm[p].
PureState permute_edges(const PureState& s, const std::vector<int>& perm);

// Text dump: header line "d num_edges", then one "index real imag" line per
// amplitude above `cutoff`, in index order.
std::string dump_state(const PureState& s, double cutoff = 0.0);
PureState parse_state(const std::string& text);

int sample_index(const std::vector<double>& probabilities,
                 std::mt19937_64& rng);

}  // namespace qsurg::sim
