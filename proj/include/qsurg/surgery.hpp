#pragma once

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "qsurg/lattice.hpp"
#include "qsurg/sim.hpp"
#include "qsurg/types.hpp"

namespace qsurg::surgery {

// --- logical states ---------------------------------------------------------

// |0>_L: project the all-zero configuration onto the vacuum, normalized.
sim::PureState logical_group_state(const lattice::PatchGeometry& g, int i);
// |delta_0>_L: project the uniform configuration with all face phases flat;
// |delta_i>_L applies the z string with label i.
sim::PureState logical_function_state(const lattice::PatchGeometry& g, int i);
// sum_i amps[i] |i>_L, normalized.
sim::PureState logical_encode(const lattice::PatchGeometry& g,
                              const std::vector<Cx>& amps);
// Coefficients <i_L|s> for i = 0..d-1. If residual is non-null it receives
// the squared norm of the component outside the logical span.
std::vector<Cx> logical_overlaps(const lattice::PatchGeometry& g,
                                 const sim::PureState& s,
                                 double* residual = nullptr);

// --- workspace ---------------------------------------------------------------

enum class PatchKind { Standard, Spliced, Rotated };

// Remembered composition of a spliced patch, needed to undo it.
struct SpliceInfo {
  lattice::PatchGeometry a_geom;
  lattice::PatchGeometry b_geom;
  lattice::SplicedPatch plan;
};

struct PatchInstance {
  std::string name;
  PatchKind kind = PatchKind::Standard;
  lattice::PatchGeometry geom;
  std::vector<int> slots;  // register position of each geometry edge
  std::optional<SpliceInfo> splice;
};

struct Workspace {
  int d = 0;
  sim::PureState state;  // joint state of every live register edge
  std::vector<PatchInstance> patches;

  int patch_index(const std::string& name) const;  // -1 if absent
};

// Product of per-patch states arranged into register order. The workspace
// patches must cover all live edges exactly once.
sim::PureState embed_product(const Workspace& ws,
                             const std::vector<sim::PureState>& per_patch);

// --- procedures ---------------------------------------------------------------

enum class StepKind { Build, Merge, Split, Counit, Fourier, Gate };
enum class Flavor { Smooth, Rough };
enum class InitKind { Basis, UnitSmooth, UnitRough, Input, Amps };

struct Step {
  StepKind kind = StepKind::Build;
  Flavor flavor = Flavor::Smooth;
  std::string name;     // patch operated on (first operand for merge)
  std::string other;    // merge: second operand
  std::string result;   // merge result / split first piece
  std::string result2;  // split second piece
  int rows = 0;
  int cols = 0;           // build dimensions
  InitKind init = InitKind::Basis;
  int init_arg = 0;       // basis label or input slot
  std::vector<Cx> amps;   // init = Amps
  int at = -1;            // smooth split: face column of the cut
  char gate = 'X';        // gate step: 'X', 'Z' or 'S'
  int power = 1;
};

struct Procedure {
  int d = 0;
  int input_count = 0;
  std::vector<Step> steps;
};

// Convenience constructors.
Step make_build(const std::string& name, int rows, int cols, InitKind init,
                int init_arg = 0);
Step make_merge(Flavor f, const std::string& a, const std::string& b,
                const std::string& result);
Step make_split(Flavor f, const std::string& name, int at,
                const std::string& first, const std::string& second);
Step make_counit(Flavor f, const std::string& name);
Step make_fourier(const std::string& name);
Step make_gate(const std::string& name, char gate, int power);

// One leaf of the branch tree. `reductions` lists, per reducing step (merge
// or counit) in execution order, the reduced outcome n. `trace` records
// every measured site or edge with its outcome. Dead branches (probability
// 0, retained for bookkeeping) carry no workspace.
struct LeafRecord {
  double probability = 0.0;
  std::vector<int> reductions;
  std::vector<std::pair<std::string, int>> trace;
  std::optional<Workspace> ws;
};

// Runs the procedure. Enumerate mode returns the full branch tree with one
// synthetic dead leaf for every reduction label that never occurred; sample
// mode returns the single sampled leaf. Branch states stay normalized, with
// probabilities multiplying along the tree.
std::vector<LeafRecord> run(const Procedure& proc,
                            const std::vector<std::vector<Cx>>& inputs,
                            sim::MeasureMode mode,
                            std::mt19937_64* rng = nullptr);

// --- logical map extraction -----------------------------------------------------

// Kraus decomposition of the procedure restricted to the logical spaces,
// one operator per reduction label tuple, computed by running every basis
// input in enumerate mode. Output rows index the final patches with patch 0
// as the most significant digit. Sub-branches sharing a label tuple must
// agree up to scalar; the worst relative deviation is recorded, as is the
// completeness defect ||sum_n K_n^dag K_n - I||_max and the largest leaf
// weight found outside the logical span (leakage).
struct LogicalMap {
  int d = 0;
  int input_qudits = 0;
  int output_qudits = 0;
  std::vector<std::string> output_patches;
  std::vector<std::vector<int>> labels;
  std::vector<Mat> kraus;
  double completeness_error = 0.0;
  double proportionality_error = 0.0;
  double leaked_weight = 0.0;
};

LogicalMap extract_logical_map(const Procedure& proc, double tol = kTolLoose);

}  // namespace qsurg::surgery
