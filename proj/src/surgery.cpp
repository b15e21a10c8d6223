#include "qsurg/surgery.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>

#include "qsurg/groupalg.hpp"

namespace qsurg::surgery {

// --- logical states ---------------------------------------------------------

sim::PureState logical_group_state(const lattice::PatchGeometry& g, int i) {
  const int e = static_cast<int>(g.edges.size());
  sim::PureState s = sim::PureState::basis(g.d, e, std::vector<int>(e, 0));
  for (const auto& v : g.vertices)
    if (v.stabilized) s = sim::apply(s, lattice::vertex_projector(g, v.id, 0));
  s = sim::normalize(s);
  int label = mod_d(i, g.d);
  if (label != 0)
    s = sim::apply(s, lattice::x_string_operator(g.d, g.x_path, label));
  return s;
}

sim::PureState logical_function_state(const lattice::PatchGeometry& g, int i) {
  const int e = static_cast<int>(g.edges.size());
  std::vector<Cx> plus(g.d, Cx(1.0 / std::sqrt(double(g.d)), 0.0));
  sim::PureState s =
      sim::PureState::product(g.d, std::vector<std::vector<Cx>>(e, plus));
  for (const auto& f : g.faces)
    if (f.stabilized) s = sim::apply(s, lattice::face_projector(g, f.id, 0));
  s = sim::normalize(s);
  int label = mod_d(i, g.d);
  if (label != 0)
    s = sim::apply(s, lattice::z_string_operator(g.d, g.z_path, label));
  return s;
}

sim::PureState logical_encode(const lattice::PatchGeometry& g,
                              const std::vector<Cx>& amps) {
  if (static_cast<int>(amps.size()) != g.d)
    throw std::invalid_argument("logical_encode: need d amplitudes");
  sim::PureState zero = logical_group_state(g, 0);
  sim::PureState acc(g.d, zero.num_edges);
  for (int i = 0; i < g.d; ++i) {
    if (std::abs(amps[i]) == 0.0) continue;
    sim::PureState term =
        i == 0 ? zero
               : sim::apply(zero, lattice::x_string_operator(g.d, g.x_path, i));
    for (size_t k = 0; k < acc.amps.size(); ++k)
      acc.amps[k] += amps[i] * term.amps[k];
  }
  return sim::normalize(acc);
}

std::vector<Cx> logical_overlaps(const lattice::PatchGeometry& g,
                                 const sim::PureState& s, double* residual) {
  if (s.d != g.d || s.num_edges != static_cast<int>(g.edges.size()))
    throw std::invalid_argument("logical_overlaps: state does not fit patch");
  std::vector<Cx> out(g.d);
  double inside = 0.0;
  for (int i = 0; i < g.d; ++i) {
    out[i] = sim::overlap(logical_group_state(g, i), s);
    inside += std::norm(out[i]);
  }
  if (residual) *residual = std::max(0.0, s.norm() * s.norm() - inside);
  return out;
}

// --- workspace ---------------------------------------------------------------

int Workspace::patch_index(const std::string& name) const {
  for (size_t i = 0; i < patches.size(); ++i)
    if (patches[i].name == name) return static_cast<int>(i);
  return -1;
}

sim::PureState embed_product(const Workspace& ws,
                             const std::vector<sim::PureState>& per_patch) {
  if (per_patch.size() != ws.patches.size())
    throw std::invalid_argument("embed_product: one state per patch required");
  const int e_live = ws.state.num_edges;
  std::vector<int> owner(e_live, -1), local(e_live, -1);
  for (size_t p = 0; p < ws.patches.size(); ++p) {
    const PatchInstance& inst = ws.patches[p];
    if (per_patch[p].d != ws.d ||
        per_patch[p].num_edges != static_cast<int>(inst.geom.edges.size()))
      throw std::invalid_argument("embed_product: state does not fit patch " +
                                  inst.name);
    for (size_t ge = 0; ge < inst.slots.size(); ++ge) {
      int pos = inst.slots[ge];
      if (pos < 0 || pos >= e_live || owner[pos] >= 0)
        throw std::invalid_argument("embed_product: inconsistent slot map");
      owner[pos] = static_cast<int>(p);
      local[pos] = static_cast<int>(ge);
    }
  }
  for (int pos = 0; pos < e_live; ++pos)
    if (owner[pos] < 0)
      throw std::invalid_argument("embed_product: uncovered edge");

  std::vector<size_t> stride(e_live, 1);
  for (int pos = 0; pos < e_live; ++pos)
    for (int k = 0; k < local[pos]; ++k) stride[pos] *= ws.d;

  sim::PureState out(ws.d, e_live);
  std::vector<size_t> li(ws.patches.size());
  for (size_t idx = 0; idx < out.amps.size(); ++idx) {
    std::fill(li.begin(), li.end(), 0);
    size_t rest = idx;
    for (int pos = 0; pos < e_live; ++pos) {
      int digit = static_cast<int>(rest % ws.d);
      rest /= ws.d;
      li[owner[pos]] += digit * stride[pos];
    }
    Cx prod = 1.0;
    for (size_t p = 0; p < per_patch.size(); ++p) prod *= per_patch[p].amps[li[p]];
    out.amps[idx] = prod;
  }
  return out;
}

// --- step constructors --------------------------------------------------------

Step make_build(const std::string& name, int rows, int cols, InitKind init,
                int init_arg) {
  Step s;
  s.kind = StepKind::Build;
  s.name = name;
  s.rows = rows;
  s.cols = cols;
  s.init = init;
  s.init_arg = init_arg;
  return s;
}

Step make_merge(Flavor f, const std::string& a, const std::string& b,
                const std::string& result) {
  Step s;
  s.kind = StepKind::Merge;
  s.flavor = f;
  s.name = a;
  s.other = b;
  s.result = result;
  return s;
}

Step make_split(Flavor f, const std::string& name, int at,
                const std::string& first, const std::string& second) {
  Step s;
  s.kind = StepKind::Split;
  s.flavor = f;
  s.name = name;
  s.at = at;
  s.result = first;
  s.result2 = second;
  return s;
}

Step make_counit(Flavor f, const std::string& name) {
  Step s;
  s.kind = StepKind::Counit;
  s.flavor = f;
  s.name = name;
  return s;
}

Step make_fourier(const std::string& name) {
  Step s;
  s.kind = StepKind::Fourier;
  s.name = name;
  return s;
}

Step make_gate(const std::string& name, char gate, int power) {
  Step s;
  s.kind = StepKind::Gate;
  s.name = name;
  s.gate = gate;
  s.power = power;
  return s;
}

// --- runner -------------------------------------------------------------------

namespace {

struct Path {
  double prob = 1.0;
  std::vector<int> reductions;
  std::vector<std::pair<std::string, int>> trace;
  Workspace ws;
};

sim::LocalOperator to_register(const sim::LocalOperator& op,
                               const std::vector<int>& slots) {
  std::vector<std::pair<int, int>> order;
  for (size_t k = 0; k < op.support.size(); ++k)
    order.push_back({slots.at(op.support[k]), static_cast<int>(k)});
  std::sort(order.begin(), order.end());
  sim::LocalOperator out;
  out.d = op.d;
  for (auto [pos, k] : order) out.support.push_back(pos);
  for (const auto& t : op.terms) {
    kernels::Term nt;
    nt.coeff = t.coeff;
    for (auto [pos, k] : order) {
      nt.shift.push_back(t.shift[k]);
      nt.phase.push_back(t.phase[k]);
    }
    out.terms.push_back(std::move(nt));
  }
  return out;
}

int require_patch(const Workspace& ws, const std::string& name) {
  int idx = ws.patch_index(name);
  if (idx < 0) throw std::invalid_argument("no patch named " + name);
  return idx;
}

void append_patch(Workspace& ws, PatchInstance inst,
                  const sim::PureState& patch_state) {
  const int base = ws.state.num_edges;
  const int extra = static_cast<int>(inst.geom.edges.size());
  inst.slots.resize(extra);
  for (int e = 0; e < extra; ++e) inst.slots[e] = base + e;
  sim::PureState out(ws.d, base + extra);
  const size_t lo = ws.state.size();
  for (size_t p = 0; p < patch_state.size(); ++p)
    for (size_t o = 0; o < lo; ++o)
      out.amps[p * lo + o] = patch_state.amps[p] * ws.state.amps[o];
  ws.state = std::move(out);
  ws.patches.push_back(std::move(inst));
}

// Adjusts every slot for the removal of the listed register positions (old
// numbering). The removed positions must no longer be referenced.
void renumber_after_removals(Workspace& ws, std::vector<int> removed) {
  std::sort(removed.begin(), removed.end());
  for (auto& p : ws.patches)
    for (auto& s : p.slots) {
      auto it = std::lower_bound(removed.begin(), removed.end(), s);
      if (it != removed.end() && *it == s)
        throw std::logic_error("renumber: slot still references removed edge");
      s -= static_cast<int>(it - removed.begin());
    }
}

struct SiteOutcomes {
  std::vector<std::pair<int, int>> faces;     // (face id, outcome)
  std::vector<std::pair<int, int>> vertices;  // (vertex id, outcome)
};

// Measures every stabilizer of one patch, faces first, branching as needed.
std::vector<std::pair<Path, SiteOutcomes>> sweep_instance(
    Path start, int pi, sim::MeasureMode mode, std::mt19937_64* rng) {
  const PatchInstance& inst0 = start.ws.patches[pi];
  const lattice::PatchGeometry geom = inst0.geom;
  const std::vector<int> slots = inst0.slots;
  const std::string pname = inst0.name;
  const int d = start.ws.d;

  std::vector<std::pair<Path, SiteOutcomes>> cur;
  cur.push_back({std::move(start), {}});

  auto measure_site = [&](bool is_face, int id) {
    std::vector<sim::LocalOperator> projs(d);
    for (int j = 0; j < d; ++j)
      projs[j] = to_register(is_face ? lattice::face_projector(geom, id, j)
                                     : lattice::vertex_projector(geom, id, j),
                             slots);
    std::vector<std::pair<Path, SiteOutcomes>> next;
    for (auto& [path, so] : cur) {
      auto branches = sim::measure_projectors(path.ws.state, projs, mode, rng);
      for (auto& b : branches) {
        if (!b.state) continue;
        Path np = path;
        np.prob *= b.probability;
        np.ws.state = std::move(*b.state);
        np.trace.push_back(
            {pname + (is_face ? ".f" : ".v") + std::to_string(id), b.outcome});
        SiteOutcomes nso = so;
        (is_face ? nso.faces : nso.vertices).push_back({id, b.outcome});
        next.push_back({std::move(np), std::move(nso)});
      }
    }
    cur = std::move(next);
  };

  for (const auto& f : geom.faces)
    if (f.stabilized) measure_site(true, f.id);
  for (const auto& v : geom.vertices)
    if (v.stabilized) measure_site(false, v.id);
  return cur;
}

// Moves nonzero syndromes back to zero: X strings leftward out of faces,
// Z strings downward out of vertices (the frame of the lower patch).
void apply_corrections(Path& p, int pi, const SiteOutcomes& so) {
  const PatchInstance& inst = p.ws.patches[pi];
  const int d = p.ws.d;
  for (auto [f, r] : so.faces) {
    if (r == 0) continue;
    auto xs = lattice::x_string_leftward(inst.geom, f);
    p.ws.state = sim::apply(
        p.ws.state,
        to_register(lattice::x_string_operator(d, xs, mod_d(-r, d)),
                    inst.slots));
  }
  for (auto [v, j] : so.vertices) {
    if (j == 0) continue;
    auto zs = lattice::z_string_downward(inst.geom, v);
    p.ws.state = sim::apply(
        p.ws.state,
        to_register(lattice::z_string_operator(d, zs, mod_d(-j, d)),
                    inst.slots));
  }
}

// Every stabilizer of the patch must report outcome zero with certainty.
// Checked through the moments <psi|A^g|psi>, which cost one term per power.
void assert_vacuum(const Path& p, int pi, const char* what) {
  const PatchInstance& inst = p.ws.patches[pi];
  const int d = p.ws.d;
  auto check = [&](const sim::LocalOperator& op_geom, const char* kind,
                   int id) {
    Cx acc = 1.0;
    for (int g = 1; g < d; ++g) {
      // op_geom is the generator; raise it by composing g times lazily:
      // generators here are single-term, so powers are cheap.
      sim::LocalOperator pw = op_geom;
      for (auto& t : pw.terms) {
        for (auto& sft : t.shift) sft = mod_d(static_cast<long long>(sft) * g, d);
        for (auto& ph : t.phase) ph = mod_d(static_cast<long long>(ph) * g, d);
      }
      acc += sim::overlap(p.ws.state, sim::apply(p.ws.state, pw));
    }
    if (std::abs(acc / double(d) - 1.0) > kTolLoose)
      throw std::runtime_error(std::string(what) + ": stabilizer " + kind +
                               std::to_string(id) + " of " + inst.name +
                               " not flat after corrections");
  };
  for (const auto& f : inst.geom.faces)
    if (f.stabilized)
      check(to_register(lattice::face_phase(inst.geom, f.id, 1), inst.slots),
            "face ", f.id);
  for (const auto& v : inst.geom.vertices)
    if (v.stabilized)
      check(to_register(lattice::vertex_shift(inst.geom, v.id, 1), inst.slots),
            "vertex ", v.id);
}

struct EdgePlan {
  int position;  // register position before any of the planned removals
  int geom_edge;
  std::string label;
};

// Measures the planned edges in descending register position, removing each
// from the state. Returns children with (geometry edge, outcome) lists.
std::vector<std::pair<Path, std::vector<std::pair<int, int>>>> measure_out(
    Path start, std::vector<EdgePlan> plan, sim::EdgeBasis basis,
    sim::MeasureMode mode, std::mt19937_64* rng) {
  std::sort(plan.begin(), plan.end(),
            [](const EdgePlan& a, const EdgePlan& b) {
              return a.position > b.position;
            });
  std::vector<std::pair<Path, std::vector<std::pair<int, int>>>> cur;
  cur.push_back({std::move(start), {}});
  for (const auto& ep : plan) {
    std::vector<std::pair<Path, std::vector<std::pair<int, int>>>> next;
    for (auto& [path, config] : cur) {
      auto branches =
          sim::measure_edge(path.ws.state, ep.position, basis, mode, rng);
      for (auto& b : branches) {
        if (!b.state) continue;
        Path np = path;
        np.prob *= b.probability;
        np.ws.state = std::move(*b.state);
        np.trace.push_back({ep.label, b.outcome});
        auto nc = config;
        nc.push_back({ep.geom_edge, b.outcome});
        next.push_back({std::move(np), std::move(nc)});
      }
    }
    cur = std::move(next);
  }
  return cur;
}

void erase_patches(Workspace& ws, std::vector<int> indices) {
  std::sort(indices.begin(), indices.end(), std::greater<int>());
  for (int i : indices) ws.patches.erase(ws.patches.begin() + i);
}

// Appends the reduction labels; in enumerate mode also emits one dead leaf
// per absent outcome (a sampled trajectory never visits the others).
void record_reduction(std::vector<std::pair<Path, int>>& children,
                      const Path& parent, const std::string& owner,
                      int d, std::vector<LeafRecord>& dead,
                      sim::MeasureMode mode) {
  std::set<int> seen;
  for (auto& [child, n] : children) {
    child.reductions.push_back(n);
    child.trace.push_back({owner + ".n", n});
    seen.insert(n);
  }
  if (mode == sim::MeasureMode::Sample) return;
  for (int n = 0; n < d; ++n) {
    if (seen.count(n)) continue;
    LeafRecord leaf;
    leaf.probability = 0.0;
    leaf.reductions = parent.reductions;
    leaf.reductions.push_back(n);
    leaf.trace = parent.trace;
    leaf.trace.push_back({owner + ".n", n});
    dead.push_back(std::move(leaf));
  }
}

void exec_build(const Step& st, const std::vector<std::vector<Cx>>& inputs,
                std::vector<Path>& live, std::vector<LeafRecord>& dead,
                sim::MeasureMode mode, std::mt19937_64* rng) {
  std::vector<Path> next;
  for (Path& p : live) {
    if (p.ws.patch_index(st.name) >= 0)
      throw std::invalid_argument("build: patch name already in use: " +
                                  st.name);
    const int d = p.ws.d;
    lattice::PatchGeometry geom = lattice::build_patch(d, st.rows, st.cols);
    PatchInstance inst;
    inst.name = st.name;
    inst.kind = PatchKind::Standard;
    inst.geom = geom;

    sim::PureState ps;
    bool needs_sweep = false;
    switch (st.init) {
      case InitKind::Basis:
        ps = logical_group_state(geom, st.init_arg);
        break;
      case InitKind::Input:
        if (st.init_arg < 0 || st.init_arg >= static_cast<int>(inputs.size()))
          throw std::invalid_argument("build: input slot out of range");
        ps = logical_encode(geom, inputs[st.init_arg]);
        break;
      case InitKind::Amps:
        ps = logical_encode(geom, st.amps);
        break;
      case InitKind::UnitSmooth: {
        std::vector<Cx> plus(d, Cx(1.0 / std::sqrt(double(d)), 0.0));
        ps = sim::PureState::product(
            d, std::vector<std::vector<Cx>>(geom.edges.size(), plus));
        needs_sweep = true;
        break;
      }
      case InitKind::UnitRough:
        ps = sim::PureState::basis(
            d, static_cast<int>(geom.edges.size()),
            std::vector<int>(geom.edges.size(), 0));
        needs_sweep = true;
        break;
    }
    append_patch(p.ws, std::move(inst), ps);

    if (!needs_sweep) {
      next.push_back(std::move(p));
      continue;
    }
    int pi = static_cast<int>(p.ws.patches.size()) - 1;
    for (auto& [child, so] : sweep_instance(std::move(p), pi, mode, rng)) {
      apply_corrections(child, pi, so);
      assert_vacuum(child, pi, "unit build");
      next.push_back(std::move(child));
    }
  }
  live = std::move(next);
}

void exec_merge(const Step& st, std::vector<Path>& live,
                std::vector<LeafRecord>& dead, sim::MeasureMode mode,
                std::mt19937_64* rng) {
  std::vector<Path> next;
  bool validated = false;
  for (Path& p : live) {
    const int d = p.ws.d;
    int ia = require_patch(p.ws, st.name);
    int ib = require_patch(p.ws, st.other);
    const PatchInstance a = p.ws.patches[ia];  // first operand
    const PatchInstance b = p.ws.patches[ib];
    if (a.kind != PatchKind::Standard || b.kind != PatchKind::Standard)
      throw std::invalid_argument("merge: operands must be standard patches");
    if (p.ws.patch_index(st.result) >= 0)
      throw std::invalid_argument("merge: result name already in use");

    PatchInstance inst;
    inst.name = st.result;
    std::vector<int> reduction_faces, reduction_vertices;
    std::vector<Cx> seam_ket;
    std::vector<int> seam_edges_geom;

    if (st.flavor == Flavor::Smooth) {
      // first operand on the left
      lattice::MergedPatch mp = lattice::build_merged(a.geom, b.geom);
      inst.kind = PatchKind::Standard;
      inst.geom = mp.geom;
      inst.slots.assign(mp.geom.edges.size(), -1);
      for (size_t e = 0; e < mp.a_edges.size(); ++e)
        inst.slots[mp.a_edges[e]] = a.slots[e];
      for (size_t e = 0; e < mp.b_edges.size(); ++e)
        inst.slots[mp.b_edges[e]] = b.slots[e];
      seam_edges_geom = mp.seam_edges;
      reduction_faces = mp.seam_faces;
      seam_ket.assign(d, Cx(1.0 / std::sqrt(double(d)), 0.0));
    } else {
      // first operand at the bottom; its frame absorbs the corrections
      lattice::SplicedPatch sp = lattice::build_spliced(b.geom, a.geom);
      inst.kind = PatchKind::Spliced;
      inst.geom = sp.geom;
      inst.slots.assign(sp.geom.edges.size(), -1);
      for (size_t e = 0; e < sp.a_edges.size(); ++e)
        inst.slots[sp.a_edges[e]] = b.slots[e];
      for (size_t e = 0; e < sp.b_edges.size(); ++e)
        inst.slots[sp.b_edges[e]] = a.slots[e];
      seam_edges_geom = sp.seam_edges;
      reduction_vertices = sp.junction_vertices;
      seam_ket.assign(d, 0.0);
      seam_ket[0] = 1.0;
      inst.splice = SpliceInfo{b.geom, a.geom, std::move(sp)};
    }

    if (!validated) {
      lattice::ValidationReport rep = lattice::validate_patch(inst.geom);
      if (!rep.ok)
        throw std::runtime_error("merge: merged geometry fails validation: " +
                                 (rep.errors.empty() ? "?" : rep.errors[0]));
      validated = true;
    }

    int base = p.ws.state.num_edges;
    for (size_t k = 0; k < seam_edges_geom.size(); ++k) {
      p.ws.state = sim::adjoin_edge(p.ws.state, base + static_cast<int>(k),
                                    seam_ket);
      inst.slots[seam_edges_geom[k]] = base + static_cast<int>(k);
    }
    erase_patches(p.ws, {ia, ib});
    p.ws.patches.push_back(std::move(inst));
    int pi = static_cast<int>(p.ws.patches.size()) - 1;

    Path parent_snapshot = p;  // reductions/trace before branching
    std::vector<std::pair<Path, int>> children;
    for (auto& [child, so] : sweep_instance(std::move(p), pi, mode, rng)) {
      long long n = 0;
      auto outcome_of = [](const std::vector<std::pair<int, int>>& list,
                           int id) {
        for (auto [sid, out] : list)
          if (sid == id) return out;
        throw std::logic_error("merge: missing site outcome");
      };
      for (int f : reduction_faces) n += outcome_of(so.faces, f);
      for (int v : reduction_vertices) n += outcome_of(so.vertices, v);
      apply_corrections(child, pi, so);
      assert_vacuum(child, pi, "merge");
      children.push_back({std::move(child), mod_d(n, d)});
    }
    record_reduction(children, parent_snapshot, st.result, d, dead, mode);
    for (auto& [child, n] : children) next.push_back(std::move(child));
  }
  live = std::move(next);
}

void exec_split(const Step& st, std::vector<Path>& live,
                std::vector<LeafRecord>& dead, sim::MeasureMode mode,
                std::mt19937_64* rng) {
  std::vector<Path> next;
  for (Path& p : live) {
    const int d = p.ws.d;
    int pi = require_patch(p.ws, st.name);
    const PatchInstance inst = p.ws.patches[pi];
    if (p.ws.patch_index(st.result) >= 0 ||
        p.ws.patch_index(st.result2) >= 0)
      throw std::invalid_argument("split: result name already in use");

    lattice::PatchGeometry first_geom, second_geom;
    std::vector<int> first_edges, second_edges, cut_edges;
    sim::EdgeBasis basis;
    if (st.flavor == Flavor::Smooth) {
      if (inst.kind != PatchKind::Standard)
        throw std::invalid_argument("smooth split: needs a standard patch");
      lattice::SplitPlan plan = lattice::plan_smooth_split(inst.geom, st.at);
      first_geom = plan.first;
      second_geom = plan.second;
      first_edges = plan.first_edges;
      second_edges = plan.second_edges;
      cut_edges = plan.cut_edges;
      basis = sim::EdgeBasis::X;
    } else {
      if (inst.kind != PatchKind::Spliced || !inst.splice)
        throw std::invalid_argument(
            "rough split: needs a patch formed by a rough merge");
      // first piece at the bottom, mirroring the merge operand order
      first_geom = inst.splice->b_geom;
      second_geom = inst.splice->a_geom;
      first_edges = inst.splice->plan.b_edges;
      second_edges = inst.splice->plan.a_edges;
      cut_edges = inst.splice->plan.seam_edges;
      basis = sim::EdgeBasis::Z;
    }

    std::vector<EdgePlan> plan;
    std::vector<int> removed;
    for (int e : cut_edges) {
      plan.push_back(
          {inst.slots[e], e, st.name + ".cut" + std::to_string(e)});
      removed.push_back(inst.slots[e]);
    }

    for (auto& [child, config] : measure_out(std::move(p), plan, basis, mode,
                                             rng)) {
      PatchInstance fi, si;
      fi.name = st.result;
      fi.kind = PatchKind::Standard;
      fi.geom = first_geom;
      fi.slots.resize(first_edges.size());
      for (size_t e = 0; e < first_edges.size(); ++e)
        fi.slots[e] = inst.slots[first_edges[e]];
      si.name = st.result2;
      si.kind = PatchKind::Standard;
      si.geom = second_geom;
      si.slots.resize(second_edges.size());
      for (size_t e = 0; e < second_edges.size(); ++e)
        si.slots[e] = inst.slots[second_edges[e]];

      child.ws.patches.erase(child.ws.patches.begin() + pi);
      child.ws.patches.insert(child.ws.patches.begin() + pi, si);
      child.ws.patches.insert(child.ws.patches.begin() + pi, fi);
      renumber_after_removals(child.ws, removed);

      if (st.flavor == Flavor::Rough) {
        // a seam outcome on the spine shifts the total the two pieces carry;
        // shift the first piece back so every seam branch lands on the same
        // comultiplied state
        long long offset = 0;
        for (auto [e, c] : inst.geom.z_path.steps)
          for (auto [ce, y] : config)
            if (ce == e) offset += static_cast<long long>(c) * y;
        if (mod_d(offset, child.ws.d) != 0) {
          const PatchInstance& fpost = child.ws.patches[pi];
          child.ws.state = sim::apply(
              child.ws.state,
              to_register(lattice::x_string_operator(
                              child.ws.d, fpost.geom.x_path,
                              mod_d(-offset, child.ws.d)),
                          fpost.slots));
        }
      }

      for (int piece : {pi, pi + 1}) {
        Path tmp = std::move(child);
        std::vector<std::pair<Path, SiteOutcomes>> swept =
            sweep_instance(std::move(tmp), piece, mode, rng);
        // pieces of a code state have definite-but-random boundary syndromes,
        // so each sweep keeps exactly the surviving branches
        std::vector<Path> folded;
        for (auto& [c2, so] : swept) {
          apply_corrections(c2, piece, so);
          assert_vacuum(c2, piece, "split");
          folded.push_back(std::move(c2));
        }
        if (piece == pi) {
          // continue sweeping the second piece for every branch of the first
          std::vector<Path> expanded;
          for (Path& f1 : folded) {
            auto swept2 = sweep_instance(std::move(f1), pi + 1, mode, rng);
            for (auto& [c3, so3] : swept2) {
              apply_corrections(c3, pi + 1, so3);
              assert_vacuum(c3, pi + 1, "split");
              expanded.push_back(std::move(c3));
            }
          }
          for (Path& done : expanded) next.push_back(std::move(done));
          break;
        }
      }
    }
  }
  live = std::move(next);
}

void exec_counit(const Step& st, std::vector<Path>& live,
                 std::vector<LeafRecord>& dead, sim::MeasureMode mode,
                 std::mt19937_64* rng) {
  std::vector<Path> next;
  for (Path& p : live) {
    const int d = p.ws.d;
    int pi = require_patch(p.ws, st.name);
    const PatchInstance inst = p.ws.patches[pi];
    sim::EdgeBasis basis = st.flavor == Flavor::Rough ? sim::EdgeBasis::Z
                                                      : sim::EdgeBasis::X;
    std::vector<EdgePlan> plan;
    std::vector<int> removed;
    for (size_t e = 0; e < inst.slots.size(); ++e) {
      plan.push_back({inst.slots[e], static_cast<int>(e),
                      st.name + ".e" + std::to_string(e)});
      removed.push_back(inst.slots[e]);
    }

    Path parent_snapshot = p;
    std::vector<std::pair<Path, int>> children;
    for (auto& [child, config_list] :
         measure_out(std::move(p), plan, basis, mode, rng)) {
      std::vector<int> config(inst.geom.edges.size(), 0);
      for (auto [e, y] : config_list) config[e] = y;

      long long n = 0;
      if (st.flavor == Flavor::Rough) {
        for (const auto& f : inst.geom.faces)
          if (f.stabilized &&
              lattice::face_argument(inst.geom, f.id, config) != 0)
            throw std::runtime_error(
                "rough counit: face constraint violated, geometry error");
        for (auto [e, c] : inst.geom.z_path.steps)
          n -= static_cast<long long>(c) * config[e];
      } else {
        for (const auto& v : inst.geom.vertices)
          if (v.stabilized &&
              lattice::star_argument(inst.geom, v.id, config) != 0)
            throw std::runtime_error(
                "smooth counit: star constraint violated, geometry error");
        for (auto [e, s] : inst.geom.x_path.crossings)
          n -= static_cast<long long>(s) * config[e];
      }

      child.ws.patches.erase(child.ws.patches.begin() + pi);
      renumber_after_removals(child.ws, removed);
      children.push_back({std::move(child), mod_d(n, d)});
    }
    record_reduction(children, parent_snapshot, st.name, d, dead, mode);
    for (auto& [child, n] : children) next.push_back(std::move(child));
  }
  live = std::move(next);
}

void exec_fourier(const Step& st, std::vector<Path>& live) {
  for (Path& p : live) {
    const int d = p.ws.d;
    int pi = require_patch(p.ws, st.name);
    PatchInstance& inst = p.ws.patches[pi];
    // positive-sign Fourier unitary, the matrix of the basis change from the
    // group basis to the indicator basis; it squares to index negation
    Mat h(d, d);
    for (int k = 0; k < d; ++k)
      for (int j = 0; j < d; ++j)
        h.at(k, j) = omega(d, static_cast<long long>(j) * k) /
                     std::sqrt(double(d));
    for (int slot : inst.slots)
      p.ws.state = sim::apply_gate(p.ws.state, h, {slot});
    inst.geom = lattice::rotate_geometry(inst.geom);
    inst.kind = PatchKind::Rotated;
    inst.splice.reset();
  }
}

void exec_gate(const Step& st, std::vector<Path>& live) {
  for (Path& p : live) {
    const int d = p.ws.d;
    int pi = require_patch(p.ws, st.name);
    PatchInstance& inst = p.ws.patches[pi];
    switch (st.gate) {
      case 'X':
        p.ws.state = sim::apply(
            p.ws.state,
            to_register(
                lattice::x_string_operator(d, inst.geom.x_path, st.power),
                inst.slots));
        break;
      case 'Z':
        p.ws.state = sim::apply(
            p.ws.state,
            to_register(
                lattice::z_string_operator(d, inst.geom.z_path, st.power),
                inst.slots));
        break;
      case 'S': {
        Mat s = groupalg::gate(groupalg::GateKind::S, d, st.power);
        for (int slot : inst.slots)
          p.ws.state = sim::apply_gate(p.ws.state, s, {slot});
        break;
      }
      default:
        throw std::invalid_argument("gate: expected X, Z or S");
    }
  }
}

}  // namespace

std::vector<LeafRecord> run(const Procedure& proc,
                            const std::vector<std::vector<Cx>>& inputs,
                            sim::MeasureMode mode, std::mt19937_64* rng) {
  check_dim(proc.d);
  if (static_cast<int>(inputs.size()) != proc.input_count)
    throw std::invalid_argument("run: wrong number of inputs");
  if (mode == sim::MeasureMode::Sample && rng == nullptr)
    throw std::invalid_argument("run: sample mode needs a generator");

  std::vector<Path> live(1);
  live[0].ws.d = proc.d;
  live[0].ws.state = sim::PureState(proc.d, 0);
  live[0].ws.state.amps[0] = 1.0;

  std::vector<LeafRecord> leaves;
  for (const Step& st : proc.steps) {
    switch (st.kind) {
      case StepKind::Build:
        exec_build(st, inputs, live, leaves, mode, rng);
        break;
      case StepKind::Merge:
        exec_merge(st, live, leaves, mode, rng);
        break;
      case StepKind::Split:
        exec_split(st, live, leaves, mode, rng);
        break;
      case StepKind::Counit:
        exec_counit(st, live, leaves, mode, rng);
        break;
      case StepKind::Fourier:
        exec_fourier(st, live);
        break;
      case StepKind::Gate:
        exec_gate(st, live);
        break;
    }
  }
  for (Path& p : live) {
    LeafRecord leaf;
    leaf.probability = p.prob;
    leaf.reductions = std::move(p.reductions);
    leaf.trace = std::move(p.trace);
    leaf.ws = std::move(p.ws);
    leaves.push_back(std::move(leaf));
  }
  return leaves;
}

// --- logical map extraction -----------------------------------------------------

LogicalMap extract_logical_map(const Procedure& proc, double tol) {
  const int d = proc.d;
  check_dim(d);
  size_t d_in = 1;
  for (int k = 0; k < proc.input_count; ++k) d_in *= d;

  LogicalMap out;
  out.d = d;
  out.input_qudits = proc.input_count;

  // Layout of the final workspace, fixed by the first live leaf seen.
  bool have_layout = false;
  std::vector<std::string> names;
  std::vector<std::vector<int>> slot_layout;
  std::vector<sim::PureState> bras;  // one per output basis label
  size_t d_out = 1;

  std::map<std::string, Mat> sub_kraus;                 // trace key -> matrix
  std::map<std::string, std::vector<int>> sub_labels;   // trace key -> tuple
  std::set<std::vector<int>> dead_tuples;
  double leaked = 0.0;

  for (size_t alpha = 0; alpha < d_in; ++alpha) {
    std::vector<std::vector<Cx>> inputs(proc.input_count,
                                        std::vector<Cx>(d, 0.0));
    size_t rest = alpha;
    for (int k = proc.input_count - 1; k >= 0; --k) {
      inputs[k][rest % d] = 1.0;  // input 0 is the most significant digit
      rest /= d;
    }

    std::vector<LeafRecord> leaves =
        run(proc, inputs, sim::MeasureMode::Enumerate);
    for (LeafRecord& leaf : leaves) {
      if (!leaf.ws) {
        dead_tuples.insert(leaf.reductions);
        continue;
      }
      Workspace& ws = *leaf.ws;
      if (!have_layout) {
        for (const auto& inst : ws.patches) {
          names.push_back(inst.name);
          slot_layout.push_back(inst.slots);
          d_out *= d;
        }
        // logical output basis, patch 0 as the most significant digit
        std::vector<std::vector<sim::PureState>> basis(ws.patches.size());
        for (size_t p = 0; p < ws.patches.size(); ++p)
          for (int b = 0; b < d; ++b)
            basis[p].push_back(logical_group_state(ws.patches[p].geom, b));
        for (size_t beta = 0; beta < d_out; ++beta) {
          std::vector<sim::PureState> per_patch;
          size_t r = beta;
          std::vector<int> digits(ws.patches.size(), 0);
          for (int p = static_cast<int>(ws.patches.size()) - 1; p >= 0; --p) {
            digits[p] = static_cast<int>(r % d);
            r /= d;
          }
          for (size_t p = 0; p < ws.patches.size(); ++p)
            per_patch.push_back(basis[p][digits[p]]);
          bras.push_back(embed_product(ws, per_patch));
        }
        have_layout = true;
      } else {
        if (ws.patches.size() != names.size())
          throw std::logic_error("extract: leaves disagree on patch count");
        for (size_t p = 0; p < names.size(); ++p)
          if (ws.patches[p].name != names[p] ||
              ws.patches[p].slots != slot_layout[p])
            throw std::logic_error("extract: leaves disagree on layout");
      }

      std::ostringstream key;
      for (const auto& [site, outcome] : leaf.trace)
        key << site << '=' << outcome << ';';
      auto it = sub_kraus.find(key.str());
      if (it == sub_kraus.end()) {
        it = sub_kraus
                 .emplace(key.str(),
                          Mat(static_cast<int>(d_out), static_cast<int>(d_in)))
                 .first;
        sub_labels[key.str()] = leaf.reductions;
      } else if (sub_labels[key.str()] != leaf.reductions) {
        throw std::logic_error("extract: trace maps to two label tuples");
      }

      const double root_p = std::sqrt(leaf.probability);
      double inside = 0.0;
      for (size_t beta = 0; beta < d_out; ++beta) {
        Cx c = sim::overlap(bras[beta], ws.state);
        inside += std::norm(c);
        it->second.at(static_cast<int>(beta), static_cast<int>(alpha)) +=
            root_p * c;
      }
      leaked = std::max(leaked, 1.0 - inside);
    }
  }
  if (!have_layout)
    throw std::runtime_error("extract: no live branches at all");

  // Group sub-branches by label tuple; within a tuple all must agree up to
  // one scalar, and the group collapses to a single reweighted operator.
  std::map<std::vector<int>, std::vector<const Mat*>> groups;
  for (const auto& [key, mat] : sub_kraus)
    groups[sub_labels[key]].push_back(&mat);

  out.output_qudits = static_cast<int>(names.size());
  out.output_patches = names;
  out.leaked_weight = leaked;

  for (const auto& [tuple, mats] : groups) {
    const Mat& ref = *mats[0];
    double ref_n2 = 0.0;
    for (const Cx& v : ref.a) ref_n2 += std::norm(v);
    double total_n2 = 0.0;
    for (const Mat* m : mats) {
      double n2 = 0.0;
      Cx dot = 0.0;
      for (size_t k = 0; k < m->a.size(); ++k) {
        n2 += std::norm(m->a[k]);
        dot += std::conj(ref.a[k]) * m->a[k];
      }
      total_n2 += n2;
      Cx scale = dot / ref_n2;
      double dev = 0.0;
      for (size_t k = 0; k < m->a.size(); ++k)
        dev = std::max(dev, std::abs(m->a[k] - scale * ref.a[k]));
      out.proportionality_error =
          std::max(out.proportionality_error, dev / std::sqrt(n2));
    }
    Mat k = ref.scaled(Cx(std::sqrt(total_n2 / ref_n2), 0.0));
    out.labels.push_back(tuple);
    out.kraus.push_back(std::move(k));
  }
  for (const auto& tuple : dead_tuples) {
    if (groups.count(tuple)) continue;
    out.labels.push_back(tuple);
    out.kraus.push_back(Mat(static_cast<int>(d_out), static_cast<int>(d_in)));
  }

  Mat acc(static_cast<int>(d_in), static_cast<int>(d_in));
  for (const Mat& k : out.kraus) acc = acc + k.adjoint() * k;
  Mat eye = Mat::identity(static_cast<int>(d_in));
  out.completeness_error = (acc - eye).max_abs();
  if (out.proportionality_error > tol)
    throw std::runtime_error(
        "extract: sub-branches within a label tuple are not proportional");
  return out;
}

}  // namespace qsurg::surgery
