#include "qsurg/sim.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <tuple>

namespace qsurg::sim {

namespace {

// Probabilities below this are treated as an impossible outcome: the branch
// is kept for bookkeeping but carries no state.
constexpr double kProbFloor = 1e-12;

size_t& budget_slot() {
  static size_t b = kDefaultBudget;
  return b;
}

void check_state(const PureState& s) {
  if (s.d < 2) throw std::invalid_argument("state has no dimension set");
  if (s.amps.size() != checked_size(s.d, s.num_edges))
    throw std::invalid_argument("state size does not match edge count");
}

}  // namespace

size_t state_budget() { return budget_slot(); }

void set_state_budget(size_t amplitudes) {
  if (amplitudes == 0) throw std::invalid_argument("budget must be positive");
  budget_slot() = amplitudes;
}

size_t checked_size(int d, int num_edges) {
  check_dim(d);
  if (num_edges < 0) throw std::invalid_argument("negative edge count");
  size_t n = 1;
  for (int i = 0; i < num_edges; ++i) {
    if (n > state_budget() / static_cast<size_t>(d))
      throw std::length_error("state vector would exceed the amplitude budget");
    n *= static_cast<size_t>(d);
  }
  return n;
}

PureState::PureState(int dim, int edges) : d(dim), num_edges(edges) {
  amps.assign(checked_size(dim, edges), Cx{});
}

PureState PureState::basis(int dim, int edges, const std::vector<int>& config) {
  if (static_cast<int>(config.size()) != edges)
    throw std::invalid_argument("configuration length mismatch");
  PureState s(dim, edges);
  size_t idx = 0;
  for (int e = edges - 1; e >= 0; --e) {
    if (config[e] < 0 || config[e] >= dim)
      throw std::invalid_argument("configuration digit out of range");
    idx = idx * dim + static_cast<size_t>(config[e]);
  }
  s.amps[idx] = 1.0;
  return s;
}

PureState PureState::product(int dim,
                             const std::vector<std::vector<Cx>>& factors) {
  PureState s(dim, static_cast<int>(factors.size()));
  for (const auto& f : factors)
    if (static_cast<int>(f.size()) != dim)
      throw std::invalid_argument("factor length mismatch");
  for (size_t idx = 0; idx < s.amps.size(); ++idx) {
    Cx v = 1.0;
    size_t rem = idx;
    for (const auto& f : factors) {
      v *= f[rem % dim];
      rem /= dim;
    }
    s.amps[idx] = v;
  }
  return s;
}

double PureState::norm() const {
  return std::sqrt(kernels::norm2(amps.data(), amps.size()));
}

PureState normalize(const PureState& s) {
  double n = s.norm();
  if (n < 1e-300) throw std::invalid_argument("cannot normalize a zero state");
  PureState r = s;
  kernels::scale(r.amps.data(), r.amps.size(), Cx{1.0 / n, 0.0});
  return r;
}

Cx overlap(const PureState& a, const PureState& b) {
  if (a.d != b.d || a.num_edges != b.num_edges)
    throw std::invalid_argument("states live on different registers");
  return kernels::dot(a.amps.data(), b.amps.data(), a.amps.size());
}

bool approx_equal(const PureState& a, const PureState& b, double tol) {
  if (a.d != b.d || a.num_edges != b.num_edges) return false;
  for (size_t i = 0; i < a.amps.size(); ++i)
    if (std::abs(a.amps[i] - b.amps[i]) > tol) return false;
  return true;
}

bool approx_equal_up_to_phase(const PureState& a, const PureState& b,
                              double tol) {
  if (a.d != b.d || a.num_edges != b.num_edges) return false;
  size_t pivot = 0;
  double best = 0.0;
  for (size_t i = 0; i < a.amps.size(); ++i)
    if (std::abs(a.amps[i]) > best) {
      best = std::abs(a.amps[i]);
      pivot = i;
    }
  if (best <= tol) return b.norm() <= tol;
  Cx s = b.amps[pivot] / a.amps[pivot];
  if (std::abs(std::abs(s) - 1.0) > tol) return false;
  s /= std::abs(s);
  for (size_t i = 0; i < a.amps.size(); ++i)
    if (std::abs(a.amps[i] * s - b.amps[i]) > tol) return false;
  return true;
}

void LocalOperator::canonicalize(double tol) {
  const size_t k = support.size();
  for (size_t i = 1; i < k; ++i)
    if (support[i] <= support[i - 1])
      throw std::invalid_argument("support must be strictly increasing");
  for (auto& t : terms) {
    if (t.shift.size() != k || t.phase.size() != k)
      throw std::invalid_argument("term arity does not match support");
    for (auto& v : t.shift) v = mod_d(v, d);
    for (auto& v : t.phase) v = mod_d(v, d);
  }
  std::sort(terms.begin(), terms.end(),
            [](const kernels::Term& a, const kernels::Term& b) {
              return std::tie(a.shift, a.phase) < std::tie(b.shift, b.phase);
            });
  std::vector<kernels::Term> merged;
  for (auto& t : terms) {
    if (!merged.empty() && merged.back().shift == t.shift &&
        merged.back().phase == t.phase) {
      merged.back().coeff += t.coeff;
    } else {
      merged.push_back(std::move(t));
    }
  }
  terms.clear();
  for (auto& t : merged)
    if (std::abs(t.coeff) > tol) terms.push_back(std::move(t));
}

namespace {

// Rewrites op onto a larger support (padding shifts/phases with zeros).
LocalOperator expand_support(const LocalOperator& op,
                             const std::vector<int>& support) {
  LocalOperator r;
  r.d = op.d;
  r.support = support;
  std::vector<int> pos(op.support.size());
  for (size_t i = 0; i < op.support.size(); ++i) {
    auto it = std::lower_bound(support.begin(), support.end(), op.support[i]);
    if (it == support.end() || *it != op.support[i])
      throw std::invalid_argument("support expansion lost an edge");
    pos[i] = static_cast<int>(it - support.begin());
  }
  for (const auto& t : op.terms) {
    kernels::Term nt;
    nt.coeff = t.coeff;
    nt.shift.assign(support.size(), 0);
    nt.phase.assign(support.size(), 0);
    for (size_t i = 0; i < op.support.size(); ++i) {
      nt.shift[pos[i]] = t.shift[i];
      nt.phase[pos[i]] = t.phase[i];
    }
    r.terms.push_back(std::move(nt));
  }
  return r;
}

}  // namespace

LocalOperator compose(const LocalOperator& after, const LocalOperator& first) {
  if (after.d != first.d)
    throw std::invalid_argument("operators have different dimension");
  std::vector<int> support;
  std::merge(after.support.begin(), after.support.end(), first.support.begin(),
             first.support.end(), std::back_inserter(support));
  support.erase(std::unique(support.begin(), support.end()), support.end());
  LocalOperator a = expand_support(after, support);
  LocalOperator f = expand_support(first, support);
  LocalOperator r;
  r.d = after.d;
  r.support = support;
  const size_t k = support.size();
  for (const auto& ta : a.terms)
    for (const auto& tf : f.terms) {
      kernels::Term t;
      long long cross = 0;  // <phase_first, shift_after>
      t.shift.resize(k);
      t.phase.resize(k);
      for (size_t i = 0; i < k; ++i) {
        cross += static_cast<long long>(tf.phase[i]) * ta.shift[i];
        t.shift[i] = ta.shift[i] + tf.shift[i];
        t.phase[i] = ta.phase[i] + tf.phase[i];
      }
      t.coeff = ta.coeff * tf.coeff * omega(r.d, -cross);
      r.terms.push_back(std::move(t));
    }
  r.canonicalize();
  return r;
}

LocalOperator adjoint(const LocalOperator& op) {
  LocalOperator r;
  r.d = op.d;
  r.support = op.support;
  for (const auto& t : op.terms) {
    kernels::Term nt;
    long long cross = 0;
    nt.shift.resize(t.shift.size());
    nt.phase.resize(t.phase.size());
    for (size_t i = 0; i < t.shift.size(); ++i) {
      cross += static_cast<long long>(t.phase[i]) * t.shift[i];
      nt.shift[i] = -t.shift[i];
      nt.phase[i] = -t.phase[i];
    }
    nt.coeff = std::conj(t.coeff) * omega(op.d, -cross);
    r.terms.push_back(std::move(nt));
  }
  r.canonicalize();
  return r;
}

bool approx_equal(const LocalOperator& a, const LocalOperator& b, double tol) {
  if (a.d != b.d) return false;
  std::vector<int> support;
  std::merge(a.support.begin(), a.support.end(), b.support.begin(),
             b.support.end(), std::back_inserter(support));
  support.erase(std::unique(support.begin(), support.end()), support.end());
  LocalOperator diff = expand_support(a, support);
  LocalOperator bx = expand_support(b, support);
  for (auto& t : bx.terms) {
    t.coeff = -t.coeff;
    diff.terms.push_back(std::move(t));
  }
  diff.canonicalize(tol);
  return diff.terms.empty();
}

PureState apply(const PureState& s, const LocalOperator& op) {
  check_state(s);
  if (op.d != s.d) throw std::invalid_argument("operator dimension mismatch");
  for (int e : op.support)
    if (e < 0 || e >= s.num_edges)
      throw std::invalid_argument("operator support outside register");
  for (const auto& t : op.terms)
    if (t.shift.size() != op.support.size() ||
        t.phase.size() != op.support.size())
      throw std::invalid_argument("term arity does not match support");
  PureState out(s.d, s.num_edges);
  kernels::apply_terms(s.amps.data(), out.amps.data(), s.d, s.num_edges,
                       op.support, op.terms);
  return out;
}

PureState apply_gate(const PureState& s, const Mat& matrix,
                     const std::vector<int>& targets) {
  check_state(s);
  size_t dk = 1;
  for (size_t i = 0; i < targets.size(); ++i) {
    if (targets[i] < 0 || targets[i] >= s.num_edges)
      throw std::invalid_argument("gate target outside register");
    for (size_t j = 0; j < i; ++j)
      if (targets[j] == targets[i])
        throw std::invalid_argument("repeated gate target");
    dk *= static_cast<size_t>(s.d);
  }
  if (matrix.rows != static_cast<int>(dk) || matrix.cols != static_cast<int>(dk))
    throw std::invalid_argument("gate matrix size mismatch");
  PureState out(s.d, s.num_edges);
  kernels::apply_dense_local(s.amps.data(), out.amps.data(), s.d, s.num_edges,
                             targets, matrix.a.data());
  return out;
}

namespace {

std::vector<Branch> finish_measurement(std::vector<PureState>&& projected,
                                       double total_norm2, MeasureMode mode,
                                       std::mt19937_64* rng) {
  std::vector<Branch> branches;
  double sum = 0.0;
  for (size_t j = 0; j < projected.size(); ++j) {
    Branch b;
    b.outcome = static_cast<int>(j);
    double p = kernels::norm2(projected[j].amps.data(),
                              projected[j].amps.size());
    sum += p;
    if (p >= kProbFloor * total_norm2) {
      b.probability = p / total_norm2;
      b.state = normalize(projected[j]);
    }
    branches.push_back(std::move(b));
  }
  if (std::abs(sum - total_norm2) > 1e-9 * std::max(1.0, total_norm2))
    throw std::runtime_error("measurement branches do not resolve the state");
  if (mode == MeasureMode::Enumerate) return branches;
  if (rng == nullptr)
    throw std::invalid_argument("sampling requires a generator");
  std::vector<double> probs(branches.size());
  for (size_t j = 0; j < branches.size(); ++j) probs[j] = branches[j].probability;
  int pick = sample_index(probs, *rng);
  return {std::move(branches[static_cast<size_t>(pick)])};
}

}  // namespace

std::vector<Branch> measure_projectors(
    const PureState& s, const std::vector<LocalOperator>& projectors,
    MeasureMode mode, std::mt19937_64* rng) {
  check_state(s);
  double total = kernels::norm2(s.amps.data(), s.amps.size());
  std::vector<PureState> projected;
  projected.reserve(projectors.size());
  for (const auto& p : projectors) projected.push_back(apply(s, p));
  return finish_measurement(std::move(projected), total, mode, rng);
}

std::vector<Branch> measure_edge(const PureState& s, int edge, EdgeBasis basis,
                                 MeasureMode mode, std::mt19937_64* rng) {
  check_state(s);
  if (edge < 0 || edge >= s.num_edges)
    throw std::invalid_argument("measured edge outside register");
  double total = kernels::norm2(s.amps.data(), s.amps.size());
  std::vector<PureState> projected;
  projected.reserve(static_cast<size_t>(s.d));
  for (int y = 0; y < s.d; ++y) {
    std::vector<Cx> bra(s.d, Cx{});
    if (basis == EdgeBasis::Z) {
      bra[y] = 1.0;
    } else {
      // X-basis outcome y keeps the component along Hdag|y>.
      double r = 1.0 / std::sqrt(static_cast<double>(s.d));
      for (int x = 0; x < s.d; ++x)
        bra[x] = r * omega(s.d, static_cast<long long>(x) * y);
    }
    PureState out(s.d, s.num_edges - 1);
    kernels::contract_edge(s.amps.data(), out.amps.data(), s.d, s.num_edges,
                           edge, bra.data());
    projected.push_back(std::move(out));
  }
  return finish_measurement(std::move(projected), total, mode, rng);
}

PureState adjoin_edge(const PureState& s, int position,
                      const std::vector<Cx>& ket) {
  check_state(s);
  if (position < 0 || position > s.num_edges)
    throw std::invalid_argument("insert position outside register");
  if (static_cast<int>(ket.size()) != s.d)
    throw std::invalid_argument("ket length mismatch");
  PureState out(s.d, s.num_edges + 1);
  kernels::insert_edge(s.amps.data(), out.amps.data(), s.d, s.num_edges,
                       position, ket.data());
  return out;
}

PureState permute_edges(const PureState& s, const std::vector<int>& perm) {
  check_state(s);
  if (static_cast<int>(perm.size()) != s.num_edges)
    throw std::invalid_argument("permutation length mismatch");
  std::vector<bool> seen(perm.size(), false);
  for (int p : perm) {
    if (p < 0 || p >= s.num_edges || seen[static_cast<size_t>(p)])
      throw std::invalid_argument("not a permutation");
    seen[static_cast<size_t>(p)] = true;
  }
  PureState out(s.d, s.num_edges);
  kernels::permute_edges(s.amps.data(), out.amps.data(), s.d, s.num_edges,
                         perm);
  return out;
}

std::string dump_state(const PureState& s, double cutoff) {
  std::ostringstream os;
  os << s.d << " " << s.num_edges << "\n";
  char buf[128];
  for (size_t i = 0; i < s.amps.size(); ++i) {
    if (std::abs(s.amps[i]) <= cutoff) continue;
    std::snprintf(buf, sizeof buf, "%zu %.17g %.17g\n", i, s.amps[i].real(),
                  s.amps[i].imag());
    os << buf;
  }
  return os.str();
}

PureState parse_state(const std::string& text) {
  std::istringstream is(text);
  int d = 0, edges = 0;
  if (!(is >> d >> edges)) throw std::invalid_argument("bad state header");
  PureState s(d, edges);
  size_t idx;
  double re, im;
  while (is >> idx >> re >> im) {
    if (idx >= s.amps.size())
      throw std::invalid_argument("state index out of range");
    s.amps[idx] = Cx{re, im};
  }
  return s;
}

int sample_index(const std::vector<double>& probabilities,
                 std::mt19937_64& rng) {
  double sum = 0.0;
  for (double p : probabilities) {
    if (p < 0.0) throw std::invalid_argument("negative probability");
    sum += p;
  }
  if (sum <= 0.0) throw std::invalid_argument("no probability mass");
  std::uniform_real_distribution<double> dist(0.0, sum);
  double r = dist(rng);
  double acc = 0.0;
  for (size_t i = 0; i < probabilities.size(); ++i) {
    acc += probabilities[i];
    if (r < acc) return static_cast<int>(i);
  }
  for (size_t i = probabilities.size(); i-- > 0;)
    if (probabilities[i] > 0.0) return static_cast<int>(i);
  return 0;
}

}  // namespace qsurg::sim
