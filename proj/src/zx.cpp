#include "qsurg/zx.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <queue>
#include <set>
#include <sstream>
#include <stdexcept>

namespace qsurg::zx {

// --- generators ---------------------------------------------------------------

namespace {

size_t ipow(int d, int k) {
  size_t p = 1;
  for (int i = 0; i < k; ++i) p *= d;
  return p;
}

int digit_sum(size_t index, int d, int legs) {
  long long s = 0;
  for (int k = 0; k < legs; ++k) {
    s += index % d;
    index /= d;
  }
  return static_cast<int>(s % d);
}

}  // namespace

Mat green_matrix(int d, int m, int n, int phase) {
  check_dim(d);
  if (m < 0 || n < 0) throw std::invalid_argument("green: negative arity");
  Mat out(static_cast<int>(ipow(d, n)), static_cast<int>(ipow(d, m)));
  for (int i = 0; i < d; ++i) {
    size_t row = 0, col = 0;
    for (int k = 0; k < n; ++k) row = row * d + i;
    for (int k = 0; k < m; ++k) col = col * d + i;
    out.at(static_cast<int>(row), static_cast<int>(col)) += omega(
        d, static_cast<long long>(phase) * i);
  }
  return out;
}

Mat red_matrix(int d, int m, int n, int phase) {
  check_dim(d);
  if (m < 0 || n < 0) throw std::invalid_argument("red: negative arity");
  const size_t rows = ipow(d, n), cols = ipow(d, m);
  const double scale = std::pow(double(d), 1.0 - 0.5 * (m + n));
  Mat out(static_cast<int>(rows), static_cast<int>(cols));
  for (size_t r = 0; r < rows; ++r)
    for (size_t c = 0; c < cols; ++c)
      if (mod_d(digit_sum(c, d, m) + phase - digit_sum(r, d, n), d) == 0)
        out.at(static_cast<int>(r), static_cast<int>(c)) = scale;
  return out;
}

Mat fourier_matrix(int d, bool dagger) {
  check_dim(d);
  Mat out(d, d);
  const double s = 1.0 / std::sqrt(double(d));
  for (int k = 0; k < d; ++k)
    for (int j = 0; j < d; ++j)
      out.at(k, j) =
          omega(d, static_cast<long long>(j) * k * (dagger ? 1 : -1)) * s;
  return out;
}

Mat antipode_matrix(int d) {
  check_dim(d);
  Mat out(d, d);
  for (int i = 0; i < d; ++i) out.at(mod_d(-i, d), i) = 1.0;
  return out;
}

Mat cup_matrix(int d) {
  check_dim(d);
  Mat out(d * d, 1);
  for (int h = 0; h < d; ++h) out.at(h * d + mod_d(-h, d), 0) = 1.0;
  return out;
}

Mat cap_matrix(int d) {
  check_dim(d);
  Mat out(1, d * d);
  for (int h = 0; h < d; ++h) out.at(0, h * d + mod_d(-h, d)) = 1.0;
  return out;
}

Mat node_matrix(const Node& node, int d) {
  switch (node.kind) {
    case NodeKind::Green:
      return green_matrix(d, node.ins, node.outs, node.phase);
    case NodeKind::Red:
      return red_matrix(d, node.ins, node.outs, node.phase);
    case NodeKind::Fourier:
      if (node.ins != 1 || node.outs != 1)
        throw std::invalid_argument("fourier node must be 1 -> 1");
      return fourier_matrix(d, node.dagger);
    case NodeKind::Antipode:
      if (node.ins != 1 || node.outs != 1)
        throw std::invalid_argument("antipode node must be 1 -> 1");
      return antipode_matrix(d);
    case NodeKind::Cup:
      if (node.ins != 0 || node.outs != 2)
        throw std::invalid_argument("cup node must be 0 -> 2");
      return cup_matrix(d);
    case NodeKind::Cap:
      if (node.ins != 2 || node.outs != 0)
        throw std::invalid_argument("cap node must be 2 -> 0");
      return cap_matrix(d);
  }
  throw std::logic_error("node_matrix: unknown kind");
}

// --- diagrams ------------------------------------------------------------------

int Diagram::add_node(NodeKind kind, int ins, int outs, int phase,
                      bool dagger) {
  Node n;
  n.kind = kind;
  n.ins = ins;
  n.outs = outs;
  n.phase = phase;
  n.dagger = dagger;
  nodes.push_back(n);
  return static_cast<int>(nodes.size()) - 1;
}

void Diagram::connect(Endpoint from, Endpoint to) {
  wires.push_back({from, to});
}

void Diagram::validate() const {
  check_dim(d);
  if (num_inputs < 0 || num_outputs < 0)
    throw std::invalid_argument("diagram: negative boundary");
  for (const Node& n : nodes) {
    bool ok = true;
    switch (n.kind) {
      case NodeKind::Green:
      case NodeKind::Red:
        ok = n.ins >= 0 && n.outs >= 0;
        break;
      case NodeKind::Fourier:
      case NodeKind::Antipode:
        ok = n.ins == 1 && n.outs == 1;
        break;
      case NodeKind::Cup:
        ok = n.ins == 0 && n.outs == 2;
        break;
      case NodeKind::Cap:
        ok = n.ins == 2 && n.outs == 0;
        break;
    }
    if (!ok) throw std::invalid_argument("diagram: node arity is wrong");
  }
  std::set<std::pair<int, int>> producers, consumers;
  for (const Wire& w : wires) {
    if (w.from.node == kDiagramInput) {
      if (w.from.port < 0 || w.from.port >= num_inputs)
        throw std::invalid_argument("diagram: bad input port");
    } else if (w.from.node >= 0 &&
               w.from.node < static_cast<int>(nodes.size())) {
      if (w.from.port < 0 || w.from.port >= nodes[w.from.node].outs)
        throw std::invalid_argument("diagram: bad out port");
    } else {
      throw std::invalid_argument("diagram: bad producing endpoint");
    }
    if (w.to.node == kDiagramOutput) {
      if (w.to.port < 0 || w.to.port >= num_outputs)
        throw std::invalid_argument("diagram: bad output port");
    } else if (w.to.node >= 0 && w.to.node < static_cast<int>(nodes.size())) {
      if (w.to.port < 0 || w.to.port >= nodes[w.to.node].ins)
        throw std::invalid_argument("diagram: bad in port");
    } else {
      throw std::invalid_argument("diagram: bad consuming endpoint");
    }
    if (!producers.insert({w.from.node, w.from.port}).second)
      throw std::invalid_argument("diagram: producer wired twice");
    if (!consumers.insert({w.to.node, w.to.port}).second)
      throw std::invalid_argument("diagram: consumer wired twice");
  }
  size_t want_producers = num_inputs, want_consumers = num_outputs;
  for (const Node& n : nodes) {
    want_producers += n.outs;
    want_consumers += n.ins;
  }
  if (producers.size() != want_producers || consumers.size() != want_consumers)
    throw std::invalid_argument("diagram: uncovered port");
}

namespace {

int find_wire_from(const Diagram& g, Endpoint e) {
  for (size_t i = 0; i < g.wires.size(); ++i)
    if (g.wires[i].from == e) return static_cast<int>(i);
  throw std::logic_error("no wire from the requested endpoint");
}

int find_wire_to(const Diagram& g, Endpoint e) {
  for (size_t i = 0; i < g.wires.size(); ++i)
    if (g.wires[i].to == e) return static_cast<int>(i);
  throw std::logic_error("no wire to the requested endpoint");
}

constexpr size_t kEvalCap = size_t{1} << 24;

}  // namespace

Mat evaluate(const Diagram& g) {
  g.validate();
  const int d = g.d;
  const int nn = static_cast<int>(g.nodes.size());

  std::vector<std::vector<int>> adj(nn);
  std::vector<int> indeg(nn, 0);
  for (const Wire& w : g.wires)
    if (w.from.node >= 0 && w.to.node >= 0) {
      adj[w.from.node].push_back(w.to.node);
      ++indeg[w.to.node];
    }
  std::priority_queue<int, std::vector<int>, std::greater<int>> ready;
  for (int v = 0; v < nn; ++v)
    if (indeg[v] == 0) ready.push(v);
  std::vector<int> order;
  while (!ready.empty()) {
    int v = ready.top();
    ready.pop();
    order.push_back(v);
    for (int u : adj[v])
      if (--indeg[u] == 0) ready.push(u);
  }
  if (static_cast<int>(order.size()) != nn)
    throw std::runtime_error("evaluate: diagram has a directed cycle");

  const size_t cols = ipow(d, g.num_inputs);
  if (cols > kEvalCap) throw std::length_error("evaluate: too many inputs");

  // open legs of the running tensor; slot k is radix position k
  std::vector<int> legs;  // wire indices
  for (int p = 0; p < g.num_inputs; ++p)
    legs.push_back(find_wire_from(g, {kDiagramInput, p}));
  std::vector<Cx> t(ipow(d, static_cast<int>(legs.size())) * cols);
  for (size_t c = 0; c < cols; ++c) {
    // column digits use input 0 as the most significant digit
    size_t row = 0, rest = c;
    for (int p = g.num_inputs - 1; p >= 0; --p) {
      row += (rest % d) * ipow(d, p);  // leg slot p holds input p
      rest /= d;
    }
    t[row * cols + c] = 1.0;
  }

  for (int v : order) {
    const Node& node = g.nodes[v];
    Mat nm = node_matrix(node, d);
    std::vector<int> in_slots(node.ins);
    for (int i = 0; i < node.ins; ++i) {
      int w = find_wire_to(g, {v, i});
      auto it = std::find(legs.begin(), legs.end(), w);
      if (it == legs.end())
        throw std::logic_error("evaluate: input wire not open");
      in_slots[i] = static_cast<int>(it - legs.begin());
    }
    std::vector<int> rest_slots;
    for (size_t k = 0; k < legs.size(); ++k)
      if (std::find(in_slots.begin(), in_slots.end(), static_cast<int>(k)) ==
          in_slots.end())
        rest_slots.push_back(static_cast<int>(k));

    std::vector<int> new_legs;
    for (int s : rest_slots) new_legs.push_back(legs[s]);
    for (int o = 0; o < node.outs; ++o)
      new_legs.push_back(find_wire_from(g, {v, o}));
    const size_t new_rows = ipow(d, static_cast<int>(new_legs.size()));
    if (new_rows * cols > kEvalCap)
      throw std::length_error("evaluate: intermediate tensor too large");
    std::vector<Cx> nt(new_rows * cols);

    const size_t rows = ipow(d, static_cast<int>(legs.size()));
    const size_t n_out = ipow(d, node.outs);
    std::vector<int> digit(legs.size());
    for (size_t r = 0; r < rows; ++r) {
      size_t rest = r;
      for (size_t k = 0; k < legs.size(); ++k) {
        digit[k] = static_cast<int>(rest % d);
        rest /= d;
      }
      int in_index = 0;
      for (int i = 0; i < node.ins; ++i)
        in_index = in_index * d + digit[in_slots[i]];  // port 0 major
      size_t base = 0;
      for (size_t k = 0; k < rest_slots.size(); ++k)
        base += static_cast<size_t>(digit[rest_slots[k]]) * ipow(d, static_cast<int>(k));
      for (size_t oi = 0; oi < n_out; ++oi) {
        Cx coeff = nm.at(static_cast<int>(oi), in_index);
        if (coeff == Cx(0.0)) continue;
        // out index has port 0 as the most significant digit
        size_t nr = base, rest2 = oi;
        for (int o = node.outs - 1; o >= 0; --o) {
          nr += (rest2 % d) * ipow(d, static_cast<int>(rest_slots.size()) + o);
          rest2 /= d;
        }
        for (size_t c = 0; c < cols; ++c) {
          const Cx& val = t[r * cols + c];
          if (val != Cx(0.0)) nt[nr * cols + c] += coeff * val;
        }
      }
    }
    t = std::move(nt);
    legs = std::move(new_legs);
  }

  std::vector<int> out_slot(g.num_outputs);
  for (int p = 0; p < g.num_outputs; ++p) {
    int w = find_wire_to(g, {kDiagramOutput, p});
    auto it = std::find(legs.begin(), legs.end(), w);
    if (it == legs.end()) throw std::logic_error("evaluate: dangling output");
    out_slot[p] = static_cast<int>(it - legs.begin());
  }
  Mat out(static_cast<int>(ipow(d, g.num_outputs)), static_cast<int>(cols));
  const size_t rows = ipow(d, static_cast<int>(legs.size()));
  std::vector<int> digit(legs.size());
  for (size_t r = 0; r < rows; ++r) {
    size_t rest = r;
    for (size_t k = 0; k < legs.size(); ++k) {
      digit[k] = static_cast<int>(rest % d);
      rest /= d;
    }
    size_t ro = 0;
    for (int p = 0; p < g.num_outputs; ++p) ro = ro * d + digit[out_slot[p]];
    for (size_t c = 0; c < cols; ++c)
      out.at(static_cast<int>(ro), static_cast<int>(c)) +=
          g.scalar * t[r * cols + c];
  }
  return out;
}

// --- isomorphism -----------------------------------------------------------------

namespace {

struct NodeSig {
  int kind, ins, outs, phase, dagger;
  bool operator<(const NodeSig& o) const {
    return std::tie(kind, ins, outs, phase, dagger) <
           std::tie(o.kind, o.ins, o.outs, o.phase, o.dagger);
  }
  bool operator==(const NodeSig& o) const {
    return std::tie(kind, ins, outs, phase, dagger) ==
           std::tie(o.kind, o.ins, o.outs, o.phase, o.dagger);
  }
};

NodeSig signature(const Node& n, int d) {
  bool spider = n.kind == NodeKind::Green || n.kind == NodeKind::Red;
  return {static_cast<int>(n.kind), n.ins, n.outs,
          spider ? mod_d(n.phase, d) : 0,
          n.kind == NodeKind::Fourier ? (n.dagger ? 1 : 0) : 0};
}

// endpoint key under a node mapping; ports collapse for node endpoints
std::pair<int, int> end_key(Endpoint e, const std::vector<int>& map) {
  if (e.node == kDiagramInput) return {-1, e.port};
  if (e.node == kDiagramOutput) return {-2, e.port};
  return {map[e.node], 0};
}

bool wires_agree(const Diagram& a, const Diagram& b,
                 const std::vector<int>& map) {
  using Key = std::pair<std::pair<int, int>, std::pair<int, int>>;
  std::vector<Key> ka, kb;
  std::vector<int> id_b(b.nodes.size());
  for (size_t i = 0; i < id_b.size(); ++i) id_b[i] = static_cast<int>(i);
  for (const Wire& w : a.wires) ka.push_back({end_key(w.from, map), end_key(w.to, map)});
  for (const Wire& w : b.wires) kb.push_back({end_key(w.from, id_b), end_key(w.to, id_b)});
  std::sort(ka.begin(), ka.end());
  std::sort(kb.begin(), kb.end());
  return ka == kb;
}

bool match_nodes(const Diagram& a, const Diagram& b, size_t next,
                 std::vector<int>& map, std::vector<char>& used) {
  if (next == a.nodes.size()) return wires_agree(a, b, map);
  NodeSig want = signature(a.nodes[next], a.d);
  for (size_t j = 0; j < b.nodes.size(); ++j) {
    if (used[j] || !(signature(b.nodes[j], b.d) == want)) continue;
    used[j] = 1;
    map[next] = static_cast<int>(j);
    if (match_nodes(a, b, next + 1, map, used)) return true;
    used[j] = 0;
  }
  return false;
}

}  // namespace

bool isomorphic(const Diagram& a, const Diagram& b) {
  if (a.d != b.d || a.num_inputs != b.num_inputs ||
      a.num_outputs != b.num_outputs || a.nodes.size() != b.nodes.size() ||
      a.wires.size() != b.wires.size())
    return false;
  if (std::abs(a.scalar - b.scalar) > kTolLoose) return false;
  std::vector<int> map(a.nodes.size(), -1);
  std::vector<char> used(b.nodes.size(), 0);
  return match_nodes(a, b, 0, map, used);
}

// --- rewriting -----------------------------------------------------------------

std::string rule_name(RewriteRule r) {
  switch (r) {
    case RewriteRule::SpiderFuse: return "spider fuse";
    case RewriteRule::IdentityRemove: return "identity remove";
    case RewriteRule::ColorChange: return "color change";
    case RewriteRule::Bialgebra: return "bialgebra";
    case RewriteRule::AntipodeCancel: return "antipode cancel";
    case RewriteRule::CupCapSnake: return "cup cap snake";
    case RewriteRule::CupExpand: return "cup expand";
    case RewriteRule::AntipodeSlide: return "antipode slide";
    case RewriteRule::DualBend: return "dual bend";
  }
  return "?";
}

namespace {

bool is_spider(const Node& n) {
  return n.kind == NodeKind::Green || n.kind == NodeKind::Red;
}

// reverse-bialgebra pattern anchored at red split r1 and green merge g1;
// fills r2/g2 and returns true when the crossing square is present
bool bialgebra_square(const Diagram& g, int r1, int g1, int* r2, int* g2) {
  auto split_ok = [&](int v) {
    return g.nodes[v].kind == NodeKind::Red && g.nodes[v].ins == 1 &&
           g.nodes[v].outs == 2 && mod_d(g.nodes[v].phase, g.d) == 0;
  };
  auto merge_ok = [&](int v) {
    return g.nodes[v].kind == NodeKind::Green && g.nodes[v].ins == 2 &&
           g.nodes[v].outs == 1 && mod_d(g.nodes[v].phase, g.d) == 0;
  };
  if (!split_ok(r1) || !merge_ok(g1)) return false;
  int ga = g.wires[find_wire_from(g, {r1, 0})].to.node;
  int gb = g.wires[find_wire_from(g, {r1, 1})].to.node;
  if (ga < 0 || gb < 0 || ga == gb) return false;
  if (ga != g1 && gb != g1) return false;
  int other_g = ga == g1 ? gb : ga;
  if (!merge_ok(g1) || !merge_ok(other_g)) return false;
  // the red feeding g1's other input
  int cand = -1;
  for (int p = 0; p < 2; ++p) {
    int w = find_wire_to(g, {g1, p});
    int src = g.wires[w].from.node;
    if (src >= 0 && src != r1) cand = src;
  }
  if (cand < 0 || cand == r1 || !split_ok(cand)) return false;
  int ca = g.wires[find_wire_from(g, {cand, 0})].to.node;
  int cb = g.wires[find_wire_from(g, {cand, 1})].to.node;
  if (!((ca == g1 && cb == other_g) || (cb == g1 && ca == other_g)))
    return false;
  *r2 = cand;
  *g2 = other_g;
  return true;
}

bool has_directed_cycle(const Diagram& g) {
  const int nn = static_cast<int>(g.nodes.size());
  std::vector<std::vector<int>> adj(nn);
  std::vector<int> indeg(nn, 0);
  for (const Wire& w : g.wires)
    if (w.from.node >= 0 && w.to.node >= 0) {
      adj[w.from.node].push_back(w.to.node);
      ++indeg[w.to.node];
    }
  std::vector<int> ready;
  for (int v = 0; v < nn; ++v)
    if (indeg[v] == 0) ready.push_back(v);
  int seen = 0;
  while (!ready.empty()) {
    int v = ready.back();
    ready.pop_back();
    ++seen;
    for (int u : adj[v])
      if (--indeg[u] == 0) ready.push_back(u);
  }
  return seen != nn;
}

}  // namespace

std::vector<Match> find_matches(const Diagram& g, RewriteRule rule) {
  std::vector<Match> out;
  auto push = [&](int a, int b, int pa, int pb, bool rev) {
    Match m;
    m.rule = rule;
    m.node_a = a;
    m.node_b = b;
    m.port_a = pa;
    m.port_b = pb;
    m.reverse = rev;
    out.push_back(m);
  };
  const int nn = static_cast<int>(g.nodes.size());
  switch (rule) {
    case RewriteRule::SpiderFuse: {
      std::set<std::pair<int, int>> seen;
      for (const Wire& w : g.wires) {
        int u = w.from.node, v = w.to.node;
        if (u < 0 || v < 0 || u == v) continue;
        if (!is_spider(g.nodes[u]) || g.nodes[u].kind != g.nodes[v].kind)
          continue;
        if (seen.insert({u, v}).second) push(u, v, -1, -1, false);
      }
      break;
    }
    case RewriteRule::IdentityRemove: {
      for (int v = 0; v < nn; ++v)
        if (is_spider(g.nodes[v]) && g.nodes[v].ins == 1 &&
            g.nodes[v].outs == 1 && mod_d(g.nodes[v].phase, g.d) == 0)
          push(v, -1, -1, -1, false);
      for (const Wire& w : g.wires) {
        int u = w.from.node, v = w.to.node;
        if (u >= 0 && v >= 0 && g.nodes[u].kind == NodeKind::Fourier &&
            g.nodes[v].kind == NodeKind::Fourier &&
            g.nodes[u].dagger != g.nodes[v].dagger)
          push(u, v, -1, -1, false);
      }
      for (const Wire& w : g.wires)
        push(w.from.node, w.to.node, w.from.port, w.to.port, true);
      break;
    }
    case RewriteRule::ColorChange: {
      for (int v = 0; v < nn; ++v) {
        if (g.nodes[v].kind == NodeKind::Red) push(v, -1, -1, -1, false);
        if (g.nodes[v].kind == NodeKind::Green) push(v, -1, -1, -1, true);
      }
      break;
    }
    case RewriteRule::Bialgebra: {
      for (const Wire& w : g.wires) {
        int u = w.from.node, v = w.to.node;
        if (u < 0 || v < 0) continue;
        const Node& nu = g.nodes[u];
        const Node& nv = g.nodes[v];
        if (nu.kind == NodeKind::Green && nu.ins == 2 && nu.outs == 1 &&
            mod_d(nu.phase, g.d) == 0 && nv.kind == NodeKind::Red &&
            nv.ins == 1 && nv.outs == 2 && mod_d(nv.phase, g.d) == 0)
          push(u, v, -1, -1, false);
      }
      for (int r1 = 0; r1 < nn; ++r1)
        for (int g1 = 0; g1 < nn; ++g1) {
          int r2, g2;
          if (bialgebra_square(g, r1, g1, &r2, &g2) && r1 < r2 && g1 < g2)
            push(r1, g1, -1, -1, true);
        }
      break;
    }
    case RewriteRule::AntipodeCancel: {
      for (const Wire& w : g.wires) {
        int u = w.from.node, v = w.to.node;
        if (u < 0 || v < 0) continue;
        if (g.nodes[u].kind == NodeKind::Antipode &&
            g.nodes[v].kind == NodeKind::Antipode)
          push(u, v, -1, -1, false);
        if (g.nodes[u].kind == NodeKind::Fourier &&
            g.nodes[v].kind == NodeKind::Fourier &&
            g.nodes[u].dagger == g.nodes[v].dagger)
          push(u, v, -1, -1, false);
      }
      for (int v = 0; v < nn; ++v)
        if (g.nodes[v].kind == NodeKind::Antipode) push(v, -1, -1, -1, true);
      break;
    }
    case RewriteRule::CupCapSnake: {
      for (const Wire& w : g.wires) {
        int u = w.from.node, v = w.to.node;
        if (u >= 0 && v >= 0 && g.nodes[u].kind == NodeKind::Cup &&
            g.nodes[v].kind == NodeKind::Cap)
          push(u, v, w.from.port, w.to.port, false);
      }
      break;
    }
    case RewriteRule::CupExpand: {
      for (int v = 0; v < nn; ++v)
        if (g.nodes[v].kind == NodeKind::Cup ||
            g.nodes[v].kind == NodeKind::Cap)
          push(v, -1, -1, -1, false);
      for (const Wire& w : g.wires) {
        int u = w.from.node, v = w.to.node;
        if (u < 0 || v < 0) continue;
        if (g.nodes[u].kind == NodeKind::Green && g.nodes[u].ins == 0 &&
            g.nodes[u].outs == 2 && mod_d(g.nodes[u].phase, g.d) == 0 &&
            g.nodes[v].kind == NodeKind::Antipode)
          push(u, v, w.from.port, -1, true);
        if (g.nodes[v].kind == NodeKind::Green && g.nodes[v].ins == 2 &&
            g.nodes[v].outs == 0 && mod_d(g.nodes[v].phase, g.d) == 0 &&
            g.nodes[u].kind == NodeKind::Antipode)
          push(v, u, w.to.port, -1, true);
      }
      break;
    }
    case RewriteRule::AntipodeSlide: {
      for (const Wire& w : g.wires) {
        int u = w.from.node, v = w.to.node;
        if (u < 0 || v < 0) continue;
        if (g.nodes[u].kind == NodeKind::Cup &&
            g.nodes[v].kind == NodeKind::Antipode)
          push(u, v, w.from.port, -1, false);
        if (g.nodes[v].kind == NodeKind::Cap &&
            g.nodes[u].kind == NodeKind::Antipode)
          push(v, u, w.to.port, -1, false);
      }
      break;
    }
    case RewriteRule::DualBend: {
      for (const Wire& w : g.wires) {
        int c = w.from.node, v = w.to.node;
        if (c < 0 || v < 0) continue;
        if (g.nodes[c].kind != NodeKind::Cup || !is_spider(g.nodes[v]))
          continue;
        // the freed leg must not feed the same spider (that would bend the
        // diagram into a cycle)
        int other = g.wires[find_wire_from(g, {c, 1 - w.from.port})].to.node;
        if (other == v) continue;
        push(v, c, w.to.port, w.from.port, false);
      }
      for (int v = 0; v < nn; ++v)
        if (is_spider(g.nodes[v]))
          for (int p = 0; p < g.nodes[v].outs; ++p) push(v, -1, p, -1, true);
      break;
    }
  }
  // only offer rewrites whose result stays acyclic, hence evaluable: fusing
  // across a parallel directed path, snaking, or bending can close a loop
  std::vector<Match> kept;
  for (const Match& m : out)
    if (!has_directed_cycle(apply_match(g, m))) kept.push_back(m);
  return kept;
}

namespace {

// removes the marked nodes, renumbering wires; all wires touching a dead
// node must already be gone
Diagram compact(const Diagram& g, const std::vector<char>& dead) {
  Diagram r;
  r.d = g.d;
  r.num_inputs = g.num_inputs;
  r.num_outputs = g.num_outputs;
  r.scalar = g.scalar;
  std::vector<int> remap(g.nodes.size(), -1);
  for (size_t v = 0; v < g.nodes.size(); ++v)
    if (!dead[v]) {
      remap[v] = static_cast<int>(r.nodes.size());
      r.nodes.push_back(g.nodes[v]);
    }
  for (const Wire& w : g.wires) {
    Wire nw = w;
    if (nw.from.node >= 0) {
      if (remap[nw.from.node] < 0)
        throw std::logic_error("compact: wire into removed node");
      nw.from.node = remap[nw.from.node];
    }
    if (nw.to.node >= 0) {
      if (remap[nw.to.node] < 0)
        throw std::logic_error("compact: wire into removed node");
      nw.to.node = remap[nw.to.node];
    }
    r.wires.push_back(nw);
  }
  return r;
}

void erase_wires(Diagram& g, std::vector<int> idx) {
  std::sort(idx.begin(), idx.end(), std::greater<int>());
  for (int i : idx) g.wires.erase(g.wires.begin() + i);
}

void drop_in_port(Diagram& g, int v, int p) {
  for (Wire& w : g.wires)
    if (w.to.node == v && w.to.port > p) --w.to.port;
  --g.nodes[v].ins;
}

void drop_out_port(Diagram& g, int v, int p) {
  for (Wire& w : g.wires)
    if (w.from.node == v && w.from.port > p) --w.from.port;
  --g.nodes[v].outs;
}

}  // namespace

Diagram apply_match(const Diagram& input, const Match& m) {
  Diagram g = input;
  std::vector<char> dead(g.nodes.size(), 0);
  const int d = g.d;

  switch (m.rule) {
    case RewriteRule::SpiderFuse: {
      const Node nu = g.nodes[m.node_a];
      const Node nv = g.nodes[m.node_b];
      int internal = 0;
      for (const Wire& w : g.wires)
        if ((w.from.node == m.node_a && w.to.node == m.node_b) ||
            (w.from.node == m.node_b && w.to.node == m.node_a))
          ++internal;
      int w = g.add_node(nu.kind, nu.ins + nv.ins - internal,
                         nu.outs + nv.outs - internal,
                         mod_d(nu.phase + nv.phase, d));
      int in_slot = 0, out_slot = 0;
      std::vector<int> gone;
      for (size_t i = 0; i < g.wires.size(); ++i) {
        Wire& wr = g.wires[i];
        bool from_uv = wr.from.node == m.node_a || wr.from.node == m.node_b;
        bool to_uv = wr.to.node == m.node_a || wr.to.node == m.node_b;
        if (from_uv && to_uv) {
          gone.push_back(static_cast<int>(i));
          continue;
        }
        if (to_uv) wr.to = {w, in_slot++};
        if (from_uv) wr.from = {w, out_slot++};
      }
      erase_wires(g, gone);
      dead[m.node_a] = dead[m.node_b] = 1;
      break;
    }
    case RewriteRule::IdentityRemove: {
      if (m.reverse) {
        int wi = -1;
        for (size_t i = 0; i < g.wires.size(); ++i)
          if (g.wires[i].from == Endpoint{m.node_a, m.port_a} &&
              g.wires[i].to == Endpoint{m.node_b, m.port_b})
            wi = static_cast<int>(i);
        if (wi < 0) throw std::invalid_argument("identity insert: no wire");
        int v = g.add_node(NodeKind::Green, 1, 1, 0);
        Endpoint to = g.wires[wi].to;
        g.wires[wi].to = {v, 0};
        g.connect({v, 0}, to);
      } else if (m.node_b < 0) {
        int wp = find_wire_to(g, {m.node_a, 0});
        int wx = find_wire_from(g, {m.node_a, 0});
        g.connect(g.wires[wp].from, g.wires[wx].to);
        erase_wires(g, {wp, wx});
        dead[m.node_a] = 1;
      } else {
        int wp = find_wire_to(g, {m.node_a, 0});
        int mid = find_wire_from(g, {m.node_a, 0});
        int wx = find_wire_from(g, {m.node_b, 0});
        g.connect(g.wires[wp].from, g.wires[wx].to);
        erase_wires(g, {wp, mid, wx});
        dead[m.node_a] = dead[m.node_b] = 1;
      }
      break;
    }
    case RewriteRule::ColorChange: {
      bool to_green = !m.reverse;
      if (to_green && g.nodes[m.node_a].kind != NodeKind::Red)
        throw std::invalid_argument("color change: expected a red spider");
      if (!to_green && g.nodes[m.node_a].kind != NodeKind::Green)
        throw std::invalid_argument("color change: expected a green spider");
      g.nodes[m.node_a].kind = to_green ? NodeKind::Green : NodeKind::Red;
      const int ins = g.nodes[m.node_a].ins;
      const int outs = g.nodes[m.node_a].outs;
      for (int p = 0; p < ins; ++p) {
        int wi = find_wire_to(g, {m.node_a, p});
        int f = g.add_node(NodeKind::Fourier, 1, 1, 0, to_green);
        Endpoint from = g.wires[wi].from;
        g.wires[wi].from = {f, 0};
        g.connect(from, {f, 0});
      }
      for (int p = 0; p < outs; ++p) {
        int wi = find_wire_from(g, {m.node_a, p});
        int f = g.add_node(NodeKind::Fourier, 1, 1, 0, !to_green);
        Endpoint to = g.wires[wi].to;
        g.wires[wi].to = {f, 0};
        g.connect({f, 0}, to);
      }
      break;
    }
    case RewriteRule::Bialgebra: {
      if (!m.reverse) {
        int wg0 = find_wire_to(g, {m.node_a, 0});
        int wg1 = find_wire_to(g, {m.node_a, 1});
        int wr0 = find_wire_from(g, {m.node_b, 0});
        int wr1 = find_wire_from(g, {m.node_b, 1});
        int mid = find_wire_from(g, {m.node_a, 0});
        int r1 = g.add_node(NodeKind::Red, 1, 2, 0);
        int r2 = g.add_node(NodeKind::Red, 1, 2, 0);
        int g1 = g.add_node(NodeKind::Green, 2, 1, 0);
        int g2 = g.add_node(NodeKind::Green, 2, 1, 0);
        g.wires[wg0].to = {r1, 0};
        g.wires[wg1].to = {r2, 0};
        g.wires[wr0].from = {g1, 0};
        g.wires[wr1].from = {g2, 0};
        g.connect({r1, 0}, {g1, 0});
        g.connect({r1, 1}, {g2, 0});
        g.connect({r2, 0}, {g1, 1});
        g.connect({r2, 1}, {g2, 1});
        erase_wires(g, {mid});
        dead[m.node_a] = dead[m.node_b] = 1;
        g.scalar *= std::sqrt(double(d));
      } else {
        int r2, g2;
        if (!bialgebra_square(g, m.node_a, m.node_b, &r2, &g2))
          throw std::invalid_argument("bialgebra: pattern not present");
        int r1 = m.node_a, g1 = m.node_b;
        int wp0 = find_wire_to(g, {r1, 0});
        int wp1 = find_wire_to(g, {r2, 0});
        int wx0 = find_wire_from(g, {g1, 0});
        int wx1 = find_wire_from(g, {g2, 0});
        std::vector<int> gone;
        for (size_t i = 0; i < g.wires.size(); ++i) {
          int u = g.wires[i].from.node, v = g.wires[i].to.node;
          if ((u == r1 || u == r2) && (v == g1 || v == g2))
            gone.push_back(static_cast<int>(i));
        }
        int gm = g.add_node(NodeKind::Green, 2, 1, 0);
        int rs = g.add_node(NodeKind::Red, 1, 2, 0);
        g.wires[wp0].to = {gm, 0};
        g.wires[wp1].to = {gm, 1};
        g.wires[wx0].from = {rs, 0};
        g.wires[wx1].from = {rs, 1};
        g.connect({gm, 0}, {rs, 0});
        erase_wires(g, gone);
        dead[r1] = dead[r2] = dead[g1] = dead[g2] = 1;
        g.scalar /= std::sqrt(double(d));
      }
      break;
    }
    case RewriteRule::AntipodeCancel: {
      if (m.reverse) {
        int wp = find_wire_to(g, {m.node_a, 0});
        int wx = find_wire_from(g, {m.node_a, 0});
        int f1 = g.add_node(NodeKind::Fourier, 1, 1, 0, false);
        int f2 = g.add_node(NodeKind::Fourier, 1, 1, 0, false);
        g.connect(g.wires[wp].from, {f1, 0});
        g.connect({f1, 0}, {f2, 0});
        g.connect({f2, 0}, g.wires[wx].to);
        erase_wires(g, {wp, wx});
        dead[m.node_a] = 1;
      } else {
        int wp = find_wire_to(g, {m.node_a, 0});
        int mid = find_wire_from(g, {m.node_a, 0});
        int wx = find_wire_from(g, {m.node_b, 0});
        if (g.nodes[m.node_a].kind == NodeKind::Antipode) {
          g.connect(g.wires[wp].from, g.wires[wx].to);
        } else {
          int s = g.add_node(NodeKind::Antipode, 1, 1);
          g.connect(g.wires[wp].from, {s, 0});
          g.connect({s, 0}, g.wires[wx].to);
        }
        erase_wires(g, {wp, mid, wx});
        dead[m.node_a] = dead[m.node_b] = 1;
      }
      break;
    }
    case RewriteRule::CupCapSnake: {
      int w_in = -1;
      for (size_t i = 0; i < g.wires.size(); ++i)
        if (g.wires[i].from == Endpoint{m.node_a, m.port_a} &&
            g.wires[i].to == Endpoint{m.node_b, m.port_b})
          w_in = static_cast<int>(i);
      if (w_in < 0) throw std::invalid_argument("snake: wire missing");
      int wc = find_wire_from(g, {m.node_a, 1 - m.port_a});
      int wk = find_wire_to(g, {m.node_b, 1 - m.port_b});
      if (wc == wk) {
        // both cup legs run into the same cap: a closed circle of weight d
        erase_wires(g, {w_in, wc});
        g.scalar *= double(d);
      } else {
        g.connect(g.wires[wk].from, g.wires[wc].to);
        erase_wires(g, {w_in, wc, wk});
      }
      dead[m.node_a] = dead[m.node_b] = 1;
      break;
    }
    case RewriteRule::CupExpand: {
      if (!m.reverse) {
        const Node& n = g.nodes[m.node_a];
        if (n.kind == NodeKind::Cup) {
          int w0 = find_wire_from(g, {m.node_a, 0});
          int w1 = find_wire_from(g, {m.node_a, 1});
          int gg = g.add_node(NodeKind::Green, 0, 2, 0);
          int s = g.add_node(NodeKind::Antipode, 1, 1);
          g.connect({gg, 0}, g.wires[w0].to);
          g.connect({gg, 1}, {s, 0});
          g.connect({s, 0}, g.wires[w1].to);
          erase_wires(g, {w0, w1});
        } else if (n.kind == NodeKind::Cap) {
          int w0 = find_wire_to(g, {m.node_a, 0});
          int w1 = find_wire_to(g, {m.node_a, 1});
          int gg = g.add_node(NodeKind::Green, 2, 0, 0);
          int s = g.add_node(NodeKind::Antipode, 1, 1);
          g.connect(g.wires[w0].from, {gg, 0});
          g.connect(g.wires[w1].from, {s, 0});
          g.connect({s, 0}, {gg, 1});
          erase_wires(g, {w0, w1});
        } else {
          throw std::invalid_argument("cup expand: expected cup or cap");
        }
        dead[m.node_a] = 1;
      } else {
        const Node& n = g.nodes[m.node_a];
        int s = m.node_b;
        if (n.outs == 2) {  // green birth with an antipode on leg port_a
          int w_other = find_wire_from(g, {m.node_a, 1 - m.port_a});
          int w_mid = find_wire_from(g, {m.node_a, m.port_a});
          int w_s = find_wire_from(g, {s, 0});
          int c = g.add_node(NodeKind::Cup, 0, 2);
          g.connect({c, 0}, g.wires[w_other].to);
          g.connect({c, 1}, g.wires[w_s].to);
          erase_wires(g, {w_other, w_mid, w_s});
        } else {  // green death with an antipode on leg port_a
          int w_other = find_wire_to(g, {m.node_a, 1 - m.port_a});
          int w_mid = find_wire_to(g, {m.node_a, m.port_a});
          int w_s = find_wire_to(g, {s, 0});
          int k = g.add_node(NodeKind::Cap, 2, 0);
          g.connect(g.wires[w_other].from, {k, 0});
          g.connect(g.wires[w_s].from, {k, 1});
          erase_wires(g, {w_other, w_mid, w_s});
        }
        dead[m.node_a] = dead[s] = 1;
      }
      break;
    }
    case RewriteRule::AntipodeSlide: {
      int c = m.node_a, s = m.node_b, a = m.port_a;
      if (g.nodes[c].kind == NodeKind::Cup) {
        int w_cs = -1;
        for (size_t i = 0; i < g.wires.size(); ++i)
          if (g.wires[i].from == Endpoint{c, a} &&
              g.wires[i].to == Endpoint{s, 0})
            w_cs = static_cast<int>(i);
        if (w_cs < 0) throw std::invalid_argument("slide: wire missing");
        int w_sx = find_wire_from(g, {s, 0});
        int w_cy = find_wire_from(g, {c, 1 - a});
        Endpoint x = g.wires[w_sx].to, y = g.wires[w_cy].to;
        g.connect({c, a}, x);
        g.connect({c, 1 - a}, {s, 0});
        g.connect({s, 0}, y);
        erase_wires(g, {w_cs, w_sx, w_cy});
      } else {
        int k = c;
        int w_sk = -1;
        for (size_t i = 0; i < g.wires.size(); ++i)
          if (g.wires[i].from == Endpoint{s, 0} &&
              g.wires[i].to == Endpoint{k, a})
            w_sk = static_cast<int>(i);
        if (w_sk < 0) throw std::invalid_argument("slide: wire missing");
        int w_ps = find_wire_to(g, {s, 0});
        int w_qk = find_wire_to(g, {k, 1 - a});
        Endpoint p = g.wires[w_ps].from, q = g.wires[w_qk].from;
        g.connect(p, {k, a});
        g.connect(q, {s, 0});
        g.connect({s, 0}, {k, 1 - a});
        erase_wires(g, {w_sk, w_ps, w_qk});
      }
      break;
    }
    case RewriteRule::DualBend: {
      if (!m.reverse) {
        int v = m.node_a, c = m.node_b, p = m.port_a, b = m.port_b;
        int w_cv = -1;
        for (size_t i = 0; i < g.wires.size(); ++i)
          if (g.wires[i].from == Endpoint{c, b} &&
              g.wires[i].to == Endpoint{v, p})
            w_cv = static_cast<int>(i);
        if (w_cv < 0) throw std::invalid_argument("dual bend: wire missing");
        int w_free = find_wire_from(g, {c, 1 - b});
        Endpoint y = g.wires[w_free].to;
        erase_wires(g, {w_cv, w_free});
        drop_in_port(g, v, p);
        int q = g.nodes[v].outs++;
        if (g.nodes[v].kind == NodeKind::Red) {
          g.connect({v, q}, y);
        } else {
          int s = g.add_node(NodeKind::Antipode, 1, 1);
          g.connect({v, q}, {s, 0});
          g.connect({s, 0}, y);
        }
        dead[c] = 1;
      } else {
        int v = m.node_a, p = m.port_a;
        int wx = find_wire_from(g, {v, p});
        Endpoint x = g.wires[wx].to;
        erase_wires(g, {wx});
        drop_out_port(g, v, p);
        int q = g.nodes[v].ins++;
        int c = g.add_node(NodeKind::Cup, 0, 2);
        g.connect({c, 0}, {v, q});
        if (g.nodes[v].kind == NodeKind::Red) {
          g.connect({c, 1}, x);
        } else {
          int s = g.add_node(NodeKind::Antipode, 1, 1);
          g.connect({c, 1}, {s, 0});
          g.connect({s, 0}, x);
        }
      }
      break;
    }
  }

  dead.resize(g.nodes.size(), 0);  // nodes added by the rewrite stay live
  Diagram out = compact(g, dead);
  out.validate();
  return out;
}

// --- random diagrams --------------------------------------------------------------

Diagram random_diagram(int d, int max_nodes, std::mt19937_64& rng) {
  check_dim(d);
  if (max_nodes < 1) throw std::invalid_argument("random_diagram: max_nodes");
  Diagram g;
  g.d = d;
  g.num_inputs = static_cast<int>(rng() % 3);
  std::vector<Endpoint> open;
  for (int p = 0; p < g.num_inputs; ++p) open.push_back({kDiagramInput, p});

  auto take = [&](int count) {
    std::vector<Endpoint> picked;
    for (int i = 0; i < count; ++i) {
      size_t at = rng() % open.size();
      picked.push_back(open[at]);
      open.erase(open.begin() + at);
    }
    return picked;
  };

  const int target = 1 + static_cast<int>(rng() % max_nodes);
  for (int t = 0; t < target; ++t) {
    int roll = static_cast<int>(rng() % 6);
    if (open.size() >= 6) roll = rng() % 2 ? 0 : 5;  // drain a wide frontier
    switch (roll) {
      case 0:
      case 1: {
        NodeKind kind = roll == 0 ? NodeKind::Green : NodeKind::Red;
        int ins = static_cast<int>(rng() % 3);
        ins = std::min<int>(ins, static_cast<int>(open.size()));
        int outs = static_cast<int>(rng() % 3);
        if (open.size() >= 6) outs = std::min(outs, 1);
        if (ins + outs == 0) outs = 1;
        int v = g.add_node(kind, ins, outs, static_cast<int>(rng() % d));
        auto picked = take(ins);
        for (int i = 0; i < ins; ++i) g.connect(picked[i], {v, i});
        for (int o = 0; o < outs; ++o) open.push_back({v, o});
        break;
      }
      case 2:
      case 3: {
        if (open.empty()) {
          int v = g.add_node(NodeKind::Cup, 0, 2);
          open.push_back({v, 0});
          open.push_back({v, 1});
          break;
        }
        int v = roll == 2 ? g.add_node(NodeKind::Fourier, 1, 1, 0,
                                       (rng() & 1) != 0)
                          : g.add_node(NodeKind::Antipode, 1, 1);
        auto picked = take(1);
        g.connect(picked[0], {v, 0});
        open.push_back({v, 0});
        break;
      }
      case 4: {
        int v = g.add_node(NodeKind::Cup, 0, 2);
        open.push_back({v, 0});
        open.push_back({v, 1});
        break;
      }
      case 5: {
        if (open.size() < 2) {
          int v = g.add_node(NodeKind::Cup, 0, 2);
          open.push_back({v, 0});
          open.push_back({v, 1});
          break;
        }
        int v = g.add_node(NodeKind::Cap, 2, 0);
        auto picked = take(2);
        g.connect(picked[0], {v, 0});
        g.connect(picked[1], {v, 1});
        break;
      }
    }
  }
  while (open.size() > 4) {
    int v = g.add_node(NodeKind::Green, 2, 1, 0);
    auto picked = take(2);
    g.connect(picked[0], {v, 0});
    g.connect(picked[1], {v, 1});
    open.push_back({v, 0});
  }
  g.num_outputs = static_cast<int>(open.size());
  for (int p = 0; p < g.num_outputs; ++p)
    g.connect(open[p], {kDiagramOutput, p});
  g.validate();
  return g;
}

// --- controlled-add diagrams ------------------------------------------------------

Diagram cx_diagram(int d, int variant) {
  check_dim(d);
  Diagram g;
  g.d = d;
  g.num_inputs = 2;
  g.num_outputs = 2;
  switch (variant) {
    case 1: {
      int cp = g.add_node(NodeKind::Green, 1, 2, 0);
      int mg = g.add_node(NodeKind::Red, 2, 1, 0);
      g.connect({kDiagramInput, 0}, {cp, 0});
      g.connect({cp, 0}, {kDiagramOutput, 0});
      g.connect({cp, 1}, {mg, 0});
      g.connect({kDiagramInput, 1}, {mg, 1});
      g.connect({mg, 0}, {kDiagramOutput, 1});
      break;
    }
    case 2: {
      int rs = g.add_node(NodeKind::Red, 1, 2, 0);
      int s = g.add_node(NodeKind::Antipode, 1, 1);
      int gm = g.add_node(NodeKind::Green, 2, 1, 0);
      g.connect({kDiagramInput, 1}, {rs, 0});
      g.connect({rs, 0}, {s, 0});
      g.connect({s, 0}, {gm, 1});
      g.connect({kDiagramInput, 0}, {gm, 0});
      g.connect({gm, 0}, {kDiagramOutput, 0});
      g.connect({rs, 1}, {kDiagramOutput, 1});
      break;
    }
    case 3: {
      int c = g.add_node(NodeKind::Cup, 0, 2);
      int gm = g.add_node(NodeKind::Green, 2, 1, 0);
      int s = g.add_node(NodeKind::Antipode, 1, 1);
      int rm = g.add_node(NodeKind::Red, 2, 1, 0);
      g.connect({kDiagramInput, 0}, {gm, 0});
      g.connect({c, 0}, {gm, 1});
      g.connect({c, 1}, {s, 0});
      g.connect({s, 0}, {rm, 0});
      g.connect({kDiagramInput, 1}, {rm, 1});
      g.connect({gm, 0}, {kDiagramOutput, 0});
      g.connect({rm, 0}, {kDiagramOutput, 1});
      break;
    }
    case 4: {
      int c = g.add_node(NodeKind::Cup, 0, 2);
      int s = g.add_node(NodeKind::Antipode, 1, 1);
      int gm = g.add_node(NodeKind::Green, 2, 1, 0);
      int rm = g.add_node(NodeKind::Red, 2, 1, 0);
      g.connect({kDiagramInput, 0}, {gm, 0});
      g.connect({c, 0}, {s, 0});
      g.connect({s, 0}, {gm, 1});
      g.connect({c, 1}, {rm, 0});
      g.connect({kDiagramInput, 1}, {rm, 1});
      g.connect({gm, 0}, {kDiagramOutput, 0});
      g.connect({rm, 0}, {kDiagramOutput, 1});
      break;
    }
    default:
      throw std::invalid_argument("cx_diagram: variant must be 1..4");
  }
  g.validate();
  return g;
}

namespace {

Match select_match(const Diagram& g, RewriteRule rule,
                   const std::function<bool(const Diagram&, const Match&)>& f) {
  for (const Match& m : find_matches(g, rule))
    if (f(g, m)) return m;
  throw std::logic_error("expected rewrite match not found");
}

bool consumer_is_antipode(const Diagram& g, int node, int port) {
  Endpoint to = g.wires[find_wire_from(g, {node, port})].to;
  return to.node >= 0 && g.nodes[to.node].kind == NodeKind::Antipode;
}

}  // namespace

std::vector<std::pair<std::string, Diagram>> cx_rewrite_chain(int d,
                                                              int variant) {
  if (variant < 2 || variant > 4)
    throw std::invalid_argument("cx_rewrite_chain: variant must be 2..4");
  std::vector<std::pair<std::string, Diagram>> stages;
  Diagram g = cx_diagram(d, variant);
  stages.push_back({"start", g});
  auto step = [&](RewriteRule rule,
                  std::function<bool(const Diagram&, const Match&)> f) {
    g = apply_match(g, select_match(g, rule, f));
    stages.push_back({rule_name(rule), g});
  };

  if (variant == 2) {
    // bend the red split output that feeds the antipode into a cup
    step(RewriteRule::DualBend, [](const Diagram& h, const Match& m) {
      return m.reverse && h.nodes[m.node_a].kind == NodeKind::Red &&
             consumer_is_antipode(h, m.node_a, m.port_a);
    });
    step(RewriteRule::AntipodeSlide,
         [](const Diagram&, const Match&) { return true; });
  }
  if (variant == 4) {
    step(RewriteRule::AntipodeSlide,
         [](const Diagram&, const Match&) { return true; });
  }
  // now a cup leg feeds the green merge directly: absorb it
  step(RewriteRule::DualBend, [](const Diagram& h, const Match& m) {
    return !m.reverse && h.nodes[m.node_a].kind == NodeKind::Green;
  });
  step(RewriteRule::AntipodeCancel, [](const Diagram& h, const Match& m) {
    return !m.reverse && h.nodes[m.node_a].kind == NodeKind::Antipode;
  });
  return stages;
}

// --- surgery dictionary ----------------------------------------------------------

std::string dict_row_name(DictRow row) {
  switch (row) {
    case DictRow::SmoothUnit: return "smooth unit";
    case DictRow::RoughUnit: return "rough unit";
    case DictRow::SmoothSplit: return "smooth split";
    case DictRow::RoughSplit: return "rough split";
    case DictRow::SmoothMerge: return "smooth merge";
    case DictRow::RoughMerge: return "rough merge";
    case DictRow::SmoothCounit: return "smooth counit";
    case DictRow::RoughCounit: return "rough counit";
    case DictRow::Rotation: return "rotation";
  }
  return "?";
}

Mat dictionary_generator_matrix(DictRow row, int d) {
  switch (row) {
    case DictRow::SmoothUnit: return green_matrix(d, 0, 1, 0);
    case DictRow::RoughUnit: return red_matrix(d, 0, 1, 0);
    case DictRow::SmoothSplit: return green_matrix(d, 1, 2, 0);
    case DictRow::RoughSplit: return red_matrix(d, 1, 2, 0);
    case DictRow::SmoothMerge: return green_matrix(d, 2, 1, 0);
    case DictRow::RoughMerge: return red_matrix(d, 2, 1, 0);
    case DictRow::SmoothCounit: return green_matrix(d, 1, 0, 0);
    case DictRow::RoughCounit: return red_matrix(d, 1, 0, 0);
    case DictRow::Rotation: return fourier_matrix(d, false);
  }
  throw std::logic_error("dictionary_generator_matrix");
}

surgery::Procedure dictionary_procedure(DictRow row, int d) {
  using namespace surgery;
  Procedure p;
  p.d = d;
  switch (row) {
    case DictRow::SmoothUnit:
      p.input_count = 0;
      p.steps = {make_build("u", 0, 0, InitKind::UnitSmooth)};
      break;
    case DictRow::RoughUnit:
      p.input_count = 0;
      p.steps = {make_build("u", 0, 0, InitKind::UnitRough)};
      break;
    case DictRow::SmoothSplit:
      p.input_count = 1;
      p.steps = {make_build("a", 0, 1, InitKind::Input, 0),
                 make_split(Flavor::Smooth, "a", 0, "f", "s")};
      break;
    case DictRow::RoughSplit:
      p.input_count = 1;
      p.steps = {make_build("a", 0, 0, InitKind::Input, 0),
                 make_build("b", 0, 0, InitKind::UnitRough),
                 make_merge(Flavor::Rough, "a", "b", "c"),
                 make_split(Flavor::Rough, "c", 0, "f", "s")};
      break;
    case DictRow::SmoothMerge:
      p.input_count = 2;
      p.steps = {make_build("a", 0, 0, InitKind::Input, 0),
                 make_build("b", 0, 0, InitKind::Input, 1),
                 make_merge(Flavor::Smooth, "a", "b", "c")};
      break;
    case DictRow::RoughMerge:
      p.input_count = 2;
      p.steps = {make_build("a", 0, 0, InitKind::Input, 0),
                 make_build("b", 0, 0, InitKind::Input, 1),
                 make_merge(Flavor::Rough, "a", "b", "c")};
      break;
    case DictRow::SmoothCounit:
      p.input_count = 1;
      p.steps = {make_build("a", 0, 0, InitKind::Input, 0),
                 make_counit(Flavor::Smooth, "a")};
      break;
    case DictRow::RoughCounit:
      p.input_count = 1;
      p.steps = {make_build("a", 0, 0, InitKind::Input, 0),
                 make_counit(Flavor::Rough, "a")};
      break;
    case DictRow::Rotation:
      p.input_count = 1;
      p.steps = {make_build("a", 0, 0, InitKind::Input, 0),
                 make_fourier("a")};
      break;
  }
  return p;
}

double dictionary_expected_factor(DictRow row, int d) {
  const double rsd = 1.0 / std::sqrt(double(d));
  switch (row) {
    case DictRow::SmoothUnit:
    case DictRow::RoughUnit:
    case DictRow::SmoothCounit:
    case DictRow::RoughCounit:
    case DictRow::RoughSplit:  // its procedure rides on an auxiliary merge
      return rsd;
    case DictRow::SmoothSplit:
    case DictRow::SmoothMerge:
    case DictRow::RoughMerge:
    case DictRow::Rotation:
      return 1.0;
  }
  throw std::logic_error("dictionary_expected_factor");
}

DictionaryCheck verify_dictionary_row(DictRow row, int d, double tol) {
  DictionaryCheck check;
  check.row = row;
  check.map = surgery::extract_logical_map(dictionary_procedure(row, d), tol);

  int zero_at = -1;
  for (size_t i = 0; i < check.map.labels.size(); ++i) {
    bool all0 = true;
    for (int n : check.map.labels[i]) all0 = all0 && n == 0;
    if (all0) zero_at = static_cast<int>(i);
  }
  if (zero_at < 0) throw std::logic_error("no branch-0 label tuple");
  const Mat& k0 = check.map.kraus[zero_at];
  Mat gen = dictionary_generator_matrix(row, d);
  if (gen.rows != k0.rows || gen.cols != k0.cols)
    throw std::logic_error("dictionary row has the wrong shape");

  Cx dot = 0.0;
  double n2 = 0.0;
  for (size_t i = 0; i < gen.a.size(); ++i) {
    dot += std::conj(gen.a[i]) * k0.a[i];
    n2 += std::norm(gen.a[i]);
  }
  check.factor = dot / n2;
  check.map_error = (k0 - gen.scaled(check.factor)).max_abs();
  double expected = dictionary_expected_factor(row, d);
  check.ok = check.map_error <= tol &&
             std::abs(check.factor - expected) <= tol &&
             check.map.completeness_error <= tol &&
             check.map.proportionality_error <= tol &&
             check.map.leaked_weight <= tol;
  return check;
}

Diagram from_surgery(const surgery::Procedure& proc) {
  using surgery::StepKind;
  Diagram g;
  g.d = proc.d;
  g.num_inputs = proc.input_count;
  std::vector<std::pair<std::string, Endpoint>> live;
  auto find_live = [&](const std::string& name) {
    for (size_t i = 0; i < live.size(); ++i)
      if (live[i].first == name) return static_cast<int>(i);
    throw std::invalid_argument("from_surgery: unknown patch " + name);
  };

  for (const surgery::Step& st : proc.steps) {
    switch (st.kind) {
      case StepKind::Build: {
        Endpoint src;
        if (st.init == surgery::InitKind::Input) {
          src = {kDiagramInput, st.init_arg};
        } else if (st.init == surgery::InitKind::UnitSmooth) {
          src = {g.add_node(NodeKind::Green, 0, 1, 0), 0};
        } else if (st.init == surgery::InitKind::UnitRough) {
          src = {g.add_node(NodeKind::Red, 0, 1, 0), 0};
        } else {
          throw std::invalid_argument(
              "from_surgery: only unit and input builds translate");
        }
        live.push_back({st.name, src});
        break;
      }
      case StepKind::Merge: {
        int ia = find_live(st.name), ib = find_live(st.other);
        NodeKind kind = st.flavor == surgery::Flavor::Smooth ? NodeKind::Green
                                                             : NodeKind::Red;
        int v = g.add_node(kind, 2, 1, 0);
        g.connect(live[ia].second, {v, 0});
        g.connect(live[ib].second, {v, 1});
        if (ia < ib) std::swap(ia, ib);
        live.erase(live.begin() + ia);
        live.erase(live.begin() + ib);
        live.push_back({st.result, {v, 0}});
        break;
      }
      case StepKind::Split: {
        int ip = find_live(st.name);
        NodeKind kind = st.flavor == surgery::Flavor::Smooth ? NodeKind::Green
                                                             : NodeKind::Red;
        int v = g.add_node(kind, 1, 2, 0);
        g.connect(live[ip].second, {v, 0});
        live[ip] = {st.result, {v, 0}};
        live.insert(live.begin() + ip + 1, {st.result2, {v, 1}});
        break;
      }
      case StepKind::Counit: {
        int ip = find_live(st.name);
        NodeKind kind = st.flavor == surgery::Flavor::Smooth ? NodeKind::Green
                                                             : NodeKind::Red;
        int v = g.add_node(kind, 1, 0, 0);
        g.connect(live[ip].second, {v, 0});
        live.erase(live.begin() + ip);
        break;
      }
      case StepKind::Fourier: {
        int ip = find_live(st.name);
        int v = g.add_node(NodeKind::Fourier, 1, 1, 0, false);
        g.connect(live[ip].second, {v, 0});
        live[ip].second = {v, 0};
        break;
      }
      case StepKind::Gate:
        throw std::invalid_argument("from_surgery: gates do not translate");
    }
  }
  g.num_outputs = static_cast<int>(live.size());
  for (int p = 0; p < g.num_outputs; ++p)
    g.connect(live[p].second, {kDiagramOutput, p});
  g.validate();
  return g;
}

// --- closure analysis -------------------------------------------------------------

bool in_set_up_to_scalar(const Mat& m, const std::vector<Mat>& set,
                         double tol) {
  for (const Mat& s : set)
    if (s.rows == m.rows && s.cols == m.cols &&
        s.approx_equal_up_to_scalar(m, tol))
      return true;
  return false;
}

std::vector<Mat> phase_closure(const std::vector<Mat>& generators, double tol,
                               size_t cap) {
  std::vector<Mat> set;
  std::queue<size_t> pending;
  for (const Mat& g : generators)
    if (!in_set_up_to_scalar(g, set, tol)) {
      set.push_back(g);
      pending.push(set.size() - 1);
    }
  while (!pending.empty()) {
    size_t i = pending.front();
    pending.pop();
    for (const Mat& g : generators) {
      Mat m = set[i] * g;
      if (!in_set_up_to_scalar(m, set, tol)) {
        set.push_back(std::move(m));
        pending.push(set.size() - 1);
        if (set.size() > cap)
          throw std::length_error("phase_closure: closure exceeds cap");
      }
    }
  }
  return set;
}

std::vector<Mat> producible_single_qudit_maps(int d, int depth) {
  check_dim(d);
  if (depth < 1) throw std::invalid_argument("depth must be at least 1");
  const double tol = kTolLoose;
  Mat id = Mat::identity(d);

  std::vector<Mat> units = {green_matrix(d, 0, 1, 0).scaled(
                                Cx(1.0 / std::sqrt(double(d)), 0.0)),
                            red_matrix(d, 0, 1, 0).scaled(
                                Cx(1.0 / std::sqrt(double(d)), 0.0))};
  std::vector<Mat> counits;
  for (int n = 0; n < d; ++n) {
    Mat cs(1, d), cr(1, d);
    for (int i = 0; i < d; ++i)
      cs.at(0, i) = omega(d, static_cast<long long>(i) * n) /
                    std::sqrt(double(d));
    cr.at(0, n) = 1.0;
    counits.push_back(cs);
    counits.push_back(cr);
  }
  std::vector<Mat> merges;
  for (int n = 0; n < d; ++n) {
    Mat ms(d, d * d), mr(d, d * d);
    for (int i = 0; i < d; ++i)
      ms.at(mod_d(i + n, d), i * d + mod_d(i + n, d)) = 1.0;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        mr.at(mod_d(i + j, d), i * d + j) =
            omega(d, static_cast<long long>(n) * i) / std::sqrt(double(d));
    merges.push_back(ms);
    merges.push_back(mr);
  }
  std::vector<Mat> splits = {green_matrix(d, 1, 2, 0), red_matrix(d, 1, 2, 0)};

  std::vector<Mat> atoms;
  auto add_atom = [&](const Mat& m) {
    if (m.max_abs() > tol && !in_set_up_to_scalar(m, atoms, tol))
      atoms.push_back(m);
  };
  for (const Mat& m : merges)
    for (const Mat& u : units) {
      add_atom(m * id.kron(u));
      add_atom(m * u.kron(id));
    }
  for (const Mat& s : splits)
    for (const Mat& c : counits) {
      add_atom(id.kron(c) * s);
      add_atom(c.kron(id) * s);
    }
  add_atom(fourier_matrix(d, false));

  std::vector<Mat> all = atoms;
  std::vector<Mat> frontier = atoms;
  for (int level = 2; level <= depth; ++level) {
    std::vector<Mat> next;
    for (const Mat& a : atoms)
      for (const Mat& w : frontier) {
        Mat m = a * w;
        if (m.max_abs() <= tol || in_set_up_to_scalar(m, all, tol)) continue;
        all.push_back(m);
        next.push_back(std::move(m));
        if (all.size() > 100000)
          throw std::length_error("producible maps: set exceeds cap");
      }
    frontier = std::move(next);
  }
  return all;
}

bool cyclotomic_integer(Cx x, int d, double tol) {
  if (d == 2) {
    return std::abs(x.imag()) <= tol &&
           std::abs(x.real() - std::round(x.real())) <= tol;
  }
  if (d == 3) {
    // q = -1/2 + i sqrt(3)/2; x = a + b q
    double b = x.imag() / (std::sqrt(3.0) / 2.0);
    double a = x.real() + b / 2.0;
    return std::abs(a - std::round(a)) <= tol &&
           std::abs(b - std::round(b)) <= tol;
  }
  throw std::invalid_argument("cyclotomic_integer: only d <= 3 supported");
}

}  // namespace qsurg::zx
