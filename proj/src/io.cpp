#include "qsurg/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace qsurg::io {

using nlohmann::json;

namespace {

json pairs_to_json(const std::vector<std::pair<int, int>>& v) {
  json out = json::array();
  for (auto [a, b] : v) out.push_back(json::array({a, b}));
  return out;
}

std::vector<std::pair<int, int>> pairs_from_json(const json& j) {
  std::vector<std::pair<int, int>> out;
  for (const auto& e : j) out.push_back({e.at(0).get<int>(), e.at(1).get<int>()});
  return out;
}

json cx_to_json(Cx v) { return json::array({v.real(), v.imag()}); }

Cx cx_from_json(const json& j) {
  return Cx(j.at(0).get<double>(), j.at(1).get<double>());
}

std::string fmt_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v + 0.0);
  return buf;
}

const char* yn(bool b) { return b ? "yes" : "no"; }

}  // namespace

// --- geometry ----------------------------------------------------------------

std::string geometry_to_json(const lattice::PatchGeometry& g) {
  json j;
  j["d"] = g.d;
  j["rows"] = g.rows;
  j["cols"] = g.cols;
  j["edges"] = json::array();
  for (const auto& e : g.edges)
    j["edges"].push_back({{"tail", e.tail}, {"head", e.head}, {"axis", e.axis}});
  j["vertices"] = json::array();
  for (const auto& v : g.vertices)
    j["vertices"].push_back({{"id", v.id},
                             {"x", v.x},
                             {"y", v.y},
                             {"stabilized", v.stabilized},
                             {"star", pairs_to_json(v.star)}});
  j["faces"] = json::array();
  for (const auto& f : g.faces)
    j["faces"].push_back({{"id", f.id},
                          {"x", f.x},
                          {"y", f.y},
                          {"stabilized", f.stabilized},
                          {"open", f.open},
                          {"boundary", pairs_to_json(f.boundary)}});
  j["x_path"] = pairs_to_json(g.x_path.crossings);
  j["z_path"] = pairs_to_json(g.z_path.steps);
  return j.dump(2);
}

lattice::PatchGeometry geometry_from_json(const std::string& text) {
  json j = json::parse(text);
  lattice::PatchGeometry g;
  g.d = j.at("d").get<int>();
  g.rows = j.at("rows").get<int>();
  g.cols = j.at("cols").get<int>();
  for (const auto& e : j.at("edges")) {
    lattice::Edge ed;
    ed.tail = e.at("tail").get<int>();
    ed.head = e.at("head").get<int>();
    ed.axis = e.at("axis").get<int>();
    g.edges.push_back(ed);
  }
  for (const auto& e : j.at("vertices")) {
    lattice::VertexSite v;
    v.id = e.at("id").get<int>();
    v.x = e.at("x").get<double>();
    v.y = e.at("y").get<double>();
    v.stabilized = e.at("stabilized").get<bool>();
    v.star = pairs_from_json(e.at("star"));
    g.vertices.push_back(std::move(v));
  }
  for (const auto& e : j.at("faces")) {
    lattice::FaceSite f;
    f.id = e.at("id").get<int>();
    f.x = e.at("x").get<double>();
    f.y = e.at("y").get<double>();
    f.stabilized = e.at("stabilized").get<bool>();
    f.open = e.at("open").get<bool>();
    f.boundary = pairs_from_json(e.at("boundary"));
    g.faces.push_back(std::move(f));
  }
  g.x_path.crossings = pairs_from_json(j.at("x_path"));
  g.z_path.steps = pairs_from_json(j.at("z_path"));
  return g;
}

// --- procedures ---------------------------------------------------------------

namespace {

std::string init_name(surgery::InitKind k) {
  switch (k) {
    case surgery::InitKind::Basis: return "basis";
    case surgery::InitKind::UnitSmooth: return "unit_smooth";
    case surgery::InitKind::UnitRough: return "unit_rough";
    case surgery::InitKind::Input: return "input";
    case surgery::InitKind::Amps: return "amps";
  }
  throw std::logic_error("init_name");
}

surgery::InitKind init_from_name(const std::string& s) {
  if (s == "basis") return surgery::InitKind::Basis;
  if (s == "unit_smooth") return surgery::InitKind::UnitSmooth;
  if (s == "unit_rough") return surgery::InitKind::UnitRough;
  if (s == "input") return surgery::InitKind::Input;
  if (s == "amps") return surgery::InitKind::Amps;
  throw std::invalid_argument("unknown init kind: " + s);
}

std::string flavor_name(surgery::Flavor f) {
  return f == surgery::Flavor::Smooth ? "smooth" : "rough";
}

surgery::Flavor flavor_from_name(const std::string& s) {
  if (s == "smooth") return surgery::Flavor::Smooth;
  if (s == "rough") return surgery::Flavor::Rough;
  throw std::invalid_argument("unknown flavor: " + s);
}

}  // namespace

std::string procedure_to_json(const surgery::Procedure& p) {
  json j;
  j["d"] = p.d;
  j["inputs"] = p.input_count;
  j["steps"] = json::array();
  for (const auto& st : p.steps) {
    json s;
    switch (st.kind) {
      case surgery::StepKind::Build: {
        s["op"] = "build";
        s["name"] = st.name;
        s["rows"] = st.rows;
        s["cols"] = st.cols;
        s["init"] = init_name(st.init);
        if (st.init == surgery::InitKind::Basis ||
            st.init == surgery::InitKind::Input)
          s["arg"] = st.init_arg;
        if (st.init == surgery::InitKind::Amps) {
          s["amps"] = json::array();
          for (Cx a : st.amps) s["amps"].push_back(cx_to_json(a));
        }
        break;
      }
      case surgery::StepKind::Merge:
        s["op"] = "merge";
        s["flavor"] = flavor_name(st.flavor);
        s["name"] = st.name;
        s["other"] = st.other;
        s["result"] = st.result;
        break;
      case surgery::StepKind::Split:
        s["op"] = "split";
        s["flavor"] = flavor_name(st.flavor);
        s["name"] = st.name;
        s["at"] = st.at;
        s["result"] = st.result;
        s["result2"] = st.result2;
        break;
      case surgery::StepKind::Counit:
        s["op"] = "counit";
        s["flavor"] = flavor_name(st.flavor);
        s["name"] = st.name;
        break;
      case surgery::StepKind::Fourier:
        s["op"] = "fourier";
        s["name"] = st.name;
        break;
      case surgery::StepKind::Gate:
        s["op"] = "gate";
        s["name"] = st.name;
        s["gate"] = std::string(1, st.gate);
        s["power"] = st.power;
        break;
    }
    j["steps"].push_back(std::move(s));
  }
  return j.dump(2);
}

surgery::Procedure procedure_from_json(const std::string& text) {
  json j = json::parse(text);
  surgery::Procedure p;
  p.d = j.at("d").get<int>();
  p.input_count = j.at("inputs").get<int>();
  for (const auto& s : j.at("steps")) {
    const std::string op = s.at("op").get<std::string>();
    if (op == "build") {
      surgery::Step st = surgery::make_build(
          s.at("name").get<std::string>(), s.at("rows").get<int>(),
          s.at("cols").get<int>(), init_from_name(s.at("init").get<std::string>()),
          s.value("arg", 0));
      if (st.init == surgery::InitKind::Amps)
        for (const auto& a : s.at("amps")) st.amps.push_back(cx_from_json(a));
      p.steps.push_back(std::move(st));
    } else if (op == "merge") {
      p.steps.push_back(surgery::make_merge(
          flavor_from_name(s.at("flavor").get<std::string>()),
          s.at("name").get<std::string>(), s.at("other").get<std::string>(),
          s.at("result").get<std::string>()));
    } else if (op == "split") {
      p.steps.push_back(surgery::make_split(
          flavor_from_name(s.at("flavor").get<std::string>()),
          s.at("name").get<std::string>(), s.value("at", 0),
          s.at("result").get<std::string>(),
          s.at("result2").get<std::string>()));
    } else if (op == "counit") {
      p.steps.push_back(surgery::make_counit(
          flavor_from_name(s.at("flavor").get<std::string>()),
          s.at("name").get<std::string>()));
    } else if (op == "fourier") {
      p.steps.push_back(surgery::make_fourier(s.at("name").get<std::string>()));
    } else if (op == "gate") {
      const std::string gate = s.at("gate").get<std::string>();
      if (gate.size() != 1) throw std::invalid_argument("bad gate name");
      p.steps.push_back(surgery::make_gate(s.at("name").get<std::string>(),
                                           gate[0], s.value("power", 1)));
    } else {
      throw std::invalid_argument("unknown step op: " + op);
    }
  }
  return p;
}

// --- diagrams ------------------------------------------------------------------

namespace {

std::string kind_name(zx::NodeKind k) {
  switch (k) {
    case zx::NodeKind::Green: return "green";
    case zx::NodeKind::Red: return "red";
    case zx::NodeKind::Fourier: return "fourier";
    case zx::NodeKind::Antipode: return "antipode";
    case zx::NodeKind::Cup: return "cup";
    case zx::NodeKind::Cap: return "cap";
  }
  throw std::logic_error("kind_name");
}

zx::NodeKind kind_from_name(const std::string& s) {
  if (s == "green") return zx::NodeKind::Green;
  if (s == "red") return zx::NodeKind::Red;
  if (s == "fourier") return zx::NodeKind::Fourier;
  if (s == "antipode") return zx::NodeKind::Antipode;
  if (s == "cup") return zx::NodeKind::Cup;
  if (s == "cap") return zx::NodeKind::Cap;
  throw std::invalid_argument("unknown node kind: " + s);
}

}  // namespace

std::string diagram_to_json(const zx::Diagram& diagram) {
  json j;
  j["d"] = diagram.d;
  j["inputs"] = diagram.num_inputs;
  j["outputs"] = diagram.num_outputs;
  j["scalar"] = cx_to_json(diagram.scalar);
  j["nodes"] = json::array();
  for (const auto& n : diagram.nodes) {
    json e = {{"kind", kind_name(n.kind)}, {"ins", n.ins}, {"outs", n.outs}};
    if (n.kind == zx::NodeKind::Green || n.kind == zx::NodeKind::Red)
      e["phase"] = n.phase;
    if (n.kind == zx::NodeKind::Fourier) e["dagger"] = n.dagger;
    j["nodes"].push_back(std::move(e));
  }
  j["wires"] = json::array();
  for (const auto& w : diagram.wires)
    j["wires"].push_back(json::array(
        {json::array({w.from.node, w.from.port}),
         json::array({w.to.node, w.to.port})}));
  return j.dump(2);
}

zx::Diagram diagram_from_json(const std::string& text) {
  json j = json::parse(text);
  zx::Diagram g;
  g.d = j.at("d").get<int>();
  g.num_inputs = j.at("inputs").get<int>();
  g.num_outputs = j.at("outputs").get<int>();
  g.scalar = cx_from_json(j.at("scalar"));
  for (const auto& e : j.at("nodes")) {
    zx::Node n;
    n.kind = kind_from_name(e.at("kind").get<std::string>());
    n.ins = e.at("ins").get<int>();
    n.outs = e.at("outs").get<int>();
    n.phase = e.value("phase", 0);
    n.dagger = e.value("dagger", false);
    g.nodes.push_back(n);
  }
  for (const auto& e : j.at("wires")) {
    zx::Wire w;
    w.from = {e.at(0).at(0).get<int>(), e.at(0).at(1).get<int>()};
    w.to = {e.at(1).at(0).get<int>(), e.at(1).at(1).get<int>()};
    g.wires.push_back(w);
  }
  g.validate();
  return g;
}

// --- reports ------------------------------------------------------------------

std::string format_validation(const lattice::ValidationReport& r) {
  std::ostringstream out;
  out << "ok: " << yn(r.ok) << "\n";
  out << "stabilizers commute: " << yn(r.stabilizers_commute) << "\n";
  out << "projectors idempotent: " << yn(r.projectors_idempotent) << "\n";
  out << "logicals commute with stabilizers: "
      << yn(r.logicals_commute_with_stabilizers) << "\n";
  out << "logical pair weyl phase: " << yn(r.logical_pair_weyl) << "\n";
  out << "vacuum rank: " << fmt_double(r.vacuum_rank) << "\n";
  if (r.errors.empty()) {
    out << "errors: none\n";
  } else {
    out << "errors:\n";
    for (const auto& e : r.errors) out << "  " << e << "\n";
  }
  return out.str();
}

std::string format_matrix(const Mat& m) {
  std::ostringstream out;
  for (int r = 0; r < m.rows; ++r) {
    for (int c = 0; c < m.cols; ++c) {
      if (c) out << "  ";
      out << format_complex(m.at(r, c));
    }
    out << "\n";
  }
  return out.str();
}

std::string format_logical_map(const surgery::LogicalMap& m) {
  std::ostringstream out;
  out << "d: " << m.d << "\n";
  out << "input qudits: " << m.input_qudits << "\n";
  out << "output qudits: " << m.output_qudits << "\n";
  out << "output patches:";
  for (const auto& p : m.output_patches) out << " " << p;
  out << "\n";
  out << "completeness error: " << fmt_double(m.completeness_error) << "\n";
  out << "proportionality error: " << fmt_double(m.proportionality_error)
      << "\n";
  out << "leaked weight: " << fmt_double(m.leaked_weight) << "\n";
  out << "branches: " << m.labels.size() << "\n";
  for (size_t i = 0; i < m.labels.size(); ++i) {
    out << "K(";
    for (size_t k = 0; k < m.labels[i].size(); ++k) {
      if (k) out << ",";
      out << m.labels[i][k];
    }
    out << "):\n" << format_matrix(m.kraus[i]);
  }
  return out.str();
}

std::string format_leaves(const std::vector<surgery::LeafRecord>& leaves) {
  std::ostringstream out;
  for (size_t i = 0; i < leaves.size(); ++i) {
    const auto& leaf = leaves[i];
    out << "leaf " << i << ": p = " << fmt_double(leaf.probability)
        << ", reductions = [";
    for (size_t k = 0; k < leaf.reductions.size(); ++k) {
      if (k) out << ",";
      out << leaf.reductions[k];
    }
    out << "]";
    if (!leaf.trace.empty()) {
      out << ", trace:";
      for (const auto& [site, outcome] : leaf.trace)
        out << " " << site << "=" << outcome;
    }
    if (!leaf.ws) out << " (dead)";
    out << "\n";
  }
  return out.str();
}

// --- files --------------------------------------------------------------------

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << content;
  if (!out.flush()) throw std::runtime_error("write failed for " + path);
}

}  // namespace qsurg::io
