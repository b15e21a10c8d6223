#include "qsurg/cli.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qsurg/io.hpp"
#include "qsurg/lattice.hpp"
#include "qsurg/surgery.hpp"
#include "qsurg/types.hpp"
#include "qsurg/zx.hpp"

namespace qsurg::cli {

namespace {

std::string normalize(std::string s) {
  std::replace(s.begin(), s.end(), '-', ' ');
  std::replace(s.begin(), s.end(), '_', ' ');
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

zx::RewriteRule rule_from_name(const std::string& name) {
  const std::string want = normalize(name);
  for (int r = 0; r <= static_cast<int>(zx::RewriteRule::DualBend); ++r) {
    auto rule = static_cast<zx::RewriteRule>(r);
    if (zx::rule_name(rule) == want) return rule;
  }
  throw std::invalid_argument("unknown rewrite rule: " + name);
}

std::vector<zx::DictRow> rows_from_name(const std::string& name) {
  std::vector<zx::DictRow> all;
  for (int r = 0; r <= static_cast<int>(zx::DictRow::Rotation); ++r)
    all.push_back(static_cast<zx::DictRow>(r));
  if (normalize(name) == "all") return all;
  for (zx::DictRow row : all)
    if (zx::dict_row_name(row) == normalize(name)) return {row};
  throw std::invalid_argument("unknown dictionary row: " + name);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err) {
  CLI::App app{"surface patch surgery laboratory"};
  app.require_subcommand(1);

  // patch-validate
  auto* validate = app.add_subcommand(
      "patch-validate", "build or load a patch and run the validation suite");
  int v_d = 2, v_rows = 0, v_cols = 0;
  std::string v_geometry;
  bool v_rotate = false, v_dump = false;
  validate->add_option("-d,--dim", v_d, "qudit dimension");
  validate->add_option("--rows", v_rows, "face rows");
  validate->add_option("--cols", v_cols, "face columns");
  validate->add_option("--geometry", v_geometry,
                       "load the patch from a JSON file instead of building");
  validate->add_flag("--rotate", v_rotate, "validate the rotated geometry");
  validate->add_flag("--dump", v_dump, "print the geometry JSON");

  // map-extract
  auto* extract = app.add_subcommand(
      "map-extract", "extract the logical Kraus family of a procedure");
  std::string e_procedure;
  double e_tol = kTolLoose;
  extract->add_option("--procedure", e_procedure, "procedure JSON file")
      ->required();
  extract->add_option("--tol", e_tol, "acceptance tolerance");

  // dict-verify
  auto* dict = app.add_subcommand(
      "dict-verify", "check dictionary rows against their generator tensors");
  int dv_d = 2;
  double dv_tol = kTolLoose;
  std::string dv_row = "all";
  dict->add_option("-d,--dim", dv_d, "qudit dimension");
  dict->add_option("--row", dv_row, "row name or 'all'");
  dict->add_option("--tol", dv_tol, "acceptance tolerance");

  // zx-eval
  auto* zeval = app.add_subcommand("zx-eval", "contract a diagram to a matrix");
  std::string ze_diagram;
  zeval->add_option("--diagram", ze_diagram, "diagram JSON file")->required();

  // zx-rewrite
  auto* zrew = app.add_subcommand(
      "zx-rewrite", "apply a rewrite rule and confirm the tensor is kept");
  std::string zr_diagram, zr_rule, zr_out;
  int zr_index = 0;
  bool zr_list = false;
  zrew->add_option("--diagram", zr_diagram, "diagram JSON file")->required();
  zrew->add_option("--rule", zr_rule, "rewrite rule name");
  zrew->add_option("--index", zr_index, "which match to apply");
  zrew->add_option("--out", zr_out, "write the rewritten diagram here");
  zrew->add_flag("--list", zr_list, "list matches instead of rewriting");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    if (validate->parsed()) {
      lattice::PatchGeometry g =
          v_geometry.empty()
              ? lattice::build_patch(v_d, v_rows, v_cols)
              : io::geometry_from_json(io::read_file(v_geometry));
      if (v_rotate) g = lattice::rotate_geometry(g);
      if (v_dump) out << io::geometry_to_json(g) << "\n";
      lattice::ValidationReport rep = lattice::validate_patch(g);
      out << io::format_validation(rep);
      return rep.ok ? 0 : 1;
    }

    if (extract->parsed()) {
      surgery::Procedure proc =
          io::procedure_from_json(io::read_file(e_procedure));
      surgery::LogicalMap map = surgery::extract_logical_map(proc, e_tol);
      out << io::format_logical_map(map);
      bool ok = map.completeness_error <= e_tol &&
                map.proportionality_error <= e_tol &&
                map.leaked_weight <= e_tol;
      out << "ok: " << (ok ? "yes" : "no") << "\n";
      return ok ? 0 : 1;
    }

    if (dict->parsed()) {
      bool all_ok = true;
      for (zx::DictRow row : rows_from_name(dv_row)) {
        zx::DictionaryCheck check = zx::verify_dictionary_row(row, dv_d, dv_tol);
        out << zx::dict_row_name(row) << ": "
            << (check.ok ? "ok" : "FAILED") << " (factor "
            << format_complex(check.factor) << ", map error "
            << check.map_error << ")\n";
        all_ok = all_ok && check.ok;
      }
      return all_ok ? 0 : 1;
    }

    if (zeval->parsed()) {
      zx::Diagram g = io::diagram_from_json(io::read_file(ze_diagram));
      out << io::format_matrix(zx::evaluate(g));
      return 0;
    }

    if (zrew->parsed()) {
      zx::Diagram g = io::diagram_from_json(io::read_file(zr_diagram));
      if (zr_rule.empty())
        throw std::invalid_argument("zx-rewrite needs --rule");
      zx::RewriteRule rule = rule_from_name(zr_rule);
      std::vector<zx::Match> matches = zx::find_matches(g, rule);
      if (zr_list) {
        for (size_t i = 0; i < matches.size(); ++i) {
          const zx::Match& m = matches[i];
          out << i << ": nodes (" << m.node_a << ", " << m.node_b
              << "), ports (" << m.port_a << ", " << m.port_b << ")"
              << (m.reverse ? " reverse" : "") << "\n";
        }
        return 0;
      }
      if (zr_index < 0 || zr_index >= static_cast<int>(matches.size()))
        throw std::invalid_argument("no match with that index");
      zx::Diagram h = zx::apply_match(g, matches[zr_index]);
      Mat before = zx::evaluate(g);
      Mat after = zx::evaluate(h);
      bool kept = before.approx_equal(after, kTolLoose);
      std::string text = io::diagram_to_json(h);
      if (zr_out.empty())
        out << text << "\n";
      else
        io::write_file(zr_out, text);
      out << "tensor kept: " << (kept ? "yes" : "no") << "\n";
      return kept ? 0 : 1;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}

}  // namespace qsurg::cli
