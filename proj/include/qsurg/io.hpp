#pragma once

#include <string>

#include "qsurg/lattice.hpp"
#include "qsurg/surgery.hpp"
#include "qsurg/zx.hpp"

namespace qsurg::io {

std::string geometry_to_json(const lattice::PatchGeometry& g);
lattice::PatchGeometry geometry_from_json(const std::string& text);

std::string procedure_to_json(const surgery::Procedure& p);
surgery::Procedure procedure_from_json(const std::string& text);

std::string diagram_to_json(const zx::Diagram& diagram);
zx::Diagram diagram_from_json(const std::string& text);

// Deterministic plain-text reports; identical inputs give identical bytes.
std::string format_validation(const lattice::ValidationReport& r);
std::string format_logical_map(const surgery::LogicalMap& m);
std::string format_matrix(const Mat& m);
std::string format_leaves(const std::vector<surgery::LeafRecord>& leaves);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

}  // namespace qsurg::io
