#pragma once

#include <map>
#include <optional>
#include <string>

#include <json.hpp>

#include "fractal/hilbert_module.hpp"
#include "fractal/self_similar.hpp"

namespace fractal::io {

using nlohmann::json;

/// Parses JSON text; syntax errors become ConfigError carrying `source` and the
/// parser's line/column.
json parse(const std::string& text, const std::string& source);
json read_file(const std::string& path);

/// Fields: name, arity, boundary_size, child_boundary_maps, identifications.
SubdivisionRule rule_from_json(const json& j);

/// A structure file optionally carries r, mu and base_conductances
/// ([[a, b, c], ...] on local boundary labels), which make it self-similar.
struct StructureFile {
  SubdivisionRule rule;
  std::optional<SelfSimilarStructure> self_similar;
};

StructureFile structure_from_json(const json& j);
StructureFile load_structure(const std::string& path);

/// {"cells": {"0.1": [[a, b, c], ...]}}: a and b index the cell's boundary list.
std::map<CellAddress, Network> overrides_from_json(const json& j, const CellStructure& cs);

/// {"level": n, "cells": {"0.1": [values ...]}}; cells not listed are zero.
json to_json(const ModuleElement& u, const CellStructure& cs);
ModuleElement module_element_from_json(const json& j, const HilbertModule& h);

}  // namespace fractal::io
