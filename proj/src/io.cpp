#include "fractal/io.hpp"

#include <fstream>
#include <sstream>

#include "fractal/error.hpp"

namespace fractal::io {

json parse(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(source + ": " + e.what());
  }
}

json read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse(buf.str(), path);
}

namespace {

template <class T>
T field(const json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("field '") + key + "': " + e.what());
  }
}

std::vector<Edge> edges_from_json(const json& list, int size, const std::string& where) {
  std::vector<Edge> edges;
  if (!list.is_array()) throw ConfigError(where + ": conductances must be a list of [a, b, c]");
  for (const auto& e : list) {
    if (!e.is_array() || e.size() != 3) throw ConfigError(where + ": each conductance is [a, b, c]");
    Edge edge{e[0].get<int>(), e[1].get<int>(), e[2].get<double>()};
    if (edge.a < 0 || edge.b < 0 || edge.a >= size || edge.b >= size) {
      throw ConfigError(where + ": conductance endpoint out of range");
    }
    edges.push_back(edge);
  }
  return edges;
}

}  // namespace

SubdivisionRule rule_from_json(const json& j) {
  SubdivisionRule rule;
  rule.name = j.value("name", std::string("custom"));
  rule.boundary_size = field<int>(j, "boundary_size");
  rule.child_boundary_maps = field<std::vector<std::vector<int>>>(j, "child_boundary_maps");
  if (j.contains("identifications")) {
    rule.identifications = field<std::vector<std::pair<int, int>>>(j, "identifications");
  }
  if (j.contains("arity") && field<int>(j, "arity") != rule.arity()) {
    throw ConfigError("arity " + std::to_string(field<int>(j, "arity")) + " does not match " +
                      std::to_string(rule.arity()) + " child maps");
  }
  if (rule.boundary_size < 2) throw ConfigError("boundary_size must be >= 2");
  return rule;
}

StructureFile structure_from_json(const json& j) {
  StructureFile out;
  out.rule = rule_from_json(j);
  const bool has_r = j.contains("r"), has_mu = j.contains("mu"), has_base = j.contains("base_conductances");
  if (has_r || has_mu || has_base) {
    if (!(has_r && has_mu && has_base)) {
      throw ConfigError("a self-similar file needs all of r, mu and base_conductances");
    }
    SelfSimilarStructure ss;
    ss.name = out.rule.name;
    ss.rule = out.rule;
    ss.r = field<std::vector<double>>(j, "r");
    ss.mu = field<std::vector<double>>(j, "mu");
    std::vector<VertexId> v(out.rule.boundary_size);
    for (int k = 0; k < out.rule.boundary_size; ++k) v[k] = k;
    ss.base = Network(v, edges_from_json(j.at("base_conductances"), out.rule.boundary_size,
                                         "base_conductances"));
    try {
      validate(ss);
    } catch (const ConstructionError& e) {
      throw ConfigError(e.what());
    }
    out.self_similar = std::move(ss);
  }
  return out;
}

StructureFile load_structure(const std::string& path) {
  json j = read_file(path);
  try {
    return structure_from_json(j);
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::map<CellAddress, Network> overrides_from_json(const json& j, const CellStructure& cs) {
  if (!j.contains("cells") || !j.at("cells").is_object()) {
    throw ConfigError("override file needs an object 'cells'");
  }
  std::map<CellAddress, Network> out;
  for (const auto& [key, list] : j.at("cells").items()) {
    CellAddress a;
    try {
      a = CellAddress::parse(key);
    } catch (const Error& e) {
      throw ConfigError("bad cell address '" + key + "': " + e.what());
    }
    auto index = cs.find(a);
    if (!index) throw ConfigError("no cell with address " + key);
    const auto& verts = cs.cell(a.level(), *index).vertices;
    out[a] = Network(verts, edges_from_json(list, static_cast<int>(verts.size()), key));
  }
  return out;
}

json to_json(const ModuleElement& u, const CellStructure& cs) {
  json cells = json::object();
  for (std::size_t i = 0; i < u.cells.size(); ++i) {
    std::vector<double> v(u.cells[i].data(), u.cells[i].data() + u.cells[i].size());
    cells[cs.cell(u.level, static_cast<int>(i)).address.str()] = v;
  }
  return {{"level", u.level}, {"cells", cells}};
}

ModuleElement module_element_from_json(const json& j, const HilbertModule& h) {
  const CellStructure& cs = h.form().structure();
  if (field<int>(j, "level") != h.level()) {
    throw ConfigError("module element is at level " + std::to_string(field<int>(j, "level")) +
                      ", expected " + std::to_string(h.level()));
  }
  ModuleElement u = h.zero();
  if (!j.contains("cells") || !j.at("cells").is_object()) throw ConfigError("missing object 'cells'");
  for (const auto& [key, list] : j.at("cells").items()) {
    CellAddress a;
    try {
      a = CellAddress::parse(key);
    } catch (const Error& e) {
      throw ConfigError("bad cell address '" + key + "': " + e.what());
    }
    auto index = cs.find(a);
    if (!index || a.level() != h.level()) throw ConfigError("no level-" + std::to_string(h.level()) + " cell " + key);
    auto values = list.get<std::vector<double>>();
    if (static_cast<int>(values.size()) != u.cells[*index].size()) {
      throw ConfigError("cell " + key + " needs " + std::to_string(u.cells[*index].size()) + " values");
    }
    u.cells[*index] = Eigen::Map<Eigen::VectorXd>(values.data(), values.size());
  }
  u.canonicalize();
  return u;
}

}  // namespace fractal::io
