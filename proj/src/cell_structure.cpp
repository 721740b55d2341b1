#include "fractal/cell_structure.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "fractal/error.hpp"

namespace fractal {

namespace {

class DisjointSets {
 public:
  explicit DisjointSets(int n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

  int find(int x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent_[b] = a;
  }

 private:
  std::vector<int> parent_;
};

}  // namespace

CellAddress CellAddress::child(int j) const {
  CellAddress out = *this;
  out.word.push_back(j);
  return out;
}

CellAddress CellAddress::prefix(int level) const {
  CellAddress out;
  out.root = root;
  out.word.assign(word.begin(), word.begin() + level);
  return out;
}

std::string CellAddress::str() const {
  std::string out = std::to_string(root);
  for (int j : word) {
    out += '.';
    out += std::to_string(j);
  }
  return out;
}

CellAddress CellAddress::parse(const std::string& text) {
  CellAddress out;
  std::stringstream ss(text);
  std::string part;
  bool first = true;
  while (std::getline(ss, part, '.')) {
    if (part.empty() || part.find_first_not_of("0123456789") != std::string::npos) {
      throw ConfigError("malformed cell address '" + text + "'");
    }
    int value = std::stoi(part);
    if (first) {
      out.root = value;
      first = false;
    } else {
      out.word.push_back(value);
    }
  }
  if (first) throw ConfigError("empty cell address");
  return out;
}

ResolvedRule resolve_rule(const SubdivisionRule& rule, const std::string& where) {
  const int b = rule.boundary_size;
  if (b < 1) throw ConstructionError("rule '" + rule.name + "': boundary_size must be >= 1");
  if (rule.arity() < 1) throw ConstructionError("rule '" + rule.name + "': arity must be >= 1");

  int label_count = b;
  for (const auto& child : rule.child_boundary_maps) {
    if (child.empty()) {
      throw ConstructionError("rule '" + rule.name + "' at cell " + where + ": empty child");
    }
    for (int label : child) {
      if (label < 0) {
        throw ConstructionError("rule '" + rule.name + "' at cell " + where + ": negative label");
      }
      label_count = std::max(label_count, label + 1);
    }
  }
  for (auto [x, y] : rule.identifications) {
    if (x < 0 || y < 0 || x >= label_count || y >= label_count) {
      throw ConstructionError("rule '" + rule.name + "' at cell " + where +
                              ": identification label out of range");
    }
  }

  DisjointSets sets(label_count);
  for (auto [x, y] : rule.identifications) sets.unite(x, y);
  for (int i = 0; i < b; ++i) {
    for (int k = i + 1; k < b; ++k) {
      if (sets.find(i) == sets.find(k)) {
        throw ConstructionError("rule '" + rule.name + "' at cell " + where +
                                ": identification glues parent boundary vertices " +
                                std::to_string(i) + " and " + std::to_string(k));
      }
    }
  }

  // Boundary classes keep their label; new classes are numbered in order of
  // first appearance in the child maps.
  std::map<int, int> canonical;
  for (int i = 0; i < b; ++i) canonical[sets.find(i)] = i;
  int next = b;
  ResolvedRule out;
  out.boundary_size = b;
  for (std::size_t j = 0; j < rule.child_boundary_maps.size(); ++j) {
    std::vector<int> mapped;
    for (int label : rule.child_boundary_maps[j]) {
      int root = sets.find(label);
      auto it = canonical.find(root);
      if (it == canonical.end()) it = canonical.emplace(root, next++).first;
      mapped.push_back(it->second);
    }
    std::vector<int> sorted = mapped;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw ConstructionError("rule '" + rule.name + "' at cell " + where + ": child " +
                              std::to_string(j) + " lists a vertex twice");
    }
    out.child_maps.push_back(std::move(mapped));
  }
  out.new_vertex_count = next - b;
  return out;
}

CellStructure::CellStructure(std::string name, std::vector<std::vector<Cell>> levels)
    : name_(std::move(name)), levels_(std::move(levels)) {
  if (levels_.empty() || levels_[0].empty()) {
    throw ConstructionError("cell structure '" + name_ + "' has no level-0 cells");
  }
  for (auto& level : levels_) {
    for (auto& cell : level) cell.children.clear();
  }
  for (std::size_t n = 0; n < levels_.size(); ++n) {
    for (std::size_t i = 0; i < levels_[n].size(); ++i) {
      Cell& cell = levels_[n][i];
      if (cell.vertices.empty()) {
        throw ConstructionError("cell " + cell.address.str() + " has no boundary vertices");
      }
      std::vector<VertexId> sorted = cell.vertices;
      std::sort(sorted.begin(), sorted.end());
      if (sorted.front() < 0) {
        throw ConstructionError("cell " + cell.address.str() + " has a negative vertex id");
      }
      if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
        throw ConstructionError("cell " + cell.address.str() + " lists a vertex twice");
      }
      if (n == 0) {
        if (cell.parent != -1) {
          throw ConstructionError("level-0 cell " + cell.address.str() + " has a parent");
        }
        continue;
      }
      if (cell.parent < 0 || cell.parent >= static_cast<int>(levels_[n - 1].size())) {
        throw ConstructionError("cell " + cell.address.str() + " has an invalid parent index");
      }
      levels_[n - 1][cell.parent].children.push_back(static_cast<int>(i));
    }
  }

  level_vertices_.resize(levels_.size());
  positions_.resize(levels_.size());
  VertexId max_id = 0;
  for (const auto& level : levels_) {
    for (const auto& cell : level) {
      for (VertexId v : cell.vertices) max_id = std::max(max_id, v);
    }
  }
  for (std::size_t n = 0; n < levels_.size(); ++n) {
    std::set<VertexId> vs;
    for (const auto& cell : levels_[n]) vs.insert(cell.vertices.begin(), cell.vertices.end());
    level_vertices_[n].assign(vs.begin(), vs.end());
    positions_[n].assign(max_id + 1, -1);
    for (std::size_t k = 0; k < level_vertices_[n].size(); ++k) {
      positions_[n][level_vertices_[n][k]] = static_cast<int>(k);
    }
  }
}

int CellStructure::position(int level, VertexId v) const {
  const auto& pos = positions_.at(level);
  if (v < 0 || v >= static_cast<VertexId>(pos.size())) return -1;
  return pos[v];
}

int CellStructure::ancestor(int level, int index, int ancestor_level) const {
  if (ancestor_level > level || ancestor_level < 0) {
    throw PreconditionError("ancestor level must lie between 0 and the cell's level");
  }
  while (level > ancestor_level) {
    index = levels_[level][index].parent;
    --level;
  }
  return index;
}

std::vector<int> CellStructure::descendants(int level, int index, int descendant_level) const {
  if (descendant_level < level || descendant_level > depth()) {
    throw PreconditionError("descendant level out of range");
  }
  std::vector<int> current{index};
  for (int n = level; n < descendant_level; ++n) {
    std::vector<int> next;
    for (int i : current) {
      const auto& ch = levels_[n][i].children;
      next.insert(next.end(), ch.begin(), ch.end());
    }
    current = std::move(next);
  }
  return current;
}

std::vector<VertexId> CellStructure::new_vertices(int level, int index) const {
  if (level >= depth()) return {};
  std::set<VertexId> out;
  for (int c : levels_[level][index].children) {
    for (VertexId v : levels_[level + 1][c].vertices) {
      if (position(level, v) < 0) out.insert(v);
    }
  }
  return {out.begin(), out.end()};
}

std::optional<int> CellStructure::find(const CellAddress& address) const {
  int level = address.level();
  if (level > depth()) return std::nullopt;
  const auto& cells = levels_[level];
  auto it = std::lower_bound(cells.begin(), cells.end(), address,
                             [](const Cell& c, const CellAddress& a) { return c.address < a; });
  if (it == cells.end() || it->address != address) return std::nullopt;
  return static_cast<int>(it - cells.begin());
}

CellStructure CellStructure::restrict_depth(int new_depth) const {
  if (new_depth < 0 || new_depth > depth()) throw PreconditionError("restrict_depth out of range");
  std::vector<std::vector<Cell>> levels(levels_.begin(), levels_.begin() + new_depth + 1);
  return CellStructure(name_, std::move(levels));
}

CellStructure build_structure(const SubdivisionRule& rule,
                              const std::vector<std::vector<VertexId>>& roots, int depth,
                              std::string name) {
  if (depth < 0) throw PreconditionError("depth must be >= 0");
  if (roots.empty()) throw PreconditionError("at least one root cell is required");
  ResolvedRule resolved = resolve_rule(rule, "0");

  std::vector<std::vector<Cell>> levels(depth + 1);
  VertexId next_id = 0;
  for (std::size_t r = 0; r < roots.size(); ++r) {
    if (static_cast<int>(roots[r].size()) != resolved.boundary_size) {
      throw ConstructionError("root " + std::to_string(r) + " boundary size does not match rule '" +
                              rule.name + "'");
    }
    Cell cell;
    cell.address.root = static_cast<int>(r);
    cell.vertices = roots[r];
    for (VertexId v : roots[r]) next_id = std::max(next_id, v + 1);
    levels[0].push_back(std::move(cell));
  }

  for (int n = 0; n < depth; ++n) {
    for (std::size_t i = 0; i < levels[n].size(); ++i) {
      const Cell parent = levels[n][i];
      const VertexId base = next_id;
      next_id += resolved.new_vertex_count;
      for (int j = 0; j < static_cast<int>(resolved.child_maps.size()); ++j) {
        Cell child;
        child.address = parent.address.child(j);
        child.parent = static_cast<int>(i);
        for (int label : resolved.child_maps[j]) {
          child.vertices.push_back(label < resolved.boundary_size
                                       ? parent.vertices[label]
                                       : base + (label - resolved.boundary_size));
        }
        levels[n + 1].push_back(std::move(child));
      }
    }
  }
  return CellStructure(std::move(name), std::move(levels));
}

CellStructure build_structure(const SubdivisionRule& rule, int depth) {
  std::vector<VertexId> boundary(rule.boundary_size);
  std::iota(boundary.begin(), boundary.end(), 0);
  return build_structure(rule, {boundary}, depth, rule.name);
}

namespace rules {

SubdivisionRule interval() {
  return {"interval", 2, {{0, 2}, {2, 1}}, {}};
}

SubdivisionRule gasket() {
  // 3 = midpoint of 01, 4 = midpoint of 12, 5 = midpoint of 02.
  return {"gasket", 3, {{0, 3, 5}, {3, 1, 4}, {5, 4, 2}}, {}};
}

SubdivisionRule vicsek() {
  // Corners 0..3 counter-clockwise from the origin of the unit square. On the
  // 3x3 grid: 4..11 are the edge points, 12..15 the corners of the centre square.
  return {"vicsek",
          4,
          {{0, 4, 12, 11}, {5, 1, 6, 13}, {14, 7, 2, 8}, {10, 15, 9, 3}, {12, 13, 14, 15}},
          {}};
}

}  // namespace rules

CellStructure quantum_graph_structure(const std::vector<std::pair<VertexId, VertexId>>& edges,
                                      int subdivisions) {
  if (edges.empty()) throw PreconditionError("quantum graph needs at least one edge");
  VertexId max_id = -1;
  for (auto [u, v] : edges) {
    if (u < 0 || v < 0) throw PreconditionError("quantum graph vertex ids must be >= 0");
    if (u == v) throw PreconditionError("quantum graph edges must join distinct vertices");
    max_id = std::max({max_id, u, v});
  }
  std::vector<bool> used(max_id + 1, false);
  DisjointSets sets(max_id + 1);
  for (auto [u, v] : edges) {
    used[u] = used[v] = true;
    sets.unite(u, v);
  }
  for (VertexId v = 0; v <= max_id; ++v) {
    if (!used[v]) {
      throw PreconditionError("quantum graph vertex ids must be dense; " + std::to_string(v) +
                              " is unused");
    }
    if (sets.find(v) != sets.find(0)) throw PreconditionError("quantum graph is disconnected");
  }
  std::vector<std::vector<VertexId>> roots;
  for (auto [u, v] : edges) roots.push_back({u, v});
  return build_structure(rules::interval(), roots, subdivisions, "quantum_graph");
}

std::string to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::FRCS4:
      return "FRCS4";
    case ViolationKind::FRCS6:
      return "FRCS6";
    case ViolationKind::Nesting:
      return "nesting";
  }
  return "unknown";
}

ValidationReport validate_frcs(const CellStructure& cs) {
  ValidationReport report;
  const int depth = cs.depth();

  for (int n = 0; n < depth; ++n) {
    const auto& fine = cs.level_vertices(n + 1);
    for (VertexId v : cs.level_vertices(n)) {
      if (!std::binary_search(fine.begin(), fine.end(), v)) {
        report.violations.push_back({ViolationKind::Nesting, n, {},
                                     "vertex " + std::to_string(v) + " of V_" + std::to_string(n) +
                                         " is missing from V_" + std::to_string(n + 1)});
      }
    }
  }

  for (int n = 0; n < depth; ++n) {
    for (int i = 0; i < cs.cell_count(n); ++i) {
      const Cell& cell = cs.cell(n, i);
      std::set<VertexId> covered;
      for (int c : cell.children) {
        const auto& vs = cs.cell(n + 1, c).vertices;
        covered.insert(vs.begin(), vs.end());
      }
      for (VertexId v : cell.vertices) {
        if (!covered.count(v)) {
          report.violations.push_back(
              {ViolationKind::FRCS4, n, {cell.address},
               "boundary vertex " + std::to_string(v) + " of cell " + cell.address.str() +
                   " lies in none of its children"});
        }
      }
    }
  }

  // Points of an n-cell at finite depth: boundary vertices of its descendants
  // at the deepest level (together with its own boundary).
  for (int n = 0; n <= depth; ++n) {
    std::map<VertexId, std::vector<int>> owners;
    for (int i = 0; i < cs.cell_count(n); ++i) {
      std::set<VertexId> points(cs.cell(n, i).vertices.begin(), cs.cell(n, i).vertices.end());
      for (int d : cs.descendants(n, i, depth)) {
        const auto& vs = cs.cell(depth, d).vertices;
        points.insert(vs.begin(), vs.end());
      }
      for (VertexId v : points) owners[v].push_back(i);
    }
    for (const auto& [v, cells] : owners) {
      if (cells.size() < 2) continue;
      std::vector<CellAddress> offending;
      for (int i : cells) {
        const auto& vs = cs.cell(n, i).vertices;
        if (std::find(vs.begin(), vs.end(), v) == vs.end()) {
          offending.push_back(cs.cell(n, i).address);
        }
      }
      if (offending.empty()) continue;
      std::vector<CellAddress> involved;
      for (int i : cells) involved.push_back(cs.cell(n, i).address);
      std::string names;
      for (const auto& a : involved) names += (names.empty() ? "" : ", ") + a.str();
      report.violations.push_back({ViolationKind::FRCS6, n, involved,
                                   "cells {" + names + "} meet at vertex " + std::to_string(v) +
                                       ", which is not a common boundary vertex"});
    }
  }
  return report;
}

int cycle_rank(const CellStructure& cs, int level) {
  if (level < 0 || level > cs.depth()) throw PreconditionError("level out of range");
  const int cells = cs.cell_count(level);
  const int vertices = cs.vertex_count(level);
  DisjointSets sets(cells + vertices);
  long incidences = 0;
  for (int i = 0; i < cells; ++i) {
    for (VertexId v : cs.cell(level, i).vertices) {
      sets.unite(i, cells + cs.position(level, v));
      ++incidences;
    }
  }
  for (int k = 1; k < cells + vertices; ++k) {
    if (sets.find(k) != sets.find(0)) {
      throw PreconditionError("level-" + std::to_string(level) +
                              " cell/vertex incidence graph of '" + cs.name() +
                              "' is disconnected");
    }
  }
  return static_cast<int>(incidences - cells - vertices + 1);
}

bool is_tree(const CellStructure& cs) {
  for (int n = 0; n <= cs.depth(); ++n) {
    if (cycle_rank(cs, n) != 0) return false;
  }
  return true;
}

}  // namespace fractal
