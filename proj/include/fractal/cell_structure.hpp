#pragma once

// Finitely ramified cell structures truncated at a finite depth.
//
// Cells are stored level by level in address-lexicographic order. Every cell
// carries its boundary vertex list V_alpha; the level vertex set V_n is the
// union of the boundary lists of the n-cells. Structures produced by the
// builders below assign vertex ids in creation order, so V_n is always the
// prefix {0, ..., |V_n| - 1} and ids never change when depth grows.

#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace fractal {

using VertexId = std::int32_t;

/// Address of a cell: the level-0 root it descends from plus the word of
/// child indices. Level is the word length.
struct CellAddress {
  int root = 0;
  std::vector<int> word;

  int level() const { return static_cast<int>(word.size()); }
  CellAddress child(int j) const;
  CellAddress prefix(int level) const;

  /// "root.w1.w2...", e.g. "0" for the root and "0.2.1" for a 2-cell.
  std::string str() const;
  static CellAddress parse(const std::string& text);

  auto operator<=>(const CellAddress&) const = default;
  bool operator==(const CellAddress&) const = default;
};

struct Cell {
  CellAddress address;
  std::vector<VertexId> vertices;  // V_alpha, in the cell's own boundary order
  int parent = -1;                 // index into the previous level, -1 at level 0
  std::vector<int> children;       // indices into the next level

  bool operator==(const Cell&) const = default;
};

/// Self-similar subdivision of a single cell.
///
/// Local labels 0 .. boundary_size-1 denote the parent's boundary vertices in
/// order; larger labels denote vertices created by the subdivision. Each child
/// lists its boundary as local labels. Extra label pairs in `identifications`
/// are glued together before ids are assigned.
struct SubdivisionRule {
  std::string name;
  int boundary_size = 0;
  std::vector<std::vector<int>> child_boundary_maps;
  std::vector<std::pair<int, int>> identifications;

  int arity() const { return static_cast<int>(child_boundary_maps.size()); }
};

/// Result of resolving identifications in a rule: a canonical label for each
/// raw label, with parent boundary labels fixed and new labels renumbered.
struct ResolvedRule {
  int boundary_size = 0;
  int new_vertex_count = 0;
  std::vector<std::vector<int>> child_maps;  // canonical labels
};

/// Checks a rule and merges its identifications. Throws ConstructionError
/// naming `where` when two parent boundary vertices get glued, a child lists
/// a vertex twice, or a label is out of range.
ResolvedRule resolve_rule(const SubdivisionRule& rule, const std::string& where = "0");

class CellStructure {
 public:
  CellStructure() = default;

  /// Builds from explicit levels. Computes V_n and the children lists from the
  /// parent indices. Only structural sanity is enforced here (valid parent
  /// indices, no repeated vertex inside a cell, nonempty cells); the FRCS
  /// conditions are checked by validate_frcs.
  CellStructure(std::string name, std::vector<std::vector<Cell>> levels);

  const std::string& name() const { return name_; }
  int depth() const { return static_cast<int>(levels_.size()) - 1; }

  const std::vector<Cell>& cells(int level) const { return levels_.at(level); }
  const Cell& cell(int level, int index) const { return levels_.at(level).at(index); }
  int cell_count(int level) const { return static_cast<int>(levels_.at(level).size()); }

  /// Sorted vertex ids of V_n.
  const std::vector<VertexId>& level_vertices(int level) const { return level_vertices_.at(level); }
  int vertex_count(int level) const { return static_cast<int>(level_vertices_.at(level).size()); }

  /// Position of vertex `v` inside V_n, or -1.
  int position(int level, VertexId v) const;

  /// Index of the level-`ancestor_level` cell containing the given cell.
  int ancestor(int level, int index, int ancestor_level) const;

  /// Indices of level-`descendant_level` cells inside the given cell.
  std::vector<int> descendants(int level, int index, int descendant_level) const;

  /// Vertices of V_{n+1} \ V_n lying in the n-cell (boundary vertices of its
  /// children that are not in V_n), sorted.
  std::vector<VertexId> new_vertices(int level, int index) const;

  std::optional<int> find(const CellAddress& address) const;

  /// The same structure truncated at `depth`.
  CellStructure restrict_depth(int depth) const;

  bool operator==(const CellStructure& other) const {
    return levels_ == other.levels_ && level_vertices_ == other.level_vertices_;
  }

 private:
  std::string name_;
  std::vector<std::vector<Cell>> levels_;
  std::vector<std::vector<VertexId>> level_vertices_;
  std::vector<std::vector<int>> positions_;
};

/// Applies `rule` recursively to `depth`, starting from a single root cell
/// with boundary 0 .. boundary_size-1.
CellStructure build_structure(const SubdivisionRule& rule, int depth);

/// Applies `rule` recursively to several level-0 cells. `roots` lists the
/// boundary vertices of each root; level-0 ids must be 0 .. max.
CellStructure build_structure(const SubdivisionRule& rule,
                              const std::vector<std::vector<VertexId>>& roots, int depth,
                              std::string name);

namespace rules {
SubdivisionRule interval();
SubdivisionRule gasket();
SubdivisionRule vicsek();
}  // namespace rules

/// Each edge of the graph is a level-0 interval cell; every level bisects all
/// edge cells. Throws PreconditionError for an empty or disconnected graph.
CellStructure quantum_graph_structure(const std::vector<std::pair<VertexId, VertexId>>& edges,
                                      int subdivisions);

enum class ViolationKind { FRCS4, FRCS6, Nesting };

struct Violation {
  ViolationKind kind;
  int level = 0;
  std::vector<CellAddress> cells;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
};

std::string to_string(ViolationKind kind);

/// Lists every FRCS4 and FRCS6 violation plus failures of V_n being a subset
/// of V_{n+1}. The points of a cell at finite depth are the boundary vertices
/// of its deepest descendants. FRCS7 is vacuous at finite depth.
ValidationReport validate_frcs(const CellStructure& cs);

/// First Betti number of the level-n cell/vertex incidence graph,
/// sum over n-cells of (|V_alpha| - 1), minus |V_n|, plus 1.
/// Throws PreconditionError if that graph is disconnected.
int cycle_rank(const CellStructure& cs, int level);

/// True iff no level carries a loop of cells.
bool is_tree(const CellStructure& cs);

}  // namespace fractal
