#include <doctest.h>

#include <algorithm>

#include "fractal/cell_structure.hpp"
#include "fractal/error.hpp"

using namespace fractal;

namespace {

Cell make_cell(CellAddress a, std::vector<VertexId> v, int parent) {
  Cell c;
  c.address = std::move(a);
  c.vertices = std::move(v);
  c.parent = parent;
  return c;
}

// Depth-2 interval-like structure with an adjustable second level.
CellStructure two_level(std::vector<std::vector<VertexId>> level2) {
  std::vector<std::vector<Cell>> levels(3);
  levels[0].push_back(make_cell({0, {}}, {0, 1}, -1));
  levels[1].push_back(make_cell({0, {0}}, {0, 2}, 0));
  levels[1].push_back(make_cell({0, {1}}, {2, 1}, 0));
  for (int k = 0; k < 4; ++k) {
    levels[2].push_back(make_cell({0, {k / 2, k % 2}}, level2[k], k / 2));
  }
  return CellStructure("handmade", levels);
}

bool has_kind(const ValidationReport& r, ViolationKind k, const std::string& cell) {
  return std::any_of(r.violations.begin(), r.violations.end(), [&](const Violation& v) {
    if (v.kind != k) return false;
    return std::any_of(v.cells.begin(), v.cells.end(), [&](const CellAddress& a) { return a.str() == cell; });
  });
}

}  // namespace

TEST_CASE("interval depth 1 counts") {
  CellStructure cs = build_structure(rules::interval(), 1);
  CHECK(cs.vertex_count(0) == 2);
  CHECK(cs.vertex_count(1) == 3);
  CHECK(cs.cell_count(1) == 2);
  CHECK(cs.level_vertices(1) == std::vector<VertexId>{0, 1, 2});
  // the midpoint is shared by both children
  CHECK(cs.cell(1, 0).vertices == std::vector<VertexId>{0, 2});
  CHECK(cs.cell(1, 1).vertices == std::vector<VertexId>{2, 1});
}

TEST_CASE("gasket counts") {
  CellStructure cs = build_structure(rules::gasket(), 2);
  CHECK(cs.vertex_count(1) == 6);
  CHECK(cs.vertex_count(2) == 15);
  for (int i = 0; i < 3; ++i) {
    CHECK(cs.cell(1, i).vertices.size() == 3);
    for (int j = i + 1; j < 3; ++j) {
      int shared = 0;
      for (VertexId v : cs.cell(1, i).vertices) {
        const auto& w = cs.cell(1, j).vertices;
        shared += std::count(w.begin(), w.end(), v);
      }
      CHECK(shared == 1);
    }
  }
  for (int n = 0; n + 1 <= cs.depth(); ++n) {
    CHECK(cs.vertex_count(n + 1) == 3 * cs.vertex_count(n) - 3);
  }
}

TEST_CASE("validation") {
  CHECK(validate_frcs(build_structure(rules::gasket(), 3)).ok());
  CHECK(validate_frcs(build_structure(rules::vicsek(), 2)).ok());

  SUBCASE("well formed handmade structure") {
    CHECK(validate_frcs(two_level({{0, 3}, {3, 2}, {2, 4}, {4, 1}})).ok());
  }
  SUBCASE("child cells skip a boundary vertex of their parent") {
    ValidationReport r = validate_frcs(two_level({{0, 3}, {3, 2}, {5, 4}, {4, 1}}));
    CHECK(has_kind(r, ViolationKind::FRCS4, "0.1"));
  }
  SUBCASE("two 1-cells share an interior point") {
    ValidationReport r = validate_frcs(two_level({{0, 3}, {3, 2}, {2, 3}, {3, 1}}));
    CHECK(has_kind(r, ViolationKind::FRCS6, "0.0"));
    CHECK(has_kind(r, ViolationKind::FRCS6, "0.1"));
  }
}

TEST_CASE("cycle rank and tree verdict") {
  CellStructure g = build_structure(rules::gasket(), 3);
  CHECK(cycle_rank(g, 0) == 0);
  CHECK(cycle_rank(g, 1) == 1);
  CHECK(cycle_rank(g, 2) == 4);
  CHECK(cycle_rank(g, 3) == 13);
  CHECK_FALSE(is_tree(build_structure(rules::gasket(), 2)));

  CellStructure v = build_structure(rules::vicsek(), 3);
  CHECK(v.vertex_count(1) == 16);
  CHECK(cycle_rank(v, 1) == 0);
  CHECK(is_tree(v));
  CHECK(is_tree(build_structure(rules::interval(), 5)));

  for (auto cs : {g, v}) {
    for (int n = 0; n < cs.depth(); ++n) CHECK(cycle_rank(cs, n) <= cycle_rank(cs, n + 1));
  }
}

TEST_CASE("quantum graphs") {
  CellStructure tri = quantum_graph_structure({{0, 1}, {1, 2}, {2, 0}}, 0);
  CHECK(tri.cell_count(0) == 3);
  CHECK(tri.vertex_count(0) == 3);
  CHECK(cycle_rank(tri, 0) == 1);

  CellStructure path = quantum_graph_structure({{0, 1}, {1, 2}}, 2);
  CHECK(cycle_rank(path, 0) == 0);
  CHECK(is_tree(path));

  CellStructure theta = quantum_graph_structure({{0, 1}, {0, 1}, {0, 1}}, 2);
  CHECK(cycle_rank(theta, 0) == 2);
  CHECK(cycle_rank(theta, 2) == 2);
  CHECK(validate_frcs(theta).ok());

  CHECK_THROWS_AS(quantum_graph_structure({}, 1), PreconditionError);
  CHECK_THROWS_AS(quantum_graph_structure({{0, 1}, {2, 3}}, 1), PreconditionError);
}

TEST_CASE("nesting and prefix stability") {
  for (const auto& rule : {rules::interval(), rules::gasket(), rules::vicsek()}) {
    CellStructure deep = build_structure(rule, 3);
    CHECK(deep.restrict_depth(2) == build_structure(rule, 2));
    for (int n = 0; n < deep.depth(); ++n) {
      const auto& coarse = deep.level_vertices(n);
      const auto& fine = deep.level_vertices(n + 1);
      CHECK(std::includes(fine.begin(), fine.end(), coarse.begin(), coarse.end()));
      for (const Cell& c : deep.cells(n + 1)) {
        const auto& siblings = deep.cell(n, c.parent).children;
        CHECK(std::count(siblings.begin(), siblings.end(), deep.find(c.address).value()) == 1);
      }
    }
  }
}

TEST_CASE("addresses") {
  CellAddress a = CellAddress::parse("0.2.1");
  CHECK(a.root == 0);
  CHECK(a.level() == 2);
  CHECK(a.str() == "0.2.1");
  CHECK(a.prefix(1).str() == "0.2");
  CHECK(a.child(0).str() == "0.2.1.0");
  CHECK_THROWS_AS(CellAddress::parse("0..1"), ConfigError);
  CHECK_THROWS_AS(CellAddress::parse("x"), ConfigError);

  CellStructure cs = build_structure(rules::gasket(), 2);
  auto idx = cs.find(a);
  REQUIRE(idx);
  CHECK(cs.cell(2, *idx).address == a);
  CHECK(cs.ancestor(2, *idx, 1) == 2);
  CHECK(cs.descendants(0, 0, 2).size() == 9);
  CHECK(cs.new_vertices(0, 0).size() == 3);
}

TEST_CASE("rule resolution rejects bad rules") {
  SubdivisionRule r = rules::interval();
  r.identifications = {{0, 1}};
  CHECK_THROWS_AS(resolve_rule(r), ConstructionError);
  r = rules::interval();
  r.child_boundary_maps[0] = {0, 0};
  CHECK_THROWS_AS(resolve_rule(r), ConstructionError);
  r = rules::interval();
  r.child_boundary_maps[0] = {0, -1};
  CHECK_THROWS_AS(resolve_rule(r), ConstructionError);
}
