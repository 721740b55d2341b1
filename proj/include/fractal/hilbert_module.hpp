#pragma once

#include <memory>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fractal/resistance_form.hpp"

namespace fractal {

/// An element of H_n: harmonic data on each n-cell, modulo constants. Cell
/// data are stored in zero-sum canonical form, in the cell's boundary order.
struct ModuleElement {
  int level = 0;
  std::vector<Eigen::VectorXd> cells;

  void canonicalize();
  ModuleElement& operator+=(const ModuleElement& other);
  ModuleElement& operator-=(const ModuleElement& other);
  ModuleElement& operator*=(double s);
};

ModuleElement operator+(ModuleElement a, const ModuleElement& b);
ModuleElement operator-(ModuleElement a, const ModuleElement& b);
ModuleElement operator*(double s, ModuleElement a);

struct Projection {
  VertexFunction potential;  // f with P u = d f, pinned to 0 at the first vertex of V_0
  ModuleElement p;           // P u
  ModuleElement p_perp;      // u - P u
};

/// H_n for one level of a resistance form. Flat coordinates concatenate the
/// cell data in cell order; the Gram matrix in those coordinates is the
/// block-diagonal matrix of cell Laplacians.
class HilbertModule {
 public:
  HilbertModule(std::shared_ptr<const ResistanceForm> form, int level);

  const ResistanceForm& form() const { return *form_; }
  const std::shared_ptr<const ResistanceForm>& form_ptr() const { return form_; }
  int level() const { return level_; }

  /// sum over n-cells of (|V_alpha| - 1).
  int dimension() const { return dimension_; }
  /// Length of a flat coordinate vector, sum over n-cells of |V_alpha|.
  int flat_size() const { return flat_size_; }
  int cell_offset(int index) const { return offsets_[index]; }

  ModuleElement zero() const;
  ModuleElement from_flat(const Eigen::VectorXd& x) const;
  Eigen::VectorXd to_flat(const ModuleElement& u) const;
  const Eigen::MatrixXd& gram() const { return gram_; }

  double inner_product(const ModuleElement& u, const ModuleElement& v) const;
  double norm(const ModuleElement& u) const;

  /// d f: restriction of f to each n-cell.
  ModuleElement derivation(const VertexFunction& f) const;

  /// Element supported on one n-cell.
  ModuleElement embed_cell(int index, const Eigen::VectorXd& values) const;

  /// Sum over cells containing v of the cell normal derivatives at v, for
  /// every v in V_n.
  Eigen::VectorXd normal_derivative_sums(const ModuleElement& u) const;

  /// Orthogonal projection onto the image of d via the Neumann system
  /// L_n f = sum_alpha R_alpha^T L_alpha u_alpha.
  Projection project(const ModuleElement& u) const;
  ModuleElement project_P(const ModuleElement& u) const { return project(u).p; }
  ModuleElement project_P_perp(const ModuleElement& u) const { return project(u).p_perp; }

  /// P-perp of (h tensor 1_alpha), h the n-harmonic tent at p, computed with
  /// the split-vertex network in which p is cut into p_in (edges of cell
  /// alpha) and p_out (edges of every other cell).
  ModuleElement eta_projection(VertexId p, int cell_index) const;

  /// Projector matrices in flat coordinates (acting on canonical vectors).
  Eigen::MatrixXd projector_P() const;

  /// Random element with independent normal cell data.
  template <class Rng>
  ModuleElement random_element(Rng& rng) const;

 private:
  std::shared_ptr<const ResistanceForm> form_;
  int level_;
  int dimension_ = 0;
  int flat_size_ = 0;
  std::vector<int> offsets_;
  Eigen::MatrixXd gram_;
  Eigen::LLT<Eigen::MatrixXd> pinned_solver_;  // L_n with the gauge vertex removed
  int gauge_ = 0;
};

/// Harmonic extension of every cell to its children.
ModuleElement include(const ResistanceForm& form, const ModuleElement& u);
ModuleElement include(const ResistanceForm& form, const ModuleElement& u, int target_level);

struct HodgeBlock {
  enum class Kind { P0, Pperp0, D, N };
  Kind kind;
  int level = 0;       // level of the cell alpha (0 for the H_0 blocks)
  int cell = -1;       // index of alpha in its level, -1 for the H_0 blocks
  int offset = 0;      // first column in the basis
  int size = 0;
  int sign() const { return kind == Kind::P0 || kind == Kind::D ? 1 : -1; }
};

std::string to_string(HodgeBlock::Kind kind);

/// Orthonormal basis of H_N adapted to
/// H_N = PH_0 + P-perp H_0 + sum over m < N, alpha in A_m of (J^D_alpha + J^N_alpha).
class HodgeBasis {
 public:
  HodgeBasis(std::shared_ptr<const ResistanceForm> form, int level);

  const HilbertModule& module() const { return module_; }
  int level() const { return module_.level(); }
  int dimension() const { return static_cast<int>(basis_.cols()); }

  /// Columns are flat coordinates of the basis elements in H_N.
  const Eigen::MatrixXd& matrix() const { return basis_; }
  const std::vector<HodgeBlock>& blocks() const { return blocks_; }
  /// +1 on P-side blocks, -1 on P-perp blocks.
  const Eigen::VectorXd& signs() const { return signs_; }

  ModuleElement element(int k) const;
  /// Hodge coordinates of an element (requires an orthonormal basis).
  Eigen::VectorXd coordinates(const ModuleElement& u) const;
  ModuleElement from_coordinates(const Eigen::VectorXd& c) const;

  /// Matrix of a flat-coordinate operator T in the basis: B^T G T B.
  Eigen::MatrixXd represent(const Eigen::MatrixXd& flat_operator) const;

  /// max |B^T G B - I|.
  double gram_residual() const;

  /// Number of leading coordinates spanning H_m (blocks of level < m plus H_0).
  int prefix_dimension(int m) const;

 private:
  HilbertModule module_;
  Eigen::MatrixXd basis_;
  std::vector<HodgeBlock> blocks_;
  Eigen::VectorXd signs_;
};

struct DimensionRow {
  int level = 0;
  int dim_h = 0;
  int dim_p = 0;
  int dim_p_perp = 0;
  int rank_p = 0;       // numerical rank of the assembled Neumann projector
  int rank_p_perp = 0;
  bool consistent() const { return dim_p == rank_p && dim_p_perp == rank_p_perp; }
};

std::vector<DimensionRow> dimension_report(std::shared_ptr<const ResistanceForm> form, int max_level);

template <class Rng>
ModuleElement HilbertModule::random_element(Rng& rng) const {
  std::normal_distribution<double> normal(0.0, 1.0);
  ModuleElement u = zero();
  for (auto& c : u.cells) {
    for (int k = 0; k < c.size(); ++k) c[k] = normal(rng);
  }
  u.canonicalize();
  return u;
}

}  // namespace fractal
