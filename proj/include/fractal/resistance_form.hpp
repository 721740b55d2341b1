#pragma once

#include <map>
#include <memory>
#include <vector>

#include <Eigen/Dense>

#include "fractal/cell_structure.hpp"

namespace fractal {

/// A conductance between two local vertex indices, a < b, c > 0.
struct Edge {
  int a = 0;
  int b = 0;
  double conductance = 0.0;
};

/// Finite electrical network. Energy is E(u) = sum over edges c_ab (u_a - u_b)^2,
/// each unordered pair counted once.
class Network {
 public:
  Network() = default;

  /// Edges are canonicalised: endpoints ordered, duplicates summed, zero
  /// conductances dropped. Negative conductances and self-loops throw.
  Network(std::vector<VertexId> vertices, const std::vector<Edge>& edges);

  /// Reads pairwise conductances from the strict upper triangle of `conductance`.
  static Network from_matrix(std::vector<VertexId> vertices, const Eigen::MatrixXd& conductance);

  /// Conductances are the negated off-diagonal entries of a Laplacian-like
  /// matrix. Off-diagonal entries above `tolerance` are an error; entries with
  /// magnitude at most `tolerance` are dropped.
  static Network from_laplacian(std::vector<VertexId> vertices, const Eigen::MatrixXd& laplacian,
                                double tolerance = 1e-13);

  int size() const { return static_cast<int>(vertices_.size()); }
  const std::vector<VertexId>& vertices() const { return vertices_; }
  const std::vector<Edge>& edges() const { return edges_; }

  /// Local index of a vertex id, or -1.
  int local_index(VertexId v) const;
  double conductance(int a, int b) const;

  /// L with u^T L u = E(u).
  Eigen::MatrixXd laplacian() const;
  Eigen::MatrixXd conductance_matrix() const;

  double energy(const Eigen::VectorXd& u) const { return energy(u, u); }
  double energy(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const;

  Network scaled(double factor) const;
  bool connected() const;

 private:
  std::vector<VertexId> vertices_;
  std::vector<Edge> edges_;
};

/// Laplacian of a network; free-function form of Network::laplacian.
Eigen::MatrixXd laplacian(const Network& net);

/// Trace of `net` onto the listed boundary vertices (in that order), computed
/// as the Schur complement L_BB - L_BI L_II^{-1} L_IB. Throws
/// SingularNetworkError naming an interior component with no path to the
/// boundary.
Network trace_to(const Network& net, const std::vector<VertexId>& boundary);

/// Effective resistance between two distinct vertices of a connected network.
double effective_resistance(const Network& net, VertexId x, VertexId y);

/// max |c_xy - c'_xy| over all pairs of vertex ids; both networks must live on
/// the same vertex set (orders may differ).
double max_conductance_deviation(const Network& lhs, const Network& rhs);

/// Values on V_n, indexed by position inside CellStructure::level_vertices(n).
struct VertexFunction {
  int level = 0;
  Eigen::VectorXd values;
};

/// Cell-wise conductance networks E_alpha at every level of a cell structure.
class ResistanceForm {
 public:
  /// `cell_networks[n][i]` must live on exactly the boundary list of cell
  /// (n, i), in the same order, and be connected (irreducible). Precomputes the
  /// per-cell harmonic extension from V_alpha to its children.
  ResistanceForm(std::shared_ptr<const CellStructure> structure,
                 std::vector<std::vector<Network>> cell_networks);

  const CellStructure& structure() const { return *structure_; }
  const std::shared_ptr<const CellStructure>& structure_ptr() const { return structure_; }
  int depth() const { return structure_->depth(); }

  const Network& cell_network(int level, int index) const { return networks_.at(level).at(index); }
  const Eigen::MatrixXd& cell_laplacian(int level, int index) const {
    return laplacians_.at(level).at(index);
  }

  /// E_n = sum of the n-cell networks, on V_n in level order.
  Network level_network(int level) const;
  Eigen::MatrixXd level_laplacian(int level) const;
  double level_energy(const VertexFunction& f) const;

  /// Trace of E_{n+1} to V_n. Each vertex of V_{n+1} \ V_n lies in exactly one
  /// n-cell, so the Schur complement splits into per-cell complements that are
  /// summed here.
  Network level_trace(int level) const;

  /// max conductance deviation between level_trace(n) and E_n.
  double check_compatibility(int level) const;

  /// V_alpha followed by the new vertices of the n-cell (sorted), i.e. the
  /// boundary vertices of its children.
  const std::vector<VertexId>& child_vertex_list(int level, int index) const {
    return child_vertices_.at(level).at(index);
  }
  /// Matrix taking values on V_alpha to the harmonic extension on
  /// child_vertex_list(level, index).
  const Eigen::MatrixXd& child_extension(int level, int index) const {
    return extensions_.at(level).at(index);
  }

  /// Extends values on V_n to V_m by solving each cell's interior level by level.
  VertexFunction harmonic_extension(const VertexFunction& f, int target_level) const;

  /// Restriction of a level-n vertex function to the boundary of an n-cell.
  Eigen::VectorXd restrict_to_cell(const VertexFunction& f, int index) const;

  double cell_energy(int level, int index, const Eigen::VectorXd& u,
                     const Eigen::VectorXd& v) const;

  /// d h(p) = sum_q c_pq (h(p) - h(q)) on the cell network, so that
  /// E_alpha(u, h) = sum_p u(p) d h(p).
  double normal_derivative(int level, int index, const Eigen::VectorXd& h, VertexId p) const;
  Eigen::VectorXd normal_derivatives(int level, int index, const Eigen::VectorXd& h) const;

  /// nu_u(X_beta) for every level-m cell, where u is given on V_n (m >= n) and
  /// extended harmonically.
  std::vector<double> energy_measure(const VertexFunction& u, int target_level) const;

  /// Copy with some cell networks replaced.
  ResistanceForm with_cell_networks(const std::map<CellAddress, Network>& overrides) const;

 private:
  std::shared_ptr<const CellStructure> structure_;
  std::vector<std::vector<Network>> networks_;
  std::vector<std::vector<Eigen::MatrixXd>> laplacians_;
  std::vector<std::vector<std::vector<VertexId>>> child_vertices_;
  std::vector<std::vector<Eigen::MatrixXd>> extensions_;
};

}  // namespace fractal
