#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "fractal/cell_structure.hpp"
#include "fractal/resistance_form.hpp"

namespace fractal {

/// Self-similar harmonic structure: one subdivision rule applied to a single
/// root, resistance factors r_j, measure weights mu_j and a base network on V_0.
struct SelfSimilarStructure {
  std::string name;
  SubdivisionRule rule;
  std::vector<double> r;
  std::vector<double> mu;
  Network base;  // on vertex ids 0 .. boundary_size-1

  int arity() const { return rule.arity(); }
  int boundary_size() const { return rule.boundary_size; }
  bool uniform_r() const;
  bool uniform_mu() const;
};

/// Checks weights, factors and the base network; throws ConstructionError.
/// The renormalisation fixed point is checked separately (fixed_point_deviation).
void validate(const SelfSimilarStructure& ss);

namespace builtin {
SelfSimilarStructure interval();
SelfSimilarStructure gasket();
SelfSimilarStructure vicsek();
}  // namespace builtin

/// Cell alpha at level m carries the base network relabelled onto V_alpha and
/// scaled by 1/r_alpha.
ResistanceForm decimate(const SelfSimilarStructure& ss, int depth);

/// Every sub-edge at level n of a quantum graph has conductance 2^n.
ResistanceForm quantum_graph_form(const std::vector<std::pair<VertexId, VertexId>>& edges,
                                  int subdivisions);

/// Max conductance deviation between the trace of the level-1 form and the
/// base network.
double fixed_point_deviation(const SelfSimilarStructure& ss);

struct HarmonicMatrices {
  std::vector<Eigen::MatrixXd> A;        // |V_0| x |V_0|
  std::vector<Eigen::MatrixXd> A_tilde;  // (|V_0|-1) x (|V_0|-1), difference basis
  Eigen::MatrixXd gram;                  // energy Gram in the difference basis
  std::vector<double> r;

  /// G^{-1} M^T G, the adjoint for the energy inner product.
  Eigen::MatrixXd adjoint(const Eigen::MatrixXd& m) const;
};

/// Row k of A_j holds the value at F_j(v_k) of the harmonic extensions of the
/// boundary indicator functions. The quotient basis is h(v_k) - h(v_0),
/// k = 1 .. |V_0|-1. Throws ConstructionError when the structure is not at
/// its renormalisation fixed point (tolerance 1e-10 relative to the base).
HarmonicMatrices harmonic_matrices(const SelfSimilarStructure& ss);

/// max-norm of sum_j A~_j^dagger A~_j - r I. Throws PreconditionError if the
/// r_j differ.
double selfsimilar_identity_residual(const HarmonicMatrices& hm, double r);
double selfsimilar_identity_residual(const HarmonicMatrices& hm);

/// The d in (0, 2) with sum_j (r_j mu_j)^{d/2} = 1.
double spectral_dimension(const SelfSimilarStructure& ss);
double spectral_dimension(const std::vector<double>& r, const std::vector<double>& mu);

}  // namespace fractal
