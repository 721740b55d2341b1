#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fractal/hilbert_module.hpp"

namespace fractal {

struct VertexMeasure {
  int level = 0;
  Eigen::VectorXd masses;  // indexed by position in V_n
};

/// mass(v) = sum over n-cells alpha containing v of mu_alpha / |V_alpha|, with
/// mu_alpha the product of the child weights along the address times
/// 1/#roots. `weights` are indexed by child position.
VertexMeasure vertex_measure(const CellStructure& cs, const std::vector<double>& weights, int level,
                             bool normalize = true);

enum class BoundaryCondition { Neumann, Dirichlet };
std::string to_string(BoundaryCondition bc);

struct EigenSystem {
  int level = 0;
  BoundaryCondition bc = BoundaryCondition::Neumann;
  Eigen::VectorXd eigenvalues;   // ascending
  Eigen::MatrixXd eigenvectors;  // columns on V_n, M-orthonormal, zero on V_0 for Dirichlet
  Eigen::VectorXd masses;

  int size() const { return static_cast<int>(eigenvalues.size()); }
  /// max_k ||L a_k - lambda_k M a_k||.
  double residual(const Eigen::MatrixXd& laplacian) const;
  /// max |a_j^T M a_k - delta_jk|.
  double orthonormality_residual() const;
};

/// Solves L a = lambda M a on V_n (Dirichlet: V_0 rows and columns removed).
EigenSystem laplacian_eigen(const ResistanceForm& form, const VertexMeasure& measure,
                            BoundaryCondition bc);

struct WeylFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // root-mean-square of the fit residuals
  int points = 0;
};

/// Least-squares slope of log N(lambda) against log lambda, pooling for each
/// level the points (log lambda_k, log(k+1)) over the lowest `keep_fraction`
/// of its positive eigenvalues.
WeylFit weyl_fit(const std::vector<EigenSystem>& systems, double keep_fraction = 0.75);

struct EigenbasisCheck {
  double sum = 0.0;           // sum_k ||Pperp(a xi_k)||^p
  double energy = 0.0;        // E_n(a)
  double ratio = 0.0;         // sum / E(a)^{p/2} (0 when a is constant)
  double gram_residual = 0.0; // max |<xi_j, xi_k> - delta_jk|
  bool below_dimension = false;  // p <= d_S: the bound has no finite constant
};

/// xi_k = lambda_k^{-1/2} d a_k for a Dirichlet system at the module's level;
/// a acts through its cell averages.
EigenbasisCheck eigenbasis_check(const VertexFunction& a, const EigenSystem& system,
                                 const HilbertModule& module, double p, double spectral_dim);

}  // namespace fractal
