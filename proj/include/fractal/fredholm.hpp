#pragma once

#include <vector>

#include <Eigen/Dense>

#include "fractal/hilbert_module.hpp"

namespace fractal {

/// Simple function sum_beta a_beta 1_beta, constant on the cells of one level.
struct Multiplier {
  int level = 0;
  std::vector<double> values;

  static Multiplier constant(const CellStructure& cs, int level, double c);
  static Multiplier indicator(const CellStructure& cs, const CellAddress& cell);
  double sup_norm() const;
};

Multiplier operator-(const Multiplier& a, const Multiplier& b);

/// Same function, written on the cells of a finer level.
Multiplier refine(const CellStructure& cs, const Multiplier& a, int level);

/// Harmonic extension of f to `level`, then the mean of the vertex values on
/// each cell.
Multiplier cell_average(const ResistanceForm& form, const VertexFunction& f, int level);

/// Scales each cell's data by the value of a on the enclosing cell.
ModuleElement multiply(const CellStructure& cs, const ModuleElement& u, const Multiplier& a);

/// Right multiplication in flat coordinates of the module (diagonal).
Eigen::MatrixXd multiplication_operator(const HilbertModule& h, const Multiplier& a);
/// Right multiplication in Hodge coordinates (symmetric).
Eigen::MatrixXd multiplication_matrix(const HodgeBasis& basis, const Multiplier& a);

/// F = P - P-perp in Hodge coordinates.
Eigen::MatrixXd operator_F(const HodgeBasis& basis);

/// F A - A F in Hodge coordinates.
Eigen::MatrixXd commutator_matrix(const Multiplier& a, const HodgeBasis& basis);

struct SingularSpectrum {
  std::vector<double> values;  // non-increasing
  double frobenius_squared() const;
  /// max_k |s_{2k} - s_{2k+1}|: zero when every value has even multiplicity.
  double pairing_defect() const;
};

SingularSpectrum singular_values(const Eigen::MatrixXd& m);

struct SummabilityRow {
  double p = 0.0;
  double p_sum = 0.0;        // sum s_k^p
  double weak_sum = 0.0;     // sup_N N^{1/p-1} sum_{k<N} s_k
  double log_weak_sum = 0.0; // sup_{N>=2} (log N)^{-1} sum_{k<N} s_k^p
};

struct SummabilityReport {
  std::vector<SummabilityRow> rows;
  std::vector<double> dixmier;  // (log N)^{-1} sum_{k<N} s_k for N = 2 .. len
  double trace = 0.0;           // sum s_k
};

/// Exponents must lie in (0, 2].
SummabilityReport summability_report(const SingularSpectrum& s, const std::vector<double>& ps);

/// sum s_k^p for each spectrum of a family (e.g. increasing truncation levels).
std::vector<double> p_sum_sequence(const std::vector<SingularSpectrum>& family, double p);

struct OscillationCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  int L = 0;
  bool pass() const { return lhs <= rhs; }
};

/// lhs = sum over the Hodge basis of ||[F,a] xi_k||^p; rhs = sum over the
/// cells owning a block of 8 L Osc_alpha(a)^p, where Osc_alpha is the largest
/// deviation of a on the N-cells inside alpha from its mean there and L is the
/// largest number of new vertices per cell (|V_0| for the top level).
OscillationCheck oscillation_bound_check(const Multiplier& a, const HodgeBasis& basis, double p);
OscillationCheck oscillation_bound_check(const VertexFunction& f, const HodgeBasis& basis, double p);

/// max(||P(v 1_alpha) - (P v) 1_alpha||, ||Pperp(v 1_alpha) - (Pperp v) 1_alpha||)
/// for v in H_N orthogonal to H_n and alpha an n-cell. Throws
/// PreconditionError when v is not orthogonal to H_n (tolerance 1e-9).
double localization_residual(const ModuleElement& v, int n, int cell_index,
                             const HodgeBasis& basis);

struct RankCheck {
  int rank = 0;
  int bound = 0;
  bool pass() const { return rank <= bound; }
};

/// Numerical rank of [F,a] (values above 1e-9 max(s_0, ||a||_inf)) against dim H_n.
RankCheck rank_check(const Multiplier& a, const HodgeBasis& basis);

/// max ||[F,a] xi|| over basis vectors xi in blocks of cells at level >= a.level.
double kernel_residual(const Multiplier& a, const HodgeBasis& basis);

}  // namespace fractal
