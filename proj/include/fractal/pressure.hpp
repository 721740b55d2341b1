#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fractal/parallel.hpp"
#include "fractal/self_similar.hpp"

namespace fractal {

/// Quotient harmonic matrices with their weights. Products are taken as
/// S_m = B_m ... B_1, the last applied matrix on the left.
struct MatrixEnsemble {
  std::vector<Eigen::MatrixXd> matrices;
  std::vector<double> weights;
  Eigen::MatrixXd gram;
  std::optional<double> r;  // common resistance factor when all r_j agree

  static MatrixEnsemble from(const SelfSimilarStructure& ss);
  void validate() const;
  int size() const { return static_cast<int>(matrices.size()); }
  bool uniform_weights() const;
};

/// max_i sum_j |A(i, j)|.
double matrix_norm(const Eigen::MatrixXd& a);

constexpr std::int64_t kDefaultEnumerationCap = 2'000'000;

/// P_m(p) = (1/m) log sum_{|alpha| = m} mu_alpha ||S_alpha||^p by full
/// enumeration. Throws PreconditionError if N^m exceeds `cap`.
double pressure_exact(const MatrixEnsemble& ens, double p, int m,
                      std::int64_t cap = kDefaultEnumerationCap, int threads = thread_count());
std::vector<double> pressure_exact_grid(const MatrixEnsemble& ens, const std::vector<double>& ps,
                                        int m, std::int64_t cap = kDefaultEnumerationCap,
                                        int threads = thread_count());

/// (1/m) sum mu_alpha log ||S_alpha||, the derivative of P_m at 0.
double lyapunov_exact(const MatrixEnsemble& ens, int m, std::int64_t cap = kDefaultEnumerationCap,
                      int threads = thread_count());

struct MonteCarloEstimate {
  double estimate = 0.0;
  double std_error = 0.0;
  std::int64_t samples = 0;
};

/// Words are drawn i.i.d. from mu in chunks of fixed size; chunk c uses the
/// generator seeded with seed ^ c, so results do not depend on `threads`.
MonteCarloEstimate pressure_mc(const MatrixEnsemble& ens, double p, int m, std::int64_t samples,
                               std::uint64_t seed, int threads = thread_count());

struct LyapunovEstimate {
  MonteCarloEstimate mc;                   // (1/m) E log ||S_m||
  std::optional<double> exact;             // P_m'(0) by enumeration
  std::optional<double> finite_difference; // (P_m(h) - P_m(0)) / h
};

LyapunovEstimate lyapunov(const MatrixEnsemble& ens, int m, std::int64_t samples,
                          std::uint64_t seed, int threads = thread_count());

/// Bisection solve of P_m(q) = log mu on (lo, hi) to 1e-10. Needs equal
/// weights; throws PreconditionError when there is no sign change.
double critical_exponent(const MatrixEnsemble& ens, int m, double lo = 0.1, double hi = 2.5,
                         int threads = thread_count());

struct CriticalExponentEntry {
  int m = 0;
  std::optional<double> q;
  std::string note;
};

struct CriticalExponentReport {
  std::vector<CriticalExponentEntry> entries;
  std::optional<double> aitken;  // from the last three values
  bool non_increasing(double tol = 1e-9) const;
};

CriticalExponentReport critical_exponent_schedule(const MatrixEnsemble& ens,
                                                  const std::vector<int>& ms,
                                                  int threads = thread_count());

/// x3 - (x3 - x2)^2 / ((x3 - x2) - (x2 - x1)).
std::optional<double> aitken(double x1, double x2, double x3);

struct PressureCurve {
  int m = 0;
  std::vector<double> ps;
  std::vector<double> values;
  std::vector<double> stderrs;  // empty for exact curves
};

PressureCurve exact_curve(const MatrixEnsemble& ens, int m, const std::vector<double>& ps,
                          int threads = thread_count());

struct ConvexityReport {
  std::vector<double> second_differences;
  double min_second_difference = 0.0;
  bool convex = false;           // all >= -1e-9
  bool strictly_convex = false;  // all > 1e-12
  double derivative_at_zero = 0.0;
  double value_at_two = 0.0;
  double jensen_gap = 0.0;       // 2 P'(0) - P(2)
};

/// The grid must be uniform and contain 0 and 2. Without an exact derivative
/// P'(0) is the one-sided second-order difference at 0.
ConvexityReport convexity_report(const PressureCurve& curve,
                                 std::optional<double> derivative_at_zero = std::nullopt);

/// Heuristic look at the semigroup generated by the matrices: mean ratio of the
/// two largest singular values of random products and whether a coordinate
/// subspace is invariant under every matrix. Diagnostics only.
struct SemigroupDiagnostics {
  double mean_singular_ratio = 0.0;
  bool invariant_coordinate_subspace = false;
};

SemigroupDiagnostics semigroup_diagnostics(const MatrixEnsemble& ens, int m, int samples,
                                           std::uint64_t seed);

}  // namespace fractal
