#include "fractal/pressure.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "fractal/error.hpp"

namespace fractal {

MatrixEnsemble MatrixEnsemble::from(const SelfSimilarStructure& ss) {
  HarmonicMatrices hm = harmonic_matrices(ss);
  MatrixEnsemble ens{hm.A_tilde, ss.mu, hm.gram, std::nullopt};
  if (ss.uniform_r()) ens.r = ss.r.front();
  return ens;
}

void MatrixEnsemble::validate() const {
  if (matrices.empty() || matrices.size() != weights.size()) {
    throw PreconditionError("ensemble needs one weight per matrix");
  }
  const auto d = matrices.front().rows();
  for (const auto& a : matrices) {
    if (a.rows() != d || a.cols() != d) throw PreconditionError("ensemble matrices must be square and equal in size");
  }
  double total = 0.0;
  for (double w : weights) {
    if (!(w > 0.0)) throw PreconditionError("ensemble weights must be positive");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) throw PreconditionError("ensemble weights must sum to 1");
}

bool MatrixEnsemble::uniform_weights() const {
  for (double w : weights) {
    if (std::abs(w - weights.front()) > 1e-14) return false;
  }
  return true;
}

double matrix_norm(const Eigen::MatrixXd& a) {
  if (a.size() == 0) return 0.0;
  return a.cwiseAbs().rowwise().sum().maxCoeff();
}

namespace {

// Per word of length m: weight mu_alpha and ||S_alpha||. Accumulates, in
// enumeration order, sum mu ||S||^p for each p, then sum mu log ||S|| last.
std::vector<double> enumerate(const MatrixEnsemble& ens, const std::vector<double>& ps, int m,
                              std::int64_t cap, int threads) {
  ens.validate();
  if (m < 1) throw PreconditionError("word length m must be >= 1");
  const int n = ens.size();
  double words = std::pow(static_cast<double>(n), m);
  if (words > static_cast<double>(cap)) {
    throw PreconditionError("enumeration of " + std::to_string(n) + "^" + std::to_string(m) +
                            " words exceeds the cap of " + std::to_string(cap) +
                            "; use pressure_mc");
  }
  int split = 0;
  std::int64_t chunks = 1;
  while (split < m && chunks < 64) {
    ++split;
    chunks *= n;
  }
  const int d = static_cast<int>(ens.matrices.front().rows());
  const std::size_t width = ps.size() + 1;

  auto run = [&](int chunk) {
    std::vector<double> acc(width, 0.0);
    // Decode the prefix: first letter is the most significant digit.
    std::vector<int> prefix(split);
    int code = chunk;
    for (int k = split - 1; k >= 0; --k) {
      prefix[k] = code % n;
      code /= n;
    }
    Eigen::MatrixXd s = Eigen::MatrixXd::Identity(d, d);
    double w = 1.0;
    for (int j : prefix) {
      s = ens.matrices[j] * s;
      w *= ens.weights[j];
    }
    const int rest = m - split;
    std::vector<Eigen::MatrixXd> stack(rest + 1, s);
    std::vector<double> wstack(rest + 1, w);
    std::vector<int> letter(rest + 1, 0);
    auto visit = [&](const Eigen::MatrixXd& prod, double weight) {
      const double norm = matrix_norm(prod);
      for (std::size_t k = 0; k < ps.size(); ++k) acc[k] += weight * std::pow(norm, ps[k]);
      acc[ps.size()] += weight * std::log(norm);
    };
    if (rest == 0) {
      visit(s, w);
      return acc;
    }
    // Iterative depth-first walk over the remaining letters.
    int depth = 0;
    letter[0] = 0;
    while (depth >= 0) {
      if (letter[depth] == n) {
        --depth;
        if (depth >= 0) ++letter[depth];
        continue;
      }
      const int j = letter[depth];
      stack[depth + 1].noalias() = ens.matrices[j] * stack[depth];
      wstack[depth + 1] = wstack[depth] * ens.weights[j];
      if (depth + 1 == rest) {
        visit(stack[depth + 1], wstack[depth + 1]);
        ++letter[depth];
      } else {
        ++depth;
        letter[depth] = 0;
      }
    }
    return acc;
  };

  auto parts = parallel_chunks<std::vector<double>>(static_cast<int>(chunks), threads, run);
  std::vector<double> total(width, 0.0);
  for (const auto& part : parts) {
    for (std::size_t k = 0; k < width; ++k) total[k] += part[k];
  }
  return total;
}

}  // namespace

std::vector<double> pressure_exact_grid(const MatrixEnsemble& ens, const std::vector<double>& ps,
                                        int m, std::int64_t cap, int threads) {
  std::vector<double> sums = enumerate(ens, ps, m, cap, threads);
  std::vector<double> out;
  for (std::size_t k = 0; k < ps.size(); ++k) out.push_back(std::log(sums[k]) / m);
  return out;
}

double pressure_exact(const MatrixEnsemble& ens, double p, int m, std::int64_t cap, int threads) {
  return pressure_exact_grid(ens, {p}, m, cap, threads).front();
}

double lyapunov_exact(const MatrixEnsemble& ens, int m, std::int64_t cap, int threads) {
  return enumerate(ens, {}, m, cap, threads).back() / m;
}

namespace {

constexpr std::int64_t kChunkSamples = 4096;

// Per chunk: sum x and sum x^2 of f(S_m) over the chunk's samples.
template <class F>
std::pair<double, double> sample_moments(const MatrixEnsemble& ens, int m, std::int64_t samples,
                                         std::uint64_t seed, int threads, F f) {
  ens.validate();
  if (samples < 100) throw PreconditionError("Monte Carlo needs at least 100 samples");
  if (m < 1) throw PreconditionError("word length m must be >= 1");
  const int chunks = static_cast<int>((samples + kChunkSamples - 1) / kChunkSamples);
  std::vector<double> cumulative(ens.weights.size());
  std::partial_sum(ens.weights.begin(), ens.weights.end(), cumulative.begin());
  const int d = static_cast<int>(ens.matrices.front().rows());

  auto run = [&](int chunk) {
    std::mt19937_64 rng(seed ^ static_cast<std::uint64_t>(chunk));
    std::uniform_real_distribution<double> uniform(0.0, cumulative.back());
    const std::int64_t begin = chunk * kChunkSamples;
    const std::int64_t count = std::min(kChunkSamples, samples - begin);
    double sx = 0.0, sxx = 0.0;
    Eigen::MatrixXd s(d, d), tmp(d, d);
    for (std::int64_t i = 0; i < count; ++i) {
      s.setIdentity();
      for (int k = 0; k < m; ++k) {
        const double u = uniform(rng);
        int j = static_cast<int>(std::upper_bound(cumulative.begin(), cumulative.end(), u) -
                                 cumulative.begin());
        j = std::min(j, static_cast<int>(cumulative.size()) - 1);
        tmp.noalias() = ens.matrices[j] * s;
        s.swap(tmp);
      }
      const double x = f(matrix_norm(s));
      sx += x;
      sxx += x * x;
    }
    return std::pair<double, double>{sx, sxx};
  };
  auto parts = parallel_chunks<std::pair<double, double>>(chunks, threads, run);
  double sx = 0.0, sxx = 0.0;
  for (const auto& [a, b] : parts) {
    sx += a;
    sxx += b;
  }
  return {sx, sxx};
}

}  // namespace

MonteCarloEstimate pressure_mc(const MatrixEnsemble& ens, double p, int m, std::int64_t samples,
                               std::uint64_t seed, int threads) {
  auto [sx, sxx] =
      sample_moments(ens, m, samples, seed, threads, [p](double norm) { return std::pow(norm, p); });
  const double n = static_cast<double>(samples);
  const double mean = sx / n;
  const double var = std::max(0.0, (sxx / n - mean * mean) * n / (n - 1.0));
  MonteCarloEstimate out;
  out.estimate = std::log(mean) / m;
  out.std_error = std::sqrt(var / n) / mean / m;
  out.samples = samples;
  return out;
}

LyapunovEstimate lyapunov(const MatrixEnsemble& ens, int m, std::int64_t samples,
                          std::uint64_t seed, int threads) {
  auto [sx, sxx] =
      sample_moments(ens, m, samples, seed, threads, [m](double norm) { return std::log(norm) / m; });
  const double n = static_cast<double>(samples);
  const double mean = sx / n;
  const double var = std::max(0.0, (sxx / n - mean * mean) * n / (n - 1.0));
  LyapunovEstimate out;
  out.mc = {mean, std::sqrt(var / n), samples};
  if (std::pow(static_cast<double>(ens.size()), m) <= static_cast<double>(kDefaultEnumerationCap)) {
    out.exact = lyapunov_exact(ens, m, kDefaultEnumerationCap, threads);
    const double h = 1e-6;
    auto vals = pressure_exact_grid(ens, {0.0, h}, m, kDefaultEnumerationCap, threads);
    out.finite_difference = (vals[1] - vals[0]) / h;
  }
  return out;
}

double critical_exponent(const MatrixEnsemble& ens, int m, double lo, double hi, int threads) {
  ens.validate();
  if (!ens.uniform_weights()) throw PreconditionError("critical_exponent needs equal weights");
  const double target = std::log(ens.weights.front());
  auto f = [&](double q) { return pressure_exact(ens, q, m, kDefaultEnumerationCap, threads) - target; };
  double flo = f(lo), fhi = f(hi);
  if (!(flo > 0.0 && fhi < 0.0)) {
    throw PreconditionError("critical_exponent: no sign change of P_" + std::to_string(m) +
                            "(q) - log mu on (" + std::to_string(lo) + ", " + std::to_string(hi) +
                            "); values " + std::to_string(flo) + ", " + std::to_string(fhi));
  }
  while (hi - lo > 1e-10) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

std::optional<double> aitken(double x1, double x2, double x3) {
  const double denom = (x3 - x2) - (x2 - x1);
  if (std::abs(denom) < 1e-15) return std::nullopt;
  return x3 - (x3 - x2) * (x3 - x2) / denom;
}

bool CriticalExponentReport::non_increasing(double tol) const {
  std::optional<double> prev;
  for (const auto& e : entries) {
    if (!e.q) {
      // No root in the bracket: the upper bound is above the bracket, so only
      // later entries without a root would break monotonicity.
      if (prev) return false;
      continue;
    }
    if (prev && *e.q > *prev + tol) return false;
    prev = e.q;
  }
  return true;
}

CriticalExponentReport critical_exponent_schedule(const MatrixEnsemble& ens,
                                                  const std::vector<int>& ms, int threads) {
  CriticalExponentReport rep;
  std::vector<double> found;
  for (int m : ms) {
    CriticalExponentEntry e;
    e.m = m;
    try {
      e.q = critical_exponent(ens, m, 0.1, 2.5, threads);
      found.push_back(*e.q);
    } catch (const PreconditionError& err) {
      e.note = err.what();
    }
    rep.entries.push_back(e);
  }
  if (found.size() >= 3) {
    const std::size_t k = found.size();
    rep.aitken = aitken(found[k - 3], found[k - 2], found[k - 1]);
  }
  return rep;
}

PressureCurve exact_curve(const MatrixEnsemble& ens, int m, const std::vector<double>& ps, int threads) {
  return {m, ps, pressure_exact_grid(ens, ps, m, kDefaultEnumerationCap, threads), {}};
}

ConvexityReport convexity_report(const PressureCurve& curve, std::optional<double> derivative_at_zero) {
  const auto& ps = curve.ps;
  const auto& v = curve.values;
  if (ps.size() < 3 || ps.size() != v.size()) throw PreconditionError("convexity_report: need >= 3 grid points");
  const double h = ps[1] - ps[0];
  for (std::size_t k = 1; k < ps.size(); ++k) {
    if (std::abs(ps[k] - ps[k - 1] - h) > 1e-9) throw PreconditionError("convexity_report: grid is not uniform");
  }
  auto find = [&](double x) -> int {
    for (std::size_t k = 0; k < ps.size(); ++k) {
      if (std::abs(ps[k] - x) < 1e-9) return static_cast<int>(k);
    }
    throw PreconditionError("convexity_report: grid must contain " + std::to_string(x));
  };
  const int i0 = find(0.0), i2 = find(2.0);
  ConvexityReport rep;
  rep.min_second_difference = std::numeric_limits<double>::infinity();
  for (std::size_t k = 1; k + 1 < ps.size(); ++k) {
    const double d2 = v[k + 1] - 2.0 * v[k] + v[k - 1];
    rep.second_differences.push_back(d2);
    rep.min_second_difference = std::min(rep.min_second_difference, d2);
  }
  rep.convex = rep.min_second_difference >= -1e-9;
  rep.strictly_convex = rep.min_second_difference > 1e-12;
  if (derivative_at_zero) {
    rep.derivative_at_zero = *derivative_at_zero;
  } else if (i0 + 2 < static_cast<int>(ps.size())) {
    rep.derivative_at_zero = (-3.0 * v[i0] + 4.0 * v[i0 + 1] - v[i0 + 2]) / (2.0 * h);
  } else {
    rep.derivative_at_zero = (v[i0 + 1] - v[i0 - 1]) / (2.0 * h);
  }
  rep.value_at_two = v[i2];
  rep.jensen_gap = 2.0 * rep.derivative_at_zero - rep.value_at_two;
  return rep;
}

SemigroupDiagnostics semigroup_diagnostics(const MatrixEnsemble& ens, int m, int samples,
                                           std::uint64_t seed) {
  ens.validate();
  const int d = static_cast<int>(ens.matrices.front().rows());
  SemigroupDiagnostics out;
  if (d >= 2) {
    std::mt19937_64 rng(seed);
    std::discrete_distribution<int> pick(ens.weights.begin(), ens.weights.end());
    double total = 0.0;
    for (int i = 0; i < samples; ++i) {
      Eigen::MatrixXd s = Eigen::MatrixXd::Identity(d, d);
      for (int k = 0; k < m; ++k) s = ens.matrices[pick(rng)] * s;
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(s);
      const auto& sv = svd.singularValues();
      total += sv[0] > 0.0 ? sv[1] / sv[0] : 0.0;
    }
    out.mean_singular_ratio = total / std::max(1, samples);
  }
  // Proper nonempty coordinate subsets S with A(i, j) = 0 for i outside S, j in S.
  for (int mask = 1; d <= 20 && mask < (1 << d) - 1; ++mask) {
    bool invariant = true;
    for (const auto& a : ens.matrices) {
      for (int j = 0; j < d && invariant; ++j) {
        if (!(mask >> j & 1)) continue;
        for (int i = 0; i < d && invariant; ++i) {
          if (!(mask >> i & 1) && std::abs(a(i, j)) > 1e-12) invariant = false;
        }
      }
    }
    if (invariant) {
      out.invariant_coordinate_subspace = true;
      break;
    }
  }
  return out;
}

}  // namespace fractal
