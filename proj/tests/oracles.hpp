#pragma once
// Independent reference computations used by the tests. Nothing here calls
// into the per-cell machinery of the library.

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "fractal/resistance_form.hpp"

namespace oracle {

// Dense global Laplacian of all cell networks at `level` on V_level.
inline Eigen::MatrixXd global_laplacian(const fractal::ResistanceForm& form, int level) {
  const auto& cs = form.structure();
  const int n = cs.vertex_count(level);
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < cs.cell_count(level); ++i) {
    const auto& net = form.cell_network(level, i);
    for (const auto& e : net.edges()) {
      const int a = cs.position(level, net.vertices()[e.a]);
      const int b = cs.position(level, net.vertices()[e.b]);
      L(a, a) += e.conductance;
      L(b, b) += e.conductance;
      L(a, b) -= e.conductance;
      L(b, a) -= e.conductance;
    }
  }
  return L;
}

// Schur complement of L onto the listed positions, via a full inverse of the
// interior block.
inline Eigen::MatrixXd schur(const Eigen::MatrixXd& L, const std::vector<int>& keep) {
  std::vector<int> drop;
  std::vector<bool> kept(L.rows(), false);
  for (int k : keep) kept[k] = true;
  for (int k = 0; k < L.rows(); ++k) {
    if (!kept[k]) drop.push_back(k);
  }
  const int b = static_cast<int>(keep.size()), i = static_cast<int>(drop.size());
  Eigen::MatrixXd LBB(b, b), LBI(b, i), LII(i, i);
  for (int r = 0; r < b; ++r) {
    for (int c = 0; c < b; ++c) LBB(r, c) = L(keep[r], keep[c]);
    for (int c = 0; c < i; ++c) LBI(r, c) = L(keep[r], drop[c]);
  }
  for (int r = 0; r < i; ++r) {
    for (int c = 0; c < i; ++c) LII(r, c) = L(drop[r], drop[c]);
  }
  if (i == 0) return LBB;
  return LBB - LBI * LII.inverse() * LBI.transpose();
}

// Pairwise-sum energy of a network.
inline double pair_energy(const fractal::Network& net, const Eigen::VectorXd& u) {
  double e = 0.0;
  for (int a = 0; a < net.size(); ++a) {
    for (int b = a + 1; b < net.size(); ++b) {
      const double d = u[a] - u[b];
      e += net.conductance(a, b) * d * d;
    }
  }
  return e;
}

inline double row_sum_norm(const Eigen::MatrixXd& a) {
  double best = 0.0;
  for (int i = 0; i < a.rows(); ++i) best = std::max(best, a.row(i).cwiseAbs().sum());
  return best;
}

// (1/m) log sum over all words of mu_alpha ||A_{a_m} ... A_{a_1}||^p, by
// straightforward recursion.
inline double brute_pressure(const std::vector<Eigen::MatrixXd>& mats,
                             const std::vector<double>& mu, double p, int m) {
  double total = 0.0;
  std::function<void(const Eigen::MatrixXd&, double, int)> rec = [&](const Eigen::MatrixXd& s,
                                                                     double w, int depth) {
    if (depth == m) {
      total += w * std::pow(row_sum_norm(s), p);
      return;
    }
    for (std::size_t j = 0; j < mats.size(); ++j) rec(mats[j] * s, w * mu[j], depth + 1);
  };
  const int n = static_cast<int>(mats.front().rows());
  rec(Eigen::MatrixXd::Identity(n, n), 1.0, 0);
  return std::log(total) / m;
}

}  // namespace oracle
