#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Dense>

namespace fractal::linalg {

// Orthonormal basis (Euclidean) of ker M.
inline std::vector<Eigen::VectorXd> null_space(const Eigen::MatrixXd& m) {
  std::vector<Eigen::VectorXd> out;
  const int cols = static_cast<int>(m.cols());
  if (m.rows() == 0) {
    for (int j = 0; j < cols; ++j) out.push_back(Eigen::VectorXd::Unit(cols, j));
    return out;
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullV);
  const auto& s = svd.singularValues();
  const double tol = 1e-10 * std::max(1.0, s.size() ? s[0] : 0.0);
  int rank = 0;
  for (int k = 0; k < s.size(); ++k) rank += s[k] > tol;
  for (int j = rank; j < cols; ++j) out.push_back(svd.matrixV().col(j));
  return out;
}

// Modified Gram-Schmidt with one re-orthogonalisation pass in the inner product
// x^T G y. Vectors that vanish after projection are dropped.
inline std::vector<Eigen::VectorXd> gram_schmidt(const std::vector<Eigen::VectorXd>& vecs,
                                                 const Eigen::MatrixXd& gram) {
  std::vector<Eigen::VectorXd> q, gq;
  for (const auto& v : vecs) {
    const double start = std::sqrt(std::max(0.0, v.dot(gram * v)));
    if (start == 0.0) continue;
    Eigen::VectorXd w = v;
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t k = 0; k < q.size(); ++k) w -= gq[k].dot(w) * q[k];
    }
    Eigen::VectorXd gw = gram * w;
    const double nrm = std::sqrt(std::max(0.0, w.dot(gw)));
    if (nrm <= 1e-10 * start) continue;
    q.push_back(w / nrm);
    gq.push_back(gw / nrm);
  }
  return q;
}

// Singular values above relative * max(s_0, reference) count toward the rank.
inline int numerical_rank(const Eigen::MatrixXd& m, double relative, double reference = 0.0) {
  if (m.size() == 0) return 0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& s = svd.singularValues();
  const double top = std::max(s.size() ? s[0] : 0.0, reference);
  if (top == 0.0) return 0;
  int rank = 0;
  for (int k = 0; k < s.size(); ++k) rank += s[k] > relative * top;
  return rank;
}

}  // namespace fractal::linalg
