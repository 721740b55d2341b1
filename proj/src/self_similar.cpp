#include "fractal/self_similar.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fractal/error.hpp"

namespace fractal {

namespace {

bool all_equal(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [&](double x) { return std::abs(x - v.front()) <= 1e-14; });
}

Network relabel(const Network& base, const std::vector<VertexId>& vertices) {
  return Network(vertices, base.edges());
}

}  // namespace

bool SelfSimilarStructure::uniform_r() const { return all_equal(r); }
bool SelfSimilarStructure::uniform_mu() const { return all_equal(mu); }

void validate(const SelfSimilarStructure& ss) {
  const int n = ss.arity();
  if (n < 1) throw ConstructionError(ss.name + ": arity must be >= 1");
  if (static_cast<int>(ss.r.size()) != n || static_cast<int>(ss.mu.size()) != n) {
    throw ConstructionError(ss.name + ": need one r_j and one mu_j per child");
  }
  for (double x : ss.r) {
    if (!(x > 0.0 && x < 1.0)) throw ConstructionError(ss.name + ": r_j must lie in (0, 1)");
  }
  for (double x : ss.mu) {
    if (!(x > 0.0 && x < 1.0) && !(n == 1 && x == 1.0)) {
      throw ConstructionError(ss.name + ": mu_j must lie in (0, 1)");
    }
  }
  double total = std::accumulate(ss.mu.begin(), ss.mu.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-12) throw ConstructionError(ss.name + ": mu_j must sum to 1");
  std::vector<VertexId> expected(ss.boundary_size());
  std::iota(expected.begin(), expected.end(), 0);
  if (ss.base.vertices() != expected) {
    throw ConstructionError(ss.name + ": base network must live on 0 .. boundary_size-1");
  }
  if (!ss.base.connected()) throw ConstructionError(ss.name + ": base network is not connected");
}

namespace builtin {

SelfSimilarStructure interval() {
  return {"interval", rules::interval(), {0.5, 0.5}, {0.5, 0.5}, Network({0, 1}, {{0, 1, 1.0}})};
}

SelfSimilarStructure gasket() {
  return {"gasket",
          rules::gasket(),
          {0.6, 0.6, 0.6},
          {1.0 / 3, 1.0 / 3, 1.0 / 3},
          Network({0, 1, 2}, {{0, 1, 1.0}, {1, 2, 1.0}, {0, 2, 1.0}})};
}

SelfSimilarStructure vicsek() {
  std::vector<Edge> k4;
  for (int a = 0; a < 4; ++a) {
    for (int b = a + 1; b < 4; ++b) k4.push_back({a, b, 0.5});
  }
  return {"vicsek",
          rules::vicsek(),
          std::vector<double>(5, 1.0 / 3),
          std::vector<double>(5, 0.2),
          Network({0, 1, 2, 3}, k4)};
}

}  // namespace builtin

ResistanceForm decimate(const SelfSimilarStructure& ss, int depth) {
  validate(ss);
  auto cs = std::make_shared<const CellStructure>(build_structure(ss.rule, depth));
  std::vector<std::vector<Network>> networks(depth + 1);
  std::vector<std::vector<double>> scale(depth + 1);
  scale[0] = {1.0};
  for (int n = 0; n <= depth; ++n) {
    for (int i = 0; i < cs->cell_count(n); ++i) {
      const Cell& cell = cs->cell(n, i);
      if (n > 0) {
        scale[n].push_back(scale[n - 1][cell.parent] / ss.r[cell.address.word.back()]);
      }
      networks[n].push_back(relabel(ss.base, cell.vertices).scaled(scale[n][i]));
    }
  }
  return ResistanceForm(cs, std::move(networks));
}

ResistanceForm quantum_graph_form(const std::vector<std::pair<VertexId, VertexId>>& edges,
                                  int subdivisions) {
  auto cs = std::make_shared<const CellStructure>(quantum_graph_structure(edges, subdivisions));
  std::vector<std::vector<Network>> networks(subdivisions + 1);
  for (int n = 0; n <= subdivisions; ++n) {
    const double c = std::ldexp(1.0, n);
    for (const Cell& cell : cs->cells(n)) networks[n].push_back(Network(cell.vertices, {{0, 1, c}}));
  }
  return ResistanceForm(cs, std::move(networks));
}

double fixed_point_deviation(const SelfSimilarStructure& ss) {
  return decimate(ss, 1).check_compatibility(0);
}

Eigen::MatrixXd HarmonicMatrices::adjoint(const Eigen::MatrixXd& m) const {
  return gram.llt().solve(m.transpose() * gram);
}

HarmonicMatrices harmonic_matrices(const SelfSimilarStructure& ss) {
  ResistanceForm form = decimate(ss, 1);
  const double dev = form.check_compatibility(0);
  double scale = 0.0;
  for (const Edge& e : ss.base.edges()) scale = std::max(scale, e.conductance);
  if (dev > 1e-10 * std::max(1.0, scale)) {
    throw ConstructionError(ss.name + ": renormalisation fixed point fails, deviation " +
                            std::to_string(dev));
  }
  const CellStructure& cs = form.structure();
  const int b = ss.boundary_size();
  HarmonicMatrices hm;
  hm.r = ss.r;
  hm.A.assign(ss.arity(), Eigen::MatrixXd::Zero(b, b));
  for (int k = 0; k < b; ++k) {
    VertexFunction e{0, Eigen::VectorXd::Unit(b, k)};
    VertexFunction ext = form.harmonic_extension(e, 1);
    for (int j = 0; j < ss.arity(); ++j) {
      const auto& vs = cs.cell(1, j).vertices;
      for (int i = 0; i < b; ++i) hm.A[j](i, k) = ext.values[cs.position(1, vs[i])];
    }
  }
  for (const auto& a : hm.A) {
    Eigen::MatrixXd q(b - 1, b - 1);
    for (int i = 1; i < b; ++i) {
      for (int k = 1; k < b; ++k) q(i - 1, k - 1) = a(i, k) - a(0, k);
    }
    hm.A_tilde.push_back(q);
  }
  hm.gram = ss.base.laplacian().bottomRightCorner(b - 1, b - 1);
  return hm;
}

double selfsimilar_identity_residual(const HarmonicMatrices& hm, double r) {
  if (!all_equal(hm.r)) {
    throw PreconditionError("the identity sum A~^dagger A~ = r I needs equal r_j");
  }
  const int d = static_cast<int>(hm.gram.rows());
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(d, d);
  for (const auto& a : hm.A_tilde) sum += hm.adjoint(a) * a;
  sum -= r * Eigen::MatrixXd::Identity(d, d);
  return sum.cwiseAbs().maxCoeff();
}

double selfsimilar_identity_residual(const HarmonicMatrices& hm) {
  if (hm.r.empty()) throw PreconditionError("no resistance factors");
  return selfsimilar_identity_residual(hm, hm.r.front());
}

double spectral_dimension(const std::vector<double>& r, const std::vector<double>& mu) {
  if (r.size() != mu.size() || r.empty()) throw PreconditionError("spectral_dimension: size mismatch");
  for (std::size_t j = 0; j < r.size(); ++j) {
    if (!(r[j] > 0.0) || !(mu[j] > 0.0)) {
      throw PreconditionError("spectral_dimension: weights must be positive");
    }
  }
  auto f = [&](double d) {
    double s = 0.0;
    for (std::size_t j = 0; j < r.size(); ++j) s += std::pow(r[j] * mu[j], 0.5 * d);
    return s - 1.0;
  };
  double lo = 0.0, hi = 2.0;
  if (f(lo) <= 0.0 || f(hi) >= 0.0) {
    throw PreconditionError("spectral_dimension: no root in (0, 2); f(0) = " + std::to_string(f(lo)) +
                            ", f(2) = " + std::to_string(f(hi)));
  }
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    double mid = 0.5 * (lo + hi);
    (f(mid) > 0.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double spectral_dimension(const SelfSimilarStructure& ss) { return spectral_dimension(ss.r, ss.mu); }

}  // namespace fractal
