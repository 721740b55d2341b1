#include <doctest.h>

#include <memory>
#include <random>

#include "fractal/error.hpp"
#include "fractal/fredholm.hpp"
#include "fractal/self_similar.hpp"

using namespace fractal;
using doctest::Approx;

namespace {

std::shared_ptr<const ResistanceForm> gasket(int depth) {
  return std::make_shared<const ResistanceForm>(decimate(builtin::gasket(), depth));
}

Multiplier random_simple(const CellStructure& cs, int level, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Multiplier a{level, std::vector<double>(cs.cell_count(level))};
  for (double& x : a.values) x = u(rng);
  return a;
}

double op_norm(const Eigen::MatrixXd& m) {
  auto s = singular_values(m);
  return s.values.empty() ? 0.0 : s.values.front();
}

}  // namespace

TEST_CASE("multiplication") {
  auto g = gasket(2);
  const auto& cs = g->structure();
  HilbertModule h(g, 2);
  std::mt19937_64 rng(1);
  ModuleElement u = h.random_element(rng);
  CHECK(h.norm(multiply(cs, u, Multiplier::constant(cs, 0, 1.0)) - u) < 1e-15);

  ModuleElement cut = multiply(cs, u, Multiplier::indicator(cs, CellAddress::parse("0.1")));
  for (int i = 0; i < cs.cell_count(2); ++i) {
    const bool inside = cs.ancestor(2, i, 1) == 1;
    CHECK((cut.cells[i] - (inside ? u.cells[i] : Eigen::VectorXd::Zero(3))).norm() < 1e-15);
  }
  for (int t = 0; t < 100; ++t) {
    ModuleElement v = h.random_element(rng);
    Multiplier a = random_simple(cs, t % 3, rng);
    CHECK(h.norm(multiply(cs, v, a)) <= a.sup_norm() * h.norm(v) + 1e-12);
  }
  Multiplier coarse{1, {1.0, 2.0, 3.0}};
  Multiplier fine = refine(cs, coarse, 2);
  CHECK(fine.values[4] == Approx(2.0));
  CHECK(fine.values[8] == Approx(3.0));
}

TEST_CASE("operator F") {
  HodgeBasis iv(std::make_shared<const ResistanceForm>(decimate(builtin::interval(), 3)), 3);
  CHECK((operator_F(iv) - Eigen::MatrixXd::Identity(8, 8)).cwiseAbs().maxCoeff() == 0.0);

  HodgeBasis g1(gasket(1), 1);
  Eigen::MatrixXd F = operator_F(g1);
  Eigen::VectorXd expected(6);
  expected << 1, 1, 1, 1, 1, -1;
  CHECK(F.isApprox(Eigen::MatrixXd(expected.asDiagonal())));

  HodgeBasis g3(gasket(3), 3);
  Eigen::MatrixXd F3 = operator_F(g3);
  CHECK((F3 - F3.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK((F3 * F3 - Eigen::MatrixXd::Identity(F3.rows(), F3.cols())).cwiseAbs().maxCoeff() == 0.0);
  // F agrees with P - Pperp represented in the basis
  const HilbertModule& h = g3.module();
  Eigen::MatrixXd P = h.projector_P();
  Eigen::MatrixXd I = Eigen::MatrixXd::Identity(P.rows(), P.cols());
  CHECK((g3.represent(2 * P - I) - F3).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("commutators") {
  auto g = gasket(3);
  const auto& cs = g->structure();
  HodgeBasis b2(g, 2), b3(g, 3);

  CHECK(commutator_matrix(Multiplier::constant(cs, 0, 2.5), b3).cwiseAbs().maxCoeff() < 1e-12);
  HodgeBasis iv(std::make_shared<const ResistanceForm>(decimate(builtin::interval(), 3)), 3);
  Multiplier step{1, {1.0, -2.0}};
  CHECK(commutator_matrix(step, iv).cwiseAbs().maxCoeff() == 0.0);

  Multiplier ind = Multiplier::indicator(cs, CellAddress::parse("0.0"));
  Eigen::MatrixXd c = commutator_matrix(ind, b2);
  CHECK(c.cwiseAbs().maxCoeff() > 1e-3);
  RankCheck rc = rank_check(ind, b2);
  CHECK(rc.bound == 6);
  CHECK(rc.pass());
  CHECK(rank_check(Multiplier::constant(cs, 0, 1.0), b3).rank == 0);

  std::mt19937_64 rng(3);
  for (int t = 0; t < 10; ++t) {
    Multiplier a = random_simple(cs, 1 + t % 2, rng);
    Eigen::MatrixXd C = commutator_matrix(a, b3);
    Eigen::MatrixXd F = operator_F(b3);
    CHECK((F * C * F + C).cwiseAbs().maxCoeff() <= 1e-10);
    // [F, a] = 2 (P a Pperp - Pperp a P)
    Eigen::MatrixXd A = multiplication_matrix(b3, a);
    Eigen::VectorXd pd = (b3.signs().array() > 0).cast<double>().matrix();
    Eigen::MatrixXd Pm = pd.asDiagonal(), Qm = Eigen::MatrixXd(Eigen::VectorXd::Ones(pd.size()) - pd).asDiagonal();
    CHECK((C - 2 * (Pm * A * Qm - Qm * A * Pm)).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(singular_values(C).pairing_defect() <= 1e-9);
    CHECK(kernel_residual(a, b3) <= 1e-9);
  }

  auto th = std::make_shared<const ResistanceForm>(quantum_graph_form({{0, 1}, {0, 1}, {0, 1}}, 3));
  HodgeBasis tb(th, 3);
  Multiplier e0{0, {1.0, 0.0, -1.0}};
  RankCheck trc = rank_check(e0, tb);
  CHECK(trc.bound == 3);
  CHECK(trc.pass());
}

TEST_CASE("norm continuity") {
  auto g = gasket(2);
  const auto& cs = g->structure();
  HodgeBasis b(g, 2);
  std::mt19937_64 rng(21);
  for (int t = 0; t < 30; ++t) {
    Multiplier a = random_simple(cs, 2, rng), a2 = random_simple(cs, 1, rng);
    Multiplier d = a - refine(cs, a2, 2);
    CHECK(op_norm(commutator_matrix(d, b)) <= 4 * d.sup_norm() + 1e-12);
  }
}

TEST_CASE("singular values") {
  auto z = singular_values(Eigen::MatrixXd::Zero(3, 3));
  for (double s : z.values) CHECK(s == 0.0);
  auto d = singular_values((Eigen::Matrix2d() << 3, 0, 0, 1).finished());
  CHECK(d.values[0] == Approx(3.0));
  CHECK(d.values[1] == Approx(1.0));
  Eigen::MatrixXd m = Eigen::MatrixXd::Random(9, 9);
  CHECK(singular_values(m).frobenius_squared() == Approx(m.squaredNorm()).epsilon(1e-12));
}

TEST_CASE("summability") {
  SingularSpectrum harmonic;
  for (int k = 1; k <= 1000000; ++k) harmonic.values.push_back(1.0 / k);
  SummabilityReport rep = summability_report(harmonic, {1.0});
  CHECK(rep.dixmier.back() < rep.dixmier[1000]);
  CHECK(rep.dixmier.back() == Approx(1.0).epsilon(0.05));

  SingularSpectrum zero{std::vector<double>(5, 0.0)};
  SummabilityReport zr = summability_report(zero, {1.5, 2.0});
  for (const auto& r : zr.rows) {
    CHECK(r.p_sum == 0.0);
    CHECK(r.weak_sum == 0.0);
  }
  CHECK_THROWS_AS(summability_report(zero, {2.5}), PreconditionError);
  CHECK_THROWS_AS(summability_report(zero, {0.0}), PreconditionError);

  // p-sums of a harmonic multiplier stabilise between truncations 4 and 5
  auto g = gasket(5);
  VertexFunction h{0, Eigen::Vector3d(1.0, 0.0, 0.0)};
  Multiplier a = cell_average(*g, h, 3);
  std::vector<SingularSpectrum> family;
  for (int N : {4, 5}) family.push_back(singular_values(commutator_matrix(a, HodgeBasis(g, N))));
  auto sums = p_sum_sequence(family, 1.5);
  CHECK(sums[1] >= sums[0] - 1e-9);
  CHECK((sums[1] - sums[0]) / sums[0] < 0.02);
}

TEST_CASE("oscillation bound") {
  auto g = gasket(3);
  const auto& cs = g->structure();
  HodgeBasis b(g, 3);
  OscillationCheck c0 = oscillation_bound_check(Multiplier::constant(cs, 0, 1.0), b, 1.5);
  CHECK(c0.lhs == Approx(0.0));
  CHECK(c0.rhs == Approx(0.0));
  OscillationCheck c1 = oscillation_bound_check(Multiplier{1, {1.0, 0.0, 0.0}}, b, 1.5);
  CHECK(c1.lhs > 0.0);
  CHECK(c1.pass());
  HodgeBasis iv(std::make_shared<const ResistanceForm>(decimate(builtin::interval(), 4)), 4);
  OscillationCheck ci = oscillation_bound_check(Multiplier{2, {1.0, 0.0, 3.0, 1.0}}, iv, 1.5);
  CHECK(ci.lhs == 0.0);
  CHECK(ci.pass());
}

TEST_CASE("localization") {
  auto g = gasket(3);
  const auto& cs = g->structure();
  HodgeBasis b(g, 3);
  const HilbertModule& h = b.module();
  const int n = 1;
  const int lead = b.prefix_dimension(n);
  for (const auto& blk : b.blocks()) {
    if (blk.cell < 0 || blk.level != n + 1 || blk.size == 0) continue;
    const int alpha = cs.ancestor(blk.level, blk.cell, n);
    for (int k = blk.offset; k < blk.offset + blk.size; ++k) {
      CHECK(localization_residual(b.element(k), n, alpha, b) <= 1e-10);
      const int other = (alpha + 1) % 3;
      ModuleElement cut = multiply(cs, b.element(k), Multiplier::indicator(cs, cs.cell(n, other).address));
      CHECK(h.norm(cut) == 0.0);
      CHECK(localization_residual(b.element(k), n, other, b) <= 1e-14);
    }
  }
  std::mt19937_64 rng(17);
  std::normal_distribution<double> normal;
  for (int t = 0; t < 10; ++t) {
    Eigen::VectorXd c(b.dimension());
    for (int k = 0; k < c.size(); ++k) c[k] = k < lead ? 0.0 : normal(rng);
    ModuleElement v = b.from_coordinates(c);
    for (int alpha = 0; alpha < 3; ++alpha) CHECK(localization_residual(v, n, alpha, b) <= 1e-9);
  }
  CHECK_THROWS_AS(localization_residual(b.element(0), n, 0, b), PreconditionError);
}
