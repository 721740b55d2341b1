#include <doctest.h>

#include <cmath>
#include <random>

#include "fractal/error.hpp"
#include "fractal/pressure.hpp"
#include "oracles.hpp"

using namespace fractal;
using doctest::Approx;

TEST_CASE("matrix norm") {
  CHECK(matrix_norm(Eigen::Matrix2d::Identity()) == 1.0);
  CHECK(matrix_norm((Eigen::Matrix2d() << 0.4, 0.4, 0.2, 0.4).finished()) == Approx(0.8));
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal;
  for (int t = 0; t < 1000; ++t) {
    Eigen::Matrix3d a, b;
    for (int i = 0; i < 9; ++i) {
      a.data()[i] = normal(rng);
      b.data()[i] = normal(rng);
    }
    CHECK(matrix_norm(a * b) <= matrix_norm(a) * matrix_norm(b) + 1e-12);
  }
}

TEST_CASE("exact pressure") {
  MatrixEnsemble g = MatrixEnsemble::from(builtin::gasket());
  MatrixEnsemble iv = MatrixEnsemble::from(builtin::interval());
  for (int m : {1, 3, 5}) {
    for (double p : {0.0, 0.7, 1.5, 2.0}) {
      CHECK(pressure_exact(g, p, m) == Approx(oracle::brute_pressure(g.matrices, g.weights, p, m)).epsilon(1e-12));
      CHECK(std::abs(pressure_exact(iv, p, m) + p * std::log(2.0)) <= 1e-12);
    }
    CHECK(std::abs(pressure_exact(g, 0.0, m)) <= 1e-14);
  }
  CHECK_THROWS_AS(pressure_exact(g, 1.0, 20), PreconditionError);

  const std::vector<double> ps = {0.5, 1.0, 2.0};
  auto grid = pressure_exact_grid(g, ps, 6);
  for (std::size_t k = 0; k < ps.size(); ++k) CHECK(grid[k] == Approx(pressure_exact(g, ps[k], 6)).epsilon(1e-14));
  // thread count does not change exact values
  CHECK(pressure_exact(g, 1.3, 7, kDefaultEnumerationCap, 1) == pressure_exact(g, 1.3, 7, kDefaultEnumerationCap, 4));
}

TEST_CASE("subadditivity and monotonicity") {
  MatrixEnsemble g = MatrixEnsemble::from(builtin::gasket());
  for (double p : {0.5, 1.0, 1.5, 2.0}) {
    std::vector<double> P(9);
    for (int m = 1; m <= 8; ++m) P[m] = pressure_exact(g, p, m);
    for (int m = 1; m <= 4; ++m) {
      for (int n = 1; m + n <= 8; ++n) CHECK(m * P[m] + n * P[n] >= (m + n) * P[m + n] - 1e-9);
    }
  }
  for (int m : {1, 4}) {
    double prev = pressure_exact(g, 0.0, m);
    for (int k = 1; k <= 25; ++k) {
      const double v = pressure_exact(g, 0.1 * k, m);
      CHECK(v < prev);
      prev = v;
    }
  }
}

TEST_CASE("Monte Carlo") {
  MatrixEnsemble iv = MatrixEnsemble::from(builtin::interval());
  MonteCarloEstimate e = pressure_mc(iv, 1.5, 10, 1000, 42);
  CHECK(std::abs(e.estimate + 1.5 * std::log(2.0)) <= 3 * e.std_error + 1e-12);

  MatrixEnsemble g = MatrixEnsemble::from(builtin::gasket());
  MonteCarloEstimate a = pressure_mc(g, 2.0, 12, 50000, 7, 1);
  MonteCarloEstimate b = pressure_mc(g, 2.0, 12, 50000, 7, 8);
  CHECK(a.estimate == b.estimate);
  CHECK(a.std_error == b.std_error);
  CHECK(std::abs(a.estimate - pressure_exact(g, 2.0, 12, 1'000'000)) <= 3 * a.std_error);
  CHECK_THROWS_AS(pressure_mc(g, 1.0, 4, 50, 1), PreconditionError);
}

TEST_CASE("Lyapunov exponent") {
  MatrixEnsemble iv = MatrixEnsemble::from(builtin::interval());
  LyapunovEstimate li = lyapunov(iv, 6, 1000, 3);
  REQUIRE(li.exact);
  CHECK(*li.exact == Approx(-std::log(2.0)).epsilon(1e-12));
  CHECK(li.mc.estimate == Approx(-std::log(2.0)).epsilon(1e-12));

  MatrixEnsemble g = MatrixEnsemble::from(builtin::gasket());
  for (int m : {2, 4, 6}) {
    LyapunovEstimate l = lyapunov(g, m, 40000, 5);
    REQUIRE(l.exact);
    CHECK(*l.exact < 0.5 * pressure_exact(g, 2.0, m));
    CHECK(std::abs(l.mc.estimate - *l.exact) <= 3 * l.mc.std_error);
    REQUIRE(l.finite_difference);
    CHECK(*l.finite_difference == Approx(*l.exact).epsilon(1e-4));
  }
}

TEST_CASE("critical exponent") {
  MatrixEnsemble iv = MatrixEnsemble::from(builtin::interval());
  for (int m : {1, 2, 4, 8}) CHECK(std::abs(critical_exponent(iv, m) - 1.0) <= 1e-9);

  MatrixEnsemble g = MatrixEnsemble::from(builtin::gasket());
  CHECK_THROWS_AS(critical_exponent(g, 1), PreconditionError);
  CriticalExponentReport rep = critical_exponent_schedule(g, {1, 2, 4, 8});
  CHECK_FALSE(rep.entries[0].q);
  REQUIRE(rep.entries[3].q);
  CHECK(rep.non_increasing());
  const double q4 = *rep.entries[2].q;
  CHECK(pressure_exact(g, q4, 4) == Approx(std::log(1.0 / 3.0)).epsilon(1e-8));

  MatrixEnsemble uneven = g;
  uneven.weights = {0.5, 0.25, 0.25};
  CHECK_THROWS_AS(critical_exponent(uneven, 2), PreconditionError);

  auto x = aitken(1.0, 0.5, 0.25);
  REQUIRE(x);
  CHECK(*x == Approx(0.0));
  CHECK_FALSE(aitken(1.0, 2.0, 3.0));
}

TEST_CASE("convexity") {
  std::vector<double> ps;
  for (int k = 0; k <= 24; ++k) ps.push_back(0.1 * k);
  MatrixEnsemble iv = MatrixEnsemble::from(builtin::interval());
  ConvexityReport ri = convexity_report(exact_curve(iv, 6, ps), lyapunov_exact(iv, 6));
  CHECK(std::abs(ri.min_second_difference) < 1e-12);
  CHECK(std::abs(ri.jensen_gap) < 1e-12);

  MatrixEnsemble g = MatrixEnsemble::from(builtin::gasket());
  PressureCurve c = exact_curve(g, 6, ps);
  CHECK(std::abs(c.values[0]) < 1e-14);
  ConvexityReport rg = convexity_report(c, lyapunov_exact(g, 6));
  CHECK(rg.convex);
  CHECK(rg.strictly_convex);
  CHECK(rg.jensen_gap < 0.0);

  PressureCurve bad = c;
  bad.ps = {0.0, 0.5, 2.0};
  bad.values = {0.0, 0.1, 0.2};
  CHECK_THROWS_AS(convexity_report(bad), PreconditionError);
}

TEST_CASE("semigroup diagnostics") {
  SemigroupDiagnostics d = semigroup_diagnostics(MatrixEnsemble::from(builtin::gasket()), 20, 200, 1);
  CHECK(d.mean_singular_ratio < 0.1);
  CHECK_FALSE(d.invariant_coordinate_subspace);
}
