// Acceptance suite. With no argument every criterion runs; with an argument
// only that criterion. One line per criterion; exit status is nonzero if any
// selected criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "fractal/cell_structure.hpp"
#include "fractal/error.hpp"
#include "fractal/fredholm.hpp"
#include "fractal/hilbert_module.hpp"
#include "fractal/pressure.hpp"
#include "fractal/resistance_form.hpp"
#include "fractal/self_similar.hpp"
#include "fractal/spectral.hpp"
#include "oracles.hpp"

using namespace fractal;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " [failed: " << what << "]";
    }
  }
};

using Check = std::function<void(Outcome&)>;

std::shared_ptr<const ResistanceForm> form_of(const SelfSimilarStructure& ss, int depth) {
  return std::make_shared<const ResistanceForm>(decimate(ss, depth));
}

Multiplier random_simple(const CellStructure& cs, int level, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Multiplier a{level, std::vector<double>(cs.cell_count(level))};
  for (double& x : a.values) x = u(rng);
  return a;
}

// 1
void renormalization_fixed_point(Outcome& o) {
  auto g = form_of(builtin::gasket(), 6);
  double worst = 0.0;
  for (int n = 0; n <= 5; ++n) worst = std::max(worst, g->check_compatibility(n));
  // independent dense Schur complement on the coarse levels
  double dense = 0.0;
  for (int n = 0; n <= 3; ++n) {
    std::vector<int> keep(g->structure().vertex_count(n));
    for (int k = 0; k < static_cast<int>(keep.size()); ++k) keep[k] = k;
    Eigen::MatrixXd s = oracle::schur(oracle::global_laplacian(*g, n + 1), keep);
    dense = std::max(dense, (s - oracle::global_laplacian(*g, n)).cwiseAbs().maxCoeff());
  }
  o.detail << "max deviation n<=5: " << worst << ", dense oracle n<=3: " << dense << " (tol 1e-10)";
  o.require(worst <= 1e-10, "library trace");
  o.require(dense <= 1e-10, "dense trace");
}

// 2
void hodge_dimensions(Outcome& o) {
  auto rows = dimension_report(form_of(builtin::gasket(), 3), 3);
  for (int n = 1; n <= 3; ++n) {
    const int p3 = static_cast<int>(std::lround(std::pow(3.0, n)));
    const auto& r = rows[n];
    o.detail << " n=" << n << ": (" << r.dim_h << "," << r.dim_p << "," << r.dim_p_perp << ") ranks ("
             << r.rank_p << "," << r.rank_p_perp << ")";
    o.require(r.dim_h == 2 * p3 && r.dim_p == (3 * p3 + 1) / 2 && r.dim_p_perp == (p3 - 1) / 2,
              "dimension formula at n=" + std::to_string(n));
    o.require(r.consistent(), "projector ranks at n=" + std::to_string(n));
  }
}

// 3
void tree_dichotomy(Outcome& o) {
  struct Case {
    std::string name;
    std::shared_ptr<const ResistanceForm> form;
    bool tree;
  };
  std::vector<Case> cases = {
      {"interval", form_of(builtin::interval(), 6), true},
      {"vicsek", form_of(builtin::vicsek(), 3), true},
      {"gasket", form_of(builtin::gasket(), 3), false},
      {"theta", std::make_shared<const ResistanceForm>(quantum_graph_form({{0, 1}, {0, 1}, {0, 1}}, 3)), false},
  };
  for (const auto& c : cases) {
    const CellStructure& cs = c.form->structure();
    auto rows = dimension_report(c.form, cs.depth());
    int max_perp = 0;
    o.detail << " " << c.name << ":";
    for (const auto& r : rows) {
      o.detail << " " << r.dim_p_perp;
      max_perp = std::max(max_perp, r.dim_p_perp);
      o.require(r.dim_p_perp == cycle_rank(cs, r.level), c.name + " P-perp dimension equals cycle rank");
      o.require(r.consistent(), c.name + " projector rank");
    }
    o.require(is_tree(cs) == c.tree, c.name + " tree verdict");
    o.require(c.tree ? max_perp == 0 : rows.back().dim_p_perp >= 1, c.name + " dichotomy");
  }
}

// 4
void eta_agreement(Outcome& o) {
  auto g = form_of(builtin::gasket(), 3);
  const CellStructure& cs = g->structure();
  double worst = 0.0;
  int pairs = 0;
  for (int n = 1; n <= 3; ++n) {
    HilbertModule h(g, n);
    for (int i = 0; i < cs.cell_count(n); ++i) {
      for (VertexId p : cs.cell(n, i).vertices) {
        VertexFunction tent{n, Eigen::VectorXd::Unit(cs.vertex_count(n), cs.position(n, p))};
        ModuleElement expected = h.project_P_perp(h.embed_cell(i, g->restrict_to_cell(tent, i)));
        worst = std::max(worst, h.norm(h.eta_projection(p, i) - expected));
        ++pairs;
      }
    }
  }
  o.detail << pairs << " pairs, max difference " << worst << " (tol 1e-10)";
  o.require(worst <= 1e-10, "agreement");
}

// 5
void localization(Outcome& o) {
  auto g = form_of(builtin::gasket(), 3);
  HodgeBasis b(g, 3);
  const int lead = b.prefix_dimension(1);
  std::mt19937_64 rng(20240501);
  std::normal_distribution<double> normal;
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    Eigen::VectorXd c(b.dimension());
    for (int k = 0; k < c.size(); ++k) c[k] = k < lead ? 0.0 : normal(rng);
    ModuleElement v = b.from_coordinates(c);
    for (int alpha = 0; alpha < g->structure().cell_count(1); ++alpha) {
      worst = std::max(worst, localization_residual(v, 1, alpha, b));
    }
  }
  o.detail << "100 elements x 3 cells, max residual " << worst << " (tol 1e-9)";
  o.require(worst <= 1e-9, "residual");
}

// 6
void commutator_rank(Outcome& o) {
  auto g = form_of(builtin::gasket(), 3);
  const CellStructure& cs = g->structure();
  HodgeBasis b(g, 3);
  std::vector<Multiplier> family;
  for (int i = 0; i < 3; ++i) family.push_back(Multiplier::indicator(cs, cs.cell(1, i).address));
  std::mt19937_64 rng(6);
  for (int t = 0; t < 10; ++t) family.push_back(random_simple(cs, 1, rng));
  int worst = 0;
  for (const auto& a : family) {
    RankCheck rc = rank_check(a, b);
    worst = std::max(worst, rc.rank);
  }
  o.detail << family.size() << " level-1 multipliers, max rank " << worst << " (bound 6)";
  o.require(worst <= 6, "rank bound");
}

// 7
void oscillation(Outcome& o) {
  auto g = form_of(builtin::gasket(), 4);
  const CellStructure& cs = g->structure();
  HodgeBasis b(g, 4);
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> level(1, 4);
  double worst_ratio = 0.0;
  int checks = 0;
  for (int t = 0; t < 20; ++t) {
    Multiplier a = random_simple(cs, level(rng), rng);
    for (double p : {1.2, 1.5, 1.8}) {
      OscillationCheck c = oscillation_bound_check(a, b, p);
      worst_ratio = std::max(worst_ratio, c.lhs / c.rhs);
      o.require(c.pass(), "lhs <= rhs");
      ++checks;
    }
  }
  o.detail << checks << " checks, max lhs/rhs " << worst_ratio;
}

// 8
void interval_pressure(Outcome& o) {
  MatrixEnsemble ens = MatrixEnsemble::from(builtin::interval());
  std::vector<double> ps;
  for (int k = 0; k < 25; ++k) ps.push_back(0.1 * k);
  double worst = 0.0, qdev = 0.0;
  for (int m = 1; m <= 16; ++m) {
    auto values = pressure_exact_grid(ens, ps, m);
    for (std::size_t k = 0; k < ps.size(); ++k) {
      worst = std::max(worst, std::abs(values[k] + ps[k] * std::log(2.0)));
    }
    qdev = std::max(qdev, std::abs(critical_exponent(ens, m) - 1.0));
  }
  o.detail << "max |P_m(p) + p log 2| " << worst << " (tol 1e-12), max |q_m - 1| " << qdev << " (tol 1e-9)";
  o.require(worst <= 1e-12, "linear pressure");
  o.require(qdev <= 1e-9, "critical exponent");
}

// 9
void gasket_pressure_at_two(Outcome& o) {
  MatrixEnsemble ens = MatrixEnsemble::from(builtin::gasket());
  const double target = std::log(0.2);
  double prev = INFINITY;
  bool decreasing = true, above = true;
  double p8 = 0.0;
  o.detail << "P_m(2) - log(1/5):";
  for (int m = 1; m <= 8; ++m) {
    const double v = pressure_exact(ens, 2.0, m);
    o.detail << " " << v - target;
    decreasing = decreasing && v < prev;
    above = above && v >= target - 1e-12;
    prev = v;
    p8 = v;
  }
  o.detail << " (P_8 tol 0.02)";
  o.require(decreasing, "decreasing in m");
  o.require(above, "above log(1/5)");
  o.require(std::abs(p8 - target) <= 0.02, "P_8(2) within 0.02 of log(1/5)");
}

// 10
void convexity_and_exponent(Outcome& o) {
  const auto ss = builtin::gasket();
  MatrixEnsemble ens = MatrixEnsemble::from(ss);
  const double ds = spectral_dimension(ss);
  const double gap = 2.0 * lyapunov_exact(ens, 8) - pressure_exact(ens, 2.0, 8);
  CriticalExponentReport rep = critical_exponent_schedule(ens, {1, 2, 4, 8});
  o.detail << "Jensen gap " << gap << " (< -0.01); q_m:";
  for (const auto& e : rep.entries) {
    o.detail << " m=" << e.m << ":" << (e.q ? std::to_string(*e.q) : std::string("none"));
  }
  o.require(gap < -0.01, "Jensen gap");
  o.require(rep.non_increasing(), "q_m non-increasing");
  if (rep.entries.back().q) {
    const double margin = ds - *rep.entries.back().q;
    o.detail << "; d_S - q_8 = " << margin;
    o.require(margin > 0.0, "q_8 < d_S");
  } else {
    o.require(false, "q_8 exists");
  }
}

// 11
void selfsimilar_identity(Outcome& o) {
  const double g = selfsimilar_identity_residual(harmonic_matrices(builtin::gasket()), 0.6);
  const double i = selfsimilar_identity_residual(harmonic_matrices(builtin::interval()), 0.5);
  o.detail << "gasket " << g << " (tol 1e-10), interval " << i << " (tol 1e-12)";
  o.require(g <= 1e-10, "gasket");
  o.require(i <= 1e-12, "interval");
}

// 12
void weyl_slopes(Outcome& o) {
  auto slope = [](const SelfSimilarStructure& ss, int lo, int hi) {
    ResistanceForm f = decimate(ss, hi);
    std::vector<EigenSystem> sys;
    for (int n = lo; n <= hi; ++n) {
      sys.push_back(laplacian_eigen(f, vertex_measure(f.structure(), ss.mu, n), BoundaryCondition::Dirichlet));
    }
    return weyl_fit(sys).slope;
  };
  const double si = slope(builtin::interval(), 4, 7);
  const double sg = slope(builtin::gasket(), 3, 6);
  o.detail << "interval " << si << " (0.50 +- 0.05), gasket " << sg << " (0.683 +- 0.07)";
  o.require(std::abs(si - 0.5) <= 0.05, "interval slope");
  o.require(std::abs(sg - 0.683) <= 0.07, "gasket slope");
}

// 13
void eigenbasis_gram(Outcome& o) {
  const auto ss = builtin::gasket();
  auto form = form_of(ss, 3);
  HilbertModule h(form, 3);
  EigenSystem s = laplacian_eigen(*form, vertex_measure(form->structure(), ss.mu, 3), BoundaryCondition::Dirichlet);
  EigenbasisCheck c = eigenbasis_check(VertexFunction{0, Eigen::Vector3d(1, 0, 0)}, s, h, 1.8, spectral_dimension(ss));
  o.detail << s.size() << " eigenfunctions, max |Gram - I| " << c.gram_residual << " (tol 1e-8)";
  o.require(c.gram_residual <= 1e-8, "Gram identity");
}

// 14
void property_suites(Outcome& o) {
  std::mt19937_64 rng(14);
  std::normal_distribution<double> normal;
  auto g = form_of(builtin::gasket(), 3);
  const CellStructure& cs = g->structure();
  const int trials = 100;

  double gauss = 0.0;
  for (int t = 0; t < trials; ++t) {
    const int n = t % 4;
    const int i = static_cast<int>(rng() % cs.cell_count(n));
    Eigen::Vector3d u(normal(rng), normal(rng), normal(rng)), h(normal(rng), normal(rng), normal(rng));
    gauss = std::max(gauss, std::abs(g->cell_energy(n, i, u, h) - u.dot(g->normal_derivatives(n, i, h))));
  }

  double idem = 0.0;
  std::uniform_real_distribution<double> cond(0.1, 2.0);
  for (int t = 0; t < trials; ++t) {
    const int size = 6 + t % 4;
    std::vector<VertexId> v(size);
    std::vector<Edge> e;
    for (int a = 0; a < size; ++a) {
      v[a] = a;
      for (int b = a + 1; b < size; ++b) {
        if (b == a + 1 || rng() % 2) e.push_back({a, b, cond(rng)});
      }
    }
    Network net(v, e);
    std::vector<VertexId> u2(v.begin(), v.begin() + 4), u1(v.begin(), v.begin() + 2);
    idem = std::max(idem, max_conductance_deviation(trace_to(trace_to(net, u2), u1), trace_to(net, u1)));
  }

  double pyth = 0.0;
  HilbertModule h3(g, 3);
  for (int t = 0; t < trials; ++t) {
    ModuleElement u = h3.random_element(rng);
    Projection pr = h3.project(u);
    const double n2 = h3.inner_product(u, u);
    pyth = std::max(pyth, std::abs(n2 - h3.inner_product(pr.p, pr.p) - h3.inner_product(pr.p_perp, pr.p_perp)) /
                              std::max(1.0, n2));
  }

  double involution = 0.0;
  for (int t = 0; t < trials; ++t) {
    const bool gasket = t % 2 == 0;
    const int depth = t % 3 + 1;
    auto f = gasket ? form_of(builtin::gasket(), depth)
                    : std::make_shared<const ResistanceForm>(quantum_graph_form({{0, 1}, {0, 1}, {0, 1}}, depth));
    HodgeBasis b(f, depth);
    Eigen::MatrixXd F = operator_F(b);
    Eigen::MatrixXd I = Eigen::MatrixXd::Identity(F.rows(), F.cols());
    // also against the projector built independently from the Neumann solve
    Eigen::MatrixXd Fn = b.represent(2 * b.module().projector_P() - Eigen::MatrixXd::Identity(b.module().flat_size(), b.module().flat_size()));
    involution = std::max({involution, (F * F - I).cwiseAbs().maxCoeff(), (Fn * Fn - I).cwiseAbs().maxCoeff()});
  }

  double continuity = 0.0;
  HodgeBasis b2(form_of(builtin::gasket(), 2), 2);
  for (int t = 0; t < trials; ++t) {
    Multiplier a = random_simple(cs, 2, rng), a2 = random_simple(cs, 2, rng);
    for (double& x : a2.values) x = 0.1 * x;
    for (std::size_t k = 0; k < a2.values.size(); ++k) a2.values[k] += a.values[k];
    Multiplier d = a - a2;
    SingularSpectrum s = singular_values(commutator_matrix(d, b2));
    continuity = std::max(continuity, s.values.front() / (4.0 * d.sup_norm()));
  }

  o.detail << "Gauss-Green " << gauss << " (1e-10), trace idempotence " << idem << " (1e-10), Pythagoras " << pyth
           << " (1e-10), F^2 - I " << involution << " (1e-9), ||[F,a-a']||/(4||a-a'||) " << continuity << " (<= 1)";
  o.require(gauss <= 1e-10, "Gauss-Green");
  o.require(idem <= 1e-10, "trace idempotence");
  o.require(pyth <= 1e-10, "Pythagoras");
  o.require(involution <= 1e-9, "F^2 = I");
  o.require(continuity <= 1.0 + 1e-12, "norm continuity");
}

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;
  Check run;
};

const std::vector<Criterion>& criteria() {
  static const std::vector<Criterion> list = {
      {1, "renormalization fixed point", 10, renormalization_fixed_point},
      {2, "Hodge dimension formulas", 30, hodge_dimensions},
      {3, "tree dichotomy", 10, tree_dichotomy},
      {4, "eta projection vs Neumann solve", 60, eta_agreement},
      {5, "localization", 60, localization},
      {6, "commutator rank bound", 30, commutator_rank},
      {7, "oscillation bound", 120, oscillation},
      {8, "interval pressure exactness", 10, interval_pressure},
      {9, "gasket P(2)", 120, gasket_pressure_at_two},
      {10, "strict convexity and critical exponent", 180, convexity_and_exponent},
      {11, "self-similar identity", 1, selfsimilar_identity},
      {12, "Weyl slope", 180, weyl_slopes},
      {13, "eigenbasis ONB identity", 60, eigenbasis_gram},
      {14, "property suites", 300, property_suites},
  };
  return list;
}

bool run(const Criterion& c) {
  Outcome o;
  const auto start = std::chrono::steady_clock::now();
  try {
    c.run(o);
  } catch (const std::exception& e) {
    o.pass = false;
    o.detail << " [exception: " << e.what() << "]";
  }
  const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (elapsed > c.budget_seconds) {
    o.pass = false;
    o.detail << " [over time budget]";
  }
  std::printf("criterion %2d %-40s %s  %.2fs/%.0fs  %s\n", c.id, c.name, o.pass ? "PASS" : "FAIL", elapsed,
              c.budget_seconds, o.detail.str().c_str());
  std::fflush(stdout);
  return o.pass;
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  if (argc > 1) only = std::atoi(argv[1]);
  bool all = true;
  bool found = false;
  for (const auto& c : criteria()) {
    if (only && c.id != only) continue;
    found = true;
    all = run(c) && all;
  }
  if (!found) {
    std::fprintf(stderr, "no criterion %d\n", only);
    return 2;
  }
  return all ? 0 : 1;
}
