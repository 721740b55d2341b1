#include "fractal/spectral.hpp"

#include <algorithm>
#include <cmath>

#include "fractal/error.hpp"
#include "fractal/fredholm.hpp"

namespace fractal {

VertexMeasure vertex_measure(const CellStructure& cs, const std::vector<double>& weights, int level,
                             bool normalize) {
  for (double w : weights) {
    if (!(w > 0.0)) throw PreconditionError("vertex_measure: weights must be positive");
  }
  VertexMeasure out{level, Eigen::VectorXd::Zero(cs.vertex_count(level))};
  const double root_mass = 1.0 / cs.cell_count(0);
  for (const Cell& cell : cs.cells(level)) {
    double mass = root_mass;
    for (int j : cell.address.word) {
      if (j >= static_cast<int>(weights.size())) {
        throw PreconditionError("vertex_measure: no weight for child index " + std::to_string(j));
      }
      mass *= weights[j];
    }
    for (VertexId v : cell.vertices) {
      out.masses[cs.position(level, v)] += mass / static_cast<double>(cell.vertices.size());
    }
  }
  if (normalize) out.masses /= out.masses.sum();
  return out;
}

std::string to_string(BoundaryCondition bc) {
  return bc == BoundaryCondition::Neumann ? "neumann" : "dirichlet";
}

double EigenSystem::residual(const Eigen::MatrixXd& laplacian) const {
  double worst = 0.0;
  std::vector<int> rows;
  for (int k = 0; k < masses.size(); ++k) {
    if (bc == BoundaryCondition::Neumann || eigenvectors.row(k).cwiseAbs().maxCoeff() > 0.0) {
      rows.push_back(k);
    }
  }
  for (int j = 0; j < size(); ++j) {
    Eigen::VectorXd r = laplacian * eigenvectors.col(j) -
                        eigenvalues[j] * masses.cwiseProduct(eigenvectors.col(j));
    // Dirichlet rows on V_0 carry the boundary reaction; they are not part of
    // the eigenproblem.
    double m = 0.0;
    for (int k : rows) m = std::max(m, std::abs(r[k]));
    worst = std::max(worst, m);
  }
  return worst;
}

double EigenSystem::orthonormality_residual() const {
  Eigen::MatrixXd g = eigenvectors.transpose() * masses.asDiagonal() * eigenvectors;
  g -= Eigen::MatrixXd::Identity(g.rows(), g.cols());
  return g.size() ? g.cwiseAbs().maxCoeff() : 0.0;
}

EigenSystem laplacian_eigen(const ResistanceForm& form, const VertexMeasure& measure,
                            BoundaryCondition bc) {
  const CellStructure& cs = form.structure();
  const int n = measure.level;
  if (measure.masses.size() != cs.vertex_count(n)) {
    throw PreconditionError("laplacian_eigen: measure does not match V_n");
  }
  if ((measure.masses.array() <= 0.0).any()) {
    throw PreconditionError("laplacian_eigen: masses must be positive");
  }
  const Eigen::MatrixXd lap = form.level_laplacian(n);
  std::vector<int> keep;
  for (int k = 0; k < cs.vertex_count(n); ++k) {
    const bool boundary = std::binary_search(cs.level_vertices(0).begin(),
                                             cs.level_vertices(0).end(), cs.level_vertices(n)[k]);
    if (bc == BoundaryCondition::Neumann || !boundary) keep.push_back(k);
  }
  if (keep.empty()) throw PreconditionError("laplacian_eigen: no interior vertices");
  const int m = static_cast<int>(keep.size());
  Eigen::VectorXd inv_sqrt(m);
  for (int a = 0; a < m; ++a) inv_sqrt[a] = 1.0 / std::sqrt(measure.masses[keep[a]]);
  Eigen::MatrixXd s(m, m);
  for (int a = 0; a < m; ++a) {
    for (int b = 0; b < m; ++b) s(a, b) = inv_sqrt[a] * lap(keep[a], keep[b]) * inv_sqrt[b];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s);
  if (eig.info() != Eigen::Success) throw InternalConsistencyError("eigensolver failed");

  EigenSystem out;
  out.level = n;
  out.bc = bc;
  out.masses = measure.masses;
  out.eigenvalues = eig.eigenvalues();
  out.eigenvectors = Eigen::MatrixXd::Zero(cs.vertex_count(n), m);
  for (int a = 0; a < m; ++a) out.eigenvectors.row(keep[a]) = inv_sqrt[a] * eig.eigenvectors().row(a);
  return out;
}

WeylFit weyl_fit(const std::vector<EigenSystem>& systems, double keep_fraction) {
  if (systems.size() < 2) throw PreconditionError("weyl_fit needs at least two levels");
  std::vector<double> xs, ys;
  for (const auto& sys : systems) {
    const double top = sys.eigenvalues.size() ? sys.eigenvalues.maxCoeff() : 0.0;
    std::vector<int> positive;
    for (int k = 0; k < sys.size(); ++k) {
      if (sys.eigenvalues[k] > 1e-12 * top) positive.push_back(k);
    }
    const int used = static_cast<int>(std::floor(keep_fraction * positive.size()));
    for (int j = 0; j < used; ++j) {
      const int k = positive[j];
      xs.push_back(std::log(sys.eigenvalues[k]));
      ys.push_back(std::log(static_cast<double>(k + 1)));
    }
  }
  if (xs.size() < 2) throw PreconditionError("weyl_fit: insufficient eigenvalues in range");
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (sxx == 0.0) throw PreconditionError("weyl_fit: eigenvalues are degenerate");
  WeylFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double r = ys[i] - (fit.intercept + fit.slope * xs[i]);
    ss += r * r;
  }
  fit.residual = std::sqrt(ss / n);
  fit.points = static_cast<int>(xs.size());
  return fit;
}

EigenbasisCheck eigenbasis_check(const VertexFunction& a, const EigenSystem& system,
                                 const HilbertModule& module, double p, double spectral_dim) {
  if (system.bc != BoundaryCondition::Dirichlet) {
    throw PreconditionError("eigenbasis_check needs a Dirichlet system");
  }
  if (system.level != module.level()) {
    throw PreconditionError("eigenbasis_check: system and module live on different levels");
  }
  const ResistanceForm& form = module.form();
  const int n = module.level();
  EigenbasisCheck out;
  out.below_dimension = p <= spectral_dim;

  std::vector<ModuleElement> xi;
  Eigen::MatrixXd flat(module.flat_size(), system.size());
  for (int k = 0; k < system.size(); ++k) {
    VertexFunction ak{n, system.eigenvectors.col(k)};
    ModuleElement e = (1.0 / std::sqrt(system.eigenvalues[k])) * module.derivation(ak);
    flat.col(k) = module.to_flat(e);
    xi.push_back(std::move(e));
  }
  Eigen::MatrixXd g = flat.transpose() * module.gram() * flat;
  g -= Eigen::MatrixXd::Identity(g.rows(), g.cols());
  out.gram_residual = g.size() ? g.cwiseAbs().maxCoeff() : 0.0;

  const Multiplier mult = cell_average(form, a, n);
  for (const auto& e : xi) {
    out.sum += std::pow(module.norm(module.project_P_perp(multiply(form.structure(), e, mult))), p);
  }
  out.energy = form.level_energy(a);
  if (out.energy > 1e-14) out.ratio = out.sum / std::pow(out.energy, 0.5 * p);
  return out;
}

}  // namespace fractal
