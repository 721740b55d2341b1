#include "fractal/fredholm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fractal/error.hpp"
#include "linalg.hpp"

namespace fractal {

Multiplier Multiplier::constant(const CellStructure& cs, int level, double c) {
  return {level, std::vector<double>(cs.cell_count(level), c)};
}

Multiplier Multiplier::indicator(const CellStructure& cs, const CellAddress& cell) {
  auto index = cs.find(cell);
  if (!index) throw PreconditionError("no cell with address " + cell.str());
  Multiplier a = constant(cs, cell.level(), 0.0);
  a.values[*index] = 1.0;
  return a;
}

double Multiplier::sup_norm() const {
  double m = 0.0;
  for (double v : values) m = std::max(m, std::abs(v));
  return m;
}

Multiplier operator-(const Multiplier& a, const Multiplier& b) {
  if (a.level != b.level || a.values.size() != b.values.size()) {
    throw PreconditionError("multipliers live on different levels");
  }
  Multiplier out = a;
  for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] -= b.values[i];
  return out;
}

Multiplier refine(const CellStructure& cs, const Multiplier& a, int level) {
  if (level < a.level || level > cs.depth()) throw PreconditionError("refine: bad target level");
  if (static_cast<int>(a.values.size()) != cs.cell_count(a.level)) {
    throw PreconditionError("multiplier does not match the structure");
  }
  Multiplier out{level, std::vector<double>(cs.cell_count(level))};
  for (int i = 0; i < cs.cell_count(level); ++i) out.values[i] = a.values[cs.ancestor(level, i, a.level)];
  return out;
}

Multiplier cell_average(const ResistanceForm& form, const VertexFunction& f, int level) {
  VertexFunction g = form.harmonic_extension(f, level);
  Multiplier out{level, {}};
  for (int i = 0; i < form.structure().cell_count(level); ++i) {
    out.values.push_back(form.restrict_to_cell(g, i).mean());
  }
  return out;
}

ModuleElement multiply(const CellStructure& cs, const ModuleElement& u, const Multiplier& a) {
  if (a.level > u.level) throw PreconditionError("multiply: multiplier is finer than the element");
  Multiplier fine = refine(cs, a, u.level);
  ModuleElement out = u;
  for (std::size_t i = 0; i < out.cells.size(); ++i) out.cells[i] *= fine.values[i];
  return out;
}

Eigen::MatrixXd multiplication_operator(const HilbertModule& h, const Multiplier& a) {
  const CellStructure& cs = h.form().structure();
  Multiplier fine = refine(cs, a, h.level());
  Eigen::VectorXd diag(h.flat_size());
  for (int i = 0; i < cs.cell_count(h.level()); ++i) {
    diag.segment(h.cell_offset(i), cs.cell(h.level(), i).vertices.size()).setConstant(fine.values[i]);
  }
  return diag.asDiagonal();
}

Eigen::MatrixXd multiplication_matrix(const HodgeBasis& basis, const Multiplier& a) {
  return basis.represent(multiplication_operator(basis.module(), a));
}

Eigen::MatrixXd operator_F(const HodgeBasis& basis) { return basis.signs().asDiagonal(); }

Eigen::MatrixXd commutator_matrix(const Multiplier& a, const HodgeBasis& basis) {
  // constants commute with F; shifting by one keeps constant multipliers exactly zero
  Multiplier shifted = a;
  if (!a.values.empty()) {
    const auto [lo, hi] = std::minmax_element(a.values.begin(), a.values.end());
    const double mid = 0.5 * (*lo + *hi);
    for (double& x : shifted.values) x -= mid;
  }
  const Eigen::MatrixXd m = multiplication_matrix(basis, shifted);
  const Eigen::VectorXd& s = basis.signs();
  // (F A - A F)_{ij} = (s_i - s_j) A_{ij}
  Eigen::MatrixXd c(m.rows(), m.cols());
  for (int j = 0; j < m.cols(); ++j) {
    for (int i = 0; i < m.rows(); ++i) c(i, j) = (s[i] - s[j]) * m(i, j);
  }
  return c;
}

double SingularSpectrum::frobenius_squared() const {
  double sum = 0.0;
  for (double s : values) sum += s * s;
  return sum;
}

double SingularSpectrum::pairing_defect() const {
  double defect = 0.0;
  for (std::size_t k = 0; k + 1 < values.size(); k += 2) {
    defect = std::max(defect, std::abs(values[k] - values[k + 1]));
  }
  if (values.size() % 2 == 1) defect = std::max(defect, values.back());
  return defect;
}

SingularSpectrum singular_values(const Eigen::MatrixXd& m) {
  SingularSpectrum out;
  if (m.size() == 0) return out;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& s = svd.singularValues();
  out.values.assign(s.data(), s.data() + s.size());
  std::sort(out.values.begin(), out.values.end(), std::greater<>());
  return out;
}

SummabilityReport summability_report(const SingularSpectrum& s, const std::vector<double>& ps) {
  SummabilityReport rep;
  const auto& v = s.values;
  for (double p : ps) {
    if (!(p > 0.0 && p <= 2.0)) throw PreconditionError("summability exponents must lie in (0, 2]");
    SummabilityRow row;
    row.p = p;
    double prefix = 0.0, prefix_p = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) {
      prefix += v[k];
      prefix_p += std::pow(v[k], p);
      const double n = static_cast<double>(k + 1);
      row.weak_sum = std::max(row.weak_sum, std::pow(n, 1.0 / p - 1.0) * prefix);
      if (k + 1 >= 2) row.log_weak_sum = std::max(row.log_weak_sum, prefix_p / std::log(n));
    }
    row.p_sum = prefix_p;
    rep.rows.push_back(row);
  }
  double prefix = 0.0;
  for (std::size_t k = 0; k < v.size(); ++k) {
    prefix += v[k];
    if (k + 1 >= 2) rep.dixmier.push_back(prefix / std::log(static_cast<double>(k + 1)));
  }
  rep.trace = prefix;
  return rep;
}

std::vector<double> p_sum_sequence(const std::vector<SingularSpectrum>& family, double p) {
  std::vector<double> out;
  for (const auto& s : family) {
    double sum = 0.0;
    for (double x : s.values) sum += std::pow(x, p);
    out.push_back(sum);
  }
  return out;
}

OscillationCheck oscillation_bound_check(const Multiplier& a_in, const HodgeBasis& basis, double p) {
  const CellStructure& cs = basis.module().form().structure();
  const int top = basis.level();
  const Multiplier a = refine(cs, a_in, top);

  OscillationCheck out;
  const Eigen::MatrixXd c = commutator_matrix(a, basis);
  for (int k = 0; k < c.cols(); ++k) out.lhs += std::pow(c.col(k).norm(), p);

  out.L = cs.vertex_count(0);
  for (int m = 0; m < top; ++m) {
    for (int i = 0; i < cs.cell_count(m); ++i) {
      out.L = std::max(out.L, static_cast<int>(cs.new_vertices(m, i).size()));
    }
  }
  auto oscillation = [&](const std::vector<int>& cells) {
    double mean = 0.0;
    for (int b : cells) mean += a.values[b];
    mean /= static_cast<double>(cells.size());
    double osc = 0.0;
    for (int b : cells) osc = std::max(osc, std::abs(a.values[b] - mean));
    return osc;
  };

  std::vector<int> everything(cs.cell_count(top));
  std::iota(everything.begin(), everything.end(), 0);
  bool top_counted = false;
  int last_level = -1, last_cell = -1;
  for (const auto& b : basis.blocks()) {
    if (b.size == 0) continue;
    if (b.cell < 0) {
      if (top_counted) continue;
      top_counted = true;
      out.rhs += 8.0 * out.L * std::pow(oscillation(everything), p);
      continue;
    }
    if (b.level == last_level && b.cell == last_cell) continue;
    last_level = b.level;
    last_cell = b.cell;
    out.rhs += 8.0 * out.L * std::pow(oscillation(cs.descendants(b.level, b.cell, top)), p);
  }
  return out;
}

OscillationCheck oscillation_bound_check(const VertexFunction& f, const HodgeBasis& basis, double p) {
  return oscillation_bound_check(cell_average(basis.module().form(), f, basis.level()), basis, p);
}

double localization_residual(const ModuleElement& v, int n, int cell_index,
                             const HodgeBasis& basis) {
  const HilbertModule& h = basis.module();
  const CellStructure& cs = h.form().structure();
  if (n < 0 || n > h.level()) throw PreconditionError("localization_residual: bad level");
  const Eigen::VectorXd coords = basis.coordinates(v);
  const int head = basis.prefix_dimension(n);
  const double leak = coords.head(head).norm();
  if (leak > 1e-9 * std::max(1.0, coords.norm())) {
    throw PreconditionError("localization_residual: element is not orthogonal to H_" +
                            std::to_string(n) + " (component " + std::to_string(leak) + ")");
  }
  const Multiplier one = Multiplier::indicator(cs, cs.cell(n, cell_index).address);
  const Projection whole = h.project(v);
  const Projection part = h.project(multiply(cs, v, one));
  const double rp = h.norm(part.p - multiply(cs, whole.p, one));
  const double rq = h.norm(part.p_perp - multiply(cs, whole.p_perp, one));
  return std::max(rp, rq);
}

RankCheck rank_check(const Multiplier& a, const HodgeBasis& basis) {
  if (a.level >= basis.level()) {
    throw PreconditionError("rank_check: ambient level must exceed the multiplier level");
  }
  RankCheck out;
  out.bound = HilbertModule(basis.module().form_ptr(), a.level).dimension();
  SingularSpectrum s = singular_values(commutator_matrix(a, basis));
  // roundoff on a constant multiplier must not count, so the scale is at least ||a||_inf
  const double scale = std::max(s.values.empty() ? 0.0 : s.values.front(), a.sup_norm());
  for (double x : s.values) out.rank += x > 1e-9 * scale;
  return out;
}

double kernel_residual(const Multiplier& a, const HodgeBasis& basis) {
  const Eigen::MatrixXd c = commutator_matrix(a, basis);
  double worst = 0.0;
  for (const auto& b : basis.blocks()) {
    if (b.cell < 0 || b.level < a.level) continue;
    for (int k = b.offset; k < b.offset + b.size; ++k) worst = std::max(worst, c.col(k).norm());
  }
  return worst;
}

}  // namespace fractal
