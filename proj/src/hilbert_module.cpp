#include "fractal/hilbert_module.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "fractal/error.hpp"
#include "linalg.hpp"

namespace fractal {

void ModuleElement::canonicalize() {
  for (auto& c : cells) {
    if (c.size() > 0) c.array() -= c.mean();
  }
}

namespace {

void check_compatible(const ModuleElement& a, const ModuleElement& b) {
  if (a.level != b.level || a.cells.size() != b.cells.size()) {
    throw PreconditionError("module elements live at different levels");
  }
}

// Zero-sum basis of R^k: e_j - mean, j = 1 .. k-1.
Eigen::MatrixXd zero_sum_basis(int k) {
  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(k, k - 1);
  for (int j = 1; j < k; ++j) {
    z.col(j - 1).setConstant(-1.0 / k);
    z(j, j - 1) += 1.0;
  }
  return z;
}

}  // namespace

ModuleElement& ModuleElement::operator+=(const ModuleElement& other) {
  check_compatible(*this, other);
  for (std::size_t i = 0; i < cells.size(); ++i) cells[i] += other.cells[i];
  return *this;
}

ModuleElement& ModuleElement::operator-=(const ModuleElement& other) {
  check_compatible(*this, other);
  for (std::size_t i = 0; i < cells.size(); ++i) cells[i] -= other.cells[i];
  return *this;
}

ModuleElement& ModuleElement::operator*=(double s) {
  for (auto& c : cells) c *= s;
  return *this;
}

ModuleElement operator+(ModuleElement a, const ModuleElement& b) { return a += b; }
ModuleElement operator-(ModuleElement a, const ModuleElement& b) { return a -= b; }
ModuleElement operator*(double s, ModuleElement a) { return a *= s; }

HilbertModule::HilbertModule(std::shared_ptr<const ResistanceForm> form, int level)
    : form_(std::move(form)), level_(level) {
  const CellStructure& cs = form_->structure();
  if (level < 0 || level > cs.depth()) throw PreconditionError("module level out of range");
  for (int i = 0; i < cs.cell_count(level); ++i) {
    const int k = static_cast<int>(cs.cell(level, i).vertices.size());
    offsets_.push_back(flat_size_);
    flat_size_ += k;
    dimension_ += k - 1;
  }
  gram_ = Eigen::MatrixXd::Zero(flat_size_, flat_size_);
  for (int i = 0; i < cs.cell_count(level); ++i) {
    const auto& lap = form_->cell_laplacian(level, i);
    gram_.block(offsets_[i], offsets_[i], lap.rows(), lap.cols()) = lap;
  }

  gauge_ = cs.position(level, cs.level_vertices(0).front());
  const Eigen::MatrixXd lap = form_->level_laplacian(level);
  const int nv = static_cast<int>(lap.rows());
  std::vector<int> keep;
  for (int k = 0; k < nv; ++k) {
    if (k != gauge_) keep.push_back(k);
  }
  Eigen::MatrixXd reduced(nv - 1, nv - 1);
  for (int a = 0; a < nv - 1; ++a) {
    for (int b = 0; b < nv - 1; ++b) reduced(a, b) = lap(keep[a], keep[b]);
  }
  pinned_solver_.compute(reduced);
  if (nv > 1 && pinned_solver_.info() != Eigen::Success) {
    throw PreconditionError("level " + std::to_string(level) + " network is not connected");
  }
}

ModuleElement HilbertModule::zero() const {
  ModuleElement u;
  u.level = level_;
  const CellStructure& cs = form_->structure();
  for (int i = 0; i < cs.cell_count(level_); ++i) {
    u.cells.push_back(Eigen::VectorXd::Zero(cs.cell(level_, i).vertices.size()));
  }
  return u;
}

ModuleElement HilbertModule::from_flat(const Eigen::VectorXd& x) const {
  if (x.size() != flat_size_) throw PreconditionError("flat vector has the wrong length");
  ModuleElement u = zero();
  for (std::size_t i = 0; i < u.cells.size(); ++i) {
    u.cells[i] = x.segment(offsets_[i], u.cells[i].size());
  }
  u.canonicalize();
  return u;
}

Eigen::VectorXd HilbertModule::to_flat(const ModuleElement& u) const {
  if (u.level != level_ || static_cast<int>(u.cells.size()) != static_cast<int>(offsets_.size())) {
    throw PreconditionError("module element does not belong to H_" + std::to_string(level_));
  }
  Eigen::VectorXd x(flat_size_);
  for (std::size_t i = 0; i < u.cells.size(); ++i) {
    const int k = (i + 1 < offsets_.size() ? offsets_[i + 1] : flat_size_) - offsets_[i];
    if (u.cells[i].size() != k) throw PreconditionError("cell data has the wrong length");
    x.segment(offsets_[i], k) = u.cells[i];
  }
  return x;
}

double HilbertModule::inner_product(const ModuleElement& u, const ModuleElement& v) const {
  check_compatible(u, v);
  if (u.level != level_) throw PreconditionError("module element level mismatch");
  double sum = 0.0;
  for (std::size_t i = 0; i < u.cells.size(); ++i) {
    sum += form_->cell_energy(level_, static_cast<int>(i), u.cells[i], v.cells[i]);
  }
  return sum;
}

double HilbertModule::norm(const ModuleElement& u) const {
  return std::sqrt(std::max(0.0, inner_product(u, u)));
}

ModuleElement HilbertModule::derivation(const VertexFunction& f) const {
  if (f.level != level_) throw PreconditionError("derivation: function lives on another level");
  ModuleElement u = zero();
  for (std::size_t i = 0; i < u.cells.size(); ++i) {
    u.cells[i] = form_->restrict_to_cell(f, static_cast<int>(i));
  }
  u.canonicalize();
  return u;
}

ModuleElement HilbertModule::embed_cell(int index, const Eigen::VectorXd& values) const {
  ModuleElement u = zero();
  if (values.size() != u.cells.at(index).size()) {
    throw PreconditionError("embed_cell: value vector does not match the cell");
  }
  u.cells[index] = values;
  u.canonicalize();
  return u;
}

Eigen::VectorXd HilbertModule::normal_derivative_sums(const ModuleElement& u) const {
  const CellStructure& cs = form_->structure();
  Eigen::VectorXd sums = Eigen::VectorXd::Zero(cs.vertex_count(level_));
  for (std::size_t i = 0; i < u.cells.size(); ++i) {
    Eigen::VectorXd d = form_->normal_derivatives(level_, static_cast<int>(i), u.cells[i]);
    const auto& vs = cs.cell(level_, static_cast<int>(i)).vertices;
    for (std::size_t k = 0; k < vs.size(); ++k) sums[cs.position(level_, vs[k])] += d[k];
  }
  return sums;
}

Projection HilbertModule::project(const ModuleElement& u) const {
  Eigen::VectorXd rhs = normal_derivative_sums(u);
  const double scale = rhs.cwiseAbs().sum();
  if (std::abs(rhs.sum()) > 1e-9 * scale + 1e-12) {
    throw InternalConsistencyError("Neumann right-hand side violates solvability, total " +
                                   std::to_string(rhs.sum()));
  }
  const int nv = static_cast<int>(rhs.size());
  Eigen::VectorXd reduced(nv - 1);
  for (int k = 0, j = 0; k < nv; ++k) {
    if (k != gauge_) reduced[j++] = rhs[k];
  }
  Eigen::VectorXd sol = pinned_solver_.solve(reduced);
  Projection out;
  out.potential = {level_, Eigen::VectorXd::Zero(nv)};
  for (int k = 0, j = 0; k < nv; ++k) {
    if (k != gauge_) out.potential.values[k] = sol[j++];
  }
  out.p = derivation(out.potential);
  out.p_perp = u - out.p;
  return out;
}

ModuleElement HilbertModule::eta_projection(VertexId p, int cell_index) const {
  const CellStructure& cs = form_->structure();
  const auto& alpha = cs.cell(level_, cell_index).vertices;
  if (std::find(alpha.begin(), alpha.end(), p) == alpha.end()) {
    throw PreconditionError("eta_projection: vertex " + std::to_string(p) +
                            " is not on the boundary of cell " +
                            cs.cell(level_, cell_index).address.str());
  }
  const int nv = cs.vertex_count(level_);
  const int p_out = cs.position(level_, p);
  const int p_in = nv;
  auto split_index = [&](int cell, VertexId v) {
    if (v == p) return cell == cell_index ? p_in : p_out;
    return cs.position(level_, v);
  };

  Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(nv + 1, nv + 1);
  for (int i = 0; i < cs.cell_count(level_); ++i) {
    const Network& net = form_->cell_network(level_, i);
    for (const Edge& e : net.edges()) {
      const int a = split_index(i, net.vertices()[e.a]);
      const int b = split_index(i, net.vertices()[e.b]);
      lap(a, a) += e.conductance;
      lap(b, b) += e.conductance;
      lap(a, b) -= e.conductance;
      lap(b, a) -= e.conductance;
    }
  }

  std::vector<int> interior;
  for (int k = 0; k < nv; ++k) {
    if (k != p_out) interior.push_back(k);
  }
  const int ni = static_cast<int>(interior.size());
  Eigen::VectorXd eta = Eigen::VectorXd::Zero(nv + 1);
  eta[p_in] = 1.0;
  if (ni > 0) {
    Eigen::MatrixXd lii(ni, ni);
    Eigen::VectorXd rhs(ni);
    for (int a = 0; a < ni; ++a) {
      for (int b = 0; b < ni; ++b) lii(a, b) = lap(interior[a], interior[b]);
      rhs[a] = -lap(interior[a], p_in);
    }
    // A component touching neither p_in nor p_out cannot occur in a connected
    // level network; a vertex cut off from p_in simply gets 0.
    Eigen::LLT<Eigen::MatrixXd> llt(lii);
    if (llt.info() != Eigen::Success) {
      throw SingularNetworkError("eta_projection: split network has a floating component");
    }
    Eigen::VectorXd sol = llt.solve(rhs);
    for (int a = 0; a < ni; ++a) eta[interior[a]] = sol[a];
  }

  ModuleElement u = zero();
  for (int i = 0; i < cs.cell_count(level_); ++i) {
    const auto& vs = cs.cell(level_, i).vertices;
    for (std::size_t k = 0; k < vs.size(); ++k) u.cells[i][k] = eta[split_index(i, vs[k])];
  }
  u.canonicalize();
  return u;
}

Eigen::MatrixXd HilbertModule::projector_P() const {
  Eigen::MatrixXd out(flat_size_, flat_size_);
  for (int j = 0; j < flat_size_; ++j) {
    out.col(j) = to_flat(project_P(from_flat(Eigen::VectorXd::Unit(flat_size_, j))));
  }
  return out;
}

ModuleElement include(const ResistanceForm& form, const ModuleElement& u) {
  const CellStructure& cs = form.structure();
  const int n = u.level;
  if (n >= cs.depth()) throw PreconditionError("include: no finer level available");
  if (static_cast<int>(u.cells.size()) != cs.cell_count(n)) {
    throw PreconditionError("include: element does not match the structure");
  }
  ModuleElement out;
  out.level = n + 1;
  out.cells.resize(cs.cell_count(n + 1));
  for (int i = 0; i < cs.cell_count(n); ++i) {
    if (u.cells[i].size() != static_cast<int>(cs.cell(n, i).vertices.size()) ||
        !u.cells[i].allFinite()) {
      throw PreconditionError("include: cell data of " + cs.cell(n, i).address.str() +
                              " is not a boundary vector");
    }
    const Eigen::VectorXd ext = form.child_extension(n, i) * u.cells[i];
    const auto& ids = form.child_vertex_list(n, i);
    for (int c : cs.cell(n, i).children) {
      const auto& vs = cs.cell(n + 1, c).vertices;
      Eigen::VectorXd data(vs.size());
      for (std::size_t k = 0; k < vs.size(); ++k) {
        data[k] = ext[std::find(ids.begin(), ids.end(), vs[k]) - ids.begin()];
      }
      out.cells[c] = std::move(data);
    }
  }
  out.canonicalize();
  return out;
}

ModuleElement include(const ResistanceForm& form, const ModuleElement& u, int target_level) {
  if (target_level < u.level) throw PreconditionError("include: target level below element level");
  ModuleElement out = u;
  while (out.level < target_level) out = include(form, out);
  return out;
}

std::string to_string(HodgeBlock::Kind kind) {
  switch (kind) {
    case HodgeBlock::Kind::P0: return "P0";
    case HodgeBlock::Kind::Pperp0: return "Pperp0";
    case HodgeBlock::Kind::D: return "D";
    case HodgeBlock::Kind::N: return "N";
  }
  return "?";
}

namespace {

// Null space of constraints C (acting on flat coordinates of `module`) within
// the canonical subspace spanned by the cells listed in `cells`.
std::vector<Eigen::VectorXd> constrained_null_space(const HilbertModule& module,
                                                    const std::vector<int>& cells,
                                                    const Eigen::MatrixXd& constraints) {
  const CellStructure& cs = module.form().structure();
  int cols = 0;
  for (int c : cells) cols += static_cast<int>(cs.cell(module.level(), c).vertices.size()) - 1;
  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(module.flat_size(), cols);
  int col = 0;
  for (int c : cells) {
    const int k = static_cast<int>(cs.cell(module.level(), c).vertices.size());
    z.block(module.cell_offset(c), col, k, k - 1) = zero_sum_basis(k);
    col += k - 1;
  }
  std::vector<Eigen::VectorXd> out;
  for (const auto& y : linalg::null_space(constraints * z)) out.push_back(z * y);
  return out;
}

// Rows: for each vertex v in `vertices`, the flat-coordinate functional
// u -> sum over listed cells containing v of d_beta u_beta(v).
Eigen::MatrixXd normal_sum_constraints(const HilbertModule& module, const std::vector<int>& cells,
                                       const std::vector<VertexId>& vertices) {
  const CellStructure& cs = module.form().structure();
  const int n = module.level();
  std::map<VertexId, int> row;
  for (std::size_t k = 0; k < vertices.size(); ++k) row[vertices[k]] = static_cast<int>(k);
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(vertices.size(), module.flat_size());
  for (int b : cells) {
    const auto& vs = cs.cell(n, b).vertices;
    const auto& lap = module.form().cell_laplacian(n, b);
    for (std::size_t a = 0; a < vs.size(); ++a) {
      auto it = row.find(vs[a]);
      if (it == row.end()) continue;
      c.block(it->second, module.cell_offset(b), 1, vs.size()) += lap.row(a);
    }
  }
  return c;
}

void expect_dimension(std::size_t got, int expected, const std::string& what) {
  if (static_cast<int>(got) != expected) {
    throw InternalConsistencyError(what + ": dimension " + std::to_string(got) + ", expected " +
                                   std::to_string(expected));
  }
}

}  // namespace

HodgeBasis::HodgeBasis(std::shared_ptr<const ResistanceForm> form, int level)
    : module_(form, level) {
  const CellStructure& cs = form->structure();
  std::vector<HilbertModule> modules;
  for (int m = 0; m <= level; ++m) modules.emplace_back(form, m);

  std::vector<Eigen::VectorXd> columns;
  auto add_block = [&](HodgeBlock block, std::vector<Eigen::VectorXd> vecs, int native) {
    vecs = linalg::gram_schmidt(vecs, modules[native].gram());
    block.offset = static_cast<int>(columns.size());
    block.size = static_cast<int>(vecs.size());
    for (auto& v : vecs) {
      ModuleElement e = modules[native].from_flat(v);
      e = include(*form, e, level);
      columns.push_back(module_.to_flat(e));
    }
    blocks_.push_back(block);
    return block.size;
  };

  // H_0: gradients of boundary data, then the level-0 cycles.
  {
    const HilbertModule& h0 = modules[0];
    const int nv = cs.vertex_count(0);
    std::vector<Eigen::VectorXd> grads;
    for (int k = 1; k < nv; ++k) {
      grads.push_back(h0.to_flat(h0.derivation({0, Eigen::VectorXd::Unit(nv, k)})));
    }
    expect_dimension(add_block({HodgeBlock::Kind::P0}, grads, 0), nv - 1, "PH_0");
    std::vector<int> all(cs.cell_count(0));
    for (int i = 0; i < cs.cell_count(0); ++i) all[i] = i;
    auto cycles =
        constrained_null_space(h0, all, normal_sum_constraints(h0, all, cs.level_vertices(0)));
    expect_dimension(add_block({HodgeBlock::Kind::Pperp0}, cycles, 0), h0.dimension() - nv + 1,
                     "P-perp H_0");
  }

  for (int m = 0; m < level; ++m) {
    const HilbertModule& fine = modules[m + 1];
    for (int i = 0; i < cs.cell_count(m); ++i) {
      const Cell& alpha = cs.cell(m, i);
      const std::vector<VertexId> fresh = cs.new_vertices(m, i);

      std::vector<Eigen::VectorXd> tents;
      for (VertexId x : fresh) {
        VertexFunction phi{m + 1, Eigen::VectorXd::Unit(cs.vertex_count(m + 1), cs.position(m + 1, x))};
        tents.push_back(fine.to_flat(fine.derivation(phi)));
      }
      HodgeBlock d{HodgeBlock::Kind::D, m, i};
      expect_dimension(add_block(d, tents, m + 1), static_cast<int>(fresh.size()),
                       "J^D at " + alpha.address.str());

      std::vector<VertexId> points = alpha.vertices;
      points.insert(points.end(), fresh.begin(), fresh.end());
      int child_dim = 0;
      for (int c : alpha.children) child_dim += static_cast<int>(cs.cell(m + 1, c).vertices.size()) - 1;
      auto loops = constrained_null_space(fine, alpha.children,
                                          normal_sum_constraints(fine, alpha.children, points));
      HodgeBlock nb{HodgeBlock::Kind::N, m, i};
      expect_dimension(add_block(nb, loops, m + 1),
                       child_dim - static_cast<int>(points.size()) + 1,
                       "J^N at " + alpha.address.str());
    }
  }

  expect_dimension(columns.size(), module_.dimension(), "Hodge basis of H_" + std::to_string(level));
  basis_.resize(module_.flat_size(), static_cast<Eigen::Index>(columns.size()));
  signs_.resize(static_cast<Eigen::Index>(columns.size()));
  for (std::size_t k = 0; k < columns.size(); ++k) basis_.col(k) = columns[k];
  for (const auto& b : blocks_) signs_.segment(b.offset, b.size).setConstant(b.sign());
}

ModuleElement HodgeBasis::element(int k) const { return module_.from_flat(basis_.col(k)); }

Eigen::VectorXd HodgeBasis::coordinates(const ModuleElement& u) const {
  return basis_.transpose() * (module_.gram() * module_.to_flat(u));
}

ModuleElement HodgeBasis::from_coordinates(const Eigen::VectorXd& c) const {
  if (c.size() != dimension()) throw PreconditionError("coordinate vector has the wrong length");
  return module_.from_flat(basis_ * c);
}

Eigen::MatrixXd HodgeBasis::represent(const Eigen::MatrixXd& flat_operator) const {
  return basis_.transpose() * module_.gram() * flat_operator * basis_;
}

double HodgeBasis::gram_residual() const {
  Eigen::MatrixXd g = basis_.transpose() * module_.gram() * basis_;
  g -= Eigen::MatrixXd::Identity(g.rows(), g.cols());
  return g.size() ? g.cwiseAbs().maxCoeff() : 0.0;
}

int HodgeBasis::prefix_dimension(int m) const {
  int total = 0;
  for (const auto& b : blocks_) {
    const bool h0 = b.kind == HodgeBlock::Kind::P0 || b.kind == HodgeBlock::Kind::Pperp0;
    if (h0 || b.level < m) total += b.size;
  }
  return total;
}

std::vector<DimensionRow> dimension_report(std::shared_ptr<const ResistanceForm> form, int max_level) {
  const CellStructure& cs = form->structure();
  if (max_level > cs.depth()) throw PreconditionError("dimension_report: level beyond depth");
  std::vector<DimensionRow> rows;
  for (int n = 0; n <= max_level; ++n) {
    HilbertModule h(form, n);
    DimensionRow row;
    row.level = n;
    row.dim_h = h.dimension();
    row.dim_p = cs.vertex_count(n) - 1;
    row.dim_p_perp = row.dim_h - row.dim_p;
    Eigen::MatrixXd p = h.projector_P();
    Eigen::MatrixXd canon = Eigen::MatrixXd::Zero(h.flat_size(), h.flat_size());
    for (int j = 0; j < h.flat_size(); ++j) {
      canon.col(j) = h.to_flat(h.from_flat(Eigen::VectorXd::Unit(h.flat_size(), j)));
    }
    const double reference = canon.norm();
    row.rank_p = linalg::numerical_rank(p, 1e-9, reference);
    row.rank_p_perp = linalg::numerical_rank(canon - p, 1e-9, reference);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace fractal
