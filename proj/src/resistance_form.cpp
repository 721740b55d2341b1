#include "fractal/resistance_form.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <queue>
#include <set>

#include "fractal/error.hpp"

namespace fractal {

namespace {

// Connected components of the subgraph induced on `subset` (local indices).
std::vector<std::vector<int>> components(const Eigen::MatrixXd& conductance,
                                         const std::vector<int>& subset) {
  std::vector<std::vector<int>> out;
  std::vector<bool> seen(subset.size(), false);
  for (std::size_t s = 0; s < subset.size(); ++s) {
    if (seen[s]) continue;
    std::vector<int> comp;
    std::queue<std::size_t> todo;
    todo.push(s);
    seen[s] = true;
    while (!todo.empty()) {
      std::size_t k = todo.front();
      todo.pop();
      comp.push_back(subset[k]);
      for (std::size_t t = 0; t < subset.size(); ++t) {
        if (!seen[t] && conductance(subset[k], subset[t]) > 0.0) {
          seen[t] = true;
          todo.push(t);
        }
      }
    }
    out.push_back(std::move(comp));
  }
  return out;
}

std::string describe(const std::vector<VertexId>& vertices, const std::vector<int>& comp) {
  std::string s = "{";
  for (std::size_t k = 0; k < comp.size(); ++k) {
    if (k) s += ", ";
    s += std::to_string(vertices[comp[k]]);
  }
  return s + "}";
}

// Harmonic extension operator [I; -L_II^{-1} L_IB] for a Laplacian with the
// given boundary/interior split. Rows are ordered boundary first.
Eigen::MatrixXd extension_operator(const Eigen::MatrixXd& lap, const std::vector<int>& boundary,
                                   const std::vector<int>& interior,
                                   const std::vector<VertexId>& ids) {
  const int nb = static_cast<int>(boundary.size());
  const int ni = static_cast<int>(interior.size());
  Eigen::MatrixXd out(nb + ni, nb);
  out.topRows(nb).setIdentity();
  if (ni == 0) return out;
  Eigen::MatrixXd lii(ni, ni), lib(ni, nb);
  for (int i = 0; i < ni; ++i) {
    for (int k = 0; k < ni; ++k) lii(i, k) = lap(interior[i], interior[k]);
    for (int k = 0; k < nb; ++k) lib(i, k) = lap(interior[i], boundary[k]);
  }
  Eigen::LLT<Eigen::MatrixXd> llt(lii);
  if (llt.info() != Eigen::Success) {
    throw SingularNetworkError("interior block is singular; interior vertices " +
                               describe(ids, interior));
  }
  out.bottomRows(ni) = -llt.solve(lib);
  return out;
}

}  // namespace

Network::Network(std::vector<VertexId> vertices, const std::vector<Edge>& edges)
    : vertices_(std::move(vertices)) {
  std::map<std::pair<int, int>, double> merged;
  const int n = size();
  for (const Edge& e : edges) {
    if (e.a < 0 || e.b < 0 || e.a >= n || e.b >= n) {
      throw PreconditionError("network edge endpoint out of range");
    }
    if (e.a == e.b) throw PreconditionError("network edges must join distinct vertices");
    if (e.conductance < 0.0 || !std::isfinite(e.conductance)) {
      throw PreconditionError("conductances must be finite and non-negative");
    }
    merged[{std::min(e.a, e.b), std::max(e.a, e.b)}] += e.conductance;
  }
  for (const auto& [key, c] : merged) {
    if (c != 0.0) edges_.push_back({key.first, key.second, c});
  }
}

Network Network::from_matrix(std::vector<VertexId> vertices, const Eigen::MatrixXd& conductance) {
  std::vector<Edge> edges;
  const int n = static_cast<int>(vertices.size());
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      if (conductance(a, b) != 0.0) edges.push_back({a, b, conductance(a, b)});
    }
  }
  return Network(std::move(vertices), edges);
}

Network Network::from_laplacian(std::vector<VertexId> vertices, const Eigen::MatrixXd& laplacian,
                                double tolerance) {
  const int n = static_cast<int>(vertices.size());
  const double scale = std::max(1.0, laplacian.diagonal().cwiseAbs().maxCoeff());
  std::vector<Edge> edges;
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      double c = -0.5 * (laplacian(a, b) + laplacian(b, a));
      if (std::abs(c) <= tolerance * scale) continue;
      if (c < 0.0) {
        throw InternalConsistencyError("Laplacian has a positive off-diagonal entry " +
                                       std::to_string(-c));
      }
      edges.push_back({a, b, c});
    }
  }
  return Network(std::move(vertices), edges);
}

int Network::local_index(VertexId v) const {
  auto it = std::find(vertices_.begin(), vertices_.end(), v);
  return it == vertices_.end() ? -1 : static_cast<int>(it - vertices_.begin());
}

double Network::conductance(int a, int b) const {
  if (a > b) std::swap(a, b);
  for (const Edge& e : edges_) {
    if (e.a == a && e.b == b) return e.conductance;
  }
  return 0.0;
}

Eigen::MatrixXd Network::laplacian() const {
  Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(size(), size());
  for (const Edge& e : edges_) {
    lap(e.a, e.a) += e.conductance;
    lap(e.b, e.b) += e.conductance;
    lap(e.a, e.b) -= e.conductance;
    lap(e.b, e.a) -= e.conductance;
  }
  return lap;
}

Eigen::MatrixXd Network::conductance_matrix() const {
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(size(), size());
  for (const Edge& e : edges_) c(e.a, e.b) = c(e.b, e.a) = e.conductance;
  return c;
}

double Network::energy(const Eigen::VectorXd& u, const Eigen::VectorXd& v) const {
  if (u.size() != size() || v.size() != size()) {
    throw PreconditionError("energy: value vector size does not match network");
  }
  double sum = 0.0;
  for (const Edge& e : edges_) sum += e.conductance * (u[e.a] - u[e.b]) * (v[e.a] - v[e.b]);
  return sum;
}

Network Network::scaled(double factor) const {
  std::vector<Edge> edges = edges_;
  for (Edge& e : edges) e.conductance *= factor;
  return Network(vertices_, edges);
}

bool Network::connected() const {
  if (size() <= 1) return true;
  std::vector<int> all(size());
  for (int i = 0; i < size(); ++i) all[i] = i;
  return components(conductance_matrix(), all).size() == 1;
}

Eigen::MatrixXd laplacian(const Network& net) { return net.laplacian(); }

Network trace_to(const Network& net, const std::vector<VertexId>& boundary) {
  if (boundary.empty()) throw PreconditionError("trace_to: boundary must be nonempty");
  std::vector<int> b_idx;
  std::vector<bool> on_boundary(net.size(), false);
  for (VertexId v : boundary) {
    int k = net.local_index(v);
    if (k < 0) throw PreconditionError("trace_to: vertex " + std::to_string(v) + " not in network");
    if (on_boundary[k]) throw PreconditionError("trace_to: boundary lists a vertex twice");
    on_boundary[k] = true;
    b_idx.push_back(k);
  }
  std::vector<int> i_idx;
  for (int k = 0; k < net.size(); ++k) {
    if (!on_boundary[k]) i_idx.push_back(k);
  }
  const Eigen::MatrixXd lap = net.laplacian();
  const int nb = static_cast<int>(b_idx.size());
  const int ni = static_cast<int>(i_idx.size());
  Eigen::MatrixXd lbb(nb, nb);
  for (int a = 0; a < nb; ++a) {
    for (int c = 0; c < nb; ++c) lbb(a, c) = lap(b_idx[a], b_idx[c]);
  }
  if (ni > 0) {
    const Eigen::MatrixXd cond = net.conductance_matrix();
    for (const auto& comp : components(cond, i_idx)) {
      bool touches = false;
      for (int k : comp) {
        for (int bk : b_idx) touches = touches || cond(k, bk) > 0.0;
      }
      if (!touches) {
        throw SingularNetworkError("trace_to: interior component " + describe(net.vertices(), comp) +
                                   " has no connection to the boundary");
      }
    }
    Eigen::MatrixXd lii(ni, ni), lib(ni, nb);
    for (int a = 0; a < ni; ++a) {
      for (int c = 0; c < ni; ++c) lii(a, c) = lap(i_idx[a], i_idx[c]);
      for (int c = 0; c < nb; ++c) lib(a, c) = lap(i_idx[a], b_idx[c]);
    }
    Eigen::LLT<Eigen::MatrixXd> llt(lii);
    if (llt.info() != Eigen::Success) throw SingularNetworkError("trace_to: singular interior block");
    lbb -= lib.transpose() * llt.solve(lib);
  }
  return Network::from_laplacian(boundary, lbb);
}

double effective_resistance(const Network& net, VertexId x, VertexId y) {
  if (x == y) throw PreconditionError("effective_resistance: x and y must differ");
  if (!net.connected()) throw PreconditionError("effective_resistance: network is disconnected");
  Network reduced = trace_to(net, {x, y});
  double c = reduced.conductance(0, 1);
  if (c <= 0.0) throw PreconditionError("effective_resistance: x and y are not connected");
  return 1.0 / c;
}

double max_conductance_deviation(const Network& lhs, const Network& rhs) {
  if (lhs.size() != rhs.size()) {
    throw PreconditionError("max_conductance_deviation: vertex sets differ");
  }
  std::vector<int> map(lhs.size());
  for (int k = 0; k < lhs.size(); ++k) {
    map[k] = rhs.local_index(lhs.vertices()[k]);
    if (map[k] < 0) throw PreconditionError("max_conductance_deviation: vertex sets differ");
  }
  const Eigen::MatrixXd a = lhs.conductance_matrix();
  const Eigen::MatrixXd b = rhs.conductance_matrix();
  double dev = 0.0;
  for (int i = 0; i < lhs.size(); ++i) {
    for (int k = i + 1; k < lhs.size(); ++k) {
      dev = std::max(dev, std::abs(a(i, k) - b(map[i], map[k])));
    }
  }
  return dev;
}

ResistanceForm::ResistanceForm(std::shared_ptr<const CellStructure> structure,
                               std::vector<std::vector<Network>> cell_networks)
    : structure_(std::move(structure)), networks_(std::move(cell_networks)) {
  const CellStructure& cs = *structure_;
  if (static_cast<int>(networks_.size()) != cs.depth() + 1) {
    throw PreconditionError("resistance form needs one network list per level");
  }
  laplacians_.resize(networks_.size());
  for (int n = 0; n <= cs.depth(); ++n) {
    if (static_cast<int>(networks_[n].size()) != cs.cell_count(n)) {
      throw PreconditionError("resistance form needs one network per cell at level " +
                              std::to_string(n));
    }
    for (int i = 0; i < cs.cell_count(n); ++i) {
      const Network& net = networks_[n][i];
      if (net.vertices() != cs.cell(n, i).vertices) {
        throw PreconditionError("network of cell " + cs.cell(n, i).address.str() +
                                " does not live on its boundary vertices");
      }
      if (!net.connected()) {
        throw PreconditionError("network of cell " + cs.cell(n, i).address.str() +
                                " is not irreducible");
      }
      laplacians_[n].push_back(net.laplacian());
    }
  }

  child_vertices_.resize(cs.depth());
  extensions_.resize(cs.depth());
  for (int n = 0; n < cs.depth(); ++n) {
    for (int i = 0; i < cs.cell_count(n); ++i) {
      const Cell& cell = cs.cell(n, i);
      std::vector<VertexId> ids = cell.vertices;
      for (VertexId v : cs.new_vertices(n, i)) ids.push_back(v);
      std::map<VertexId, int> local;
      for (std::size_t k = 0; k < ids.size(); ++k) local[ids[k]] = static_cast<int>(k);

      Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(ids.size(), ids.size());
      for (int c : cell.children) {
        const Cell& child = cs.cell(n + 1, c);
        const Eigen::MatrixXd& lc = laplacians_[n + 1][c];
        for (std::size_t a = 0; a < child.vertices.size(); ++a) {
          auto ia = local.find(child.vertices[a]);
          if (ia == local.end()) {
            // Child vertex outside V_alpha and not new: it belongs to V_n but
            // not to this cell, which breaks FRCS6.
            throw PreconditionError("child of cell " + cell.address.str() +
                                    " reaches a vertex outside the cell");
          }
          for (std::size_t b = 0; b < child.vertices.size(); ++b) {
            lap(ia->second, local.at(child.vertices[b])) += lc(a, b);
          }
        }
      }
      std::vector<int> boundary(cell.vertices.size()), interior;
      for (std::size_t k = 0; k < cell.vertices.size(); ++k) boundary[k] = static_cast<int>(k);
      for (std::size_t k = cell.vertices.size(); k < ids.size(); ++k) {
        interior.push_back(static_cast<int>(k));
      }
      try {
        extensions_[n].push_back(extension_operator(lap, boundary, interior, ids));
      } catch (const SingularNetworkError& e) {
        throw SingularNetworkError("cell " + cell.address.str() + ": " + e.what());
      }
      child_vertices_[n].push_back(std::move(ids));
    }
  }
}

Eigen::MatrixXd ResistanceForm::level_laplacian(int level) const {
  const CellStructure& cs = *structure_;
  const int nv = cs.vertex_count(level);
  Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(nv, nv);
  for (int i = 0; i < cs.cell_count(level); ++i) {
    const auto& vs = cs.cell(level, i).vertices;
    const Eigen::MatrixXd& lc = laplacians_[level][i];
    for (std::size_t a = 0; a < vs.size(); ++a) {
      for (std::size_t b = 0; b < vs.size(); ++b) {
        lap(cs.position(level, vs[a]), cs.position(level, vs[b])) += lc(a, b);
      }
    }
  }
  return lap;
}

Network ResistanceForm::level_network(int level) const {
  return Network::from_laplacian(structure_->level_vertices(level), level_laplacian(level));
}

double ResistanceForm::level_energy(const VertexFunction& f) const {
  if (f.values.size() != structure_->vertex_count(f.level)) {
    throw PreconditionError("level_energy: value vector does not match V_n");
  }
  return f.values.dot(level_laplacian(f.level) * f.values);
}

Network ResistanceForm::level_trace(int level) const {
  const CellStructure& cs = *structure_;
  if (level < 0 || level >= cs.depth()) throw PreconditionError("level_trace: level out of range");
  const int nv = cs.vertex_count(level);
  Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(nv, nv);
  for (int i = 0; i < cs.cell_count(level); ++i) {
    const auto& ids = child_vertices_[level][i];
    const Eigen::MatrixXd& ext = extensions_[level][i];
    // Energy of the harmonic extension: ext^T (sum of child Laplacians) ext.
    Eigen::MatrixXd lap_children = Eigen::MatrixXd::Zero(ids.size(), ids.size());
    std::map<VertexId, int> local;
    for (std::size_t k = 0; k < ids.size(); ++k) local[ids[k]] = static_cast<int>(k);
    for (int c : cs.cell(level, i).children) {
      const auto& vs = cs.cell(level + 1, c).vertices;
      const Eigen::MatrixXd& lc = laplacians_[level + 1][c];
      for (std::size_t a = 0; a < vs.size(); ++a) {
        for (std::size_t b = 0; b < vs.size(); ++b) {
          lap_children(local.at(vs[a]), local.at(vs[b])) += lc(a, b);
        }
      }
    }
    Eigen::MatrixXd schur = ext.transpose() * lap_children * ext;
    const auto& vs = cs.cell(level, i).vertices;
    for (std::size_t a = 0; a < vs.size(); ++a) {
      for (std::size_t b = 0; b < vs.size(); ++b) {
        lap(cs.position(level, vs[a]), cs.position(level, vs[b])) += schur(a, b);
      }
    }
  }
  return Network::from_laplacian(cs.level_vertices(level), lap);
}

double ResistanceForm::check_compatibility(int level) const {
  return max_conductance_deviation(level_trace(level), level_network(level));
}

Eigen::VectorXd ResistanceForm::restrict_to_cell(const VertexFunction& f, int index) const {
  const auto& vs = structure_->cell(f.level, index).vertices;
  Eigen::VectorXd out(vs.size());
  for (std::size_t k = 0; k < vs.size(); ++k) out[k] = f.values[structure_->position(f.level, vs[k])];
  return out;
}

VertexFunction ResistanceForm::harmonic_extension(const VertexFunction& f, int target_level) const {
  const CellStructure& cs = *structure_;
  if (target_level < f.level || target_level > cs.depth()) {
    throw PreconditionError("harmonic_extension: target level out of range");
  }
  if (f.values.size() != cs.vertex_count(f.level)) {
    throw PreconditionError("harmonic_extension: value vector does not match V_n");
  }
  VertexFunction current = f;
  for (int n = f.level; n < target_level; ++n) {
    VertexFunction next{n + 1, Eigen::VectorXd::Zero(cs.vertex_count(n + 1))};
    for (VertexId v : cs.level_vertices(n)) {
      int pos = cs.position(n + 1, v);
      if (pos < 0) throw PreconditionError("harmonic_extension: V_n is not contained in V_{n+1}");
      next.values[pos] = current.values[cs.position(n, v)];
    }
    for (int i = 0; i < cs.cell_count(n); ++i) {
      Eigen::VectorXd ext = extensions_[n][i] * restrict_to_cell(current, i);
      const auto& ids = child_vertices_[n][i];
      for (std::size_t k = 0; k < ids.size(); ++k) next.values[cs.position(n + 1, ids[k])] = ext[k];
    }
    current = std::move(next);
  }
  return current;
}

double ResistanceForm::cell_energy(int level, int index, const Eigen::VectorXd& u,
                                   const Eigen::VectorXd& v) const {
  return cell_network(level, index).energy(u, v);
}

Eigen::VectorXd ResistanceForm::normal_derivatives(int level, int index,
                                                   const Eigen::VectorXd& h) const {
  const Eigen::MatrixXd& lap = cell_laplacian(level, index);
  if (h.size() != lap.rows()) throw PreconditionError("normal_derivatives: size mismatch");
  return lap * h;
}

double ResistanceForm::normal_derivative(int level, int index, const Eigen::VectorXd& h,
                                         VertexId p) const {
  int k = cell_network(level, index).local_index(p);
  if (k < 0) {
    throw PreconditionError("normal_derivative: vertex " + std::to_string(p) +
                            " is not on the boundary of cell " +
                            structure_->cell(level, index).address.str());
  }
  return normal_derivatives(level, index, h)[k];
}

std::vector<double> ResistanceForm::energy_measure(const VertexFunction& u,
                                                   int target_level) const {
  if (target_level < u.level) throw PreconditionError("energy_measure: m must be >= n");
  VertexFunction ext = harmonic_extension(u, target_level);
  std::vector<double> out;
  for (int i = 0; i < structure_->cell_count(target_level); ++i) {
    Eigen::VectorXd r = restrict_to_cell(ext, i);
    out.push_back(cell_energy(target_level, i, r, r));
  }
  return out;
}

ResistanceForm ResistanceForm::with_cell_networks(
    const std::map<CellAddress, Network>& overrides) const {
  auto networks = networks_;
  for (const auto& [address, net] : overrides) {
    auto index = structure_->find(address);
    if (!index) throw ConfigError("no cell with address " + address.str());
    networks[address.level()][*index] = net;
  }
  return ResistanceForm(structure_, std::move(networks));
}

}  // namespace fractal
