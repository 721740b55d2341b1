// Batch front-end for the fractal library.

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fractal/cell_structure.hpp"
#include "fractal/error.hpp"
#include "fractal/fredholm.hpp"
#include "fractal/hilbert_module.hpp"
#include "fractal/io.hpp"
#include "fractal/pressure.hpp"
#include "fractal/resistance_form.hpp"
#include "fractal/self_similar.hpp"
#include "fractal/spectral.hpp"

using nlohmann::json;
using namespace fractal;

namespace {

constexpr int kSchemaVersion = 1;
constexpr int kMaxHodgeDimension = 2000;

struct Options {
  std::string builtin;
  std::string file;
  std::string edges;
  std::string conductances;
  int depth = 2;
  int level = -1;
  std::vector<double> ps;
  std::string multiplier;
  std::uint64_t seed = 12345;
  std::string format = "json";
  std::string out;
  bool no_timestamp = false;

  // command specific
  std::string element;
  std::string boundary = "dirichlet";
  int level_min = -1;
  std::vector<int> ms;
  int mc_m = 0;
  std::int64_t samples = 100000;
};

struct Model {
  std::string name;
  std::shared_ptr<const CellStructure> structure;
  std::optional<SelfSimilarStructure> self_similar;
  std::vector<std::pair<VertexId, VertexId>> graph;  // quantum graphs only
  std::vector<double> child_weights;                  // measure weights per child index

  bool quantum_graph() const { return !graph.empty(); }
};

std::vector<std::pair<VertexId, VertexId>> parse_edges(const std::string& text) {
  std::vector<std::pair<VertexId, VertexId>> edges;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto dash = item.find('-');
    if (dash == std::string::npos) throw ConfigError("edge '" + item + "' is not of the form a-b");
    try {
      edges.push_back({std::stoi(item.substr(0, dash)), std::stoi(item.substr(dash + 1))});
    } catch (const std::exception&) {
      throw ConfigError("edge '" + item + "' is not of the form a-b");
    }
  }
  if (edges.empty()) throw ConfigError("--edges lists no edges");
  return edges;
}

int depth_cap(const std::string& name) {
  if (name == "interval") return 14;
  if (name == "gasket") return 7;
  if (name == "vicsek") return 5;
  return 10;  // quantum graphs
}

Model load_model(const Options& opt, int depth) {
  if (opt.builtin.empty() == opt.file.empty()) {
    throw ConfigError("give exactly one of --builtin and --file");
  }
  if (depth < 0) throw ConfigError("depth must be >= 0");
  Model m;
  if (!opt.builtin.empty()) {
    const std::string& b = opt.builtin;
    if (b == "interval" || b == "gasket" || b == "vicsek") {
      m.self_similar = b == "interval" ? builtin::interval()
                       : b == "gasket" ? builtin::gasket()
                                       : builtin::vicsek();
    } else if (b == "theta") {
      m.graph = {{0, 1}, {0, 1}, {0, 1}};
    } else if (b == "triangle") {
      m.graph = {{0, 1}, {1, 2}, {2, 0}};
    } else if (b == "quantum_graph") {
      if (opt.edges.empty()) throw ConfigError("quantum_graph needs --edges, e.g. 0-1,1-2");
      m.graph = parse_edges(opt.edges);
    } else {
      throw ConfigError("unknown builtin '" + b + "'");
    }
    m.name = b;
    if (depth > depth_cap(m.quantum_graph() ? "quantum_graph" : b)) {
      throw ConfigError("depth " + std::to_string(depth) + " exceeds the cap " +
                        std::to_string(depth_cap(m.quantum_graph() ? "quantum_graph" : b)) +
                        " for " + b);
    }
  } else {
    io::StructureFile f = io::load_structure(opt.file);
    const double cells = std::pow(static_cast<double>(f.rule.arity()), depth);
    if (cells > 2e4) throw ConfigError("depth " + std::to_string(depth) + " gives too many cells");
    m.name = f.rule.name;
    m.self_similar = f.self_similar;
    if (!m.self_similar) {
      m.structure = std::make_shared<const CellStructure>(build_structure(f.rule, depth));
      m.child_weights.assign(f.rule.arity(), 1.0 / f.rule.arity());
      return m;
    }
  }
  if (m.quantum_graph()) {
    m.structure = std::make_shared<const CellStructure>(quantum_graph_structure(m.graph, depth));
    m.child_weights = {0.5, 0.5};
  } else {
    m.structure = std::make_shared<const CellStructure>(build_structure(m.self_similar->rule, depth));
    m.child_weights = m.self_similar->mu;
  }
  return m;
}

std::shared_ptr<const ResistanceForm> make_form(const Model& m, const Options& opt, int depth) {
  std::shared_ptr<const ResistanceForm> form;
  if (m.quantum_graph()) {
    form = std::make_shared<const ResistanceForm>(quantum_graph_form(m.graph, depth));
  } else if (m.self_similar) {
    form = std::make_shared<const ResistanceForm>(decimate(*m.self_similar, depth));
  } else {
    throw ConfigError("this command needs a resistance form; the structure file has no r, mu and "
                      "base_conductances");
  }
  if (!opt.conductances.empty()) {
    auto overrides = io::overrides_from_json(io::read_file(opt.conductances), form->structure());
    form = std::make_shared<const ResistanceForm>(form->with_cell_networks(overrides));
  }
  return form;
}

class Checks {
 public:
  void add(const std::string& name, bool pass, double value, double tolerance) {
    list_.push_back({{"name", name}, {"pass", pass}, {"value", value}, {"tolerance", tolerance}});
    all_ = all_ && pass;
  }
  void add_flag(const std::string& name, bool pass) {
    list_.push_back({{"name", name}, {"pass", pass}});
    all_ = all_ && pass;
  }
  const json& list() const { return list_; }
  bool all() const { return all_; }

 private:
  json list_ = json::array();
  bool all_ = true;
};

Multiplier parse_multiplier(const std::string& mult_text, const ResistanceForm& form, int level) {
  const CellStructure& cs = form.structure();
  std::string kind = mult_text, arg;
  if (auto colon = mult_text.find(':'); colon != std::string::npos) {
    kind = mult_text.substr(0, colon);
    arg = mult_text.substr(colon + 1);
  }
  auto numbers = [](const std::string& text) {
    std::vector<double> v;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        v.push_back(std::stod(item));
      } catch (const std::exception&) {
        throw ConfigError("'" + item + "' is not a number");
      }
    }
    return v;
  };
  if (kind == "const") {
    auto v = numbers(arg.empty() ? "1" : arg);
    if (v.size() != 1) throw ConfigError("const multiplier takes one value");
    return Multiplier::constant(cs, 0, v[0]);
  }
  if (kind == "cell") return Multiplier::indicator(cs, CellAddress::parse(arg));
  if (kind == "harmonic") {
    auto v = numbers(arg);
    if (static_cast<int>(v.size()) != cs.vertex_count(0)) {
      throw ConfigError("harmonic multiplier needs " + std::to_string(cs.vertex_count(0)) +
                        " boundary values");
    }
    VertexFunction f{0, Eigen::Map<Eigen::VectorXd>(v.data(), v.size())};
    return cell_average(form, f, level);
  }
  if (kind == "simple") {
    auto colon = arg.find(':');
    if (colon == std::string::npos) throw ConfigError("simple multiplier is simple:level:v0,v1,...");
    const int m = std::stoi(arg.substr(0, colon));
    auto v = numbers(arg.substr(colon + 1));
    if (m < 0 || m > cs.depth() || static_cast<int>(v.size()) != cs.cell_count(m)) {
      throw ConfigError("simple multiplier needs one value per level-" + std::to_string(m) + " cell");
    }
    return {m, v};
  }
  throw ConfigError("unknown multiplier '" + mult_text + "' (const:c, cell:addr, harmonic:v..., simple:m:v...)");
}

json dims_json(const std::vector<DimensionRow>& rows) {
  json out = json::array();
  for (const auto& r : rows) {
    out.push_back({{"level", r.level},
                   {"dim_H", r.dim_h},
                   {"dim_PH", r.dim_p},
                   {"dim_PperpH", r.dim_p_perp},
                   {"rank_P", r.rank_p},
                   {"rank_Pperp", r.rank_p_perp}});
  }
  return out;
}

// ---------------------------------------------------------------------------

json cmd_structure(const Options& opt, Checks& checks, std::string&) {
  Model m = load_model(opt, opt.depth);
  const CellStructure& cs = *m.structure;
  ValidationReport rep = validate_frcs(cs);
  json violations = json::array();
  for (const auto& v : rep.violations) {
    json cells = json::array();
    for (const auto& a : v.cells) cells.push_back(a.str());
    violations.push_back({{"kind", to_string(v.kind)}, {"level", v.level}, {"cells", cells}, {"message", v.message}});
  }
  json levels = json::array();
  bool tree = true;
  for (int n = 0; n <= cs.depth(); ++n) {
    json row = {{"level", n}, {"cells", cs.cell_count(n)}, {"vertices", cs.vertex_count(n)}};
    if (rep.ok()) {
      const int rank = cycle_rank(cs, n);
      row["cycle_rank"] = rank;
      tree = tree && rank == 0;
    }
    levels.push_back(row);
  }
  checks.add_flag("frcs_valid", rep.ok());
  json out = {{"name", m.name}, {"depth", cs.depth()}, {"levels", levels}, {"violations", violations}};
  if (rep.ok()) out["tree"] = tree;
  return out;
}

json cmd_validate(const Options& opt, Checks& checks, std::string& csv) {
  json out = cmd_structure(opt, checks, csv);
  Model m = load_model(opt, opt.depth);
  if ((m.self_similar || m.quantum_graph()) && checks.all()) {
    auto form = make_form(m, opt, opt.depth);
    json compat = json::array();
    for (int n = 0; n < opt.depth; ++n) {
      const double dev = form->check_compatibility(n);
      compat.push_back({{"level", n}, {"deviation", dev}});
      checks.add("compatibility_level_" + std::to_string(n), dev <= 1e-10, dev, 1e-10);
    }
    out["compatibility"] = compat;
  }
  return out;
}

json cmd_tree_check(const Options& opt, Checks& checks, std::string&) {
  Model m = load_model(opt, opt.depth);
  const CellStructure& cs = *m.structure;
  json ranks = json::array();
  for (int n = 0; n <= cs.depth(); ++n) ranks.push_back(cycle_rank(cs, n));
  const bool tree = is_tree(cs);
  json out = {{"name", m.name}, {"depth", cs.depth()}, {"cycle_ranks", ranks}, {"tree", tree}};
  if (m.self_similar || m.quantum_graph()) {
    auto form = make_form(m, opt, opt.depth);
    auto rows = dimension_report(form, opt.depth);
    bool zero = true;
    for (const auto& r : rows) zero = zero && r.dim_p_perp == 0 && r.rank_p_perp == 0;
    out["dimensions"] = dims_json(rows);
    checks.add_flag("tree_iff_no_harmonic_forms", zero == tree);
  }
  return out;
}

json cmd_hodge(const Options& opt, Checks& checks, std::string&) {
  Model m = load_model(opt, opt.depth);
  auto form = make_form(m, opt, opt.depth);
  const int top = opt.depth;
  HilbertModule probe(form, top);
  if (probe.dimension() > kMaxHodgeDimension) {
    throw ConfigError("dim H_" + std::to_string(top) + " = " + std::to_string(probe.dimension()) +
                      " exceeds the cap " + std::to_string(kMaxHodgeDimension));
  }
  auto rows = dimension_report(form, top);
  bool dims_ok = true;
  for (const auto& r : rows) dims_ok = dims_ok && r.consistent();
  checks.add_flag("projector_ranks_match_dimensions", dims_ok);

  HodgeBasis basis(form, top);
  const double gram = basis.gram_residual();
  checks.add("hodge_gram_identity", gram <= 1e-9, gram, 1e-9);

  const HilbertModule& h = basis.module();
  std::mt19937_64 rng(opt.seed);
  double pyth = 0.0, idem = 0.0, cross = 0.0;
  for (int t = 0; t < 20; ++t) {
    ModuleElement u = h.random_element(rng);
    Projection pr = h.project(u);
    const double nu = h.inner_product(u, u);
    pyth = std::max(pyth, std::abs(nu - h.inner_product(pr.p, pr.p) - h.inner_product(pr.p_perp, pr.p_perp)) / std::max(1.0, nu));
    idem = std::max(idem, h.norm(h.project_P(pr.p) - pr.p));
    cross = std::max(cross, h.norm(h.project_P(pr.p_perp)));
  }
  checks.add("pythagoras", pyth <= 1e-10, pyth, 1e-10);
  checks.add("projector_idempotent", idem <= 1e-10, idem, 1e-10);
  checks.add("projector_complementary", cross <= 1e-10, cross, 1e-10);

  const int eta_level = opt.level >= 0 ? opt.level : top;
  if (eta_level > top) throw ConfigError("--level exceeds --depth");
  HilbertModule he(form, eta_level);
  const CellStructure& cs = form->structure();
  double eta = 0.0;
  int pairs = 0;
  for (int i = 0; i < cs.cell_count(eta_level); ++i) {
    for (VertexId p : cs.cell(eta_level, i).vertices) {
      VertexFunction tent{eta_level, Eigen::VectorXd::Unit(cs.vertex_count(eta_level), cs.position(eta_level, p))};
      ModuleElement u = he.embed_cell(i, form->restrict_to_cell(tent, i));
      eta = std::max(eta, he.norm(he.eta_projection(p, i) - he.project_P_perp(u)));
      ++pairs;
    }
  }
  checks.add("eta_vs_neumann", eta <= 1e-10, eta, 1e-10);

  json blocks = json::array();
  for (const auto& b : basis.blocks()) {
    blocks.push_back({{"kind", to_string(b.kind)},
                      {"level", b.level},
                      {"cell", b.cell < 0 ? std::string("-") : cs.cell(b.level, b.cell).address.str()},
                      {"size", b.size}});
  }
  return {{"name", m.name},
          {"depth", top},
          {"dimensions", dims_json(rows)},
          {"gram_residual", gram},
          {"pythagoras_residual", pyth},
          {"idempotence_residual", idem},
          {"complementarity_residual", cross},
          {"eta_level", eta_level},
          {"eta_pairs", pairs},
          {"eta_residual", eta},
          {"blocks", blocks}};
}

json cmd_project(const Options& opt, Checks& checks, std::string&) {
  Model m = load_model(opt, opt.depth);
  auto form = make_form(m, opt, opt.depth);
  const int n = opt.level >= 0 ? opt.level : opt.depth;
  if (n > opt.depth) throw ConfigError("--level exceeds --depth");
  HilbertModule h(form, n);
  ModuleElement u;
  if (!opt.element.empty()) {
    u = io::module_element_from_json(io::read_file(opt.element), h);
  } else {
    std::mt19937_64 rng(opt.seed);
    u = h.random_element(rng);
  }
  Projection pr = h.project(u);
  const double resid = h.normal_derivative_sums(pr.p_perp).cwiseAbs().maxCoeff();
  const double nu = h.inner_product(u, u);
  const double pyth = std::abs(nu - h.inner_product(pr.p, pr.p) - h.inner_product(pr.p_perp, pr.p_perp));
  checks.add("pperp_normal_derivative_sums", resid <= 1e-10, resid, 1e-10);
  checks.add("pythagoras", pyth <= 1e-10 * std::max(1.0, nu), pyth, 1e-10);
  const CellStructure& cs = form->structure();
  std::vector<double> f(pr.potential.values.data(), pr.potential.values.data() + pr.potential.values.size());
  return {{"name", m.name},
          {"level", n},
          {"input", io::to_json(u, cs)},
          {"P", io::to_json(pr.p, cs)},
          {"Pperp", io::to_json(pr.p_perp, cs)},
          {"potential", f},
          {"norm_squared", nu},
          {"P_norm_squared", h.inner_product(pr.p, pr.p)},
          {"Pperp_norm_squared", h.inner_product(pr.p_perp, pr.p_perp)}};
}

json cmd_commutator(const Options& opt, Checks& checks, std::string& csv) {
  Model m = load_model(opt, opt.depth);
  auto form = make_form(m, opt, opt.depth);
  const int top = opt.depth;
  HilbertModule probe(form, top);
  if (probe.dimension() > kMaxHodgeDimension) {
    throw ConfigError("dim H_" + std::to_string(top) + " exceeds the cap " + std::to_string(kMaxHodgeDimension));
  }
  const int avg_level = opt.level >= 0 ? opt.level : top;
  if (avg_level > top) throw ConfigError("--level exceeds --depth");
  const std::string mult_text = opt.multiplier.empty() ? std::string("const:1") : opt.multiplier;
  Multiplier a = parse_multiplier(mult_text, *form, avg_level);
  if (a.level > top) throw ConfigError("multiplier is finer than --depth");

  HodgeBasis basis(form, top);
  Eigen::MatrixXd c = commutator_matrix(a, basis);
  SingularSpectrum s = singular_values(c);
  std::vector<double> ps = opt.ps.empty() ? std::vector<double>{1.2, 1.37, 1.5, 2.0} : opt.ps;
  SummabilityReport rep = summability_report(s, ps);

  std::ostringstream out;
  out << "# schema_version=" << kSchemaVersion << "\nk,s_k\n" << std::setprecision(17);
  for (std::size_t k = 0; k < s.values.size(); ++k) out << k << "," << s.values[k] << "\n";
  csv = out.str();

  json rows = json::array();
  for (const auto& r : rep.rows) {
    json row = {{"p", r.p}, {"p_sum", r.p_sum}, {"weak_sum", r.weak_sum}, {"log_weak_sum", r.log_weak_sum}};
    if (r.p < 2.0) {
      OscillationCheck oc = oscillation_bound_check(a, basis, r.p);
      row["oscillation_lhs"] = oc.lhs;
      row["oscillation_rhs"] = oc.rhs;
      checks.add("oscillation_bound_p" + std::to_string(r.p), oc.pass(), oc.lhs, oc.rhs);
    }
    rows.push_back(row);
  }
  const double pairing = s.pairing_defect();
  const double scale = s.values.empty() ? 0.0 : s.values.front();
  checks.add("singular_value_pairing", pairing <= 1e-9 * std::max(1.0, scale), pairing, 1e-9);
  json result = {{"name", m.name},
                 {"depth", top},
                 {"multiplier", mult_text},
                 {"multiplier_level", a.level},
                 {"dimension", basis.dimension()},
                 {"operator_norm", scale},
                 {"spectrum", s.values},
                 {"summability", rows},
                 {"dixmier_partials", rep.dixmier},
                 {"trace", rep.trace}};
  if (a.level < top) {
    RankCheck rc = rank_check(a, basis);
    result["rank"] = rc.rank;
    result["rank_bound"] = rc.bound;
    checks.add("rank_bound", rc.pass(), rc.rank, rc.bound);
    const double kern = kernel_residual(a, basis);
    checks.add("kernel_containment", kern <= 1e-9, kern, 1e-9);
  }
  return result;
}

json cmd_spectral(const Options& opt, Checks& checks, std::string& csv) {
  const int hi = opt.depth;
  const int lo = opt.level_min >= 0 ? opt.level_min : std::max(0, hi - 3);
  if (lo > hi) throw ConfigError("--level-min exceeds --depth");
  Model m = load_model(opt, hi);
  auto form = make_form(m, opt, hi);
  const BoundaryCondition bc =
      opt.boundary == "neumann" ? BoundaryCondition::Neumann : BoundaryCondition::Dirichlet;
  if (opt.boundary != "neumann" && opt.boundary != "dirichlet") {
    throw ConfigError("--boundary is neumann or dirichlet");
  }
  std::vector<EigenSystem> systems;
  json levels = json::array();
  std::ostringstream out;
  out << "# schema_version=" << kSchemaVersion << "\nlevel,k,lambda\n" << std::setprecision(17);
  for (int n = lo; n <= hi; ++n) {
    VertexMeasure mu = vertex_measure(form->structure(), m.child_weights, n);
    EigenSystem sys = laplacian_eigen(*form, mu, bc);
    const double top = sys.eigenvalues.size() ? sys.eigenvalues.maxCoeff() : 0.0;
    const double res = sys.residual(form->level_laplacian(n));
    const double orth = sys.orthonormality_residual();
    checks.add("eigen_residual_level_" + std::to_string(n), res <= 1e-9 * std::max(1.0, top), res, 1e-9 * std::max(1.0, top));
    checks.add("eigen_orthonormal_level_" + std::to_string(n), orth <= 1e-9, orth, 1e-9);
    if (bc == BoundaryCondition::Dirichlet && sys.size() > 0) {
      checks.add("dirichlet_first_positive_level_" + std::to_string(n), sys.eigenvalues[0] > 0.0, sys.eigenvalues[0], 0.0);
    }
    for (int k = 0; k < sys.size(); ++k) out << n << "," << k << "," << sys.eigenvalues[k] << "\n";
    levels.push_back({{"level", n}, {"count", sys.size()}, {"lambda_1", sys.size() ? sys.eigenvalues[0] : 0.0}});
    systems.push_back(std::move(sys));
  }
  csv = out.str();
  json result = {{"name", m.name}, {"boundary", to_string(bc)}, {"levels", levels}};
  if (systems.size() >= 2) {
    WeylFit fit = weyl_fit(systems);
    result["weyl"] = {{"slope", fit.slope}, {"intercept", fit.intercept}, {"residual", fit.residual}, {"points", fit.points}};
    if (m.self_similar) result["weyl"]["expected_slope"] = 0.5 * spectral_dimension(*m.self_similar);
  }
  // Eigenbasis trend at the finest level small enough for the dense module.
  if (bc == BoundaryCondition::Dirichlet && m.self_similar && HilbertModule(form, hi).dimension() <= 500) {
    const double ds = spectral_dimension(*m.self_similar);
    HilbertModule h(form, hi);
    const CellStructure& cs = form->structure();
    VertexFunction a{0, Eigen::VectorXd::Zero(cs.vertex_count(0))};
    a.values[0] = 1.0;
    json trend = json::array();
    for (double p : opt.ps.empty() ? std::vector<double>{1.5, 1.8} : opt.ps) {
      EigenbasisCheck ec = eigenbasis_check(a, systems.back(), h, p, ds);
      trend.push_back({{"p", p}, {"sum", ec.sum}, {"ratio", ec.ratio}, {"below_spectral_dimension", ec.below_dimension}});
      checks.add("eigenbasis_gram_p" + std::to_string(p), ec.gram_residual <= 1e-8, ec.gram_residual, 1e-8);
    }
    result["eigenbasis_trend"] = trend;
    result["spectral_dimension"] = ds;
  }
  return result;
}

json cmd_pressure(const Options& opt, Checks& checks, std::string& csv) {
  Model m = load_model(opt, 1);
  if (!m.self_similar) throw ConfigError("pressure needs a self-similar structure");
  const SelfSimilarStructure& ss = *m.self_similar;
  MatrixEnsemble ens = MatrixEnsemble::from(ss);
  HarmonicMatrices hm = harmonic_matrices(ss);
  json result = {{"name", m.name}, {"spectral_dimension", spectral_dimension(ss)}};
  if (ss.uniform_r()) {
    const double res = selfsimilar_identity_residual(hm);
    result["identity_residual"] = res;
    checks.add("selfsimilar_identity", res <= 1e-10, res, 1e-10);
  }

  std::vector<double> ps = opt.ps;
  if (ps.empty()) {
    for (int k = 0; k < 25; ++k) ps.push_back(0.1 * k);
  }
  std::vector<int> ms = opt.ms.empty() ? std::vector<int>{1, 2, 4, 8} : opt.ms;
  std::ostringstream out;
  out << "# schema_version=" << kSchemaVersion << "\np,m,P_m,stderr\n" << std::setprecision(17);
  json curves = json::array();
  std::optional<PressureCurve> last;
  for (int mm : ms) {
    PressureCurve curve = exact_curve(ens, mm, ps);
    for (std::size_t k = 0; k < ps.size(); ++k) {
      out << ps[k] << "," << mm << "," << curve.values[k] << ",0\n";
      if (std::abs(ps[k]) < 1e-12) {
        checks.add("P_" + std::to_string(mm) + "_at_0", std::abs(curve.values[k]) <= 1e-12, curve.values[k], 1e-12);
      }
    }
    curves.push_back({{"m", mm}, {"values", curve.values}});
    last = curve;
  }
  result["p_grid"] = ps;
  result["exact_curves"] = curves;

  if (opt.mc_m > 0) {
    json mc = json::array();
    for (double p : ps) {
      MonteCarloEstimate e = pressure_mc(ens, p, opt.mc_m, opt.samples, opt.seed);
      out << p << "," << opt.mc_m << "," << e.estimate << "," << e.std_error << "\n";
      mc.push_back({{"p", p}, {"estimate", e.estimate}, {"stderr", e.std_error}});
    }
    result["monte_carlo"] = {{"m", opt.mc_m}, {"samples", opt.samples}, {"seed", opt.seed}, {"curve", mc}};
  }
  csv = out.str();

  if (ens.uniform_weights()) {
    CriticalExponentReport rep = critical_exponent_schedule(ens, ms);
    json entries = json::array();
    for (const auto& e : rep.entries) {
      json row = {{"m", e.m}};
      row["q"] = e.q ? json(*e.q) : json(nullptr);
      if (!e.note.empty()) row["note"] = e.note;
      entries.push_back(row);
    }
    result["critical_exponent"] = {{"entries", entries}};
    if (rep.aitken) result["critical_exponent"]["aitken"] = *rep.aitken;
    checks.add_flag("q_non_increasing", rep.non_increasing());
    if (!rep.entries.empty() && rep.entries.back().q) {
      const double q = *rep.entries.back().q;
      result["critical_exponent"]["margin_below_spectral_dimension"] = spectral_dimension(ss) - q;
    }
  }

  const int mlast = ms.back();
  LyapunovEstimate ly = lyapunov(ens, mlast, opt.samples, opt.seed);
  json lj = {{"m", mlast}, {"mc", ly.mc.estimate}, {"stderr", ly.mc.std_error}};
  if (ly.exact) lj["exact"] = *ly.exact;
  if (ly.finite_difference) lj["finite_difference"] = *ly.finite_difference;
  if (ly.exact) {
    const double dev = std::abs(ly.mc.estimate - *ly.exact);
    const double tol = 3.0 * ly.mc.std_error + 1e-12;
    checks.add("lyapunov_mc_vs_exact", dev <= tol, dev, tol);
  }
  result["lyapunov"] = lj;

  bool has0 = false, has2 = false;
  for (double p : ps) {
    has0 = has0 || std::abs(p) < 1e-9;
    has2 = has2 || std::abs(p - 2.0) < 1e-9;
  }
  if (last && has0 && has2) {
    ConvexityReport cr = convexity_report(*last, ly.exact);
    result["convexity"] = {{"m", last->m},
                           {"min_second_difference", cr.min_second_difference},
                           {"convex", cr.convex},
                           {"strictly_convex", cr.strictly_convex},
                           {"derivative_at_zero", cr.derivative_at_zero},
                           {"P_at_2", cr.value_at_two},
                           {"jensen_gap", cr.jensen_gap}};
    checks.add_flag("convex", cr.convex);
  }
  SemigroupDiagnostics sd = semigroup_diagnostics(ens, 20, 200, opt.seed);
  result["semigroup"] = {{"mean_singular_ratio", sd.mean_singular_ratio},
                         {"invariant_coordinate_subspace", sd.invariant_coordinate_subspace}};
  return result;
}

std::string timestamp() {
  std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::ostringstream s;
  s << std::put_time(std::gmtime(&t), "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Finite-scale Hodge theory, Fredholm modules and pressure on finitely ramified fractals"};
  app.require_subcommand(1);
  Options opt;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--builtin", opt.builtin, "interval, gasket, vicsek, quantum_graph, theta, triangle");
    sub->add_option("--file", opt.file, "structure description (JSON)");
    sub->add_option("--edges", opt.edges, "quantum graph edges, e.g. 0-1,1-2,2-0");
    sub->add_option("--conductances", opt.conductances, "cell conductance overrides (JSON)");
    sub->add_option("--depth", opt.depth, "truncation depth");
    sub->add_option("--level", opt.level, "level for projections, eta checks or multiplier averaging");
    sub->add_option("--p", opt.ps, "exponents, comma separated")->delimiter(',');
    sub->add_option("--multiplier", opt.multiplier, "const:c | cell:addr | harmonic:v0,v1,... | simple:m:v0,...");
    sub->add_option("--seed", opt.seed, "random seed");
    sub->add_option("--format", opt.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
    sub->add_option("--out", opt.out, "output path (default stdout)");
    sub->add_flag("--no-timestamp", opt.no_timestamp, "omit the timestamp field");
  };

  struct Command {
    std::string name;
    std::string help;
    json (*run)(const Options&, Checks&, std::string&);
  };
  const std::vector<Command> commands = {
      {"structure", "validation, counts, cycle ranks, tree verdict", cmd_structure},
      {"validate", "FRCS validation and form compatibility", cmd_validate},
      {"tree-check", "tree verdict against harmonic-form dimensions", cmd_tree_check},
      {"hodge", "dimension table and Hodge basis residuals", cmd_hodge},
      {"project", "P / P-perp decomposition of a module element", cmd_project},
      {"commutator", "singular spectrum and summability of [F, a]", cmd_commutator},
      {"spectral", "Laplacian spectra, Weyl slope, eigenbasis trend", cmd_spectral},
      {"pressure", "pressure curves, critical exponent, Lyapunov exponent", cmd_pressure},
  };
  std::vector<CLI::App*> subs;
  for (const auto& c : commands) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    common(sub);
    if (c.name == "project") sub->add_option("--element", opt.element, "module element file (JSON)");
    if (c.name == "spectral") {
      sub->add_option("--boundary", opt.boundary, "dirichlet or neumann");
      sub->add_option("--level-min", opt.level_min, "coarsest level of the Weyl fit");
    }
    if (c.name == "pressure") {
      sub->add_option("--m", opt.ms, "exact word lengths, comma separated")->delimiter(',');
      sub->add_option("--mc-m", opt.mc_m, "word length for Monte Carlo");
      sub->add_option("--samples", opt.samples, "Monte Carlo samples");
    }
    subs.push_back(sub);
  }

  CLI11_PARSE(app, argc, argv);

  for (std::size_t i = 0; i < commands.size(); ++i) {
    if (!subs[i]->parsed()) continue;
    try {
      Checks checks;
      std::string csv;
      json result = commands[i].run(opt, checks, csv);
      json doc = {{"schema_version", kSchemaVersion}, {"command", commands[i].name}};
      if (!opt.no_timestamp) doc["timestamp"] = timestamp();
      doc["result"] = result;
      doc["checks"] = checks.list();
      doc["pass"] = checks.all();
      std::string text;
      if (opt.format == "csv") {
        if (csv.empty()) throw ConfigError(commands[i].name + " has no CSV output; use --format json");
        text = csv;
      } else {
        text = doc.dump(2) + "\n";
      }
      if (opt.out.empty()) {
        std::cout << text;
      } else {
        std::ofstream f(opt.out);
        if (!f) throw ConfigError("cannot write " + opt.out);
        f << text;
      }
      if (opt.format == "csv") {
        for (const auto& c : checks.list()) {
          if (!c.at("pass").get<bool>()) std::cerr << "check failed: " << c.at("name").get<std::string>() << "\n";
        }
      }
      return checks.all() ? 0 : 1;
    } catch (const ConfigError& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 2;
    } catch (const std::exception& e) {
      std::cerr << "error: " << e.what() << "\n";
      return 3;
    }
  }
  return 2;
}
