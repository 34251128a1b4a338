#include "qmslab/stateprep.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

namespace qmslab {

namespace {

cplx weight(const GraphSpec& g, std::size_t e) { return g.weights.empty() ? cplx(1.0) : g.weights[e]; }

RVec diagonal_of(const FullRankState& sigma) {
  const Mat& s = sigma.matrix();
  Mat off = s;
  off.diagonal().setZero();
  if (max_abs(off) > 1e-12) throw DomainViolation("graph generator: sigma must be diagonal in the graph basis");
  return s.diagonal().real();
}

int find(std::vector<int>& parent, int x) {
  while (parent[x] != x) x = parent[x] = parent[parent[x]];
  return x;
}

}  // namespace

void validate_graph(const GraphSpec& g) {
  if (g.m < 1) throw ModelError("graph: need at least one vertex");
  if (!g.weights.empty() && g.weights.size() != g.edges.size())
    throw ModelError("graph: one weight per edge required");
  std::set<std::pair<int, int>> seen;
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    const auto [r, s] = g.edges[e];
    if (r < 0 || s >= g.m || r >= s) {
      std::ostringstream os;
      os << "graph: edge (" << r << ", " << s << ") must satisfy 0 <= r < s < " << g.m;
      throw ModelError(os.str());
    }
    if (!seen.insert({r, s}).second) throw ModelError("graph: repeated edge");
    if (std::abs(weight(g, e)) == 0.0) throw ModelError("graph: edge weights must be nonzero");
  }
}

bool is_irreducible(const GraphSpec& g) {
  validate_graph(g);
  std::vector<int> parent(g.m);
  std::iota(parent.begin(), parent.end(), 0);
  int components = g.m;
  for (const auto& [r, s] : g.edges) {
    const int a = find(parent, r), b = find(parent, s);
    if (a != b) parent[a] = b, --components;
  }
  return components == 1;
}

GraphSpec complete_graph(int m) {
  GraphSpec g{m, {}, {}};
  for (int r = 0; r < m; ++r)
    for (int s = r + 1; s < m; ++s) g.edges.push_back({r, s});
  return g;
}

GraphSpec path_graph(int m) {
  GraphSpec g{m, {}, {}};
  for (int r = 0; r + 1 < m; ++r) g.edges.push_back({r, r + 1});
  return g;
}

GraphSpec cyclic_graph(int m) {
  GraphSpec g{m, {}, {}};
  std::set<std::pair<int, int>> edges;
  for (int j = 0; j < m; ++j) {
    const int k = (j + 1) % m;
    if (j != k) edges.insert({std::min(j, k), std::max(j, k)});
  }
  g.edges.assign(edges.begin(), edges.end());
  return g;
}

std::vector<int> eigen_blocks(const FullRankState& sigma) {
  const RVec p = diagonal_of(sigma);
  const int m = static_cast<int>(p.size());
  const double tol = 1e-12 * p.maxCoeff();
  std::vector<int> block(m, -1);
  int next = 0;
  for (int k = 0; k < m; ++k) {
    if (block[k] >= 0) continue;
    block[k] = next;
    for (int l = k + 1; l < m; ++l)
      if (block[l] < 0 && std::abs(p(l) - p(k)) <= tol) block[l] = next;
    ++next;
  }
  return block;
}

LindbladModel build_graph_generator(const GraphSpec& g, const FullRankState& sigma, DegenerateRule rule) {
  validate_graph(g);
  if (sigma.dim() != g.m) throw ShapeError("build_graph_generator: sigma dimension differs from vertex count");
  const RVec p = diagonal_of(sigma);
  const auto block = eigen_blocks(sigma);
  const int nblocks = *std::max_element(block.begin(), block.end()) + 1;
  // sigma proportional to I is the heat case: every edge keeps w = 0
  const bool degenerate = nblocks > 1 && nblocks < g.m;
  if (degenerate && rule == DegenerateRule::reject)
    throw DegeneracyError("build_graph_generator: sigma has repeated eigenvalues; use the block rule");

  std::vector<Mat> ops;
  std::vector<double> omegas;
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    const auto [r, s] = g.edges[e];
    if (degenerate && block[r] == block[s]) continue;  // coefficient 0 inside an eigenspace
    const cplx chi = weight(g, e);
    const double w = std::log(p(s)) - std::log(p(r));
    ops.push_back(chi * matrix_unit(g.m, r, s));
    omegas.push_back(w);
    ops.push_back(std::conj(chi) * matrix_unit(g.m, s, r));
    omegas.push_back(-w);
  }
  if (ops.empty()) throw ModelError("build_graph_generator: no edges survive");
  auto model = make_model(make_jump_set(ops), sigma, omegas);
  if (max_abs(apply_generator_dual(model, sigma.matrix())) > 1e-9)
    throw ModelError("build_graph_generator: sigma is not invariant");
  return model;
}

PerturbationFactor graph_hs_bound(const GraphSpec& g, const FullRankState& sigma) {
  if (!is_irreducible(g)) throw IrreducibilityError("graph_hs_bound: graph is not irreducible");
  const RVec p = diagonal_of(sigma);
  const auto block = eigen_blocks(sigma);
  double link = 1.0;
  for (const auto& [r, s] : g.edges) {
    if (block[r] == block[s]) continue;
    link = std::max(link, std::max(p(r) / p(s), p(s) / p(r)));
  }
  PerturbationFactor f;
  f.entropy_factor = p.maxCoeff();
  f.ep_factor = p.minCoeff() / std::sqrt(link);
  f.total = p.maxCoeff() / p.minCoeff() * std::sqrt(link);
  return f;
}

std::optional<double> graph_clsi_reference(const GraphSpec& g, const FullRankState& sigma) {
  if (g.edges.size() != static_cast<std::size_t>(g.m) * (g.m - 1) / 2) return std::nullopt;
  return 2.0 * g.m / graph_hs_bound(g, sigma).total;
}

Eigen::MatrixXd graph_laplacian(const GraphSpec& g) {
  validate_graph(g);
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(g.m, g.m);
  for (std::size_t e = 0; e < g.edges.size(); ++e) {
    const auto [r, s] = g.edges[e];
    const double w = 2 * std::norm(weight(g, e));
    A(r, r) += w;
    A(s, s) += w;
    A(r, s) -= w;
    A(s, r) -= w;
  }
  return A;
}

double diagonal_invariance_deviation(const LindbladModel& model) {
  const int d = model.dim();
  double dev = 0.0;
  for (int k = 0; k < d; ++k) {
    Mat LX = apply_generator(model, matrix_unit(d, k, k));
    LX.diagonal().setZero();
    dev = std::max(dev, max_abs(LX));
  }
  return dev;
}

namespace {

HistoryModel assemble_history(const LindbladModel& logical, const std::vector<Mat>& gates) {
  if (gates.empty()) throw DomainViolation("history model: need at least one time step");
  const int d = logical.dim();
  HistoryModel hm;
  hm.logical = logical;
  hm.T = static_cast<int>(gates.size());
  hm.gates = gates;
  const int n = hm.T + 1;
  hm.unitaries.push_back(identity(d));
  for (const auto& G : gates) {
    if (G.rows() != d || G.cols() != d) throw ShapeError("history model: gate dimension mismatch");
    if (max_abs(G.adjoint() * G - identity(d)) > 1e-10) throw UnitarityError("history model: gate is not unitary");
    hm.unitaries.push_back(G * hm.unitaries.back());
  }
  hm.U = Mat::Zero(d * n, d * n);
  for (int s = 0; s < n; ++s) hm.U += tensor(hm.unitaries[s], matrix_unit(n, s, s));
  if (max_abs(hm.U.adjoint() * hm.U - identity(d * n)) > 1e-10) throw UnitarityError("history model: U is not unitary");

  hm.time = build_graph_generator(cyclic_graph(n), maximally_mixed(n));
  std::vector<Mat> ops;
  std::vector<double> omegas;
  for (std::size_t j = 0; j < logical.jumps.size(); ++j) {
    ops.push_back(tensor(logical.jumps.ops[j], identity(n)));
    omegas.push_back(logical.omegas[j]);
  }
  for (std::size_t j = 0; j < hm.time.jumps.size(); ++j) {
    ops.push_back(tensor(identity(d), hm.time.jumps.ops[j]));
    omegas.push_back(0.0);
  }
  const FullRankState prod_state(tensor(logical.sigma.matrix(), identity(n) / static_cast<double>(n)));
  hm.product = make_model(make_jump_set(ops), prod_state, omegas);

  std::vector<Mat> cops;
  for (const auto& A : ops) cops.push_back(hm.U * A * hm.U.adjoint());
  hm.conjugated = make_model(make_jump_set(cops), FullRankState(hermitize(hm.U * prod_state.matrix() * hm.U.adjoint())),
                             omegas);

  const Mat adU = sup_sandwich(hm.U, hm.U.adjoint()), adUs = sup_sandwich(hm.U.adjoint(), hm.U);
  hm.identity_deviation =
      max_abs(build_generator(hm.conjugated).schrodinger - adU * build_generator(hm.product).schrodinger * adUs);
  return hm;
}

void set_kappa(HistoryModel& hm, double k_log, double k_time) {
  hm.kappa_logical = k_log;
  hm.kappa_time = k_time;
  hm.c0 = k_time * hm.T * hm.T;
  hm.kappa = std::min(k_log, k_time);
  hm.kappa_max = std::max(k_log, hm.c0 / (hm.T * hm.T));
}

Mat time_block(const Mat& Y, int d, int n, int t) {
  Mat B(d, d);
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) B(a, b) = Y(a * n + t, b * n + t);
  return B;
}

}  // namespace

HistoryModel build_history_model(const LindbladModel& logical, const std::vector<Mat>& gates,
                                 const HistoryOptions& opt) {
  HistoryModel hm = assemble_history(logical, gates);
  const auto fl = fixed_point_algebra(logical.jumps, logical.sigma);
  const auto ft = fixed_point_algebra(hm.time.jumps, hm.time.sigma);
  set_kappa(hm, estimate_clsi_witness(logical, fl, opt.ancilla_dim, opt.cfg).value,
            estimate_clsi_witness(hm.time, ft, opt.ancilla_dim, opt.cfg).value);
  return hm;
}

HistoryModel build_history_model(const LindbladModel& logical, const std::vector<Mat>& gates, double kappa) {
  HistoryModel hm = assemble_history(logical, gates);
  set_kappa(hm, kappa, kappa);
  return hm;
}

PreparationResult run_preparation(const HistoryModel& hm, const Mat& X, double s, TimeInput input, Tolerance tol) {
  if (s < 0) throw DomainViolation("run_preparation: s must be nonnegative");
  const int d = hm.logical.dim(), n = hm.T + 1;
  require_density(X, "run_preparation");
  const Mat Ls = build_generator(hm.conjugated).schrodinger;
  const Mat P = propagator(Ls, s);
  auto evolve_with = [&](const Mat& Y) { return hermitize(unvec(P * vec(Y), d * n)); };

  PreparationResult out;
  Mat Y0;
  if (input == TimeInput::conjugated_uniform) {
    Y0 = hm.U * tensor(X, identity(n) / static_cast<double>(n)) * hm.U.adjoint();
    out.scale = n;
  } else {
    Y0 = tensor(X, identity(n) / static_cast<double>(hm.T));
    out.scale = hm.T;
  }
  const Mat block = time_block(evolve_with(Y0), d, n, hm.T);
  out.success_prob = block.trace().real();
  out.X_T = out.scale * block;
  const Mat& U_T = hm.unitaries.back();
  const Mat rho_T = hermitize(U_T * hm.logical.sigma.matrix() * U_T.adjoint());
  const double D0 = relative_entropy(X, hm.logical.sigma.matrix());
  out.report = make_report("preparation_bound", lindblad_relative_entropy(out.X_T, rho_T),
                           n * std::exp(-hm.kappa * s) * D0, tol);
  out.report.informational = input == TimeInput::scaled_by_T;

  const Mat X0 = tensor(X, matrix_unit(n, 0, 0));
  const Mat b0 = time_block(evolve_with(X0), d, n, hm.T);
  const double DX0 = relative_entropy(X0, hm.conjugated.sigma.matrix());
  out.trace_report = make_report("preparation_trace", std::abs(b0.trace().real() - 1.0 / n),
                                 2 * std::sqrt(std::exp(-hm.kappa * s) * DX0), tol);
  return out;
}

StoppingTimeResult run_stopping_time(const HistoryModel& hm, const Mat& X, double s, int m, Tolerance tol) {
  if (m < 1) throw DomainViolation("run_stopping_time: m must be at least 1");
  if (s < 0) throw DomainViolation("run_stopping_time: s must be nonnegative");
  require_density(X, "run_stopping_time");
  const int n = hm.T + 1;
  StoppingTimeResult out;

  // one register started at |0><0| stays diagonal and follows the classical Laplacian
  const Eigen::MatrixXd A = graph_laplacian(cyclic_graph(n));
  const Mat Pq = expm(Mat(-s * A.cast<cplx>()));
  out.register_distribution.resize(n);
  for (int t = 0; t < n; ++t) out.register_distribution[t] = Pq(t, 0).real();
  const double qT = out.register_distribution[hm.T];

  out.eps_m = std::pow(1.0 - 1.0 / n, m);
  out.eps_m_over_T = std::pow(1.0 - 1.0 / hm.T, m);
  out.success_prob = 1.0 - std::pow(1.0 - qT, m);

  const Mat Xs = hermitize(evolve(build_generator(hm.logical).schrodinger, X, s));
  const Mat& U_T = hm.unitaries.back();
  const Mat rotated = hermitize(U_T * Xs * U_T.adjoint());
  out.X_sm = out.success_prob / (1.0 - out.eps_m) * rotated;
  const Mat rho_T = hermitize(U_T * hm.logical.sigma.matrix() * U_T.adjoint());

  const double D0 = relative_entropy(X, hm.logical.sigma.matrix());
  const double decay = std::exp(-hm.kappa * s) / (1.0 - out.eps_m);
  const double lhs = lindblad_relative_entropy(out.X_sm, rho_T);
  out.report = make_report("stopping_time_bound", lhs, decay * (D0 + m * std::log(static_cast<double>(n))), tol);
  out.no_register_entropy_report = make_report("stopping_time_bound_no_register_entropy", lhs, decay * D0, tol);
  out.no_register_entropy_report.informational = true;

  const double need = hm.T * std::max(1.0, 2 * std::abs(std::log(hm.kappa * s)));
  out.renormalized_report = make_report("stopping_time_renormalized", relative_entropy(rotated, rho_T),
                                        std::exp(-hm.kappa * s / 2) * D0, tol);
  out.renormalized_report.informational = m < need;
  return out;
}

double enumerate_failure_probability(int T, int m) {
  const int n = T + 1;
  long total = 1;
  for (int j = 0; j < m; ++j) total *= n;
  double fail = 0.0;
  for (long w = 0; w < total; ++w) {
    long x = w;
    bool hit = false;
    for (int j = 0; j < m; ++j, x /= n) hit |= (x % n) == T;
    if (!hit) fail += std::pow(1.0 / n, m);
  }
  return fail;
}

}  // namespace qmslab
