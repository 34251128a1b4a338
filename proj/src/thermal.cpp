#include "qmslab/thermal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "qmslab/random.hpp"

namespace qmslab {

namespace {

constexpr double kJumpSplitTol = 1e-10;

std::vector<double> shifted(const GibbsSpec& g) {
  std::vector<double> e = g.energies;
  const double e1 = e.front();
  for (double& x : e) x -= e1;
  return e;
}

// max_{j < n} e^{beta (E_{j+1} - E_j)/2} over the first n gaps.
double gap_factor(const std::vector<double>& e, double beta, std::size_t n) {
  double gap = 0.0;
  for (std::size_t j = 0; j + 1 < e.size() && j < n; ++j) gap = std::max(gap, e[j + 1] - e[j]);
  return std::exp(beta * gap / 2);
}

double trace_norm_hermitian(const Mat& A) {
  Eigen::SelfAdjointEigenSolver<Mat> es(hermitize(A), Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().sum();
}

// Low-block jumps, or SubalgebraError when a jump straddles the cutoff.
std::vector<int> classify_jumps(const LindbladModel& model, const Mat& P) {
  std::vector<int> low;
  for (std::size_t j = 0; j < model.jumps.size(); ++j) {
    const Mat& A = model.jumps.ops[j];
    const Mat inside = P * A * P;
    const double in = max_abs(inside), out = max_abs(A - inside);
    if (in > kJumpSplitTol && out > kJumpSplitTol) {
      std::ostringstream os;
      os << "jump " << j << " acts inside the low-energy block and also leaves it (" << in << ", " << out << ")";
      throw SubalgebraError(os.str());
    }
    if (in > kJumpSplitTol) low.push_back(static_cast<int>(j));
  }
  return low;
}

void require_low_support(const Mat& P, const Mat& rho) {
  require_density(rho, "flagged evolution");
  const Mat Q = identity(P.rows()) - P;
  const double outside = (Q * rho * Q).trace().real();
  if (outside > 1e-12) {
    std::ostringstream os;
    os << "initial state has weight " << outside << " above the energy cutoff";
    throw SupportError(os.str());
  }
}

void require_projector(const Mat& P, int d) {
  if (P.rows() != d || P.cols() != d) throw ShapeError("low-energy projector has the wrong dimension");
  if (max_abs(P * P - P) > 1e-12 || !is_hermitian(P)) throw DomainViolation("low-energy projector is not a projection");
}

Mat flag_free_superop(const LindbladModel& model, const Mat& P) {
  const Mat S = sup_sandwich(P, P);
  return S * build_generator(model).schrodinger * S;
}

// Indices of the levels kept by P, in order. P is diagonal in the energy basis.
std::vector<int> kept_levels(const Mat& P) {
  std::vector<int> k;
  for (int i = 0; i < P.rows(); ++i)
    if (P(i, i).real() > 0.5) k.push_back(i);
  return k;
}

Mat compress(const Mat& X, const std::vector<int>& idx) {
  Mat Y(idx.size(), idx.size());
  for (std::size_t a = 0; a < idx.size(); ++a)
    for (std::size_t b = 0; b < idx.size(); ++b) Y(a, b) = X(idx[a], idx[b]);
  return Y;
}

}  // namespace

void validate_gibbs(const GibbsSpec& g) {
  if (g.energies.empty()) throw DomainViolation("Gibbs state: no energies");
  if (!(g.beta >= 0) || !std::isfinite(g.beta)) throw DomainViolation("Gibbs state: beta must be finite and >= 0");
  for (std::size_t k = 0; k < g.energies.size(); ++k) {
    if (!std::isfinite(g.energies[k])) throw DomainViolation("Gibbs state: non-finite energy");
    if (k > 0 && g.energies[k] < g.energies[k - 1]) throw DomainViolation("Gibbs state: energies must be sorted");
  }
}

double gibbs_shift(const GibbsSpec& g) {
  validate_gibbs(g);
  return g.energies.front();
}

double partition_function(const GibbsSpec& g) {
  validate_gibbs(g);
  double z = 0.0;
  for (double e : shifted(g)) z += std::exp(-g.beta * e);
  return z;
}

std::vector<double> gibbs_probabilities(const GibbsSpec& g) {
  const double z = partition_function(g);
  std::vector<double> p;
  for (double e : shifted(g)) p.push_back(std::exp(-g.beta * e) / z);
  return p;
}

FullRankState gibbs_state(const GibbsSpec& g) { return diagonal_state(gibbs_probabilities(g)); }

PerturbationFactor thermal_hs_factor(const GibbsSpec& g) {
  validate_gibbs(g);
  const auto e = shifted(g);
  const double ratio = std::exp(g.beta * e.back());
  const double freq = gap_factor(e, g.beta, e.size());
  const auto p = gibbs_probabilities(g);
  PerturbationFactor f;
  f.entropy_factor = p.front();
  f.ep_factor = p.back() / freq;
  f.total = ratio * freq;
  return f;
}

LindbladModel gibbs_ladder_model(const GibbsSpec& g) {
  validate_gibbs(g);
  const int m = static_cast<int>(g.energies.size());
  if (m < 2) throw ModelError("ladder model needs at least two levels");
  const FullRankState sigma = gibbs_state(g);
  // levels grouped by distinct Boltzmann weight, which is what the block rule of the graph generator sees
  const auto blocks = eigen_blocks(sigma);
  const int nblocks = *std::max_element(blocks.begin(), blocks.end()) + 1;
  if (nblocks == 1) return build_graph_generator(complete_graph(m), sigma);
  GraphSpec graph{m, {}, {}};
  for (int r = 0; r < m; ++r)
    for (int s = r + 1; s < m; ++s)
      if (std::abs(blocks[r] - blocks[s]) == 1) graph.edges.push_back({r, s});
  return build_graph_generator(graph, sigma, DegenerateRule::block);
}

TruncatedGibbs truncated_gibbs(const GibbsSpec& g, int l, Tolerance tol) {
  validate_gibbs(g);
  const int m = static_cast<int>(g.energies.size());
  if (l < 1 || l > m) throw DomainViolation("truncated Gibbs state: need 1 <= l <= m");
  const auto e = shifted(g);
  const double el = e[l - 1];

  std::vector<double> w(m), wt(m);
  double z = 0.0, zt = 0.0;
  for (int k = 0; k < m; ++k) {
    w[k] = std::exp(-g.beta * e[k]);
    wt[k] = k < l - 1 ? w[k] : std::exp(-g.beta * el);
    z += w[k];
    zt += wt[k];
  }
  std::vector<double> pt(m);
  double dist_diag = 0.0;
  for (int k = 0; k < m; ++k) {
    pt[k] = wt[k] / zt;
    dist_diag += std::abs(w[k] / z - pt[k]);
  }

  TruncatedGibbs r;
  r.l = l;
  r.sigma_tilde = diagonal_state(pt);
  r.distance_actual = trace_norm_hermitian(gibbs_state(g).matrix() - r.sigma_tilde.matrix());
  r.distance_diagonal = dist_diag;
  const double tail = (m - l) * std::exp(-g.beta * el);
  r.bound = 2 * tail / zt;
  r.bound_first_order = tail / zt * std::abs(1 / zt - 1);
  r.factor = std::exp(g.beta * el) * gap_factor(e, g.beta, l - 1);
  r.factor_inclusive = std::exp(g.beta * el) * gap_factor(e, g.beta, l);
  r.report = make_report("truncated Gibbs distance", r.distance_actual, r.bound, tol);
  r.first_order_report = make_report("truncated Gibbs first-order bound", r.distance_actual, r.bound_first_order, tol);
  r.first_order_report.informational = true;
  return r;
}

T1Check t1_relaxation_check(double T1, int dB, double t, std::size_t samples, std::uint64_t seed, double eps,
                            Tolerance tol) {
  if (!(T1 > 0) || t < 0) throw DomainViolation("T1 check: need T1 > 0 and t >= 0");
  if (dB < 1) throw DomainViolation("T1 check: need dB >= 1");
  if (eps < 0 || eps >= 1) throw DomainViolation("T1 check: need 0 <= eps < 1");
  Mat omega = Mat::Zero(2, 2);
  omega(0, 0) = 1 - eps;
  omega(1, 1) = eps;
  const double lam = std::exp(-t / T1);
  T1Check out;
  for (std::size_t i = 0; i < samples; ++i) {
    Rng rng = make_rng(seed, i);
    Mat rho;
    // a third of the samples live on |0> kron C^dB, the only states with finite divergence when eps = 0
    if (i % 3 == 0)
      rho = tensor(matrix_unit(2, 0, 0), random_density(rng, dB));
    else
      rho = random_density(rng, 2 * dB);
    const Mat ref = tensor(omega, partial_trace(rho, 2, dB, Keep::second));
    const Mat out_state = lam * rho + (1 - lam) * ref;
    double before, after;
    try {
      before = relative_entropy(rho, ref);
      after = relative_entropy(out_state, ref);
    } catch (const SupportError&) {
      ++out.skipped;
      continue;
    }
    ++out.finite;
    out.reports.push_back(make_report("T1 relaxation", after, lam * before, tol, static_cast<long>(i)));
  }
  return out;
}

Mat low_energy_projector(const GibbsSpec& g, double E0) {
  validate_gibbs(g);
  const int m = static_cast<int>(g.energies.size());
  Mat P = Mat::Zero(m, m);
  for (int k = 0; k < m; ++k)
    if (g.energies[k] <= E0) P(k, k) = 1.0;
  return P;
}

int low_energy_dimension(const GibbsSpec& g, double E0) {
  return static_cast<int>(low_energy_projector(g, E0).trace().real() + 0.5);
}

FlaggedTrajectory flagged_evolution(const LindbladModel& model, const Mat& P, const Mat& rho0, double t, int m) {
  const int d = model.dim();
  require_projector(P, d);
  if (m < 1 || t < 0) throw DomainViolation("flagged evolution: need m >= 1 and t >= 0");
  classify_jumps(model, P);
  require_low_support(P, rho0);

  const Mat Q = identity(d) - P;
  const Mat step = propagator(build_generator(model).schrodinger, t / m);
  FlaggedTrajectory tr;
  Mat low = P * rho0 * P;
  Mat all = low + Q * rho0 * Q;  // every flag traced out
  tr.times.push_back(0.0);
  tr.survival.push_back(low.trace().real());
  tr.low_states.push_back(low / low.trace().real());
  tr.flag_probs.push_back(0.0);
  for (int k = 1; k <= m; ++k) {
    const Mat next = apply_super(step, low);
    low = P * next * P;
    const Mat evolved = apply_super(step, all);
    all = P * evolved * P + Q * evolved * Q;
    const double s = low.trace().real();
    tr.times.push_back(t * k / m);
    tr.flag_probs.push_back(tr.survival.back() - s);
    tr.survival.push_back(s);
    tr.low_states.push_back(s > 0 ? Mat(low / s) : Mat(Mat::Zero(d, d)));
  }
  tr.marginal = all;
  tr.p_low = tr.survival.back();
  return tr;
}

double p_low_limit(const LindbladModel& model, const Mat& P, const Mat& rho0, double t) {
  require_projector(P, model.dim());
  classify_jumps(model, P);
  require_low_support(P, rho0);
  return apply_super(propagator(flag_free_superop(model, P), t), rho0).trace().real();
}

PLowConvergence p_low_doubling(const LindbladModel& model, const Mat& P, const Mat& rho0, double t, int m0,
                               double tol, int max_m) {
  if (m0 < 1) throw DomainViolation("p_low doubling: need m0 >= 1");
  require_projector(P, model.dim());
  classify_jumps(model, P);
  require_low_support(P, rho0);
  const Mat L = build_generator(model).schrodinger;
  const Mat S = sup_sandwich(P, P);
  const Vec v0 = vec(rho0);
  const Vec tr = vec(identity(model.dim()));
  PLowConvergence c;
  for (int m = m0; m <= max_m; m *= 2) {
    const Mat step = S * propagator(L, t / m);
    Vec v = v0;
    for (int k = 0; k < m; ++k) v = step * v;
    c.m.push_back(m);
    c.p_low.push_back(tr.dot(v).real());
    const std::size_t n = c.p_low.size();
    if (n >= 2 && std::abs(c.p_low[n - 1] - c.p_low[n - 2]) < tol) {
      c.converged = true;
      break;
    }
  }
  return c;
}

EffectiveModel effective_low_energy_model(const LindbladModel& model, const GibbsSpec& g, double E0) {
  validate_gibbs(g);
  const int d = model.dim();
  if (static_cast<int>(g.energies.size()) != d) throw ShapeError("effective model: spectrum and model disagree");
  const FullRankState sigma = gibbs_state(g);
  if (max_abs(sigma.matrix() - model.sigma.matrix()) > 1e-10)
    throw ModelError("effective model: the invariant state is not the Gibbs state of the spectrum");
  const Mat P = low_energy_projector(g, E0);
  const auto idx = kept_levels(P);
  if (idx.empty()) throw DomainViolation("effective model: no level below the cutoff");

  EffectiveModel eff;
  eff.kept = classify_jumps(model, P);
  std::vector<Mat> ops;
  std::vector<double> w;
  for (int j : eff.kept) {
    ops.push_back(compress(model.jumps.ops[j], idx));
    w.push_back(model.omegas[j]);
  }
  Mat low_sigma = compress(sigma.matrix(), idx);
  low_sigma /= low_sigma.trace().real();
  eff.model = make_model(make_jump_set(ops), FullRankState(low_sigma), w);

  const auto e = shifted(g);
  const int d0 = static_cast<int>(idx.size());
  eff.factor = std::exp(g.beta * e[d0 - 1]) * gap_factor(e, g.beta, d0);
  eff.factor_rigorous = check_primitivity(eff.model.jumps) ? hs_factor_primitive(eff.model).total
                                                            : std::numeric_limits<double>::infinity();
  return eff;
}

FlagFreeDecay check_flag_free_decay(const LindbladModel& model, const EffectiveModel& eff, const Mat& P,
                                    const Mat& rho, double t, double alpha, Tolerance tol) {
  const int d = model.dim();
  require_projector(P, d);
  require_density(rho, "flag-free decay");
  const auto idx = kept_levels(P);
  const Mat& st = eff.model.sigma.matrix();

  Mat low = P * rho * P;
  const double z = low.trace().real();
  if (z <= 1e-14) throw SupportError("flag-free decay: no weight below the cutoff");
  low /= z;
  const double d0 = relative_entropy(compress(low, idx), st);
  const double rhs = std::exp(-alpha * t) * d0;

  FlagFreeDecay out;
  const Mat cond = apply_super(propagator(flag_free_superop(model, P), t), low);
  out.p_low = cond.trace().real();
  const Mat cond_low = compress(cond, idx) / out.p_low;
  out.conditional = make_report("flag-free decay", relative_entropy(cond_low, st), rhs, tol);

  const Mat eff_state = evolve(build_generator(eff.model).schrodinger, compress(low, idx), t);
  out.effective = make_report("effective model decay", relative_entropy(eff_state, st), rhs, tol);
  return out;
}

}  // namespace qmslab
