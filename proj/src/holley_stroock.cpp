#include "qmslab/holley_stroock.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace qmslab {

namespace {

double max_abs_frequency_factor(const std::vector<double>& w, const std::vector<double>& v) {
  double f = 1.0;
  for (std::size_t j = 0; j < w.size(); ++j) f = std::max(f, std::exp(std::abs(w[j] - v[j]) / 2));
  return f;
}

// Largest eigenvalue of a^{-1/2} b a^{-1/2}; equals max b_k / a_k for commuting a, b.
double max_ratio(const Mat& a, const Mat& b) {
  const Mat ai = pow_pd(a, -0.5);
  Eigen::SelfAdjointEigenSolver<Mat> es(hermitize(ai * b * ai), Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

std::string describe(const Mat& X) {
  std::ostringstream os;
  os.precision(17);
  os << "dim=" << X.rows() << " trace=" << X.trace().real();
  return os.str();
}

Mat gamma_ancilla(const FullRankState& sigma, int dK, const Mat& X) {
  const Mat s = tensor(sigma.sqrt(), identity(dK));
  return s * X * s;
}

}  // namespace

PerturbationFactor hs_factor_primitive(const LindbladModel& model) {
  if (!check_primitivity(model.jumps)) throw PrimitivityError("hs_factor_primitive: model is not primitive");
  PerturbationFactor f;
  double wmax = 0.0;
  for (double w : model.omegas) wmax = std::max(wmax, std::abs(w));
  f.entropy_factor = model.sigma.max_eigenvalue();
  f.ep_factor = model.sigma.min_eigenvalue() * std::exp(-wmax / 2);
  f.total = model.sigma.max_eigenvalue() / model.sigma.min_eigenvalue() * std::exp(wmax / 2);
  return f;
}

LindbladModel heat_model(const JumpOperatorSet& jumps) {
  return make_model(jumps, maximally_mixed(jumps.dim()), std::vector<double>(jumps.size(), 0.0));
}

ModelPair make_model_pair(LindbladModel sigma, LindbladModel prime) {
  if (sigma.jumps.size() != prime.jumps.size() || sigma.dim() != prime.dim())
    throw ModelError("model pair: generators must share their jump operators");
  for (std::size_t j = 0; j < sigma.jumps.size(); ++j)
    if (max_abs(sigma.jumps.ops[j] - prime.jumps.ops[j]) > 1e-10)
      throw ModelError("model pair: generators must share their jump operators");

  ModelPair p;
  p.fpa = fixed_point_algebra(sigma.jumps, sigma.sigma);
  p.fpa_prime = with_state(p.fpa, prime.sigma);
  p.r = 0.0;
  p.R = 0.0;
  for (std::size_t i = 0; i < p.fpa.blocks.size(); ++i) {
    const Mat& t = p.fpa.blocks[i].tau;
    const Mat& tp = p.fpa_prime.blocks[i].tau;
    if (max_abs(t * tp - tp * t) > 1e-9)
      throw IncompatibleStates("model pair: block states do not commute");
    p.r = std::max(p.r, max_ratio(tp, t));
    p.R = std::max(p.R, max_ratio(t, tp));
  }
  p.freq = max_abs_frequency_factor(sigma.omegas, prime.omegas);
  p.factor.entropy_factor = p.r;
  p.factor.ep_factor = p.R * p.freq;
  p.factor.total = p.r * p.R * p.freq;
  p.sigma = std::move(sigma);
  p.prime = std::move(prime);
  return p;
}

PerturbationFactor hs_factor_nonprimitive(const LindbladModel& sigma, const LindbladModel& prime) {
  return make_model_pair(sigma, prime).factor;
}

ModelPair random_model_pair(Rng& rng, int d) {
  if (d < 2) throw ShapeError("random_model_pair: dimension must be at least 2");
  struct Block {
    int dH, dK;
  };
  std::vector<Block> blocks;
  for (;;) {
    blocks.clear();
    int left = d;
    bool has_jumps = false;
    while (left > 0) {
      const int dK = uniform_int(rng, 1, left);
      const int dH = uniform_int(rng, 1, left / dK);
      blocks.push_back({dH, dK});
      left -= dH * dK;
      has_jumps |= dK >= 2;
    }
    const bool primitive = blocks.size() == 1 && blocks[0].dH == 1;
    if (has_jumps && !primitive) break;
  }

  const Mat U = random_unitary(rng, d);
  Mat s = Mat::Zero(d, d), sp = Mat::Zero(d, d);
  std::vector<Mat> ops;
  int off = 0;
  for (const auto& b : blocks) {
    const int n = b.dH * b.dK;
    const auto t = random_probability(rng, b.dK), tp = random_probability(rng, b.dK);
    Mat tau = Mat::Zero(b.dK, b.dK), taup = tau;
    for (int k = 0; k < b.dK; ++k) tau(k, k) = t[k], taup(k, k) = tp[k];
    const double w = static_cast<double>(b.dK) / d;
    s.block(off, off, n, n) = w * tensor(identity(b.dH), tau);
    sp.block(off, off, n, n) = w * tensor(identity(b.dH), taup);
    auto embed = [&](const Mat& K) {
      Mat A = Mat::Zero(d, d);
      A.block(off, off, n, n) = tensor(identity(b.dH), K);
      return Mat(U * A * U.adjoint());
    };
    for (int v = 1; v < b.dK; ++v) {
      const int u = uniform_int(rng, 0, v - 1);
      const cplx c = ginibre(rng, 1, 1)(0, 0);
      ops.push_back(embed(c * matrix_unit(b.dK, u, v)));
      ops.push_back(embed(std::conj(c) * matrix_unit(b.dK, v, u)));
    }
    if (b.dK >= 2) {
      Mat D = Mat::Zero(b.dK, b.dK);
      for (int k = 0; k < b.dK; ++k) D(k, k) = uniform(rng, -1.0, 1.0);
      ops.push_back(embed(D));
    }
    off += n;
  }
  const FullRankState sigma(hermitize(U * s * U.adjoint()));
  const FullRankState prime(hermitize(U * sp * U.adjoint()));
  const auto js = make_jump_set(ops);
  return make_model_pair(make_model(js, sigma), make_model(js, prime));
}

InequalityReport check_entropy_comparison_primitive(const LindbladModel& model, int dK, const Mat& X,
                                                    Tolerance tol, long sample_id) {
  const int dH = model.dim();
  const Mat G = gamma_ancilla(model.sigma, dK, X);
  const Mat target = tensor(model.sigma.matrix(), partial_trace(G, dH, dK, Keep::second));
  const Mat E0 = tensor(identity(dH) / static_cast<double>(dH), partial_trace(X, dH, dK, Keep::second));
  const double lhs = lindblad_relative_entropy(G, target);
  const double rhs = model.sigma.max_eigenvalue() * lindblad_relative_entropy(X, E0);
  return make_report("entropy_comparison_primitive", lhs, rhs, tol, sample_id, describe(X));
}

InequalityReport check_ep_comparison_primitive(const LindbladModel& model, int dK, const Mat& X, Tolerance tol,
                                               long sample_id) {
  const LindbladModel ext = dK > 1 ? tensor_identity(model, dK) : model;
  const LindbladModel heat = tensor_identity(heat_model(model.jumps), dK);
  double wmax = 0.0;
  for (double w : model.omegas) wmax = std::max(wmax, std::abs(w));
  const double c = model.sigma.min_eigenvalue() * std::exp(-wmax / 2);
  // EP_L(Gamma X) >= c EP_0(X), recorded as c EP_0(X) <= EP_L(Gamma X)
  const double lhs = c * entropy_production_direct(heat, X);
  const double rhs = entropy_production_direct(ext, gamma_ancilla(model.sigma, dK, X));
  return make_report("ep_comparison_primitive", lhs, rhs, tol, sample_id, describe(X));
}

InequalityReport check_entropy_comparison(const ModelPair& pair, const Mat& X, Tolerance tol, long sample_id) {
  const Mat Gs = apply_gamma(pair.sigma.sigma, X);
  const Mat Gp = apply_gamma(pair.prime.sigma, X);
  const double lhs = lindblad_relative_entropy(Gs, hermitize(pair.fpa.apply_E_star(Gs)));
  const double rhs = pair.r * lindblad_relative_entropy(Gp, hermitize(pair.fpa_prime.apply_E_star(Gp)));
  return make_report("entropy_comparison", lhs, rhs, tol, sample_id, describe(X));
}

InequalityReport check_ep_comparison(const ModelPair& pair, const Mat& X, Tolerance tol, long sample_id) {
  const double lhs = entropy_production_direct(pair.prime, apply_gamma(pair.prime.sigma, X));
  const double rhs = pair.R * pair.freq * entropy_production_direct(pair.sigma, apply_gamma(pair.sigma.sigma, X));
  return make_report("ep_comparison", lhs, rhs, tol, sample_id, describe(X));
}

Mat random_positive_operator(Rng& rng, int d) {
  Mat X = uniform(rng) < 0.3 ? random_boundary_state(rng, d) : random_density(rng, d);
  return log_uniform(rng, 0.1, 10.0) * X;
}

namespace {

template <typename Fn>
std::vector<InequalityReport> run_suite(std::size_t n, std::uint64_t seed, int d, Fn&& check) {
  std::vector<InequalityReport> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Rng rng = make_rng(seed, i);
    out.push_back(check(random_positive_operator(rng, d), static_cast<long>(i)));
  }
  return out;
}

}  // namespace

std::vector<InequalityReport> entropy_comparison_suite(const LindbladModel& model, int dK, std::size_t n,
                                                       std::uint64_t seed, Tolerance tol) {
  return run_suite(n, seed, model.dim() * dK, [&](const Mat& X, long id) {
    return check_entropy_comparison_primitive(model, dK, X, tol, id);
  });
}

std::vector<InequalityReport> ep_comparison_suite(const LindbladModel& model, int dK, std::size_t n,
                                                  std::uint64_t seed, Tolerance tol) {
  return run_suite(n, seed, model.dim() * dK, [&](const Mat& X, long id) {
    return check_ep_comparison_primitive(model, dK, X, tol, id);
  });
}

std::vector<InequalityReport> entropy_comparison_suite(const ModelPair& pair, std::size_t n, std::uint64_t seed,
                                                       Tolerance tol) {
  return run_suite(n, seed, pair.sigma.dim(),
                   [&](const Mat& X, long id) { return check_entropy_comparison(pair, X, tol, id); });
}

std::vector<InequalityReport> ep_comparison_suite(const ModelPair& pair, std::size_t n, std::uint64_t seed,
                                                  Tolerance tol) {
  return run_suite(n, seed, pair.sigma.dim(),
                   [&](const Mat& X, long id) { return check_ep_comparison(pair, X, tol, id); });
}

KrausMap complete_to_channel(const KrausMap& phi, double tolerance) {
  const int din = phi.din, dout = phi.dout;
  Mat S = Mat::Zero(din, din);
  for (const auto& K : phi.ops) S += K.adjoint() * K;
  Eigen::SelfAdjointEigenSolver<Mat> es(hermitize(identity(din) - S));
  if (es.eigenvalues().minCoeff() < -tolerance)
    throw DomainViolation("complete_to_channel: map increases trace");
  std::vector<Mat> ops;
  for (const auto& K : phi.ops) {
    Mat P = Mat::Zero(dout + 1, din);
    P.topRows(dout) = K;
    ops.push_back(P);
  }
  for (int k = 0; k < din; ++k) {
    const double mu = es.eigenvalues()(k);
    if (mu <= 0.0) continue;
    Mat P = Mat::Zero(dout + 1, din);
    P.row(dout) = std::sqrt(mu) * es.eigenvectors().col(k).adjoint();
    ops.push_back(P);
  }
  return KrausMap(ops);
}

KrausMap change_of_measure_completion(const FullRankState& sigma, int dK) {
  const Mat K = tensor(sigma.sqrt(), identity(dK)) / std::sqrt(sigma.max_eigenvalue());
  return complete_to_channel(KrausMap({K}));
}

InequalityReport check_hs_transfer(double estimate_sigma, double estimate_reference, double total,
                                   double sampling_slack) {
  auto r = make_report("hs_transfer", estimate_reference / total - sampling_slack, estimate_sigma);
  r.informational = true;
  return r;
}

double spectral_gap_mlsi_reference(const LindbladModel& model) {
  const double gap = spectral_gap(build_generator_heisenberg(model.jumps, model.omegas));
  return 2 * gap / (std::log(1.0 / model.sigma.min_eigenvalue()) + 2);
}

double dirichlet_form(const LindbladModel& model, const Mat& X) {
  return kms_inner(model.sigma, apply_generator(model, X), X).real();
}

double lp_sigma_norm(const FullRankState& sigma, const Mat& X, double p) {
  if (std::isinf(p)) return Eigen::JacobiSVD<Mat>(X).singularValues().maxCoeff();
  if (p != 1.0 && p != 2.0) throw DomainViolation("lp_sigma_norm: p must be 1, 2 or infinity");
  const Mat G = sigma.power(1.0 / (2 * p)) * X * sigma.power(1.0 / (2 * p));
  const RVec sv = Eigen::JacobiSVD<Mat>(G).singularValues();
  return std::pow(sv.array().pow(p).sum(), 1.0 / p);
}

LsiTerms lsi_terms(const LindbladModel& model, const FixedPointAlgebra& fpa, const Mat& rho) {
  const Mat q = model.sigma.power(-0.25);
  const Mat f = hermitize(q * sqrt_psd(rho) * q);
  LsiTerms t;
  t.entropy = lindblad_relative_entropy(rho, hermitize(fpa.apply_E_star(rho)));
  t.dirichlet = dirichlet_form(model, f);
  const double n = lp_sigma_norm(model.sigma, f, 2.0);
  t.norm2 = n * n;
  return t;
}

double fit_lsi_constant(const LindbladModel& model, const FixedPointAlgebra& fpa, double d,
                        const std::vector<Mat>& states) {
  double c = 0.0;
  for (const auto& rho : states) {
    const auto t = lsi_terms(model, fpa, rho);
    const double excess = t.entropy - d * t.norm2;
    if (excess <= 0.0) continue;
    if (t.dirichlet <= 1e-14) return std::numeric_limits<double>::infinity();
    c = std::max(c, excess / t.dirichlet);
  }
  return c;
}

LsiTransfer check_lsi_perturbation(const ModelPair& pair, double c_prime, double d_prime,
                                   const std::vector<Mat>& samples, Tolerance tol) {
  LsiTransfer out;
  const double rR = pair.r * pair.R;
  out.c = rR * pair.freq * c_prime;
  out.d = rR * d_prime;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Mat& X = samples[i];
    const Mat rp = apply_gamma(pair.prime.sigma, X);
    const auto hp = lsi_terms(pair.prime, pair.fpa_prime, rp / rp.trace().real());
    const auto hyp = make_report("lsi_hypothesis", hp.entropy, c_prime * hp.dirichlet + d_prime * hp.norm2, tol,
                                 static_cast<long>(i));
    if (!hyp.pass) {
      std::ostringstream os;
      os << "check_lsi_perturbation: LSI(" << c_prime << ", " << d_prime << ") fails for sigma' at sample " << i;
      throw HypothesisError(os.str());
    }
    const Mat rs = apply_gamma(pair.sigma.sigma, X);
    const auto t = lsi_terms(pair.sigma, pair.fpa, rs / rs.trace().real());
    out.reports.push_back(make_report("lsi_transfer", t.entropy, out.c * t.dirichlet + out.d * t.norm2, tol,
                                      static_cast<long>(i), describe(X)));
  }
  return out;
}

double chain_rule_residual(const FixedPointAlgebra& fpa, const Mat& X, const Mat& Y) {
  const Mat EX = hermitize(fpa.apply_E_star(X));
  return lindblad_relative_entropy(X, Y) - lindblad_relative_entropy(X, EX) - lindblad_relative_entropy(EX, Y);
}

}  // namespace qmslab
