#include "qmslab/sdpi.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <sstream>

namespace qmslab {

Mat KrausChannel::schrodinger(const Mat& rho) const {
  Mat out = Mat::Zero(ops.front().rows(), ops.front().rows());
  for (const auto& K : ops) out += K * rho * K.adjoint();
  return out;
}

Mat KrausChannel::heisenberg(const Mat& X) const {
  Mat out = Mat::Zero(dim(), dim());
  for (const auto& K : ops) out += K.adjoint() * X * K;
  return out;
}

Mat KrausChannel::schrodinger_superop() const {
  const int d = dim();
  Mat S = Mat::Zero(d * d, d * d);
  for (const auto& K : ops) S += sup_sandwich(K, K.adjoint());
  return S;
}

Mat KrausChannel::heisenberg_superop() const {
  const int d = dim();
  Mat S = Mat::Zero(d * d, d * d);
  for (const auto& K : ops) S += sup_sandwich(K.adjoint(), K);
  return S;
}

namespace {

constexpr double kFreqTol = 1e-9;

struct Component {
  Mat op;
  double omega;
};

// Splits M into parts C with sigma C = e^{-omega} C sigma.
std::vector<Component> modular_components(const Mat& M, const FullRankState& sigma) {
  const Mat& V = sigma.eigenvectors();
  const RVec& p = sigma.eigenvalues();
  const int d = static_cast<int>(p.size());
  const Mat Mb = V.adjoint() * M * V;
  std::vector<double> freqs;
  for (int a = 0; a < d; ++a)
    for (int b = 0; b < d; ++b) freqs.push_back(std::log(p(b)) - std::log(p(a)));
  std::sort(freqs.begin(), freqs.end());
  std::vector<double> groups;
  for (double w : freqs)
    if (groups.empty() || w - groups.back() > kFreqTol) groups.push_back(w);

  std::vector<Component> out;
  const double scale = std::max(1.0, max_abs(M));
  for (double w : groups) {
    Mat C = Mat::Zero(d, d);
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b)
        if (std::abs(std::log(p(b)) - std::log(p(a)) - w) <= kFreqTol) C(a, b) = Mb(a, b);
    if (C.cwiseAbs().maxCoeff() <= 1e-14 * scale) continue;
    out.push_back({V * C * V.adjoint(), w});
  }
  return out;
}

Mat rank_one_expectation(const FullRankState& sigma) {
  const int d = static_cast<int>(sigma.matrix().rows());
  return vec(sigma.matrix()) * vec(identity(d)).adjoint();
}

FullRankState channel_state(const KrausChannel& phi) { return phi.sigma ? *phi.sigma : maximally_mixed(phi.dim()); }

}  // namespace

KrausChannel make_channel(std::vector<Mat> ops, Picture picture, std::optional<FullRankState> sigma) {
  if (ops.empty()) throw ShapeError("make_channel: no Kraus operators");
  const int d = static_cast<int>(ops.front().cols());
  Mat S = Mat::Zero(d, d);
  for (const auto& K : ops) {
    if (K.rows() != d || K.cols() != d) throw ShapeError("make_channel: Kraus operators must be square of equal size");
    S += K.adjoint() * K;
  }
  if (max_abs(S - identity(d)) > 1e-10) {
    std::ostringstream os;
    os << "make_channel: sum K^*K deviates from I by " << max_abs(S - identity(d));
    throw ModelError(os.str());
  }
  KrausChannel ch;
  ch.picture = picture;
  if (!sigma) {
    ch.ops = std::move(ops);
    return ch;
  }
  if (sigma->matrix().rows() != d) throw ShapeError("make_channel: sigma dimension mismatch");
  KrausChannel original;
  original.ops = ops;
  for (const auto& K : ops)
    for (auto& c : modular_components(K, *sigma)) {
      ch.ops.push_back(std::move(c.op));
      ch.omegas.push_back(c.omega);
    }
  if (max_abs(ch.schrodinger_superop() - original.schrodinger_superop()) > 1e-9)
    throw DBCError("make_channel: channel does not commute with the modular group of sigma");
  ch.sigma = std::move(sigma);
  return ch;
}

double detailed_balance_deviation(const KrausChannel& phi, const FullRankState& sigma) {
  const Mat R = sup_right(sigma.matrix());
  return max_abs(phi.schrodinger_superop() * R - R * phi.heisenberg_superop());
}

KrausChannel build_unital_counterpart(const KrausChannel& phi) {
  if (!phi.sigma) throw ModelError("build_unital_counterpart: channel has no invariant state");
  const double dev = detailed_balance_deviation(phi, *phi.sigma);
  if (dev > 1e-8) {
    std::ostringstream os;
    os << "build_unital_counterpart: detailed balance violated by " << dev;
    throw DBCError(os.str());
  }
  KrausChannel out;
  out.picture = Picture::heisenberg;
  out.sigma = phi.sigma;
  for (std::size_t j = 0; j < phi.ops.size(); ++j) {
    out.ops.push_back(std::exp(phi.omegas[j] / 2) * phi.ops[j].adjoint());
    out.omegas.push_back(-phi.omegas[j]);
  }
  const auto diag = counterpart_diagnostics(phi, out);
  if (diag.unital_deviation > 1e-9 || diag.intertwining_deviation > 1e-9)
    throw DBCError("build_unital_counterpart: counterpart is not unital or does not intertwine");
  return out;
}

CounterpartDiagnostics counterpart_diagnostics(const KrausChannel& phi, const KrausChannel& phi0) {
  CounterpartDiagnostics d;
  const int n = phi.dim();
  const FullRankState s = channel_state(phi);
  d.unital_deviation = max_abs(phi0.heisenberg(identity(n)) - identity(n));
  const Mat G = gamma_map(s);
  const Mat H = phi0.heisenberg_superop();
  d.intertwining_deviation = max_abs(phi.schrodinger_superop() * G - G * H);
  d.self_adjoint_deviation = max_abs(H - H.adjoint());
  return d;
}

bool is_primitive_channel(const KrausChannel& phi, double tol) {
  Eigen::ComplexEigenSolver<Mat> es(phi.schrodinger_superop(), false);
  int ones = 0;
  for (int k = 0; k < es.eigenvalues().size(); ++k)
    if (std::abs(es.eigenvalues()(k) - cplx(1.0)) < tol) ++ones;
  return ones == 1;
}

Mat channel_conditional_expectation(const KrausChannel& phi) {
  const FullRankState s = channel_state(phi);
  if (detailed_balance_deviation(phi, s) > 1e-8)
    throw DBCError("channel_conditional_expectation: channel is not symmetric with respect to its state");
  const Mat Gh = gamma_power(s, 0.5), Gih = gamma_power(s, -0.5);
  const Mat M = hermitize(Gih * phi.schrodinger_superop() * Gh);
  Eigen::SelfAdjointEigenSolver<Mat> es(M);
  const int n = static_cast<int>(M.rows());
  Mat P = Mat::Zero(n, n);
  for (int k = 0; k < n; ++k)
    if (std::abs(es.eigenvalues()(k) - 1.0) < 1e-9) P += es.eigenvectors().col(k) * es.eigenvectors().col(k).adjoint();
  return Gh * P * Gih;
}

ConstantEstimate estimate_sdpi(const KrausChannel& phi, const Mat& E_star, const SamplerConfig& cfg) {
  const int d = phi.dim();
  const Mat S = phi.schrodinger_superop();
  if (E_star.rows() != d * d || E_star.cols() != d * d) throw ShapeError("estimate_sdpi: E_star has wrong shape");
  if (max_abs(S * E_star - E_star) > 1e-9) throw ModelError("estimate_sdpi: Phi_* E_* differs from E_*");
  const double floor = std::max(cfg.min_denominator, 1e-10);
  auto f = [&](const Mat& rho) -> std::optional<RatioValue> {
    const Mat E = hermitize(unvec(E_star * vec(rho), d));
    const double den = lindblad_relative_entropy(rho, E);
    if (!(den > floor)) return std::nullopt;
    return RatioValue{lindblad_relative_entropy(hermitize(phi.schrodinger(rho)), E), den};
  };
  return optimize_ratio(d, f, cfg, false, "sdpi");
}

SdpiBound check_sdpi_bound(const KrausChannel& phi_in, const SamplerConfig& cfg, Tolerance tol,
                           double estimator_slack) {
  KrausChannel phi = phi_in;
  if (!phi.sigma) phi = make_channel(phi.ops, phi.picture, maximally_mixed(phi.dim()));
  if (!is_primitive_channel(phi)) throw PrimitivityError("check_sdpi_bound: channel is not primitive");
  const FullRankState& s = *phi.sigma;
  const int d = phi.dim();
  const KrausChannel phi0 = build_unital_counterpart(phi);

  SdpiBound out;
  out.condition = s.max_eigenvalue() / s.min_eigenvalue();
  out.c_phi = estimate_sdpi(phi, rank_one_expectation(s), cfg).value;

  auto tracial = [d](const Mat& X) { return Mat(identity(d) * (X.trace().real() / d)); };
  const double floor = std::max(cfg.min_denominator, 1e-10);
  auto f0 = [&](const Mat& X) -> std::optional<RatioValue> {
    const Mat E = tracial(X);
    const double den = lindblad_relative_entropy(X, E);
    if (!(den > floor)) return std::nullopt;
    return RatioValue{lindblad_relative_entropy(hermitize(phi0.heisenberg(X)), E), den};
  };
  out.c_phi0 = optimize_ratio(d, f0, cfg, false, "sdpi_unital").value;
  out.bound = std::min(1.0, out.condition * out.c_phi0);
  out.report = make_report("sdpi_bound", out.c_phi, out.bound * (1 + estimator_slack), tol);

  const auto sampler = default_sampler(d, cfg.boundary_fraction);
  for (std::size_t i = 0; i < cfg.samples; ++i) {
    Rng rng = make_rng(cfg.seed, i);
    const Mat rho = sampler(rng, i);
    const Mat X = hermitize(apply_gamma_inverse(s, rho));
    const double den = lindblad_relative_entropy(X, tracial(X));
    if (!(den > 1e-12)) continue;
    const double cx = lindblad_relative_entropy(hermitize(phi0.heisenberg(X)), tracial(X)) / den;
    const double lhs = lindblad_relative_entropy(hermitize(phi.schrodinger(rho)), s.matrix());
    const double rhs = out.condition * cx * lindblad_relative_entropy(rho, s.matrix());
    out.chain.push_back(make_report("sdpi_chain", lhs, rhs, tol, static_cast<long>(i)));
  }
  return out;
}

std::optional<RatioValue> alpha2_ratio(const Mat& L0, const Mat& X, double min_denominator) {
  const int d = static_cast<int>(X.rows());
  Eigen::SelfAdjointEigenSolver<Mat> es(hermitize(X), Eigen::EigenvaluesOnly);
  double t = 0.0, ent = 0.0;
  for (int k = 0; k < d; ++k) {
    const double l2 = es.eigenvalues()(k) * es.eigenvalues()(k);
    t += l2 / d;
    if (l2 > 0) ent += l2 / d * std::log(l2);
  }
  const double den = ent - t * std::log(t);
  if (!(den > min_denominator)) return std::nullopt;
  const double num = (vec(X).adjoint() * L0 * vec(X))(0, 0).real() / d;
  return RatioValue{num, den};
}

ConstantEstimate alpha2_unital(const Mat& L0, const SamplerConfig& cfg) {
  const int d = static_cast<int>(std::lround(std::sqrt(static_cast<double>(L0.rows()))));
  if (d * d != L0.rows() || L0.rows() != L0.cols()) throw ShapeError("alpha2_unital: not a superoperator");
  if (max_abs(unvec(L0 * vec(identity(d)), d)) > 1e-9) throw ModelError("alpha2_unital: generator is not unital");
  if (max_abs(L0 - L0.adjoint()) > 1e-9) throw ModelError("alpha2_unital: generator is not self-adjoint");
  Eigen::SelfAdjointEigenSolver<Mat> es(hermitize(L0), Eigen::EigenvaluesOnly);
  int kernel = 0;
  for (int k = 0; k < es.eigenvalues().size(); ++k)
    if (std::abs(es.eigenvalues()(k)) < 1e-9) ++kernel;
  if (kernel != 1) throw PrimitivityError("alpha2_unital: generator is not primitive");
  auto f = [&](const Mat& rho) { return alpha2_ratio(L0, sqrt_psd(rho), cfg.min_denominator); };
  return optimize_ratio(d, f, cfg, true, "alpha2");
}

Mat sdpi_semigroup_generator(const KrausChannel& phi0) {
  const Mat H = phi0.heisenberg_superop();
  return sup_identity(phi0.dim()) - H.adjoint() * H;
}

double sdpi_alpha2_bound(const FullRankState& sigma, double alpha2) {
  return std::min(1.0, sigma.max_eigenvalue() / sigma.min_eigenvalue() * (1 - alpha2));
}

namespace channels {

KrausChannel identity(int d) { return make_channel({qmslab::identity(d)}, Picture::schrodinger, maximally_mixed(d)); }

KrausChannel depolarizing(int d, double p) {
  if (p < 0 || p > 1) throw DomainViolation("depolarizing: p must lie in [0, 1]");
  std::vector<Mat> ops{std::sqrt(1 - p) * qmslab::identity(d)};
  for (int r = 0; r < d; ++r)
    for (int s = 0; s < d; ++s) ops.push_back(std::sqrt(p / d) * matrix_unit(d, r, s));
  return make_channel(ops, Picture::schrodinger, maximally_mixed(d));
}

KrausChannel unitary(const Mat& U, std::optional<FullRankState> sigma) {
  const int d = static_cast<int>(U.rows());
  if (max_abs(U.adjoint() * U - qmslab::identity(d)) > 1e-10) throw UnitarityError("unitary channel: U is not unitary");
  if (!sigma) sigma = maximally_mixed(d);
  return make_channel({U}, Picture::schrodinger, std::move(sigma));
}

KrausChannel random_gns(Rng& rng, const FullRankState& sigma) {
  const Mat& V = sigma.eigenvectors();
  const RVec& p = sigma.eigenvalues();
  const int d = static_cast<int>(p.size());
  Mat q = Mat::Zero(d, d);
  for (int r = 0; r < d; ++r)
    for (int s = r + 1; s < d; ++s) q(r, s) = q(s, r) = uniform(rng, 0.1, 1.0) * 0.9 / std::max(1, d - 1);
  std::vector<Mat> ops;
  RVec left = RVec::Ones(d);
  for (int r = 0; r < d; ++r)
    for (int s = 0; s < d; ++s) {
      if (r == s) continue;
      const double P = q(r, s).real() * std::min(1.0, p(r) / p(s));  // s -> r
      left(s) -= P;
      const double phase = uniform(rng, 0.0, 2 * M_PI);
      ops.push_back(std::sqrt(P) * std::polar(1.0, phase) * V * matrix_unit(d, r, s) * V.adjoint());
    }
  Mat D1 = Mat::Zero(d, d), D2 = Mat::Zero(d, d);
  for (int k = 0; k < d; ++k) {
    const double th = uniform(rng, 0.0, M_PI / 2);
    // real entries keep the dephasing part symmetric
    D1(k, k) = std::sqrt(left(k)) * std::cos(th) * (uniform(rng) < 0.5 ? -1.0 : 1.0);
    D2(k, k) = std::sqrt(left(k)) * std::sin(th) * (uniform(rng) < 0.5 ? -1.0 : 1.0);
  }
  ops.push_back(V * D1 * V.adjoint());
  ops.push_back(V * D2 * V.adjoint());
  return make_channel(ops, Picture::schrodinger, sigma);
}

KrausChannel random_gns(Rng& rng, int d) {
  const Mat U = random_unitary(rng, d);
  const auto w = random_probability(rng, d, 0.05);
  Mat s = Mat::Zero(d, d);
  for (int k = 0; k < d; ++k) s(k, k) = w[k];
  return random_gns(rng, FullRankState(hermitize(U * s * U.adjoint())));
}

}  // namespace channels

}  // namespace qmslab
