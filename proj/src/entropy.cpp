#include "qmslab/entropy.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>
#include <thread>

#include "qmslab/random.hpp"

namespace qmslab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// (ln x - ln y)/(x - y) for positive x, y.
double log_quotient(double x, double y, double dq_tol) {
  if (std::abs(x - y) < dq_tol) return 1.0 / x;
  // log1p keeps the quotient accurate when x and y are close but above dq_tol
  return std::log1p((x - y) / y) / (x - y);
}

double dq_threshold(const RVec& x, const RVec& y) {
  const double top = std::max(x.cwiseAbs().maxCoeff(), y.cwiseAbs().maxCoeff());
  return 1e-9 * top;
}

Eigen::SelfAdjointEigenSolver<Mat> positive_eig(const Mat& rho, const char* what) {
  require_hermitian(rho, what);
  Eigen::SelfAdjointEigenSolver<Mat> es(hermitize(rho));
  if (es.info() != Eigen::Success) throw DomainViolation(std::string(what) + ": eigensolver failed");
  if (es.eigenvalues().minCoeff() <= 0.0)
    throw DomainViolation(std::string(what) + ": operator is not positive definite");
  return es;
}

}  // namespace

DifferenceQuotientKernel log_difference_quotient(const RVec& x, const RVec& y) {
  if (x.size() == 0 || y.size() == 0) throw ShapeError("log_difference_quotient: empty spectrum");
  if (x.minCoeff() <= 0.0 || y.minCoeff() <= 0.0)
    throw DomainViolation("log_difference_quotient: spectra must be positive");
  DifferenceQuotientKernel k{x, y, Eigen::MatrixXd(x.size(), y.size())};
  const double tol = dq_threshold(x, y);
  for (Eigen::Index a = 0; a < x.size(); ++a)
    for (Eigen::Index b = 0; b < y.size(); ++b) k.values(a, b) = log_quotient(x(a), y(b), tol);
  return k;
}

DoiOperator::DoiOperator(const Mat& rho) {
  auto es = positive_eig(rho, "doi_apply");
  V_ = es.eigenvectors();
  p_ = es.eigenvalues();
}

Mat DoiOperator::apply(double omega, const Mat& Y) const {
  if (Y.rows() != V_.rows() || Y.cols() != V_.rows()) throw ShapeError("doi_apply: dimension mismatch");
  const auto k = log_difference_quotient(std::exp(omega / 2) * p_, std::exp(-omega / 2) * p_);
  Mat Z = V_.adjoint() * Y * V_;
  Z.array() *= k.values.cast<cplx>().array();
  return V_ * Z * V_.adjoint();
}

double DoiOperator::quadratic_form(double omega, const Mat& Y) const {
  const auto k = log_difference_quotient(std::exp(omega / 2) * p_, std::exp(-omega / 2) * p_);
  const Mat Z = V_.adjoint() * Y * V_;
  return (Z.cwiseAbs2().array() * k.values.array()).sum();
}

Mat doi_apply(const Mat& rho, double omega, const Mat& Y) { return DoiOperator(rho).apply(omega, Y); }

Regularized regularize(const Mat& rho, const FullRankState& sigma, double eps) {
  Eigen::SelfAdjointEigenSolver<Mat> es(hermitize(rho), Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() > tol::rank_floor) return {rho, false};
  return {(1.0 - eps) * rho + eps * rho.trace().real() * sigma.matrix(), true};
}

double entropy_production_direct(const LindbladModel& model, const Mat& rho) {
  positive_eig(rho, "entropy_production_direct");
  const Mat Lrho = apply_generator_dual(model, rho);
  return (Lrho * (log_pd(rho) - model.sigma.log())).trace().real();
}

std::vector<double> entropy_production_fisher_terms(const LindbladModel& model, const Mat& rho) {
  const DoiOperator T(rho);
  const Mat X = apply_gamma_inverse(model.sigma, rho);
  std::vector<double> terms;
  terms.reserve(model.jumps.size());
  for (std::size_t j = 0; j < model.jumps.size(); ++j) {
    const Mat Y = apply_gamma(model.sigma, delta(model.jumps.ops[j], X));
    terms.push_back(T.quadratic_form(model.omegas[j], Y));
  }
  return terms;
}

double entropy_production_fisher(const LindbladModel& model, const Mat& rho) {
  const auto t = entropy_production_fisher_terms(model, rho);
  return std::accumulate(t.begin(), t.end(), 0.0);
}

double relative_entropy_to_fixed_point(const FixedPointAlgebra& fpa, const Mat& rho) {
  return relative_entropy(rho, hermitize(fpa.apply_E_star(rho)));
}

std::vector<double> geometric_time_grid(double t_max, int n) {
  if (n < 2 || !(t_max > 0)) throw DomainViolation("geometric_time_grid: need n >= 2 and t_max > 0");
  std::vector<double> t{0.0};
  const double lo = std::log(t_max * 1e-4), hi = std::log(t_max);
  for (int k = 0; k < n - 1; ++k) t.push_back(n == 2 ? t_max : std::exp(lo + (hi - lo) * k / (n - 2)));
  t.back() = t_max;
  return t;
}

DecayTrace decay_trace(const LindbladModel& model, const FixedPointAlgebra& fpa, const Mat& rho0,
                       const std::vector<double>& times) {
  require_density(rho0, "decay_trace");
  if (times.empty() || times.front() != 0.0) throw DomainViolation("decay_trace: grid must start at 0");
  for (std::size_t k = 1; k < times.size(); ++k)
    if (!(times[k] > times[k - 1])) throw DomainViolation("decay_trace: grid must be increasing");

  const auto reg = regularize(rho0, model.sigma);
  const Mat target = hermitize(fpa.apply_E_star(reg.rho));
  const Mat Lstar = build_generator_schrodinger(model.jumps, model.omegas);

  DecayTrace out;
  out.regularized = reg.applied;
  out.times = times;
  for (double t : times) {
    const Mat rt = t == 0.0 ? reg.rho : evolve(Lstar, reg.rho, t);
    out.entropies.push_back(relative_entropy(rt, target));
    out.eps.push_back(entropy_production_direct(model, rt));
  }
  for (std::size_t k = 1; k < out.entropies.size(); ++k) {
    const double inc = out.entropies[k] - out.entropies[k - 1];
    out.max_increase = std::max(out.max_increase, inc);
  }
  out.monotone = out.max_increase <= 1e-9;
  return out;
}

StateSampler default_sampler(int dim, double boundary_fraction) {
  return [dim, boundary_fraction](Rng& rng, std::size_t) -> Mat {
    if (uniform(rng) < boundary_fraction) return random_boundary_state(rng, dim);
    return random_density(rng, dim);
  };
}

namespace {

// Orthonormal basis of traceless Hermitian matrices (generalized Gell-Mann).
std::vector<Mat> traceless_basis(int d) {
  std::vector<Mat> b;
  const double r = 1.0 / std::sqrt(2.0);
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      b.push_back(r * (matrix_unit(d, i, j) + matrix_unit(d, j, i)));
      b.push_back(r * cplx(0, 1) * (matrix_unit(d, i, j) - matrix_unit(d, j, i)));
    }
  for (int l = 1; l < d; ++l) {
    Mat D = Mat::Zero(d, d);
    for (int k = 0; k < l; ++k) D(k, k) = 1.0;
    D(l, l) = -static_cast<double>(l);
    b.push_back(D / std::sqrt(static_cast<double>(l) * (l + 1)));
  }
  return b;
}

Mat project_state(const Mat& M) {
  Eigen::SelfAdjointEigenSolver<Mat> es(hermitize(M));
  RVec p = es.eigenvalues().cwiseMax(1e-10);
  p /= p.sum();
  return hermitize(es.eigenvectors() * p.cast<cplx>().asDiagonal() * es.eigenvectors().adjoint());
}

struct Refined {
  Mat state;
  double value;  // signed objective, smaller is better
};

Refined refine(const Mat& start, double start_value, const std::function<std::optional<double>(const Mat&)>& g,
               const std::vector<Mat>& basis, const SamplerConfig& cfg) {
  Refined best{start, start_value};
  Mat x = start;
  double fx = start_value;
  double step = 0.0;
  const double h = cfg.fd_step;
  for (int it = 0; it < cfg.refine_steps; ++it) {
    RVec grad(basis.size());
    for (std::size_t a = 0; a < basis.size(); ++a) {
      const auto fp = g(project_state(x + h * basis[a]));
      const auto fm = g(project_state(x - h * basis[a]));
      if (!fp || !fm) return best;
      grad(a) = (*fp - *fm) / (2 * h);
    }
    const double gn = grad.norm();
    if (!(gn > 1e-12) || !std::isfinite(gn)) break;
    Mat dir = Mat::Zero(x.rows(), x.cols());
    for (std::size_t a = 0; a < basis.size(); ++a) dir += grad(a) * basis[a];

    if (step == 0.0) step = 0.1 / gn;
    step = std::min(2 * step, 1.0 / gn);
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls, step *= 0.5) {
      const Mat y = project_state(x - step * dir);
      const auto fy = g(y);
      if (fy && *fy <= fx - 1e-4 * step * gn * gn) {
        x = y;
        fx = *fy;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    if (fx < best.value) best = {x, fx};
  }
  return best;
}

template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
  const int w = std::max(1, std::min<int>(workers, static_cast<int>(std::max<std::size_t>(n, 1))));
  if (w == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::exception_ptr err;
  std::mutex mu;
  std::vector<std::thread> pool;
  for (int k = 0; k < w; ++k)
    pool.emplace_back([&, k] {
      try {
        for (std::size_t i = k; i < n; i += w) fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!err) err = std::current_exception();
      }
    });
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

}  // namespace

ConstantEstimate optimize_ratio(int dim, const RatioFunction& f, const SamplerConfig& cfg, bool minimize,
                                std::string method, StateSampler sampler) {
  if (!sampler) sampler = default_sampler(dim, cfg.boundary_fraction);
  const double sign = minimize ? 1.0 : -1.0;
  auto objective = [&](const Mat& rho) -> std::optional<double> {
    const auto v = f(rho);
    if (!v || !(v->denominator > cfg.min_denominator)) return std::nullopt;
    const double r = v->ratio();
    if (!std::isfinite(r)) return std::nullopt;
    return sign * r;
  };

  const std::size_t n = cfg.samples;
  std::vector<Mat> states(n);
  std::vector<double> vals(n, kNaN);
  parallel_for(n, cfg.workers, [&](std::size_t i) {
    Rng rng = make_rng(cfg.seed, i);
    states[i] = sampler(rng, i);
    if (auto v = objective(states[i])) vals[i] = *v;
  });

  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < n; ++i)
    if (!std::isnan(vals[i])) order.push_back(i);
  if (order.empty()) throw DegenerateSampling(method + ": every sampled denominator is below threshold");
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return vals[a] < vals[b]; });

  ConstantEstimate est;
  est.method = std::move(method);
  est.n_samples = n;
  est.n_valid = order.size();
  est.ratios.resize(n);
  for (std::size_t i = 0; i < n; ++i) est.ratios[i] = sign * vals[i];

  Refined best{states[order.front()], vals[order.front()]};
  const double sampled_best = best.value;
  const std::size_t k = std::min<std::size_t>(order.size(), std::max(0, cfg.refine_top));
  if (k > 0 && cfg.refine_steps > 0) {
    const auto basis = traceless_basis(dim);
    std::vector<Refined> refined(k);
    parallel_for(k, cfg.workers, [&](std::size_t r) {
      refined[r] = refine(states[order[r]], vals[order[r]], objective, basis, cfg);
    });
    for (const auto& r : refined)
      if (r.value < best.value) best = r;
  }
  est.value = sign * best.value;
  est.argmin = best.state;
  est.refined_gain = sampled_best - best.value;
  return est;
}

namespace {

std::optional<RatioValue> mlsi_ratio_with(const LindbladModel& model, const Mat& Estar, const Mat& rho,
                                          double min_denominator) {
  const Mat r = regularize(rho, model.sigma).rho;
  const double D = relative_entropy(r, hermitize(apply_super(Estar, r)));
  if (!(D > min_denominator)) return std::nullopt;
  return RatioValue{entropy_production_direct(model, r), D};
}

}  // namespace

std::optional<RatioValue> mlsi_ratio(const LindbladModel& model, const FixedPointAlgebra& fpa, const Mat& rho,
                                     double min_denominator) {
  return mlsi_ratio_with(model, fpa.E_star, rho, min_denominator);
}

ConstantEstimate estimate_mlsi(const LindbladModel& model, const FixedPointAlgebra& fpa,
                               const SamplerConfig& cfg) {
  if (fpa.algebra_dim == model.dim() * model.dim())
    throw DegenerateSampling("estimate_mlsi: every operator is fixed, no decay to measure");
  auto f = [&](const Mat& rho) { return mlsi_ratio_with(model, fpa.E_star, rho, cfg.min_denominator); };
  return optimize_ratio(model.dim(), f, cfg, true, "mlsi");
}

ConstantEstimate estimate_clsi_witness(const LindbladModel& model, const FixedPointAlgebra& fpa, int ancilla_dim,
                                       const SamplerConfig& cfg) {
  if (ancilla_dim < 2) throw ShapeError("estimate_clsi_witness: ancilla dimension must be at least 2");
  if (fpa.algebra_dim == model.dim() * model.dim())
    throw DegenerateSampling("estimate_clsi_witness: every operator is fixed, no decay to measure");
  const LindbladModel ext = tensor_identity(model, ancilla_dim);
  const Mat Estar = sup_tensor_identity(fpa.E_star, model.dim(), ancilla_dim);
  auto f = [&](const Mat& rho) { return mlsi_ratio_with(ext, Estar, rho, cfg.min_denominator); };
  auto est = optimize_ratio(model.dim() * ancilla_dim, f, cfg, true, "clsi");

  // product states are admissible, so the single-system certificate bounds the witness
  const auto single = estimate_mlsi(model, fpa, cfg);
  const Mat prod = tensor(single.argmin, identity(ancilla_dim) / static_cast<double>(ancilla_dim));
  if (const auto v = f(prod); v && v->ratio() < est.value) {
    est.value = v->ratio();
    est.argmin = prod;
  }
  return est;
}

}  // namespace qmslab
