#include "qmslab/lindblad.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "qmslab/random.hpp"

namespace qmslab {

namespace {

constexpr double kPairTol = 1e-10;

int find_adjoint(const std::vector<Mat>& ops, int j) {
  const Mat Ad = ops[j].adjoint();
  const double scale = std::max(1.0, max_abs(Ad));
  // Prefer an exact self-pairing, then the first free match.
  if (max_abs(ops[j] - Ad) <= kPairTol * scale) return j;
  for (int k = 0; k < static_cast<int>(ops.size()); ++k)
    if (k != j && max_abs(ops[k] - Ad) <= kPairTol * scale) return k;
  return -1;
}

void check_square_family(const std::vector<Mat>& ops) {
  if (ops.empty()) throw ModelError("jump set is empty");
  const auto d = ops.front().rows();
  for (const auto& A : ops)
    if (A.rows() != d || A.cols() != d) throw ShapeError("jump operators must share one square shape");
}

}  // namespace

JumpOperatorSet make_jump_set(std::vector<Mat> ops) {
  check_square_family(ops);
  JumpOperatorSet js;
  js.ops = std::move(ops);
  const int n = static_cast<int>(js.ops.size());
  js.adjoint_of.assign(n, -1);
  std::vector<bool> used(n, false);
  for (int j = 0; j < n; ++j) {
    if (js.adjoint_of[j] >= 0) continue;
    const Mat Ad = js.ops[j].adjoint();
    const double scale = std::max(1.0, max_abs(Ad));
    int match = -1;
    if (max_abs(js.ops[j] - Ad) <= kPairTol * scale) match = j;
    for (int k = 0; k < n && match < 0; ++k)
      if (k != j && !used[k] && js.adjoint_of[k] < 0 && max_abs(js.ops[k] - Ad) <= kPairTol * scale) match = k;
    if (match < 0) {
      std::ostringstream os;
      os << "jump set not closed under adjoints: operator " << j << " has no adjoint partner";
      throw ModelError(os.str());
    }
    js.adjoint_of[j] = match;
    js.adjoint_of[match] = j;
    used[j] = used[match] = true;
  }
  return js;
}

JumpOperatorSet adjoint_closure(std::vector<Mat> ops) {
  check_square_family(ops);
  const std::size_t n = ops.size();
  for (std::size_t j = 0; j < n; ++j) {
    if (find_adjoint(ops, static_cast<int>(j)) < 0) ops.push_back(ops[j].adjoint());
  }
  return make_jump_set(std::move(ops));
}

double extract_bohr_frequency(const Mat& A, const FullRankState& sigma) {
  const auto& sd = sigma.spectrum();
  const double scale = max_abs(A);
  if (scale == 0.0) return 0.0;
  double ratio = -1.0;
  for (size_t k = 0; k < sd.eigenvalues.size(); ++k)
    for (size_t l = 0; l < sd.eigenvalues.size(); ++l) {
      const Mat block = sd.projections[k] * A * sd.projections[l];
      if (max_abs(block) <= 1e-10 * scale) continue;
      const double r = sd.eigenvalues[k] / sd.eigenvalues[l];
      if (ratio < 0) {
        ratio = r;
      } else if (std::abs(r - ratio) > 1e-6 * std::max(r, ratio)) {
        std::ostringstream os;
        os << "operator is not a modular eigenvector: block ratios " << ratio << " and " << r;
        throw NotModularEigenvector(os.str());
      }
    }
  return ratio < 0 ? 0.0 : -std::log(ratio);
}

std::vector<double> extract_bohr_frequencies(const JumpOperatorSet& jumps, const FullRankState& sigma) {
  std::vector<double> out;
  out.reserve(jumps.size());
  for (const auto& A : jumps.ops) out.push_back(extract_bohr_frequency(A, sigma));
  // Exact antisymmetry across pairs keeps L_*(sigma) = 0 to rounding.
  for (std::size_t j = 0; j < out.size(); ++j) {
    const int k = jumps.adjoint_of[j];
    if (k > static_cast<int>(j)) out[k] = -out[j];
    if (k == static_cast<int>(j)) out[j] = 0.0;
  }
  return out;
}

void validate_model(const LindbladModel& model) {
  const auto& js = model.jumps;
  if (js.dim() != model.dim()) throw ModelError("jump dimension does not match sigma");
  if (model.omegas.size() != js.size()) throw ModelError("need one Bohr frequency per jump operator");
  if (js.adjoint_of.size() != js.size()) throw ModelError("jump set lacks an adjoint pairing");
  const Mat s_half = model.sigma.sqrt(), s_mhalf = model.sigma.inv_sqrt();
  const Mat& s1 = model.sigma.matrix();
  const Mat& sm1 = model.sigma.inverse();
  for (std::size_t j = 0; j < js.size(); ++j) {
    const Mat& A = js.ops[j];
    const double w = model.omegas[j];
    const double scale = std::max(1.0, max_abs(A));
    const double r_half = max_abs(s_half * A * s_mhalf - std::exp(-w / 2) * A);
    const double r_one = max_abs(s1 * A * sm1 - std::exp(-w) * A);
    if (r_half > 1e-8 * scale || r_one > 1e-8 * scale) {
      std::ostringstream os;
      os << "modular relation fails for jump " << j << " (omega " << w << ", residual "
         << std::max(r_half, r_one) << ")";
      throw ModelError(os.str());
    }
    const int k = js.adjoint_of[j];
    if (k < 0 || std::abs(model.omegas[k] + w) > 1e-10) {
      std::ostringstream os;
      os << "adjoint pairing violated for jump " << j;
      throw ModelError(os.str());
    }
  }
}

LindbladModel make_model(JumpOperatorSet jumps, FullRankState sigma) {
  auto omegas = extract_bohr_frequencies(jumps, sigma);
  return make_model(std::move(jumps), std::move(sigma), std::move(omegas));
}

LindbladModel make_model(JumpOperatorSet jumps, FullRankState sigma, std::vector<double> omegas) {
  LindbladModel m{std::move(jumps), std::move(omegas), std::move(sigma)};
  validate_model(m);
  return m;
}

LindbladModel tensor_identity(const LindbladModel& model, int dK) {
  if (dK < 1) throw ShapeError("ancilla dimension must be positive");
  LindbladModel out;
  const Mat I = identity(dK);
  out.jumps.adjoint_of = model.jumps.adjoint_of;
  for (const auto& A : model.jumps.ops) out.jumps.ops.push_back(tensor(A, I));
  out.omegas = model.omegas;
  out.sigma = FullRankState(tensor(model.sigma.matrix(), I / static_cast<double>(dK)));
  return out;
}

Mat delta(const Mat& A, const Mat& X) { return A * X - X * A; }

Mat apply_generator(const LindbladModel& model, const Mat& X) {
  Mat out = Mat::Zero(X.rows(), X.cols());
  for (std::size_t j = 0; j < model.jumps.size(); ++j) {
    const Mat& A = model.jumps.ops[j];
    const Mat Ad = A.adjoint();
    const double em = std::exp(-model.omegas[j] / 2), ep = std::exp(model.omegas[j] / 2);
    out += em * (Ad * (A * X) - Ad * X * A) + ep * ((X * A) * Ad - A * X * Ad);
  }
  return out;
}

Mat apply_generator_dual(const LindbladModel& model, const Mat& rho) {
  Mat out = Mat::Zero(rho.rows(), rho.cols());
  for (std::size_t j = 0; j < model.jumps.size(); ++j) {
    const Mat& A = model.jumps.ops[j];
    const Mat Ad = A.adjoint();
    const double em = std::exp(-model.omegas[j] / 2), ep = std::exp(model.omegas[j] / 2);
    out += em * (Ad * (A * rho) - A * rho * Ad) + ep * ((rho * A) * Ad - Ad * rho * A);
  }
  return out;
}

Mat apply_heat_generator(const JumpOperatorSet& jumps, const Mat& X) {
  Mat out = Mat::Zero(X.rows(), X.cols());
  for (const auto& A : jumps.ops) {
    const Mat Ad = A.adjoint();
    out += Ad * (A * X) + (X * A) * Ad - A * X * Ad - Ad * X * A;
  }
  return out;
}

Mat build_generator_heisenberg(const JumpOperatorSet& jumps, const std::vector<double>& omegas) {
  const int d = jumps.dim();
  Mat L = Mat::Zero(d * d, d * d);
  for (std::size_t j = 0; j < jumps.size(); ++j) {
    const Mat& A = jumps.ops[j];
    const Mat Ad = A.adjoint();
    const double em = std::exp(-omegas[j] / 2), ep = std::exp(omegas[j] / 2);
    L += em * (sup_left(Ad * A) - sup_sandwich(Ad, A)) + ep * (sup_right(A * Ad) - sup_sandwich(A, Ad));
  }
  return L;
}

Mat build_generator_schrodinger(const JumpOperatorSet& jumps, const std::vector<double>& omegas) {
  const int d = jumps.dim();
  Mat L = Mat::Zero(d * d, d * d);
  for (std::size_t j = 0; j < jumps.size(); ++j) {
    const Mat& A = jumps.ops[j];
    const Mat Ad = A.adjoint();
    const double em = std::exp(-omegas[j] / 2), ep = std::exp(omegas[j] / 2);
    L += em * (sup_left(Ad * A) - sup_sandwich(A, Ad)) + ep * (sup_right(A * Ad) - sup_sandwich(Ad, A));
  }
  return L;
}

Generator build_generator(const LindbladModel& model) {
  validate_model(model);
  Generator g{build_generator_heisenberg(model.jumps, model.omegas),
              build_generator_schrodinger(model.jumps, model.omegas)};
  const double scale = std::max(1.0, max_abs(g.heisenberg));
  const double adj = max_abs(trace_dual(g.heisenberg) - g.schrodinger);
  if (adj > 1e-9 * scale) {
    std::ostringstream os;
    os << "L_* is not the trace dual of L (deviation " << adj << ")";
    throw ModelError(os.str());
  }
  const double stat = max_abs(apply_super(g.schrodinger, model.sigma.matrix()));
  if (stat > 1e-9 * scale) {
    std::ostringstream os;
    os << "sigma is not invariant: |L_*(sigma)| = " << stat;
    throw ModelError(os.str());
  }
  return g;
}

Mat build_heat_generator(const JumpOperatorSet& jumps) {
  return build_generator_heisenberg(jumps, std::vector<double>(jumps.size(), 0.0));
}

DetailedBalanceReport check_detailed_balance(const Mat& L, const FullRankState& sigma) {
  DetailedBalanceReport r;
  const Mat G = kms_gram(sigma);
  r.kms_deviation = max_abs(L.adjoint() * G - G * L);
  const Mat D = modular_operator(sigma);
  r.modular_deviation = max_abs(D * L - L * D);
  r.threshold = 1e-8 * std::max(1.0, max_abs(L));
  r.pass = r.kms_deviation < r.threshold && r.modular_deviation < r.threshold;
  return r;
}

std::vector<Mat> commutant_basis(const std::vector<Mat>& ops, double rel_threshold) {
  if (ops.empty()) throw ShapeError("commutant of an empty family");
  const int d = static_cast<int>(ops.front().rows());
  const int n = d * d;
  Mat M(static_cast<Eigen::Index>(ops.size()) * n, n);
  for (std::size_t j = 0; j < ops.size(); ++j) M.middleRows(j * n, n) = sup_left(ops[j]) - sup_right(ops[j]);

  // QR first so the SVD is only n x n.
  Mat R;
  if (M.rows() > n) {
    Eigen::HouseholderQR<Mat> qr(M);
    R = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>();
  } else {
    R = M;
  }
  Eigen::JacobiSVD<Mat> svd(R, Eigen::ComputeFullV);
  const RVec& s = svd.singularValues();
  const double smax = s.size() ? s(0) : 0.0;
  std::vector<Mat> basis;
  for (int k = 0; k < n; ++k) {
    const double sk = k < s.size() ? s(k) : 0.0;
    if (smax == 0.0 || sk < rel_threshold * smax) basis.push_back(unvec(svd.matrixV().col(k), d));
  }
  return basis;
}

int commutant_dimension(const std::vector<Mat>& ops) { return static_cast<int>(commutant_basis(ops).size()); }

bool check_primitivity(const std::vector<Mat>& ops) { return commutant_dimension(ops) == 1; }

bool check_primitivity(const JumpOperatorSet& jumps) { return check_primitivity(jumps.ops); }

Mat FixedPointAlgebra::apply_E(const Mat& X) const { return apply_super(E, X); }

Mat FixedPointAlgebra::apply_E_star(const Mat& rho) const { return apply_super(E_star, rho); }

namespace {

// Orthonormal basis (as vec columns) of span{mats}.
Mat orthonormal_span(const std::vector<Mat>& mats, double rel = 1e-9) {
  if (mats.empty()) return Mat();
  const auto n = mats.front().size();
  Mat S(n, static_cast<Eigen::Index>(mats.size()));
  for (std::size_t k = 0; k < mats.size(); ++k) S.col(k) = vec(mats[k]);
  Eigen::JacobiSVD<Mat> svd(S, Eigen::ComputeThinU);
  const RVec& s = svd.singularValues();
  int rank = 0;
  while (rank < s.size() && s(rank) > rel * std::max(s(0), 1e-300)) ++rank;
  return svd.matrixU().leftCols(rank);
}

Vec random_coeffs(Rng& rng, Eigen::Index n) {
  Vec c(n);
  for (Eigen::Index k = 0; k < n; ++k) c(k) = cplx(uniform(rng, -1, 1), uniform(rng, -1, 1));
  return c;
}

Mat random_element(Rng& rng, const Mat& basis, int d) {
  return hermitize(unvec(basis * random_coeffs(rng, basis.cols()), d));
}

struct Groups {
  std::vector<Mat> vectors;  // columns spanning each eigenspace
};

// Groups eigenvectors of a Hermitian matrix restricted to an isometry range.
Groups eigen_groups(const Mat& H, double rel_gap) {
  Eigen::SelfAdjointEigenSolver<Mat> es(hermitize(H));
  const RVec& w = es.eigenvalues();
  const double scale = std::max(1e-300, w.cwiseAbs().maxCoeff());
  Groups g;
  int start = 0;
  const int n = static_cast<int>(w.size());
  while (start < n) {
    int end = start + 1;
    while (end < n && w(end) - w(end - 1) <= rel_gap * scale) ++end;
    g.vectors.push_back(es.eigenvectors().middleCols(start, end - start));
    start = end;
  }
  return g;
}

void build_expectations(FixedPointAlgebra& fpa, const FullRankState& sigma) {
  const int d = sigma.dim();
  for (auto& b : fpa.blocks) {
    Mat local = b.W.adjoint() * sigma.matrix() * b.W;
    Mat tau = partial_trace(local, b.dH, b.dK, Keep::second);
    b.tau = hermitize(tau / tau.trace().real());
  }
  fpa.E_star = Mat::Zero(d * d, d * d);
  fpa.E = Mat::Zero(d * d, d * d);
  for (int col = 0; col < d * d; ++col) {
    const Mat X = matrix_unit(d, col % d, col / d);
    Mat es = Mat::Zero(d, d), eh = Mat::Zero(d, d);
    for (const auto& b : fpa.blocks) {
      const Mat local = b.W.adjoint() * X * b.W;
      es += b.W * tensor(partial_trace(local, b.dH, b.dK, Keep::first), b.tau) * b.W.adjoint();
      const Mat weighted = tensor(identity(b.dH), b.tau) * local;
      eh += b.W * tensor(partial_trace(weighted, b.dH, b.dK, Keep::first), identity(b.dK)) * b.W.adjoint();
    }
    fpa.E_star.col(col) = vec(es);
    fpa.E.col(col) = vec(eh);
  }
}

}  // namespace

FixedPointAlgebra fixed_point_algebra(const JumpOperatorSet& jumps, const FullRankState& sigma,
                                      std::uint64_t seed) {
  const int d = sigma.dim();
  if (jumps.dim() != d) throw ShapeError("fixed_point_algebra: dimension mismatch");
  FixedPointAlgebra fpa;
  fpa.seed = seed;
  const std::vector<Mat> F = commutant_basis(jumps.ops);
  fpa.algebra_dim = static_cast<int>(F.size());
  const Mat Fbasis = orthonormal_span(F);

  std::vector<Mat> gens = jumps.ops;
  gens.insert(gens.end(), F.begin(), F.end());
  const Mat Zbasis = orthonormal_span(commutant_basis(gens));

  Rng rng = make_rng(seed, 0);
  for (int attempt = 0; attempt < 20; ++attempt) {
    fpa.blocks.clear();
    bool ok = true;
    const Groups central = eigen_groups(random_element(rng, Zbasis, d), 1e-7);
    for (const Mat& Rq : central.vectors) {
      const Mat Q = Rq * Rq.adjoint();
      const int rank = static_cast<int>(Rq.cols());
      std::vector<Mat> local;
      for (int k = 0; k < Fbasis.cols(); ++k) local.push_back(Q * unvec(Fbasis.col(k), d) * Q);
      const Mat Fi = orthonormal_span(local);
      const int ni = static_cast<int>(Fi.cols());
      const int dH = static_cast<int>(std::lround(std::sqrt(static_cast<double>(ni))));
      if (dH * dH != ni || dH == 0 || rank % dH != 0) {
        ok = false;
        break;
      }
      const int dK = rank / dH;
      // Minimal projections from a random element of Q F Q, compressed to range(Q).
      const Mat h = Rq.adjoint() * random_element(rng, Fi, d) * Rq;
      const Groups minimal = eigen_groups(h, 1e-7);
      if (static_cast<int>(minimal.vectors.size()) != dH) {
        ok = false;
        break;
      }
      for (const auto& g : minimal.vectors)
        if (g.cols() != dK) ok = false;
      if (!ok) break;

      std::vector<Mat> e;
      for (const auto& g : minimal.vectors) e.push_back(Rq * g * g.adjoint() * Rq.adjoint());
      const Mat v1 = Rq * minimal.vectors.front();  // d x dK basis of range(e_1)
      Mat W(d, dH * dK);
      W.leftCols(dK) = v1;
      for (int a = 1; a < dH; ++a) {
        Mat M = e[a] * unvec(Fi * random_coeffs(rng, Fi.cols()), d) * e[0];
        const double c2 = (M.adjoint() * M).trace().real() / dK;
        if (c2 <= 1e-20) {
          ok = false;
          break;
        }
        W.middleCols(a * dK, dK) = (M / std::sqrt(c2)) * v1;
      }
      if (!ok) break;
      if (max_abs(W.adjoint() * W - identity(dH * dK)) > 1e-8) {
        ok = false;
        break;
      }
      fpa.blocks.push_back(FixedPointBlock{dH, dK, W, Mat()});
    }
    if (ok) {
      build_expectations(fpa, sigma);
      return fpa;
    }
  }
  throw ModelError("fixed_point_algebra: block extraction failed after retries");
}

FixedPointAlgebra with_state(const FixedPointAlgebra& fpa, const FullRankState& sigma) {
  FixedPointAlgebra out = fpa;
  build_expectations(out, sigma);
  return out;
}

FullRankState canonical_state(const FixedPointAlgebra& fpa) {
  const int d = static_cast<int>(fpa.blocks.front().W.rows());
  Mat s = Mat::Zero(d, d);
  for (const auto& b : fpa.blocks)
    s += (static_cast<double>(b.dK) / d) * b.W * tensor(identity(b.dH), b.tau) * b.W.adjoint();
  return FullRankState(hermitize(s));
}

Mat propagator(const Mat& L, double t) {
  if (t < 0) throw DomainViolation("propagator: negative time");
  return expm(-t * L);
}

Mat evolve(const Mat& Lstar, const Mat& rho, double t) {
  Mat out = hermitize(apply_super(propagator(Lstar, t), rho));
  const double t0 = rho.trace().real();
  const double t1 = out.trace().real();
  if (std::abs(t1 - t0) > 1e-9) {
    std::ostringstream os;
    os << "evolve: trace drift " << std::abs(t1 - t0);
    throw EvolutionError(os.str());
  }
  if (t1 != 0.0) out *= t0 / t1;
  return out;
}

double spectral_gap(const Mat& L) {
  Eigen::ComplexEigenSolver<Mat> es(L, false);
  const double floor = 1e-9 * std::max(1.0, max_abs(L));
  double gap = std::numeric_limits<double>::infinity();
  for (int k = 0; k < es.eigenvalues().size(); ++k) {
    const cplx z = es.eigenvalues()(k);
    if (std::abs(z) > floor) gap = std::min(gap, z.real());
  }
  return gap;
}

namespace presets {

LindbladModel amplitude_damping(double p0) {
  std::vector<Mat> ops{matrix_unit(2, 0, 1), matrix_unit(2, 1, 0)};
  return make_model(make_jump_set(ops), diagonal_state({p0, 1.0 - p0}));
}

LindbladModel stabilizing(const FullRankState& sigma) {
  const int d = sigma.dim();
  const Mat& V = sigma.eigenvectors();
  const RVec& p = sigma.eigenvalues();
  std::vector<Mat> ops;
  for (int r = 0; r < d; ++r)
    for (int s = 0; s < d; ++s) {
      const double c = std::sqrt(std::sqrt(p(r) * p(s)) / 2.0);
      ops.push_back(c * V * matrix_unit(d, r, s) * V.adjoint());
    }
  return make_model(make_jump_set(ops), sigma);
}

LindbladModel depolarizing(int d) { return stabilizing(maximally_mixed(d)); }

std::vector<Mat> paulis() {
  Mat X(2, 2), Y(2, 2), Z(2, 2);
  X << 0, 1, 1, 0;
  Y << 0, cplx(0, -1), cplx(0, 1), 0;
  Z << 1, 0, 0, -1;
  return {X, Y, Z};
}

LindbladModel random_model(Rng& rng, int d, const RandomModelOptions& opt) {
  if (d < 2) throw ShapeError("random_model: dimension must be at least 2");
  auto p = random_probability(rng, d, opt.eigen_floor);
  if (d >= 3 && uniform(rng) < opt.degenerate_probability) {
    const double m = (p[0] + p[1]) / 2;
    p[0] = p[1] = m;
  }
  std::vector<int> group(d);
  for (int k = 0; k < d; ++k) {
    group[k] = k;
    for (int l = 0; l < k; ++l)
      if (p[l] == p[k]) group[k] = group[l];
  }
  const Mat U = random_unitary(rng, d);
  RVec pv = Eigen::Map<const RVec>(p.data(), d);
  const Mat sigma = hermitize(U * pv.cast<cplx>().asDiagonal() * U.adjoint());

  std::vector<Mat> ops;
  auto add_pair = [&](const Mat& A) {
    ops.push_back(U * A * U.adjoint());
    ops.push_back(U * A.adjoint() * U.adjoint());
  };
  for (int v = 1; v < d; ++v) {
    const int u = uniform_int(rng, 0, v - 1);
    const Mat w = ginibre(rng, 1, 1);
    add_pair(w(0, 0) * matrix_unit(d, u, v));
  }
  for (int e = 0; e < opt.extra_jumps; ++e) {
    const int a = uniform_int(rng, 0, d - 1), b = uniform_int(rng, 0, d - 1);
    const Mat G = ginibre(rng, d, d);
    Mat A = Mat::Zero(d, d);
    for (int k = 0; k < d; ++k)
      for (int l = 0; l < d; ++l)
        if (group[k] == group[a] && group[l] == group[b]) A(k, l) = G(k, l);
    if (max_abs(A - A.adjoint()) < 1e-12) A(a, b) += cplx(0, 0.5);
    add_pair(A);
  }
  RVec h(d);
  for (int k = 0; k < d; ++k) h(k) = uniform(rng, -1.0, 1.0);
  Mat H = Mat::Zero(d, d);
  for (int k = 0; k < d; ++k)
    for (int l = 0; l < d; ++l)
      if (group[k] == group[l]) H(k, l) = k == l ? cplx(h(k)) : cplx(0.0);
  ops.push_back(U * H * U.adjoint());
  return make_model(make_jump_set(ops), FullRankState(sigma));
}

}  // namespace presets

}  // namespace qmslab
