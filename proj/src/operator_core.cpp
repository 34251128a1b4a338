#include "qmslab/operator_core.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <sstream>
#include <unsupported/Eigen/KroneckerProduct>
#include <unsupported/Eigen/MatrixFunctions>

namespace qmslab {

double max_abs(const Mat& A) { return A.size() == 0 ? 0.0 : A.cwiseAbs().maxCoeff(); }

Mat dagger(const Mat& A) { return A.adjoint(); }

Mat hermitize(const Mat& A) { return 0.5 * (A + A.adjoint()); }

Mat identity(int d) { return Mat::Identity(d, d); }

Mat matrix_unit(int d, int r, int s) {
  Mat E = Mat::Zero(d, d);
  E(r, s) = 1.0;
  return E;
}

bool is_hermitian(const Mat& A, double tolerance) {
  if (A.rows() != A.cols()) return false;
  return max_abs(A - A.adjoint()) <= tolerance * std::max(1.0, max_abs(A));
}

void require_square(const Mat& A, const char* what) {
  if (A.rows() != A.cols() || A.rows() == 0) {
    std::ostringstream os;
    os << what << ": expected a non-empty square matrix, got " << A.rows() << "x" << A.cols();
    throw ShapeError(os.str());
  }
}

void require_hermitian(const Mat& A, const char* what) {
  require_square(A, what);
  if (!A.allFinite()) throw HermitianViolation(std::string(what) + ": non-finite entries");
  if (!is_hermitian(A)) {
    std::ostringstream os;
    os << what << ": not Hermitian (deviation " << max_abs(A - A.adjoint()) << ")";
    throw HermitianViolation(os.str());
  }
}

Mat SpectralDecomposition::reconstruct() const {
  Mat out = Mat::Zero(dim(), dim());
  for (size_t k = 0; k < eigenvalues.size(); ++k) out += eigenvalues[k] * projections[k];
  return out;
}

double default_group_tol(const RVec& values) {
  double radius = values.size() ? values.cwiseAbs().maxCoeff() : 0.0;
  return 1e-8 * std::max(radius, 1e-300);
}

SpectralDecomposition spectral_decompose(const Mat& A, double group_tol) {
  require_hermitian(A, "spectral_decompose");
  Eigen::SelfAdjointEigenSolver<Mat> es(hermitize(A));
  SpectralDecomposition sd;
  sd.raw_values = es.eigenvalues();
  sd.eigenvectors = es.eigenvectors();
  sd.group_tol = group_tol > 0 ? group_tol : default_group_tol(sd.raw_values);

  const int n = static_cast<int>(sd.raw_values.size());
  int start = 0;
  while (start < n) {
    int end = start + 1;
    while (end < n && sd.raw_values(end) - sd.raw_values(end - 1) <= sd.group_tol) ++end;
    const int m = end - start;
    Mat V = sd.eigenvectors.middleCols(start, m);
    sd.eigenvalues.push_back(sd.raw_values.segment(start, m).mean());
    sd.projections.push_back(V * V.adjoint());
    sd.multiplicities.push_back(m);
    start = end;
  }
  return sd;
}

Mat matrix_function(const SpectralDecomposition& sd, const std::function<double(double)>& f) {
  Mat out = Mat::Zero(sd.dim(), sd.dim());
  for (size_t k = 0; k < sd.eigenvalues.size(); ++k) {
    const double v = f(sd.eigenvalues[k]);
    if (!std::isfinite(v)) {
      std::ostringstream os;
      os << "matrix_function: f undefined at eigenvalue " << sd.eigenvalues[k];
      throw DomainViolation(os.str());
    }
    out += v * sd.projections[k];
  }
  return out;
}

Mat matrix_function(const Mat& A, const std::function<double(double)>& f) {
  return matrix_function(spectral_decompose(A), f);
}

namespace {

// Eigenvector form avoids building projections on hot paths.
Mat apply_diag(const Mat& V, const RVec& w) { return V * w.asDiagonal() * V.adjoint(); }

Eigen::SelfAdjointEigenSolver<Mat> eig(const Mat& A, const char* what) {
  require_hermitian(A, what);
  return Eigen::SelfAdjointEigenSolver<Mat>(hermitize(A));
}

}  // namespace

Mat log_pd(const Mat& A) {
  auto es = eig(A, "log_pd");
  RVec w = es.eigenvalues();
  if (w.minCoeff() <= 0.0) throw DomainViolation("log_pd: non-positive eigenvalue");
  return apply_diag(es.eigenvectors(), w.array().log().matrix());
}

Mat sqrt_psd(const Mat& A) {
  auto es = eig(A, "sqrt_psd");
  RVec w = es.eigenvalues();
  if (w.minCoeff() < -tol::density_psd * std::max(1.0, w.cwiseAbs().maxCoeff()))
    throw DomainViolation("sqrt_psd: negative eigenvalue");
  return apply_diag(es.eigenvectors(), w.cwiseMax(0.0).cwiseSqrt());
}

Mat pow_pd(const Mat& A, double p) {
  auto es = eig(A, "pow_pd");
  RVec w = es.eigenvalues();
  if (w.minCoeff() <= 0.0) throw DomainViolation("pow_pd: non-positive eigenvalue");
  return apply_diag(es.eigenvectors(), w.array().pow(p).matrix());
}

Mat tensor(const Mat& A, const Mat& B) { return Eigen::kroneckerProduct(A, B).eval(); }

Mat partial_trace(const Mat& X, int dA, int dB, Keep keep) {
  if (dA <= 0 || dB <= 0 || X.rows() != dA * dB || X.cols() != dA * dB) {
    std::ostringstream os;
    os << "partial_trace: matrix " << X.rows() << "x" << X.cols() << " does not match dims (" << dA
       << "," << dB << ")";
    throw ShapeError(os.str());
  }
  if (keep == Keep::first) {
    Mat out = Mat::Zero(dA, dA);
    for (int i = 0; i < dA; ++i)
      for (int j = 0; j < dA; ++j) out(i, j) = X.block(i * dB, j * dB, dB, dB).trace();
    return out;
  }
  Mat out = Mat::Zero(dB, dB);
  for (int i = 0; i < dA; ++i) out += X.block(i * dB, i * dB, dB, dB);
  return out;
}

void require_density(const Mat& rho, const char* what) {
  require_hermitian(rho, what);
  Eigen::SelfAdjointEigenSolver<Mat> es(hermitize(rho), Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -tol::density_psd) {
    std::ostringstream os;
    os << what << ": not positive semidefinite (min eigenvalue " << es.eigenvalues().minCoeff() << ")";
    throw DomainViolation(os.str());
  }
  if (std::abs(rho.trace() - 1.0) > tol::density_trace) {
    std::ostringstream os;
    os << what << ": trace " << rho.trace().real() << " != 1";
    throw DomainViolation(os.str());
  }
}

namespace {

// tr(X ln X) - tr(X ln Y) restricted to supp(Y); shared by D and D_Lin.
double entropy_cross_term(const Mat& X, const Mat& Y, const char* what) {
  require_hermitian(X, what);
  require_hermitian(Y, what);
  if (X.rows() != Y.rows()) throw ShapeError(std::string(what) + ": dimension mismatch");
  Eigen::SelfAdjointEigenSolver<Mat> ex(hermitize(X));
  Eigen::SelfAdjointEigenSolver<Mat> ey(hermitize(Y));
  const RVec& px = ex.eigenvalues();
  const RVec& py = ey.eigenvalues();
  if (px.minCoeff() < -tol::support || py.minCoeff() < -tol::support)
    throw DomainViolation(std::string(what) + ": argument not positive semidefinite");

  // Mass of X outside supp(Y).
  const Mat& V = ey.eigenvectors();
  Mat Xy = V.adjoint() * X * V;
  double outside = 0.0;
  RVec logy = RVec::Zero(py.size());
  for (int k = 0; k < py.size(); ++k) {
    if (py(k) <= tol::rank_floor)
      outside += Xy(k, k).real();
    else
      logy(k) = std::log(py(k));
  }
  if (outside > tol::support) {
    std::ostringstream os;
    os << what << ": supp(X) not contained in supp(Y) (outside mass " << outside << ")";
    throw SupportError(os.str());
  }

  double xlogx = 0.0;
  for (int k = 0; k < px.size(); ++k)
    if (px(k) > tol::rank_floor) xlogx += px(k) * std::log(px(k));
  double xlogy = 0.0;
  for (int k = 0; k < py.size(); ++k)
    if (py(k) > tol::rank_floor) xlogy += Xy(k, k).real() * logy(k);
  return xlogx - xlogy;
}

}  // namespace

double relative_entropy(const Mat& rho, const Mat& sigma) {
  return entropy_cross_term(rho, sigma, "relative_entropy");
}

double lindblad_relative_entropy(const Mat& X, const Mat& Y) {
  return entropy_cross_term(X, Y, "lindblad_relative_entropy") + Y.trace().real() - X.trace().real();
}

FullRankState::FullRankState(const Mat& rho, double group_tol) {
  require_density(rho, "FullRankState");
  rho_ = hermitize(rho);
  sd_ = spectral_decompose(rho_, group_tol);
  if (sd_.raw_values.minCoeff() <= tol::rank_floor) {
    std::ostringstream os;
    os << "FullRankState: min eigenvalue " << sd_.raw_values.minCoeff() << " below rank floor";
    throw RankError(os.str());
  }
  const Mat& V = sd_.eigenvectors;
  const RVec& w = sd_.raw_values;
  sqrt_ = apply_diag(V, w.cwiseSqrt());
  inv_sqrt_ = apply_diag(V, w.cwiseSqrt().cwiseInverse());
  inv_ = apply_diag(V, w.cwiseInverse());
  log_ = apply_diag(V, w.array().log().matrix());
}

Mat FullRankState::power(double p) const {
  return apply_diag(sd_.eigenvectors, sd_.raw_values.array().pow(p).matrix());
}

FullRankState maximally_mixed(int d) { return FullRankState(identity(d) / static_cast<double>(d)); }

FullRankState diagonal_state(const std::vector<double>& p) {
  Mat D = Mat::Zero(static_cast<int>(p.size()), static_cast<int>(p.size()));
  for (size_t k = 0; k < p.size(); ++k) D(k, k) = p[k];
  return FullRankState(D);
}

Vec vec(const Mat& X) { return Eigen::Map<const Vec>(X.data(), X.size()); }

Mat unvec(const Vec& v, int d) { return Eigen::Map<const Mat>(v.data(), d, d); }

int super_dim(const Mat& S) {
  const int d = static_cast<int>(std::lround(std::sqrt(static_cast<double>(S.rows()))));
  if (d * d != S.rows() || S.rows() != S.cols()) throw ShapeError("superoperator must be d^2 x d^2");
  return d;
}

Mat apply_super(const Mat& S, const Mat& X) {
  const int d = static_cast<int>(X.rows());
  if (S.cols() != X.size()) throw ShapeError("apply: superoperator/operator dimension mismatch");
  return unvec(S * vec(X), d);
}

Mat sup_left(const Mat& A) { return tensor(identity(static_cast<int>(A.rows())), A); }

Mat sup_right(const Mat& B) { return tensor(B.transpose(), identity(static_cast<int>(B.rows()))); }

Mat sup_sandwich(const Mat& A, const Mat& B) { return tensor(B.transpose(), A); }

Mat sup_identity(int d) { return identity(d * d); }

Mat vec_transpose_permutation(int d) {
  Mat T = Mat::Zero(d * d, d * d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) T(j + i * d, i + j * d) = 1.0;
  return T;
}

Mat trace_dual(const Mat& S) {
  const Mat T = vec_transpose_permutation(super_dim(S));
  return T * S.transpose() * T;
}

Mat sup_tensor_identity(const Mat& S, int d, int dK) {
  // Builds (S kron id_K) by its action on matrix units of the composite system.
  const int D = d * dK;
  Mat out = Mat::Zero(D * D, D * D);
  for (int col = 0; col < D; ++col)
    for (int row = 0; row < D; ++row) {
      const int i = row / dK, a = row % dK, j = col / dK, b = col % dK;
      Mat img = apply_super(S, matrix_unit(d, i, j));
      for (int p = 0; p < d; ++p)
        for (int q = 0; q < d; ++q) {
          if (img(p, q) == cplx(0.0)) continue;
          out((p * dK + a) + (q * dK + b) * D, row + col * D) = img(p, q);
        }
    }
  return out;
}

Mat gamma_map(const FullRankState& sigma) { return sup_sandwich(sigma.sqrt(), sigma.sqrt()); }

Mat gamma_inverse(const FullRankState& sigma) { return sup_sandwich(sigma.inv_sqrt(), sigma.inv_sqrt()); }

Mat gamma_power(const FullRankState& sigma, double p) {
  const Mat s = sigma.power(p / 2.0);
  return sup_sandwich(s, s);
}

Mat apply_gamma(const FullRankState& sigma, const Mat& X) { return sigma.sqrt() * X * sigma.sqrt(); }

Mat apply_gamma_inverse(const FullRankState& sigma, const Mat& X) {
  return sigma.inv_sqrt() * X * sigma.inv_sqrt();
}

Mat modular_operator(const FullRankState& sigma) { return sup_sandwich(sigma.matrix(), sigma.inverse()); }

cplx kms_inner(const FullRankState& sigma, const Mat& A, const Mat& B) {
  if (A.rows() != sigma.dim() || B.rows() != sigma.dim()) throw ShapeError("kms_inner: dimension mismatch");
  return (sigma.sqrt() * A.adjoint() * sigma.sqrt() * B).trace();
}

Mat kms_gram(const FullRankState& sigma) { return gamma_map(sigma); }

Mat choi_matrix(const Mat& S) {
  const int d = super_dim(S);
  Mat C = Mat::Zero(d * d, d * d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) C.block(i * d, j * d, d, d) = apply_super(S, matrix_unit(d, i, j));
  return C;
}

double choi_min_eigenvalue(const Mat& S) {
  Eigen::SelfAdjointEigenSolver<Mat> es(hermitize(choi_matrix(S)), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

bool is_cp(const Mat& S, double tolerance) {
  const Mat C = choi_matrix(S);
  if (!is_hermitian(C, 1e-10)) return false;
  Eigen::SelfAdjointEigenSolver<Mat> es(hermitize(C), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() >= -tolerance;
}

bool is_tp(const Mat& S, double tolerance) {
  const int d = super_dim(S);
  return max_abs(apply_super(trace_dual(S), identity(d)) - identity(d)) <= tolerance;
}

bool is_unital(const Mat& S, double tolerance) {
  const int d = super_dim(S);
  return max_abs(apply_super(S, identity(d)) - identity(d)) <= tolerance;
}

bool is_trace_nonincreasing(const Mat& S, double tolerance) {
  const int d = super_dim(S);
  const Mat G = hermitize(apply_super(trace_dual(S), identity(d)));
  Eigen::SelfAdjointEigenSolver<Mat> es(identity(d) - G, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff() >= -tolerance;
}

KrausMap::KrausMap(std::vector<Mat> kraus) : ops(std::move(kraus)) {
  if (ops.empty()) throw ShapeError("KrausMap: empty Kraus set");
  dout = static_cast<int>(ops.front().rows());
  din = static_cast<int>(ops.front().cols());
  for (const auto& K : ops)
    if (K.rows() != dout || K.cols() != din) throw ShapeError("KrausMap: inconsistent Kraus shapes");
}

Mat KrausMap::apply(const Mat& X) const {
  Mat out = Mat::Zero(dout, dout);
  for (const auto& K : ops) out += K * X * K.adjoint();
  return out;
}

Mat KrausMap::apply_dual(const Mat& Y) const {
  Mat out = Mat::Zero(din, din);
  for (const auto& K : ops) out += K.adjoint() * Y * K;
  return out;
}

Mat KrausMap::choi() const {
  Mat C = Mat::Zero(din * dout, din * dout);
  for (int i = 0; i < din; ++i)
    for (int j = 0; j < din; ++j) {
      Mat E = Mat::Zero(din, din);
      E(i, j) = 1.0;
      C.block(i * dout, j * dout, dout, dout) = apply(E);
    }
  return C;
}

bool KrausMap::is_cptp(double tolerance) const {
  Eigen::SelfAdjointEigenSolver<Mat> es(hermitize(choi()), Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -tolerance) return false;
  return max_abs(apply_dual(identity(dout)) - identity(din)) <= tolerance;
}

KrausMap kraus_from_superop(const Mat& S, double cutoff) {
  const int d = super_dim(S);
  Eigen::SelfAdjointEigenSolver<Mat> es(hermitize(choi_matrix(S)));
  std::vector<Mat> ops;
  for (int k = 0; k < es.eigenvalues().size(); ++k) {
    const double lam = es.eigenvalues()(k);
    if (lam < -1e-9) throw DomainViolation("kraus_from_superop: map is not completely positive");
    if (lam <= cutoff) continue;
    // Choi column v = sum_i e_i kron K e_i, so K(:, i) = v.segment(i*d, d).
    Vec v = std::sqrt(lam) * es.eigenvectors().col(k);
    Mat K(d, d);
    for (int i = 0; i < d; ++i) K.col(i) = v.segment(i * d, d);
    ops.push_back(K);
  }
  return KrausMap(std::move(ops));
}

Mat expm(const Mat& A) { return A.exp(); }

}  // namespace qmslab
