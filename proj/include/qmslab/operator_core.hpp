#pragma once

#include <Eigen/Dense>
#include <complex>
#include <functional>
#include <vector>

#include "qmslab/errors.hpp"

namespace qmslab {

using cplx = std::complex<double>;
using Mat = Eigen::MatrixXcd;
using Vec = Eigen::VectorXcd;
using RVec = Eigen::VectorXd;

namespace tol {
inline constexpr double herm = 1e-12;
inline constexpr double rank_floor = 1e-10;
inline constexpr double support = 1e-8;
inline constexpr double density_trace = 1e-12;
inline constexpr double density_psd = 1e-12;
}  // namespace tol

// Max-entry norm; used for every "within tol" comparison in the library.
double max_abs(const Mat& A);

Mat dagger(const Mat& A);
Mat hermitize(const Mat& A);
Mat identity(int d);
Mat matrix_unit(int d, int r, int s);

// Hermiticity tolerance is tol::herm scaled by max(1, ||A||_max).
bool is_hermitian(const Mat& A, double tolerance = tol::herm);
void require_hermitian(const Mat& A, const char* what);
void require_square(const Mat& A, const char* what);

struct SpectralDecomposition {
  std::vector<double> eigenvalues;  // ascending, one per group
  std::vector<Mat> projections;
  std::vector<int> multiplicities;
  double group_tol = 0.0;
  RVec raw_values;  // ascending
  Mat eigenvectors;  // columns match raw_values

  int dim() const { return static_cast<int>(raw_values.size()); }
  Mat reconstruct() const;
};

// group_tol <= 0 selects 1e-8 * spectral radius.
SpectralDecomposition spectral_decompose(const Mat& A, double group_tol = 0.0);
double default_group_tol(const RVec& values);

Mat matrix_function(const SpectralDecomposition& sd, const std::function<double(double)>& f);
Mat matrix_function(const Mat& A, const std::function<double(double)>& f);

Mat log_pd(const Mat& A);
Mat sqrt_psd(const Mat& A);
Mat pow_pd(const Mat& A, double p);

Mat tensor(const Mat& A, const Mat& B);

enum class Keep { first, second };
Mat partial_trace(const Mat& X, int dA, int dB, Keep keep);

// Validated density operator (Hermitian, PSD, unit trace).
void require_density(const Mat& rho, const char* what);

double relative_entropy(const Mat& rho, const Mat& sigma);
double lindblad_relative_entropy(const Mat& X, const Mat& Y);

// Full-rank density with cached spectral data.
class FullRankState {
 public:
  FullRankState() = default;
  explicit FullRankState(const Mat& rho, double group_tol = 0.0);

  int dim() const { return static_cast<int>(rho_.rows()); }
  const Mat& matrix() const { return rho_; }
  const SpectralDecomposition& spectrum() const { return sd_; }
  const RVec& eigenvalues() const { return sd_.raw_values; }
  const Mat& eigenvectors() const { return sd_.eigenvectors; }
  double min_eigenvalue() const { return sd_.raw_values.minCoeff(); }
  double max_eigenvalue() const { return sd_.raw_values.maxCoeff(); }

  Mat power(double p) const;
  const Mat& sqrt() const { return sqrt_; }
  const Mat& inv_sqrt() const { return inv_sqrt_; }
  const Mat& inverse() const { return inv_; }
  const Mat& log() const { return log_; }

 private:
  Mat rho_, sqrt_, inv_sqrt_, inv_, log_;
  SpectralDecomposition sd_;
};

FullRankState maximally_mixed(int d);
FullRankState diagonal_state(const std::vector<double>& p);

// Superoperators are d^2 x d^2 matrices on column-stacked vec(X),
// vec(X)[i + j*d] = X(i,j). With this convention vec(AXB) = (B^T kron A) vec(X).
Vec vec(const Mat& X);
Mat unvec(const Vec& v, int d);
Mat apply_super(const Mat& S, const Mat& X);
int super_dim(const Mat& S);

Mat sup_left(const Mat& A);             // X -> A X
Mat sup_right(const Mat& B);            // X -> X B
Mat sup_sandwich(const Mat& A, const Mat& B);  // X -> A X B
Mat sup_identity(int d);
Mat vec_transpose_permutation(int d);   // T vec(X) = vec(X^T)
Mat trace_dual(const Mat& S);           // tr(S_*(rho) X) = tr(rho S(X))
Mat sup_tensor_identity(const Mat& S, int d, int dK);  // S kron id_K, system factor first

Mat gamma_map(const FullRankState& sigma);
Mat gamma_inverse(const FullRankState& sigma);
Mat gamma_power(const FullRankState& sigma, double p);  // X -> sigma^{p/2} X sigma^{p/2}
Mat apply_gamma(const FullRankState& sigma, const Mat& X);
Mat apply_gamma_inverse(const FullRankState& sigma, const Mat& X);
Mat modular_operator(const FullRankState& sigma);  // X -> sigma X sigma^{-1}

cplx kms_inner(const FullRankState& sigma, const Mat& A, const Mat& B);
Mat kms_gram(const FullRankState& sigma);  // <A,B>_sigma = vec(A)^* G vec(B)

Mat choi_matrix(const Mat& S);
double choi_min_eigenvalue(const Mat& S);
bool is_cp(const Mat& S, double tolerance = 1e-10);
bool is_tp(const Mat& S, double tolerance = 1e-10);
bool is_unital(const Mat& S, double tolerance = 1e-10);
bool is_trace_nonincreasing(const Mat& S, double tolerance = 1e-10);

// Possibly rectangular Kraus map X -> sum K X K^*, K : C^din -> C^dout.
struct KrausMap {
  std::vector<Mat> ops;
  int din = 0;
  int dout = 0;

  KrausMap() = default;
  explicit KrausMap(std::vector<Mat> kraus);
  Mat apply(const Mat& X) const;
  Mat apply_dual(const Mat& Y) const;
  Mat choi() const;
  bool is_cptp(double tolerance = 1e-10) const;
};

// Kraus ops of a CP superoperator from its Choi matrix.
KrausMap kraus_from_superop(const Mat& S, double cutoff = 1e-13);

Mat expm(const Mat& A);

}  // namespace qmslab
