#include "qmslab/random.hpp"

#include <Eigen/QR>
#include <cmath>

namespace qmslab {

Rng make_rng(std::uint64_t base_seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(base_seed), static_cast<std::uint32_t>(base_seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32), 0x5eedu};
  return Rng(seq);
}

double uniform(Rng& rng, double lo, double hi) {
  // Explicit formula keeps streams identical across standard libraries.
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

double log_uniform(Rng& rng, double lo, double hi) {
  return std::exp(uniform(rng, std::log(lo), std::log(hi)));
}

int uniform_int(Rng& rng, int lo, int hi) {
  const auto span = static_cast<std::uint64_t>(hi - lo + 1);
  return lo + static_cast<int>(rng() % span);
}

namespace {

double gaussian(Rng& rng) {
  // Box-Muller; avoids implementation-defined std::normal_distribution.
  double u1 = uniform(rng);
  while (u1 <= 0.0) u1 = uniform(rng);
  const double u2 = uniform(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

}  // namespace

Mat ginibre(Rng& rng, int rows, int cols) {
  Mat G(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) G(i, j) = cplx(gaussian(rng), gaussian(rng)) / std::sqrt(2.0);
  return G;
}

Mat random_hermitian(Rng& rng, int d) {
  Mat G = ginibre(rng, d, d);
  return 0.5 * (G + G.adjoint());
}

Mat random_unitary(Rng& rng, int d) {
  Mat G = ginibre(rng, d, d);
  Eigen::HouseholderQR<Mat> qr(G);
  Mat Q = qr.householderQ();
  Mat R = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int k = 0; k < d; ++k) {
    const cplx r = R(k, k);
    const double a = std::abs(r);
    if (a > 0) Q.col(k) *= r / a;
  }
  return Q;
}

Mat random_psd(Rng& rng, int d, int rank) {
  const int k = rank > 0 ? rank : d;
  Mat G = ginibre(rng, d, k);
  return hermitize(G * G.adjoint());
}

Mat random_density(Rng& rng, int d, int rank) {
  Mat W = random_psd(rng, d, rank);
  return hermitize(W / W.trace().real());
}

Mat random_pure(Rng& rng, int d) {
  Mat psi = ginibre(rng, d, 1);
  psi /= psi.norm();
  return psi * psi.adjoint();
}

Mat random_boundary_state(Rng& rng, int d, double eps_lo, double eps_hi) {
  const double eps = log_uniform(rng, eps_lo, eps_hi);
  return hermitize((1.0 - eps) * random_pure(rng, d) + eps * identity(d) / static_cast<double>(d));
}

std::vector<double> random_probability(Rng& rng, int d, double floor) {
  std::vector<double> p(d);
  double total = 0.0;
  for (auto& x : p) {
    x = floor + uniform(rng, 0.05, 1.0);
    total += x;
  }
  for (auto& x : p) x /= total;
  return p;
}

}  // namespace qmslab
