#pragma once

#include <optional>
#include <vector>

#include "qmslab/entropy.hpp"
#include "qmslab/report.hpp"

namespace qmslab {

// Which map the Kraus operators were given for. Either way the Schrödinger map is rho -> sum K rho K^*
// and the Heisenberg map is X -> sum K^* X K.
enum class Picture { schrodinger, heisenberg };

struct KrausChannel {
  std::vector<Mat> ops;
  Picture picture = Picture::schrodinger;
  std::optional<FullRankState> sigma;
  std::vector<double> omegas;  // sigma K_j = e^{-omega_j} K_j sigma, filled when sigma is present

  int dim() const { return static_cast<int>(ops.front().cols()); }
  Mat schrodinger(const Mat& rho) const;
  Mat heisenberg(const Mat& X) const;
  Mat schrodinger_superop() const;
  Mat heisenberg_superop() const;
};

// Validates sum K^*K = I within 1e-10. With sigma, every operator is split into its modular components
// (the channel is unchanged when it commutes with the modular group) and omegas are filled.
KrausChannel make_channel(std::vector<Mat> ops, Picture picture = Picture::schrodinger,
                          std::optional<FullRankState> sigma = std::nullopt);

// tr(sigma Phi(X)^* Y) = tr(sigma X^* Phi(Y)), tested on the superoperators.
double detailed_balance_deviation(const KrausChannel& phi, const FullRankState& sigma);

// Phi_0(X) = sum_j K_j^* X K_j with K_j = e^{omega_j/2} M_j^*. Heisenberg picture, unital.
// Throws DBCError when detailed balance fails within 1e-8.
KrausChannel build_unital_counterpart(const KrausChannel& phi);

struct CounterpartDiagnostics {
  double unital_deviation = 0.0;       // |Phi_0(I) - I|
  double intertwining_deviation = 0.0; // |Phi_* Gamma_sigma - Gamma_sigma Phi_0|
  double self_adjoint_deviation = 0.0; // |Phi_0 - Phi_0^dagger| under Hilbert-Schmidt, zero iff Phi_* is unital
};
CounterpartDiagnostics counterpart_diagnostics(const KrausChannel& phi, const KrausChannel& phi0);

// Eigenvalue-1 space of Phi_* is one dimensional.
bool is_primitive_channel(const KrausChannel& phi, double tol = 1e-9);
// Projection onto the fixed points of Phi_* (Schrödinger superoperator). Uses sigma, or I/d when absent.
Mat channel_conditional_expectation(const KrausChannel& phi);

ConstantEstimate estimate_sdpi(const KrausChannel& phi, const Mat& E_star, const SamplerConfig& cfg);

struct SdpiBound {
  double c_phi = 0.0;       // sampled c(Phi)
  double c_phi0 = 0.0;      // sampled c(Phi_0), tracial conditional expectation
  double condition = 1.0;   // ||sigma|| ||sigma^{-1}||
  double bound = 1.0;       // min{1, condition * c_phi0}
  InequalityReport report;  // c_phi <= bound (1 + estimator_slack)
  std::vector<InequalityReport> chain;  // per sample, assumption free
};

// Per sample rho: D(Phi_* rho || sigma) <= condition * c_X * D(rho || sigma) with
// c_X = D(Phi_0 X || tr(X) I/d) / D(X || tr(X) I/d), X = Gamma_sigma^{-1}(rho).
SdpiBound check_sdpi_bound(const KrausChannel& phi, const SamplerConfig& cfg, Tolerance tol = {},
                           double estimator_slack = 0.02);

// ((1/d) <X, L0 X>) / (tr(X^2/d ln X^2) - tr(X^2/d) ln tr(X^2/d)); nullopt below min_denominator.
std::optional<RatioValue> alpha2_ratio(const Mat& L0, const Mat& X, double min_denominator = 1e-12);
ConstantEstimate alpha2_unital(const Mat& L0, const SamplerConfig& cfg);

// id - Phi_0^dagger Phi_0 (equal to id - Phi_0^2 when Phi_0 is self-adjoint).
Mat sdpi_semigroup_generator(const KrausChannel& phi0);
// min{condition (1 - alpha2), 1}; reference value only.
double sdpi_alpha2_bound(const FullRankState& sigma, double alpha2);

namespace channels {
KrausChannel identity(int d);
KrausChannel depolarizing(int d, double p);  // (1-p) rho + p tr(rho) I/d
KrausChannel unitary(const Mat& U, std::optional<FullRankState> sigma = std::nullopt);
// Classical transitions |c_rs|^2 with |c_rs|^2 sigma_s = |c_sr|^2 sigma_r in a random eigenbasis,
// completed by diagonal Kraus operators.
KrausChannel random_gns(Rng& rng, int d);  // random sigma and basis
KrausChannel random_gns(Rng& rng, const FullRankState& sigma);  // in the eigenbasis of sigma
}  // namespace channels

}  // namespace qmslab
