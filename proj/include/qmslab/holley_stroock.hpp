#pragma once

#include <cstdint>
#include <vector>

#include "qmslab/entropy.hpp"
#include "qmslab/report.hpp"

namespace qmslab {

// Primitive case: entropy_factor = max sigma (change of measure), ep_factor = min sigma * min e^{-|w|/2},
// total = entropy_factor / ep_factor.
// Non-primitive case: entropy_factor = r, ep_factor = R * max e^{|w - v|/2}, total = r * ep_factor.
struct PerturbationFactor {
  double entropy_factor = 1.0;
  double ep_factor = 1.0;
  double total = 1.0;
};

PerturbationFactor hs_factor_primitive(const LindbladModel& model);

// Two generators with the same jumps and different invariant states.
struct ModelPair {
  LindbladModel sigma;   // L_sigma, frequencies w
  LindbladModel prime;   // L_sigma', frequencies v
  FixedPointAlgebra fpa;        // conditional expectation for sigma
  FixedPointAlgebra fpa_prime;  // same blocks, for sigma'
  double r = 1.0;     // max lambda / lambda'
  double R = 1.0;     // max lambda' / lambda
  double freq = 1.0;  // max e^{|w - v|/2}
  PerturbationFactor factor;
};

// Throws ModelError for different jump sets and IncompatibleStates for non-commuting block states.
ModelPair make_model_pair(LindbladModel sigma, LindbladModel prime);
PerturbationFactor hs_factor_nonprimitive(const LindbladModel& sigma, const LindbladModel& prime);

// Random pair of canonical block states sharing a non-primitive jump set on C^d.
ModelPair random_model_pair(Rng& rng, int d);

// Heat generator with the same jumps, sigma = I/d.
LindbladModel heat_model(const JumpOperatorSet& jumps);

// Change of measure with an ancilla K placed after the system.
InequalityReport check_entropy_comparison_primitive(const LindbladModel& model, int dK, const Mat& X,
                                                    Tolerance tol = {}, long sample_id = -1);
InequalityReport check_ep_comparison_primitive(const LindbladModel& model, int dK, const Mat& X,
                                               Tolerance tol = {}, long sample_id = -1);
InequalityReport check_entropy_comparison(const ModelPair& pair, const Mat& X, Tolerance tol = {},
                                          long sample_id = -1);
InequalityReport check_ep_comparison(const ModelPair& pair, const Mat& X, Tolerance tol = {},
                                     long sample_id = -1);

// Positive definite test operators with log-uniform trace, sample i drawn from stream (seed, i).
Mat random_positive_operator(Rng& rng, int d);

std::vector<InequalityReport> entropy_comparison_suite(const LindbladModel& model, int dK, std::size_t n,
                                                       std::uint64_t seed, Tolerance tol = {});
std::vector<InequalityReport> ep_comparison_suite(const LindbladModel& model, int dK, std::size_t n,
                                                  std::uint64_t seed, Tolerance tol = {});
std::vector<InequalityReport> entropy_comparison_suite(const ModelPair& pair, std::size_t n, std::uint64_t seed,
                                                       Tolerance tol = {});
std::vector<InequalityReport> ep_comparison_suite(const ModelPair& pair, std::size_t n, std::uint64_t seed,
                                                  Tolerance tol = {});

// Trace-preserving completion X -> Phi(X) (+) tr((I - sum K^*K) X) of a trace non-increasing Kraus map.
KrausMap complete_to_channel(const KrausMap& phi, double tolerance = 1e-10);
// The map used in the change-of-measure step: X -> Gamma_{sigma kron I}(X) / max sigma, completed.
KrausMap change_of_measure_completion(const FullRankState& sigma, int dK);

// Directional consistency of sampled constants; always informational.
InequalityReport check_hs_transfer(double estimate_sigma, double estimate_reference, double total,
                                   double sampling_slack = 0.0);

// 2 lambda / (ln ||sigma^{-1}|| + 2), reference value only.
double spectral_gap_mlsi_reference(const LindbladModel& model);

double dirichlet_form(const LindbladModel& model, const Mat& X);  // <L(X), X>_sigma
double lp_sigma_norm(const FullRankState& sigma, const Mat& X, double p);  // p in {1, 2, inf}

struct LsiTerms {
  double entropy = 0.0;    // D(rho || E_*(rho))
  double dirichlet = 0.0;  // E_L(sigma^{-1/4} rho^{1/2} sigma^{-1/4})
  double norm2 = 0.0;      // ||sigma^{-1/4} rho^{1/2} sigma^{-1/4}||^2_{L2(sigma)}
};

LsiTerms lsi_terms(const LindbladModel& model, const FixedPointAlgebra& fpa, const Mat& rho);

// Smallest c with D <= c E + d N^2 on every sample (infinite if some sample has E = 0 and D > d N^2).
double fit_lsi_constant(const LindbladModel& model, const FixedPointAlgebra& fpa, double d,
                        const std::vector<Mat>& states);

struct LsiTransfer {
  double c = 0.0;
  double d = 0.0;
  std::vector<InequalityReport> reports;
};

// For each X: validates LSI(c', d') for sigma' at Gamma_{sigma'}(X) (HypothesisError otherwise),
// then checks LSI(c, d) for sigma at Gamma_sigma(X) with c = r R freq c', d = r R d'.
LsiTransfer check_lsi_perturbation(const ModelPair& pair, double c_prime, double d_prime,
                                   const std::vector<Mat>& samples, Tolerance tol = {});

// D(X||Y) - D(X||E_*X) - D(E_*X||Y) for Y = E_*(Y).
double chain_rule_residual(const FixedPointAlgebra& fpa, const Mat& X, const Mat& Y);

}  // namespace qmslab
