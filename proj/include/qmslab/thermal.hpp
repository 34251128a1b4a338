#pragma once

#include <vector>

#include "qmslab/holley_stroock.hpp"
#include "qmslab/report.hpp"
#include "qmslab/stateprep.hpp"

namespace qmslab {

// Diagonal Hamiltonian in increasing order, sigma = e^{-beta H} / Z.
struct GibbsSpec {
  std::vector<double> energies;
  double beta = 1.0;
};

void validate_gibbs(const GibbsSpec& g);  // throws DomainViolation
double gibbs_shift(const GibbsSpec& g);   // E_1; all factors use energies shifted by it
double partition_function(const GibbsSpec& g);  // of the shifted energies
std::vector<double> gibbs_probabilities(const GibbsSpec& g);
FullRankState gibbs_state(const GibbsSpec& g);

// e^{beta E_m} max_j e^{beta (E_{j+1} - E_j)/2}, energies shifted so that E_1 = 0.
PerturbationFactor thermal_hs_factor(const GibbsSpec& g);

// Graph generator linking every level to every level of the next distinct energy.
// Primitive, and its Holley-Stroock factor is the thermal factor.
LindbladModel gibbs_ladder_model(const GibbsSpec& g);

struct TruncatedGibbs {
  int l = 0;                         // 1-based cutoff index
  FullRankState sigma_tilde;         // levels k >= l compressed to E_l
  double distance_actual = 0.0;      // |sigma - sigma_tilde|_1 from the spectrum of the difference
  double distance_diagonal = 0.0;    // same from the diagonal weights
  double bound = 0.0;                // 2 (Z~ - Z) / Z~ <= 2 (m - l) e^{-beta E_l} / Z~
  double bound_first_order = 0.0;    // (m - l) e^{-beta E_l} |1/Z~ - 1| / Z~
  double factor = 0.0;               // e^{beta E_l} max_{j < l} e^{beta gap_j / 2}, the factor of sigma_tilde
  double factor_inclusive = 0.0;       // same with j <= l
  InequalityReport report;             // distance_actual <= bound
  InequalityReport first_order_report; // informational
};

TruncatedGibbs truncated_gibbs(const GibbsSpec& g, int l, Tolerance tol = {});

// Relaxation P_t = e^{-t/T1} id + (1 - e^{-t/T1}) (omega kron tr_A) on C^2 kron C^dB,
// omega = (1 - eps)|0><0| + eps |1><1|. Reference state omega kron tr_A(rho), which P_t keeps fixed.
// With eps = 0 the divergence is infinite unless rho lives on |0> kron C^dB; those samples are skipped.
struct T1Check {
  std::vector<InequalityReport> reports;
  std::size_t finite = 0;
  std::size_t skipped = 0;
};

T1Check t1_relaxation_check(double T1, int dB, double t, std::size_t samples, std::uint64_t seed,
                            double eps = 0.0, Tolerance tol = {});

// Projector on the levels with E <= E0.
Mat low_energy_projector(const GibbsSpec& g, double E0);
int low_energy_dimension(const GibbsSpec& g, double E0);

struct FlaggedTrajectory {
  std::vector<double> times;         // k t/m, k = 0..m
  std::vector<Mat> low_states;       // states conditioned on all flags 0 so far
  std::vector<double> survival;      // probability that flags 0..k are all 0
  std::vector<double> flag_probs;    // probability that the first 1 flag appears at step k
  Mat marginal;                      // state at t with every flag traced out
  double p_low = 0.0;
};

// (M_E o P_{t/m})^m o M_E with the high branch absorbed. Throws SupportError when rho0 leaves the low
// subspace and SubalgebraError when a jump both acts inside and leaves the low block.
FlaggedTrajectory flagged_evolution(const LindbladModel& model, const Mat& low_projector, const Mat& rho0,
                                    double t, int m);

// p_low at m = infinity: tr exp(-t P L_* P)(rho0).
double p_low_limit(const LindbladModel& model, const Mat& low_projector, const Mat& rho0, double t);

struct PLowConvergence {
  std::vector<int> m;
  std::vector<double> p_low;
  bool converged = false;
};
// Doubles m from m0 until successive values differ by less than tol.
PLowConvergence p_low_doubling(const LindbladModel& model, const Mat& low_projector, const Mat& rho0, double t,
                               int m0 = 4, double tol = 1e-6, int max_m = 1 << 22);

struct EffectiveModel {
  LindbladModel model;          // on the d0 low levels
  std::vector<int> kept;        // indices of the retained jumps
  double factor = 0.0;          // e^{beta E0} max_{E_j <= E0} e^{beta (E_{j+1} - E_j)/2}
  double factor_rigorous = 0.0; // Holley-Stroock factor of the effective model itself
};

// Keeps the jumps inside the low block. Throws SubalgebraError when a jump has both a low-block part
// and a remainder.
EffectiveModel effective_low_energy_model(const LindbladModel& model, const GibbsSpec& g, double E0);

// D(rho_t^ || sigma~) <= e^{-alpha t} D(rho~ || sigma~) with rho_t^ the normalized flag-free state at m = infinity.
// The second report uses the effective semigroup alone.
struct FlagFreeDecay {
  InequalityReport conditional;
  InequalityReport effective;
  double p_low = 0.0;
};

FlagFreeDecay check_flag_free_decay(const LindbladModel& model, const EffectiveModel& eff, const Mat& low_projector,
                                    const Mat& rho, double t, double alpha, Tolerance tol = {});

}  // namespace qmslab
