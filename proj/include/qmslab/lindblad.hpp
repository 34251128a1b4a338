#pragma once

#include <cstdint>
#include <vector>

#include "qmslab/operator_core.hpp"
#include "qmslab/random.hpp"

namespace qmslab {

struct JumpOperatorSet {
  std::vector<Mat> ops;
  std::vector<int> adjoint_of;  // ops[adjoint_of[j]] == ops[j]^* within 1e-10

  int dim() const { return ops.empty() ? 0 : static_cast<int>(ops.front().rows()); }
  std::size_t size() const { return ops.size(); }
};

// Throws ModelError when the set is not closed under adjoints.
JumpOperatorSet make_jump_set(std::vector<Mat> ops);
// Appends A^* for every A whose adjoint is missing.
JumpOperatorSet adjoint_closure(std::vector<Mat> ops);

struct LindbladModel {
  JumpOperatorSet jumps;
  std::vector<double> omegas;
  FullRankState sigma;

  int dim() const { return sigma.dim(); }
};

double extract_bohr_frequency(const Mat& A, const FullRankState& sigma);
std::vector<double> extract_bohr_frequencies(const JumpOperatorSet& jumps, const FullRankState& sigma);

LindbladModel make_model(JumpOperatorSet jumps, FullRankState sigma);
LindbladModel make_model(JumpOperatorSet jumps, FullRankState sigma, std::vector<double> omegas);
// Modular relation for s in {1/2, 1} and pairing of frequencies; throws ModelError.
void validate_model(const LindbladModel& model);

// Jumps A kron I_K, state sigma kron I/dK, same frequencies.
LindbladModel tensor_identity(const LindbladModel& model, int dK);

Mat delta(const Mat& A, const Mat& X);  // [A, X]

Mat apply_generator(const LindbladModel& model, const Mat& X);
Mat apply_generator_dual(const LindbladModel& model, const Mat& rho);
Mat apply_heat_generator(const JumpOperatorSet& jumps, const Mat& X);

struct Generator {
  Mat heisenberg;
  Mat schrodinger;
};

Generator build_generator(const LindbladModel& model);
Mat build_generator_heisenberg(const JumpOperatorSet& jumps, const std::vector<double>& omegas);
Mat build_generator_schrodinger(const JumpOperatorSet& jumps, const std::vector<double>& omegas);
Mat build_heat_generator(const JumpOperatorSet& jumps);

struct DetailedBalanceReport {
  double kms_deviation = 0.0;
  double modular_deviation = 0.0;
  double threshold = 1e-8;
  bool pass = false;
};

DetailedBalanceReport check_detailed_balance(const Mat& L, const FullRankState& sigma);

std::vector<Mat> commutant_basis(const std::vector<Mat>& ops, double rel_threshold = 1e-9);
int commutant_dimension(const std::vector<Mat>& ops);
bool check_primitivity(const JumpOperatorSet& jumps);
bool check_primitivity(const std::vector<Mat>& ops);

struct FixedPointBlock {
  int dH = 1;
  int dK = 1;
  Mat W;    // d x (dH*dK) isometry, H index slow
  Mat tau;  // dK x dK
};

struct FixedPointAlgebra {
  std::vector<FixedPointBlock> blocks;
  Mat E;       // Heisenberg conditional expectation
  Mat E_star;  // its trace dual
  int algebra_dim = 0;
  std::uint64_t seed = 0;

  bool primitive() const { return algebra_dim == 1; }
  Mat apply_E(const Mat& X) const;
  Mat apply_E_star(const Mat& rho) const;
};

FixedPointAlgebra fixed_point_algebra(const JumpOperatorSet& jumps, const FullRankState& sigma,
                                      std::uint64_t seed = 20240607);
// Same block structure, conditional expectation recomputed for another invariant state.
FixedPointAlgebra with_state(const FixedPointAlgebra& fpa, const FullRankState& sigma);
// sum_i dK_i/d * W_i (I_H kron tau_i) W_i^*
FullRankState canonical_state(const FixedPointAlgebra& fpa);

Mat propagator(const Mat& L, double t);  // exp(-t L)
Mat evolve(const Mat& Lstar, const Mat& rho, double t);
double spectral_gap(const Mat& L);

namespace presets {

// |0><1| and |1><0| with sigma = diag(p0, 1-p0).
LindbladModel amplitude_damping(double p0);
// L_*(rho) = rho - tr(rho) sigma, realised with weighted matrix units in sigma's eigenbasis.
LindbladModel stabilizing(const FullRankState& sigma);
LindbladModel depolarizing(int d);
std::vector<Mat> paulis();

struct RandomModelOptions {
  double degenerate_probability = 1.0 / 3;  // chance of a repeated eigenvalue of sigma (d >= 3)
  int extra_jumps = 2;                        // block-supported Ginibre jumps beyond the spanning tree
  double eigen_floor = 0.0;                   // added to each raw weight before normalising
};

// Random GNS-symmetric primitive model: matrix units along a random spanning tree in sigma's
// eigenbasis, random block jumps between eigenspaces, and one Hermitian jump commuting with sigma.
LindbladModel random_model(Rng& rng, int d, const RandomModelOptions& opt = {});

}  // namespace presets

}  // namespace qmslab
