#pragma once

#include <cstdint>
#include <random>

#include "qmslab/operator_core.hpp"

namespace qmslab {

using Rng = std::mt19937_64;

// Independent stream for (base seed, stream id); results never depend on worker count.
Rng make_rng(std::uint64_t base_seed, std::uint64_t stream);

double uniform(Rng& rng, double lo = 0.0, double hi = 1.0);
double log_uniform(Rng& rng, double lo, double hi);
int uniform_int(Rng& rng, int lo, int hi);  // inclusive

Mat ginibre(Rng& rng, int rows, int cols);
Mat random_hermitian(Rng& rng, int d);
Mat random_unitary(Rng& rng, int d);
Mat random_psd(Rng& rng, int d, int rank = -1);
Mat random_density(Rng& rng, int d, int rank = -1);
Mat random_pure(Rng& rng, int d);
// (1 - eps)|psi><psi| + eps I/d with eps log-uniform in [eps_lo, eps_hi].
Mat random_boundary_state(Rng& rng, int d, double eps_lo = 1e-6, double eps_hi = 1e-1);
std::vector<double> random_probability(Rng& rng, int d, double floor = 0.0);

}  // namespace qmslab
