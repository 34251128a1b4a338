#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "qmslab/lindblad.hpp"
#include "qmslab/random.hpp"

namespace qmslab {

struct DifferenceQuotientKernel {
  RVec left;
  RVec right;
  Eigen::MatrixXd values;  // (k,l) -> (ln x_k - ln y_l)/(x_k - y_l), 1/x_k on the diagonal branch
};

DifferenceQuotientKernel log_difference_quotient(const RVec& x, const RVec& y);

// Multiplies the entries of Y in rho's eigenbasis by m(e^{w/2} p_k, e^{-w/2} p_l).
Mat doi_apply(const Mat& rho, double omega, const Mat& Y);

// Cached eigendecomposition of rho for repeated kernel applications.
class DoiOperator {
 public:
  explicit DoiOperator(const Mat& rho);
  Mat apply(double omega, const Mat& Y) const;
  double quadratic_form(double omega, const Mat& Y) const;  // <Y, T(Y)>_HS
  const RVec& spectrum() const { return p_; }

 private:
  Mat V_;
  RVec p_;
};

struct Regularized {
  Mat rho;
  bool applied = false;
};

// (1 - eps) rho + eps sigma when rho has eigenvalues at or below the rank floor.
Regularized regularize(const Mat& rho, const FullRankState& sigma, double eps = 1e-9);

// Both forms accept non-normalized positive definite rho.
double entropy_production_direct(const LindbladModel& model, const Mat& rho);
double entropy_production_fisher(const LindbladModel& model, const Mat& rho);
std::vector<double> entropy_production_fisher_terms(const LindbladModel& model, const Mat& rho);

double relative_entropy_to_fixed_point(const FixedPointAlgebra& fpa, const Mat& rho);

struct DecayTrace {
  std::vector<double> times;
  std::vector<double> entropies;
  std::vector<double> eps;
  double max_increase = 0.0;  // largest D(t_{k+1}) - D(t_k)
  bool monotone = true;       // within 1e-9
  bool regularized = false;
};

DecayTrace decay_trace(const LindbladModel& model, const FixedPointAlgebra& fpa, const Mat& rho0,
                       const std::vector<double>& times);
// 0 followed by n-1 geometric points ending at t_max.
std::vector<double> geometric_time_grid(double t_max, int n = 40);

struct SamplerConfig {
  std::size_t samples = 200;
  std::uint64_t seed = 1;
  int workers = 1;
  int refine_top = 3;
  int refine_steps = 200;
  double fd_step = 1e-6;
  double boundary_fraction = 0.5;
  double min_denominator = 1e-12;
};

struct ConstantEstimate {
  double value = 0.0;
  std::size_t n_samples = 0;
  std::size_t n_valid = 0;
  Mat argmin;  // certificate state (argmax for suprema)
  std::string method;
  std::vector<double> ratios;  // per sample id before refinement, NaN when skipped
  double refined_gain = 0.0;   // improvement contributed by local refinement
};

struct RatioValue {
  double numerator = 0.0;
  double denominator = 0.0;
  double ratio() const { return numerator / denominator; }
};

// Returns nullopt when the ratio is undefined at the given state.
using RatioFunction = std::function<std::optional<RatioValue>(const Mat&)>;
using StateSampler = std::function<Mat(Rng&, std::size_t sample_id)>;

StateSampler default_sampler(int dim, double boundary_fraction);

ConstantEstimate optimize_ratio(int dim, const RatioFunction& f, const SamplerConfig& cfg, bool minimize,
                                std::string method, StateSampler sampler = {});

std::optional<RatioValue> mlsi_ratio(const LindbladModel& model, const FixedPointAlgebra& fpa, const Mat& rho,
                                     double min_denominator = 1e-12);

ConstantEstimate estimate_mlsi(const LindbladModel& model, const FixedPointAlgebra& fpa,
                               const SamplerConfig& cfg);
ConstantEstimate estimate_clsi_witness(const LindbladModel& model, const FixedPointAlgebra& fpa, int ancilla_dim,
                                       const SamplerConfig& cfg);

}  // namespace qmslab
