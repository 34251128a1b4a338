#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "qmslab/entropy.hpp"
#include "qmslab/holley_stroock.hpp"
#include "qmslab/report.hpp"

namespace qmslab {

struct GraphSpec {
  int m = 0;
  std::vector<std::pair<int, int>> edges;  // r < s
  std::vector<cplx> weights;               // chi_rs, empty means all 1
};

void validate_graph(const GraphSpec& g);  // throws ModelError
bool is_irreducible(const GraphSpec& g);
GraphSpec complete_graph(int m);
GraphSpec path_graph(int m);
GraphSpec cyclic_graph(int m);  // edges (j, j+1 mod m), deduplicated

enum class DegenerateRule { reject, block };

// Jumps chi E_rs and conj(chi) E_sr, w_rs = ln sigma_s - ln sigma_r. sigma must be diagonal.
// Under DegenerateRule::block, edges inside an eigenspace get coefficient 0 and are dropped.
// Throws DegeneracyError for repeated eigenvalues under DegenerateRule::reject.
LindbladModel build_graph_generator(const GraphSpec& g, const FullRankState& sigma,
                                    DegenerateRule rule = DegenerateRule::reject);
// Eigenvalue blocks of a diagonal state, relative tolerance 1e-12.
std::vector<int> eigen_blocks(const FullRankState& sigma);

// max_kl sigma_k/sigma_l * max over linked blocks of (sigma_k/sigma_j)^{1/2}.
PerturbationFactor graph_hs_bound(const GraphSpec& g, const FullRankState& sigma);
// 2m / factor for the complete graph, nullopt otherwise. Reference value only.
std::optional<double> graph_clsi_reference(const GraphSpec& g, const FullRankState& sigma);

// Classical Laplacian sum_rs |chi_rs|^2 delta_rs^* delta_rs over both orientations: 2 (D - W).
Eigen::MatrixXd graph_laplacian(const GraphSpec& g);
// |L(diag) - diag| over a basis of diagonal matrices, zero when L preserves the diagonal algebra.
double diagonal_invariance_deviation(const LindbladModel& model);

struct HistoryOptions {
  SamplerConfig cfg;
  int ancilla_dim = 2;
};

struct HistoryModel {
  LindbladModel logical;
  int T = 0;
  std::vector<Mat> gates;      // G_1..G_T
  std::vector<Mat> unitaries;  // U_0 = I, U_s = G_s ... G_1
  Mat U;                       // sum_s U_s kron |s><s|, logical factor first
  LindbladModel time;          // cyclic graph on T + 1 sites, uniform state
  LindbladModel product;       // L_log kron id + id kron L_tim
  LindbladModel conjugated;    // ad_U product ad_U^*
  double identity_deviation = 0.0;  // superoperator check of the conjugation identity
  double kappa_logical = 0.0;  // sampled CLSI witness of L_log
  double kappa_time = 0.0;     // sampled CLSI witness of L_tim
  double c0 = 0.0;             // kappa_time * T^2
  double kappa = 0.0;          // min{kappa_logical, kappa_time}, used in all checks
  double kappa_max = 0.0;    // max{kappa_logical, c0 / T^2}
};

// Throws UnitarityError for non-unitary gates.
HistoryModel build_history_model(const LindbladModel& logical, const std::vector<Mat>& gates,
                                 const HistoryOptions& opt = {});
// Rebuild with a known kappa instead of sampling (kappa_logical = kappa_time = kappa).
HistoryModel build_history_model(const LindbladModel& logical, const std::vector<Mat>& gates, double kappa);

// Input of the preparation run: U (X kron I/(T+1)) U^* with output scale T + 1, or X kron I/T with scale T.
enum class TimeInput { conjugated_uniform, scaled_by_T };

struct PreparationResult {
  Mat X_T;                // scaled block at time T
  double success_prob = 0.0;  // trace of the unscaled block
  double scale = 0.0;
  InequalityReport report;        // D_Lin(X_T || rho_T) <= (T+1) e^{-kappa s} D(X || rho_0)
  InequalityReport trace_report;  // |tr block - 1/(T+1)| <= 2 sqrt(e^{-kappa s} D(X0 || sigma_U)), X0 = X kron |0><0|
};

PreparationResult run_preparation(const HistoryModel& hm, const Mat& X, double s,
                                  TimeInput input = TimeInput::conjugated_uniform, Tolerance tol = {});

struct StoppingTimeResult {
  Mat X_sm;
  double eps_m = 0.0;        // (1 - 1/(T+1))^m, failure probability of the stationary registers
  double eps_m_over_T = 0.0;  // (1 - 1/T)^m, register weight 1/T
  double success_prob = 0.0; // 1 - (1 - q_T(s))^m
  std::vector<double> register_distribution;  // q(s) of one time register started at 0
  InequalityReport report;          // with the register entropy m ln(T+1) in the initial divergence
  InequalityReport no_register_entropy_report;  // without it; informational
  InequalityReport renormalized_report;  // D(X^ || rho_T) <= e^{-kappa s/2} D(X || rho_0)
};

StoppingTimeResult run_stopping_time(const HistoryModel& hm, const Mat& X, double s, int m, Tolerance tol = {});

// Exact product-measure failure probability, enumerating {0..T}^m (small m only).
double enumerate_failure_probability(int T, int m);

}  // namespace qmslab
