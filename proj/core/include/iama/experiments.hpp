#ifndef IAMA_EXPERIMENTS_HPP_
#define IAMA_EXPERIMENTS_HPP_

#include <cstddef>
#include <cstdint>
#include <vector>

#include "iama/csv.hpp"
#include "iama/optimizers.hpp"

namespace iama {

// Two conflicting rewards r_1 = 1 - y², r_2 = 1 - (1-y)² on the midpoint
// grid, BoN N on both, g = (R_1 + R_2)/2, uniform reference.
ProblemSpec toy_problem(int n, std::size_t grid, double beta);

// Closed-form BoN optimum π*(y) ∝ α y^{α-1}(1-y)^{α-1}/(y^α + (1-y)^α)²,
// α = 1/(N-1), discretized by differencing C*(y) = y^α/(y^α + (1-y)^α) at
// the cell boundaries k/K.
DiscreteDistribution toy_optimal_policy(int n, std::size_t grid);

struct ToySpec {
  int n = 2;
  std::size_t grid = 401;
  double beta = 1e-4;
  SolverConfig solver;  // solver.iterations is T
};

struct ToyResult {
  std::vector<double> y;
  std::vector<double> pi_final;
  // Closed-form optimum; for N = 1 the point mass nearest y = 0.5.
  std::vector<double> pi_star;
  double tv = 0.0;                  // TV(π_T, π*)
  double final_objective = 0.0;     // R[π_T]
  double oracle_objective = 0.0;    // R[π*]
  double final_loss = 0.0;
  double oracle_loss = 0.0;
  double eta = 0.0;
  Trajectory trajectory;
};

ToyResult run_toy(const ToySpec& spec);
CsvTable toy_csv(const ToyResult& result);

enum class Centering {
  kPopulation,  // exact mean of the empirical derivative under π_1
  kGroup,       // mean of the M linearized rewards
};

struct BetaStudySpec {
  double alpha_offset = 1e-4;
  std::vector<int> n_list = {1, 4, 8, 16};
  std::vector<std::size_t> m_list = {2, 4, 8, 16, 32};
  std::size_t trials = 10000;
  Centering centering = Centering::kPopulation;
  std::uint64_t seed = 0;
};

struct BetaRow {
  int n = 0;
  std::size_t m = 0;
  double mse = 0.0;
  double bias_sq = 0.0;
  double variance = 0.0;
  double truth = 0.0;
  double mean_estimate = 0.0;
};

// Nα/(Nα+1) - N/(N+1).
double beta_study_truth(int n, double alpha);
// One estimate (1/M) Σ (r̃_j - c)(α y_j^{α-1} - 1) from raw samples in [0,1].
double beta_study_estimate(std::span<const double> samples, int n, double alpha,
                           Centering centering);
std::vector<BetaRow> run_beta_study(const BetaStudySpec& spec);
CsvTable beta_csv(const std::vector<BetaRow>& rows);

struct DkwStudySpec {
  std::vector<int> n_list = {2, 4, 8};
  std::vector<std::size_t> m_list = {8, 32, 128};
  std::size_t grid = 512;
  std::size_t trials = 1000;
  std::uint64_t seed = 0;
};

struct DkwRow {
  int n = 0;
  std::size_t m = 0;
  double mean_sq_error = 0.0;
  double bound = 0.0;
};

// Uniform π, r(y) = y, r_max = 1.
std::vector<DkwRow> run_dkw_study(const DkwStudySpec& spec);
CsvTable dkw_csv(const std::vector<DkwRow>& rows);

struct RateCheckSpec {
  std::size_t draws = 5;  // instances = draws × |n_list| × |beta_list|
  std::size_t grid = 64;
  std::vector<int> n_list = {2, 4};
  std::vector<double> beta_list = {0.01, 0.1};
  std::size_t iterations = 200;
  std::size_t reference_iterations = 10000;
  bool empirical = true;
  std::size_t empirical_seeds = 20;
  std::size_t samples = 8;
  std::uint64_t seed = 0;
};

struct RateRow {
  std::size_t instance = 0;
  std::size_t t = 0;
  double gap = 0.0;
  double bound = 0.0;
  double kl_to_opt = 0.0;
};

struct EmpiricalRateRow {
  std::size_t instance = 0;
  double expected_gap = 0.0;  // E over seeds and t̂
  double epsilon = 0.0;       // mean ‖e_t‖²_sp over seeds and t
  double delta = 0.0;         // mean ‖r_t‖²_sp over seeds and t
  double bound = 0.0;
};

struct RateInstance {
  std::size_t instance = 0;
  int n = 0;
  double beta = 0.0;
  double lipschitz = 0.0;
  double kl0 = 0.0;
};

struct RateCheckResult {
  std::vector<RateInstance> instances;
  std::vector<RateRow> rows;  // exact mode only
  std::vector<EmpiricalRateRow> empirical;
  std::size_t bound_violations = 0;
  std::size_t monotonicity_violations = 0;
  std::size_t empirical_violations = 0;
  bool ok() const {
    return bound_violations == 0 && monotonicity_violations == 0 &&
           empirical_violations == 0;
  }
};

// Random BoN instance: two rewards in [0,1], random weights, random
// strictly positive reference.
ProblemSpec random_bon_instance(std::size_t grid, int n, double beta,
                                std::uint64_t seed);
RateCheckResult run_rate_check(const RateCheckSpec& spec);
CsvTable rate_csv(const RateCheckResult& result);

}  // namespace iama

#endif  // IAMA_EXPERIMENTS_HPP_
