#include "iama/experiments.hpp"

#include <gtest/gtest.h>

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "oracles.hpp"

namespace iama {
namespace {

TEST(CsvTest, NumberFormatting) {
  EXPECT_EQ(format_number(0.5), "0.5");
  EXPECT_EQ(format_number(std::int64_t{-3}), "-3");
  EXPECT_EQ(format_number(std::uint64_t{18446744073709551615u}), "18446744073709551615");
  Rng rng(60);
  for (int i = 0; i < 1000; ++i) {
    const double v = std::ldexp(rng.uniform() - 0.5, static_cast<int>(rng.uniform() * 200) - 100);
    const std::string s = format_number(v);
    EXPECT_EQ(s.find(','), std::string::npos);
    double back = 0.0;
    std::from_chars(s.data(), s.data() + s.size(), back);
    EXPECT_EQ(back, v);
  }
}

TEST(CsvTest, TableLayout) {
  CsvTable table({"a", "b"});
  table.add_row({"1", "2.5"});
  table.add_row({"3", "4"});
  EXPECT_EQ(table.str(), "a,b\n1,2.5\n3,4\n");
  EXPECT_THROW(table.add_row({"1"}), std::invalid_argument);
  const auto dir = std::filesystem::temp_directory_path() / "iama_csv_test";
  std::filesystem::create_directories(dir);
  const auto path = (dir / "t.csv").string();
  table.write(path);
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  EXPECT_EQ(ss.str(), table.str());
  EXPECT_FALSE(std::filesystem::exists(path + ".tmp"));
  std::filesystem::remove_all(dir);
}

TEST(ToyOptimumTest, TwoIsUniform) {
  const auto p = toy_optimal_policy(2, 401);
  for (std::size_t k = 0; k < 401; ++k) EXPECT_NEAR(p[k], 1.0 / 401, 1e-15);
}

TEST(ToyOptimumTest, SymmetricAndHalfMassBelowTheMiddle) {
  for (int n : {2, 3, 4, 8, 16}) {
    for (std::size_t grid : {400u, 401u}) {
      const auto p = toy_optimal_policy(n, grid);
      double lower = 0.0;
      for (std::size_t k = 0; k < grid; ++k) {
        EXPECT_NEAR(p[k], p[grid - 1 - k], 1e-12);
        if (2 * (k + 1) <= grid) lower += p[k];
      }
      // C*(0.5) = 0.5; the odd grid splits the centre cell evenly.
      const double centre = grid % 2 ? p[grid / 2] / 2.0 : 0.0;
      EXPECT_NEAR(lower + centre, 0.5, 1e-12);
    }
  }
  EXPECT_THROW(toy_optimal_policy(1, 10), std::invalid_argument);
  EXPECT_THROW(toy_optimal_policy(2, 1), std::invalid_argument);
}

TEST(ToyOptimumTest, MatchesDensityOnAFineGrid) {
  const int n = 4;
  const double alpha = 1.0 / 3.0;
  const std::size_t grid = 2000;
  const auto p = toy_optimal_policy(n, grid);
  for (std::size_t k = 200; k < 1800; k += 100) {
    const double y = (k + 0.5) / grid;
    const double a = std::pow(y, alpha), b = std::pow(1.0 - y, alpha);
    const double density =
        alpha * std::pow(y, alpha - 1) * std::pow(1 - y, alpha - 1) / ((a + b) * (a + b));
    EXPECT_NEAR(p[k] * grid, density, 1e-4 * density);
  }
}

TEST(ToyOptimumTest, EightPolarizes) {
  const auto p = toy_optimal_policy(8, 400);
  double outer = 0.0, centre = 0.0;
  for (std::size_t k = 0; k < 40; ++k) outer += p[k] + p[399 - k];
  for (std::size_t k = 160; k < 240; ++k) centre += p[k];
  EXPECT_GT(outer, centre);
}

TEST(ToyOptimumTest, ZeroSpanDerivativeAtTheOptimum) {
  // The discretized optimum is stationary for the unregularized objective.
  for (int n : {2, 4, 8}) {
    const auto problem = toy_problem(n, 401, 0.0);
    const auto p = toy_optimal_policy(n, 401);
    const DiscreteDistribution star(problem.reference.support(),
                                    std::vector<double>(p.weights().begin(), p.weights().end()));
    EXPECT_LT(span_seminorm(problem.objective->derivative(star).values), 1e-3) << n;
  }
}

TEST(ToyTest, TwoConvergesToUniform) {
  ToySpec spec;
  spec.n = 2;
  spec.grid = 401;
  spec.beta = 1e-4;
  spec.solver.iterations = 500;
  const auto result = run_toy(spec);
  EXPECT_LE(result.tv, 0.02);
  for (double v : result.pi_final) EXPECT_NEAR(v, 1.0 / 401, 0.02 / 401 * 10);
  EXPECT_EQ(result.y.size(), 401u);
  EXPECT_EQ(result.trajectory.records.size(), 501u);
  EXPECT_DOUBLE_EQ(result.eta, 1.0 / 2.0);
  EXPECT_EQ(toy_csv(result).num_rows(), 401u);
}

TEST(ToyTest, FourReachesOracleObjective) {
  ToySpec spec;
  spec.n = 4;
  spec.grid = 401;
  spec.beta = 1e-4;
  spec.solver.iterations = 2000;
  const auto result = run_toy(spec);
  EXPECT_GE(result.final_objective, result.oracle_objective - 1e-3);
  EXPECT_LE(result.final_loss, result.trajectory.records.front().loss);
}

TEST(ToyTest, NaiveBaselineConcentratesAtTheMiddle) {
  ToySpec spec;
  spec.n = 1;
  spec.grid = 101;
  spec.beta = 1e-4;
  spec.solver.iterations = 50;
  const auto result = run_toy(spec);
  const std::size_t mode = static_cast<std::size_t>(
      std::max_element(result.pi_final.begin(), result.pi_final.end()) -
      result.pi_final.begin());
  EXPECT_LE(std::abs(result.y[mode] - 0.5), 1.0 / 101);
  EXPECT_EQ(result.pi_star[50], 1.0);
}

TEST(BetaStudyTest, Truth) {
  EXPECT_EQ(beta_study_truth(3, 1.0), 0.0);
  const double alpha = 1.0 + 1e-4;
  EXPECT_NEAR(beta_study_truth(4, alpha), 4e-4 / (5.0 * (4.0 * alpha + 1.0)), 1e-16);
  EXPECT_NEAR(beta_study_truth(4, alpha), 1.599872010238368e-05, 1e-16);
  EXPECT_NEAR(beta_study_truth(1, alpha), 1e-4 / (2.0 * (alpha + 1.0)), 1e-16);
}

TEST(BetaStudyTest, AlphaOneGivesZero) {
  const std::vector<double> samples = {0.2, 0.7, 0.4, 0.9};
  const double pop = beta_study_estimate(samples, 4, 1.0, Centering::kPopulation);
  const double grp = beta_study_estimate(samples, 4, 1.0, Centering::kGroup);
  EXPECT_EQ(pop, 0.0);
  EXPECT_EQ(grp, 0.0);
  EXPECT_THROW(beta_study_estimate(std::vector<double>{}, 4, 1.0, Centering::kGroup),
               std::invalid_argument);
}

TEST(BetaStudyTest, PopulationCenterIsTheMeanDerivative) {
  // For N = 1 the empirical derivative is y - max; its uniform mean is
  // 1/2 - max, so the centred estimate is the plain-reward one.
  Rng rng(61);
  std::vector<double> samples(6);
  for (double& y : samples) y = rng.uniform();
  const double alpha = 1.3;
  double plain = 0.0;
  for (double y : samples) plain += (y - 0.5) * (alpha * std::pow(y, alpha - 1) - 1) / 6.0;
  EXPECT_NEAR(beta_study_estimate(samples, 1, alpha, Centering::kPopulation), plain, 1e-14);
}

TEST(BetaStudyTest, SmallSweep) {
  BetaStudySpec spec;
  spec.n_list = {1, 4};
  spec.m_list = {2, 32};
  spec.trials = 2000;
  const auto rows = run_beta_study(spec);
  ASSERT_EQ(rows.size(), 4u);
  for (const auto& r : rows) {
    EXPECT_NEAR(r.mse, r.bias_sq + r.variance, 1e-12 * r.mse + 1e-30);
  }
  EXPECT_LT(rows[0].bias_sq, 1e-10);
  EXPECT_LT(rows[3].bias_sq, rows[2].bias_sq);
  const auto again = run_beta_study(spec);
  EXPECT_EQ(beta_csv(rows).str(), beta_csv(again).str());
  spec.trials = 0;
  EXPECT_THROW(run_beta_study(spec), std::invalid_argument);
}

TEST(DkwStudyTest, RowsUnderBound) {
  DkwStudySpec spec;
  spec.n_list = {1, 2, 4};
  spec.m_list = {8, 64};
  spec.grid = 128;
  spec.trials = 200;
  const auto rows = run_dkw_study(spec);
  ASSERT_EQ(rows.size(), 6u);
  EXPECT_LT(rows[0].mean_sq_error, 1e-24);
  EXPECT_EQ(rows[5].bound, 144.0 / 64.0);
  for (const auto& r : rows) EXPECT_LE(r.mean_sq_error, r.bound + 1e-24);
  EXPECT_LT(rows[3].mean_sq_error, rows[2].mean_sq_error);
  EXPECT_LT(rows[5].mean_sq_error, rows[4].mean_sq_error);
  EXPECT_EQ(dkw_csv(rows).header(),
            (std::vector<std::string>{"n", "m", "mean_sq_error", "bound"}));
}

TEST(RateCheckTest, SmallInstanceSatisfiesBothBounds) {
  RateCheckSpec spec;
  spec.draws = 1;
  spec.grid = 16;
  spec.n_list = {2};
  spec.beta_list = {0.1};
  spec.iterations = 50;
  spec.reference_iterations = 3000;
  spec.empirical_seeds = 3;
  const auto result = run_rate_check(spec);
  EXPECT_TRUE(result.ok());
  ASSERT_EQ(result.instances.size(), 1u);
  EXPECT_EQ(result.rows.size(), 50u);
  ASSERT_EQ(result.empirical.size(), 1u);
  EXPECT_GT(result.empirical[0].epsilon, 0.0);
  EXPECT_LE(result.empirical[0].expected_gap, result.empirical[0].bound);
  for (const auto& r : result.rows) EXPECT_LE(r.gap, r.bound * (1 + 1e-9));
  EXPECT_EQ(rate_csv(result).header(),
            (std::vector<std::string>{"instance", "t", "gap", "bound", "kl_to_opt"}));
}

TEST(RandomInstanceTest, DeterministicAndValid) {
  const auto a = random_bon_instance(32, 4, 0.1, 5);
  const auto b = random_bon_instance(32, 4, 0.1, 5);
  EXPECT_EQ(a.objective->rewards().objective(0).values[7],
            b.objective->rewards().objective(0).values[7]);
  EXPECT_TRUE(a.reference.strictly_positive());
  EXPECT_NO_THROW(a.validate());
  EXPECT_EQ(smoothness_constant(*a.objective), 12.0);
}

TEST(CsvSchemaTest, Headers) {
  ToySpec spec;
  spec.grid = 8;
  spec.solver.iterations = 1;
  EXPECT_EQ(toy_csv(run_toy(spec)).header(),
            (std::vector<std::string>{"y", "pi_final", "pi_star"}));
  EXPECT_EQ(beta_csv({}).header(),
            (std::vector<std::string>{"n", "m", "mse", "bias_sq", "variance"}));
}

}  // namespace
}  // namespace iama
