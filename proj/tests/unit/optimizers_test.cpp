#include "iama/optimizers.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <iostream>
#include <limits>
#include <memory>

#include "iama/experiments.hpp"
#include "oracles.hpp"

namespace iama {
namespace {

using testing::random_distribution;
using testing::random_rewards;

constexpr double kInf = std::numeric_limits<double>::infinity();

std::shared_ptr<const IamaObjective> MakeObjective(
    const SupportPtr& s, std::vector<std::vector<double>> rewards,
    std::vector<TransformSpec> transforms, Aggregator agg) {
  std::vector<double> r_max(rewards.size(), 1.0);
  auto table = std::make_shared<const RewardTable>(s, std::move(rewards), std::move(r_max));
  return std::make_shared<const IamaObjective>(std::move(table), std::move(transforms),
                                               std::move(agg));
}

DerivativeVector RandomDerivative(Rng& rng, std::size_t k) {
  DerivativeVector g{random_rewards(rng, k)};
  for (double& v : g.values) v = 4.0 * v - 2.0;
  return g;
}

TEST(SolverModeTest, RoundTrip) {
  for (auto mode : {SolverMode::kExact, SolverMode::kEmpirical, SolverMode::kParametric}) {
    EXPECT_EQ(parse_solver_mode(to_string(mode)), mode);
  }
  EXPECT_THROW(parse_solver_mode("adam"), std::invalid_argument);
}

TEST(SmoothnessTest, Constants) {
  const SupportPtr s = Support::Indexed(4);
  const std::vector<double> r = {0.1, 0.2, 0.3, 0.4};
  EXPECT_EQ(smoothness_constant(*MakeObjective(s, {r}, {BestOfN{4}}, WeightedSum{{1.0}})),
            12.0);
  EXPECT_EQ(
      smoothness_constant(*MakeObjective(s, {r}, {BestOfPoisson{2.0}}, WeightedSum{{1.0}})),
      4.0);
  EXPECT_EQ(smoothness_constant(*MakeObjective(s, {r, r}, {BestOfN{2}, BestOfN{4}},
                                               WeightedSum{{0.5, 0.5}})),
            7.0);
  EXPECT_EQ(smoothness_constant(*MakeObjective(s, {r, r}, {BestOfN{2}, BestOfN{4}},
                                               SmoothMin{2.0, {0.5, 0.5}})),
            12.0 + 0.5 * 16.0);
  EXPECT_EQ(smoothness_constant(
                *MakeObjective(s, {r, r}, {BestOfN{2}, BestOfN{4}}, HardMin{})),
            12.0);
  const auto naive = MakeObjective(s, {r}, {BestOfN{1}}, WeightedSum{{1.0}});
  EXPECT_EQ(smoothness_constant(*naive), 0.0);
  EXPECT_EQ(default_step_size(*naive), kInf);
}

TEST(ProxStepTest, NoForceKeepsPolicy) {
  Rng rng(40);
  const SupportPtr s = Support::Indexed(7);
  const auto pi = random_distribution(rng, s);
  const auto ref = random_distribution(rng, s);
  const DerivativeVector zero{std::vector<double>(7, 0.0)};
  const auto next = exact_prox_step(pi, zero, 0.0, 0.7, ref);
  EXPECT_LT(tv_distance(next, pi), 1e-15);
  const auto pulled = exact_prox_step(pi, zero, 1.0, 1e6, ref);
  EXPECT_LT(tv_distance(pulled, ref), 1e-6);
  const auto limit = exact_prox_step(pi, zero, 1.0, kInf, ref);
  EXPECT_LT(tv_distance(limit, ref), 1e-15);
}

TEST(ProxStepTest, ExponentialWeightsOnTwoPoints) {
  const SupportPtr s = Support::Indexed(2);
  const auto half = DiscreteDistribution::Uniform(s);
  const DerivativeVector r{{0.0, 1.0}};
  const auto next = exact_prox_step(half, r, 0.0, 1.0, half);
  EXPECT_NEAR(next[1], 0.7310585786300049, 1e-15);
  const DiscreteDistribution skew(s, {0.2, 0.8});
  const auto step = exact_prox_step(skew, r, 0.0, 2.0, half);
  const double e2 = std::exp(2.0);
  EXPECT_NEAR(step[1], 0.8 * e2 / (0.2 + 0.8 * e2), 1e-15);
}

TEST(ProxStepTest, InfiniteStepIsTheRegularizedOptimum) {
  Rng rng(41);
  const SupportPtr s = Support::Indexed(5);
  const auto ref = random_distribution(rng, s);
  const DiscreteDistribution degenerate(s, {0.0, 0.0, 1.0, 0.0, 0.0});
  const auto g = RandomDerivative(rng, 5);
  const auto next = exact_prox_step(degenerate, g, 0.5, kInf, ref);
  std::vector<double> expected(5);
  for (std::size_t k = 0; k < 5; ++k) expected[k] = ref[k] * std::exp(g[k] / 0.5);
  const auto oracle = DiscreteDistribution::FromUnnormalized(s, expected);
  EXPECT_LT(tv_distance(next, oracle), 1e-14);
  EXPECT_THROW(exact_prox_step(degenerate, g, 0.0, kInf, ref), std::invalid_argument);
}

TEST(ProxStepTest, Errors) {
  const SupportPtr s = Support::Indexed(3);
  const auto u = DiscreteDistribution::Uniform(s);
  const DiscreteDistribution hole(s, {0.5, 0.5, 0.0});
  const DerivativeVector g{{0.1, 0.2, 0.3}};
  EXPECT_THROW(exact_prox_step(hole, g, 0.1, 1.0, u), std::invalid_argument);
  EXPECT_THROW(exact_prox_step(u, g, 0.1, 1.0, hole), std::invalid_argument);
  EXPECT_THROW(exact_prox_step(u, g, 0.1, 0.0, u), std::invalid_argument);
  EXPECT_THROW(exact_prox_step(u, DerivativeVector{{1.0}}, 0.1, 1.0, u),
               std::invalid_argument);
}

TEST(ProxStepTest, StationarityResidual) {
  Rng rng(42);
  for (int trial = 0; trial < 200; ++trial) {
    const SupportPtr s = Support::Indexed(2 + trial % 40);
    const auto pi = random_distribution(rng, s);
    const auto ref = random_distribution(rng, s);
    const auto g = RandomDerivative(rng, s->size());
    const double beta = trial % 4 ? std::pow(10.0, -3.0 + 3.0 * rng.uniform()) : 0.0;
    const double eta = std::pow(10.0, -2.0 + 4.0 * rng.uniform());
    const auto next = exact_prox_step(pi, g, beta, eta, ref);
    EXPECT_LE(prox_residual_span(next, pi, g.values, beta, eta, ref), 1e-8);
  }
}

// 𝓖[π̄] + βKL(π̄|ref) + L·KL(π̄|π_t) ≤ 𝓖[π] + βKL(π|ref) + L·KL(π|π_t)
//   - (L+β)·KL(π|π̄), with 𝓖 = -⟨g, ·⟩ and η = 1/L.
TEST(ProxStepTest, ThreePointInequality) {
  Rng rng(43);
  for (int trial = 0; trial < 100; ++trial) {
    const SupportPtr s = Support::Indexed(3 + trial % 10);
    const auto pi_t = random_distribution(rng, s);
    const auto ref = random_distribution(rng, s);
    const auto test = random_distribution(rng, s, trial % 2 ? 0.0 : 0.05);
    const auto g = RandomDerivative(rng, s->size());
    const double lip = 0.5 + 10.0 * rng.uniform();
    const double beta = 0.01 + rng.uniform();
    const auto bar = exact_prox_step(pi_t, g, beta, 1.0 / lip, ref);
    auto surrogate = [&](const DiscreteDistribution& p) {
      double lin = 0.0;
      for (std::size_t k = 0; k < p.size(); ++k) lin -= g[k] * p[k];
      return lin + beta * kl_divergence(p, ref) + lip * kl_divergence(p, pi_t);
    };
    EXPECT_LE(surrogate(bar),
              surrogate(test) - (lip + beta) * kl_divergence(test, bar) + 1e-10);
  }
}

ProblemSpec RandomProblem(Rng& rng, std::size_t k, TransformSpec a, TransformSpec b,
                          Aggregator agg, double beta) {
  const SupportPtr s = Support::Indexed(k);
  return ProblemSpec{
      MakeObjective(s, {random_rewards(rng, k), random_rewards(rng, k)}, {a, b}, agg),
      random_distribution(rng, s, 0.1), beta};
}

TEST(RunExactTest, ZeroIterations) {
  Rng rng(44);
  const auto problem = RandomProblem(rng, 8, BestOfN{2}, BestOfN{3}, HardMin{}, 0.1);
  SolverConfig config;
  config.iterations = 0;
  const auto traj = run_exact(problem, config);
  ASSERT_EQ(traj.records.size(), 1u);
  EXPECT_EQ(traj.records[0].t, 0u);
  EXPECT_EQ(traj.records[0].kl_ref, 0.0);
  EXPECT_FALSE(traj.records[0].residual_span.has_value());
  EXPECT_LT(tv_distance(traj.final_policy, problem.reference), 1e-15);
}

TEST(RunExactTest, MonotoneDescentAndStationarity) {
  Rng rng(45);
  const std::vector<Aggregator> aggregators = {WeightedSum{{0.5, 0.5}},
                                               SmoothMin{5.0, {0.3, 0.7}}};
  for (int trial = 0; trial < 20; ++trial) {
    const auto problem =
        RandomProblem(rng, 32, BestOfN{2 + trial % 3}, BestOfPoisson{1.0 + trial % 2},
                      aggregators[trial % 2], trial % 2 ? 0.1 : 0.01);
    SolverConfig config;
    config.iterations = 60;
    const auto traj = run_exact(problem, config);
    ASSERT_EQ(traj.records.size(), 61u);
    EXPECT_DOUBLE_EQ(traj.eta, 1.0 / smoothness_constant(*problem.objective));
    for (std::size_t t = 0; t + 1 < traj.records.size(); ++t) {
      EXPECT_LE(traj.records[t + 1].loss, traj.records[t].loss + 1e-10);
      ASSERT_TRUE(traj.records[t].residual_span.has_value());
      EXPECT_LE(*traj.records[t].residual_span, 1e-8);
    }
    EXPECT_NEAR(problem.loss(traj.final_policy), traj.records.back().loss, 1e-15);
  }
}

TEST(RunExactTest, RecordsDistanceToKnownOptimum) {
  Rng rng(46);
  const auto problem =
      RandomProblem(rng, 16, BestOfN{2}, BestOfN{2}, WeightedSum{{0.5, 0.5}}, 0.1);
  SolverConfig config;
  config.iterations = 3000;
  const auto reference_run = run_exact(problem, config);
  config.iterations = 50;
  config.optimum = reference_run.final_policy;
  const auto traj = run_exact(problem, config);
  ASSERT_TRUE(traj.records.front().kl_opt.has_value());
  EXPECT_LT(*traj.records.back().kl_opt, *traj.records.front().kl_opt);
}

TEST(BoundTest, Values) {
  EXPECT_NEAR(theorem1_bound(0.1, 1.0, 10, 1.0), 0.1 / (std::pow(1.1, 10) - 1.0), 1e-15);
  EXPECT_NEAR(theorem1_bound(0.1, 1.0, 10, 1.0), 0.06274539488251152, 1e-14);
  EXPECT_LT(theorem1_bound(0.1, 1.0, 10000, 1.0), 1e-300);
  EXPECT_GE(theorem1_bound(0.1, 1.0, 10000, 1.0), 0.0);
  // Small β/L stays accurate: first-order term βKL₀/(Tβ/L) = L·KL₀/T.
  EXPECT_NEAR(theorem1_bound(1e-12, 2.0, 5, 1.0), 2.0 / 5.0, 1e-9);
  EXPECT_THROW(theorem1_bound(0.1, 1.0, 0, 1.0), std::invalid_argument);
  EXPECT_THROW(theorem1_bound(0.0, 1.0, 10, 1.0), std::invalid_argument);
  EXPECT_THROW(theorem1_bound(0.1, 0.0, 10, 1.0), std::invalid_argument);
  EXPECT_THROW(theorem2_bound(0.0, 1.0, 10, 1.0, 0.0, 0.0), std::invalid_argument);
}

TEST(BoundTest, InexactStructure) {
  for (double beta : {0.01, 0.1, 1.0}) {
    for (std::size_t t : {1u, 7u, 200u}) {
      EXPECT_EQ(theorem2_bound(beta, 3.0, t, 0.4, 0.0, 0.0),
                theorem1_bound(beta / 2.0, 3.0, t, 0.4));
      const double extra = theorem2_bound(beta, 3.0, t, 0.4, 0.25, 0.5) -
                           theorem2_bound(beta, 3.0, t, 0.4, 0.0, 0.0);
      EXPECT_NEAR(extra, 2.0 * 0.75 / beta, 1e-12 * (1.0 + extra));
    }
  }
}

TEST(HatTTest, SingleStep) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    EXPECT_EQ(sample_hat_t(1, 0.3, 1.0, seed), 1u);
  }
}

TEST(HatTTest, UniformWithoutRegularization) {
  const std::size_t t_max = 4;
  std::vector<double> freq(t_max, 0.0);
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    const std::size_t t = sample_hat_t(t_max, 0.0, 1.0, static_cast<std::uint64_t>(i));
    ASSERT_GE(t, 1u);
    ASSERT_LE(t, t_max);
    freq[t - 1] += 1.0 / draws;
  }
  for (double f : freq) EXPECT_NEAR(f, 0.25, 0.01);
}

TEST(HatTTest, StrongRegularizationFavoursTheLastStep) {
  const auto w = hat_t_weights(5, 10.0, 1.0);
  EXPECT_NEAR(w[4], 7776.0 / 9330.0, 1e-15);
  EXPECT_GT(w[4], 0.8);
  int last = 0;
  for (std::uint64_t seed = 0; seed < 20000; ++seed) last += sample_hat_t(5, 10.0, 1.0, seed) == 5;
  EXPECT_NEAR(last / 20000.0, 7776.0 / 9330.0, 0.01);
  EXPECT_EQ(sample_hat_t(5, 10.0, 1.0, 77), sample_hat_t(5, 10.0, 1.0, 77));
  EXPECT_THROW(hat_t_weights(0, 1.0, 1.0), std::invalid_argument);
}

TEST(KlControllerTest, Arithmetic) {
  EXPECT_EQ(kl_controller_step(0.05, 0.1, 0.1), 0.05);
  EXPECT_DOUBLE_EQ(kl_controller_step(0.05, 0.2, 0.1), 0.05 * 1.02);
  EXPECT_DOUBLE_EQ(kl_controller_step(0.05, 0.0, 0.1), 0.05 * 0.98);
  EXPECT_DOUBLE_EQ(kl_controller_step(0.05, 0.11, 0.1), 0.05 * (1.0 + 0.1 * 0.1));
  EXPECT_THROW(kl_controller_step(0.0, 0.1, 0.1), std::invalid_argument);
  EXPECT_THROW(kl_controller_step(0.1, 0.1, 0.0), std::invalid_argument);
}

TEST(RunEmpiricalTest, DeterministicGivenSeed) {
  Rng rng(47);
  const auto problem =
      RandomProblem(rng, 12, BestOfN{3}, SoftBestOfN{0.5}, WeightedSum{{0.5, 0.5}}, 0.1);
  SolverConfig config;
  config.mode = SolverMode::kEmpirical;
  config.iterations = 30;
  config.samples = 8;
  config.seed = 9;
  const auto a = solve(problem, config);
  const auto b = solve(problem, config);
  for (std::size_t t = 0; t < a.records.size(); ++t) {
    EXPECT_EQ(a.records[t].loss, b.records[t].loss);
  }
  EXPECT_EQ(std::vector<double>(a.final_policy.weights().begin(), a.final_policy.weights().end()),
            std::vector<double>(b.final_policy.weights().begin(), b.final_policy.weights().end()));
  config.seed = 10;
  EXPECT_NE(solve(problem, config).records.back().loss, a.records.back().loss);
  config.samples = 1;
  EXPECT_THROW(solve(problem, config), std::invalid_argument);
}

TEST(RunEmpiricalTest, ApproachesExactWithManySamples) {
  Rng rng(48);
  const auto problem =
      RandomProblem(rng, 16, BestOfN{2}, BestOfN{4}, WeightedSum{{0.5, 0.5}}, 0.1);
  SolverConfig config;
  config.iterations = 50;
  const auto exact = run_exact(problem, config);
  config.mode = SolverMode::kEmpirical;
  config.samples = 10000;
  const auto approx = run_empirical(problem, config);
  EXPECT_LT(tv_distance(approx.final_policy, exact.final_policy), 0.05);
}

TEST(RunEmpiricalTest, DerivativeErrorWithinSampleBound) {
  Rng rng(49);
  const auto problem =
      RandomProblem(rng, 64, BestOfN{4}, BestOfN{4}, WeightedSum{{0.5, 0.5}}, 0.1);
  SolverConfig config;
  config.mode = SolverMode::kEmpirical;
  config.iterations = 100;
  config.samples = 16;
  const auto traj = run_empirical(problem, config);
  double mean = 0.0;
  for (std::size_t t = 0; t + 1 < traj.records.size(); ++t) {
    const double e = *traj.records[t].derivative_error_span;
    mean += e * e / config.iterations;
    EXPECT_LE(*traj.records[t].residual_span, 1e-8);
  }
  EXPECT_GT(mean, 0.0);
  EXPECT_LE(mean, 144.0 / 16.0);
}

TEST(RunParametricTest, SmallStepFollowsPolicyGradient) {
  Rng rng(50);
  const std::size_t k = 10;
  const auto problem =
      RandomProblem(rng, k, BestOfN{3}, BestOfN{2}, WeightedSum{{0.5, 0.5}}, 0.0);
  SolverConfig config;
  config.mode = SolverMode::kParametric;
  config.iterations = 1;
  config.inner_steps = 1;
  config.learning_rate = 1e-6;
  config.clip_epsilon = kInf;
  config.samples = 64;
  config.seed = 3;
  const auto traj = run_parametric(problem, config);

  const auto& pi0 = problem.reference;
  Rng sampler(derive_seed(config.seed, 2, 0));
  const auto samples = sample_indices(pi0, config.samples, sampler);
  const auto linear = problem.objective->linearized(samples);
  double mean = 0.0;
  for (double v : linear) mean += v / linear.size();
  // ∇_θ (1/M) Σ A_j log softmax(θ)[y_j] = (1/M) Σ A_j (e_{y_j} - π).
  std::vector<double> oracle(k, 0.0);
  for (std::size_t j = 0; j < samples.size(); ++j) {
    const double a = linear[j] - mean;
    for (std::size_t i = 0; i < k; ++i) {
      oracle[i] += a * ((i == samples[j] ? 1.0 : 0.0) - pi0[i]) / samples.size();
    }
  }
  std::vector<double> step(k);
  for (std::size_t i = 0; i < k; ++i) step[i] = std::log(traj.final_policy[i] / pi0[i]);
  auto center = [](std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m += x / v.size();
    for (double& x : v) x -= m;
  };
  center(oracle);
  center(step);
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    dot += oracle[i] * step[i];
    na += oracle[i] * oracle[i];
    nb += step[i] * step[i];
  }
  EXPECT_GT(dot / std::sqrt(na * nb), 0.99);
}

TEST(RunParametricTest, EqualRewardsLeaveThePolicyUnchanged) {
  Rng rng(51);
  const SupportPtr s = Support::Indexed(6);
  const std::vector<double> flat(6, 0.5);
  for (bool scale : {false, true}) {
    const ProblemSpec problem{
        MakeObjective(s, {flat}, {BestOfN{4}}, WeightedSum{{1.0}}),
        random_distribution(rng, s, 0.1), 0.0};
    SolverConfig config;
    config.mode = SolverMode::kParametric;
    config.iterations = 5;
    config.scale_advantages = scale;
    const auto traj = run_parametric(problem, config);
    EXPECT_LT(tv_distance(traj.final_policy, problem.reference), 1e-14);
  }
}

TEST(RunParametricTest, ImprovesRewardAndIsDeterministic) {
  Rng rng(52);
  const auto problem =
      RandomProblem(rng, 20, BestOfN{4}, BestOfN{4}, SmoothMin{2.0, {0.5, 0.5}}, 0.01);
  SolverConfig config;
  config.mode = SolverMode::kParametric;
  config.iterations = 200;
  config.seed = 4;
  config.eta_eff = 0.1;
  const auto a = run_parametric(problem, config);
  const auto b = run_parametric(problem, config);
  EXPECT_GT(a.records.back().reward, a.records.front().reward);
  EXPECT_EQ(a.records.back().loss, b.records.back().loss);
  EXPECT_TRUE(a.records.front().residual_span.has_value());
  EXPECT_TRUE(a.records.front().derivative_error_span.has_value());
}

// Soft check: the controller is empirical, so a miss only warns.
TEST(KlControllerTest, HoldsKlNearTargetOnToy) {
  auto problem = toy_problem(4, 101, 0.05);
  SolverConfig config;
  config.iterations = 400;
  config.kl.enabled = true;
  config.kl.target = 0.05;
  const auto traj = run_exact(problem, config);
  int outside = 0;
  for (std::size_t t = 200; t < traj.records.size(); ++t) {
    const double kl = traj.records[t].kl_ref;
    outside += kl < 0.5 * config.kl.target || kl > 2.0 * config.kl.target;
    EXPECT_GT(traj.records[t].beta, 0.0);
  }
  if (outside > 0) {
    std::cerr << "warning: KL left [0.5, 2]·target on " << outside
              << " post-burn-in iterations\n";
  }
  EXPECT_NE(traj.records.back().beta, 0.05);
}

}  // namespace
}  // namespace iama
