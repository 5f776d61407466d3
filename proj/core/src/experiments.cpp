#include "iama/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace iama {
namespace {

std::string cell(double v) { return format_number(v); }
std::string cell(std::size_t v) { return format_number(static_cast<std::uint64_t>(v)); }
std::string cell(int v) { return format_number(static_cast<std::int64_t>(v)); }

DiscreteDistribution nearest_point_mass(const SupportPtr& support, double target) {
  std::size_t best = 0;
  for (std::size_t k = 1; k < support->size(); ++k) {
    if (std::abs(support->point(k) - target) < std::abs(support->point(best) - target)) {
      best = k;
    }
  }
  return DiscreteDistribution::PointMass(support, best);
}

}  // namespace

ProblemSpec toy_problem(int n, std::size_t grid, double beta) {
  if (n < 1) throw std::invalid_argument("toy problem needs N >= 1");
  if (grid < 2) throw std::invalid_argument("toy problem needs K >= 2");
  const SupportPtr support = Support::Grid(grid);
  std::vector<double> r1(grid), r2(grid);
  for (std::size_t k = 0; k < grid; ++k) {
    const double y = support->point(k);
    r1[k] = 1.0 - y * y;
    r2[k] = 1.0 - (1.0 - y) * (1.0 - y);
  }
  auto table = std::make_shared<const RewardTable>(
      support, std::vector<std::vector<double>>{std::move(r1), std::move(r2)},
      std::vector<double>{1.0, 1.0});
  auto objective = std::make_shared<const IamaObjective>(
      std::move(table), std::vector<TransformSpec>{BestOfN{n}, BestOfN{n}},
      WeightedSum{{0.5, 0.5}});
  return ProblemSpec{std::move(objective), DiscreteDistribution::Uniform(support), beta};
}

DiscreteDistribution toy_optimal_policy(int n, std::size_t grid) {
  if (n < 2) throw std::invalid_argument("closed-form optimum needs N >= 2");
  if (grid < 2) throw std::invalid_argument("closed-form optimum needs K >= 2");
  const double alpha = 1.0 / (n - 1.0);
  auto cdf = [alpha](double e) {
    if (e <= 0.0) return 0.0;
    if (e >= 1.0) return 1.0;
    const double a = std::pow(e, alpha);
    const double b = std::pow(1.0 - e, alpha);
    return a / (a + b);
  };
  std::vector<double> weights(grid);
  const double k_size = static_cast<double>(grid);
  auto at = [&](std::size_t i) { return cdf(static_cast<double>(i) / k_size); };
  for (std::size_t k = 0; k < grid; ++k) {
    // Difference on the side of 0.5 where C* is small keeps y ↔ 1-y exact.
    if (2 * (k + 1) <= grid) {
      weights[k] = at(k + 1) - at(k);
    } else if (2 * k >= grid) {
      weights[k] = at(grid - k) - at(grid - k - 1);
    } else {
      weights[k] = (0.5 - at(k)) + (0.5 - at(grid - k - 1));
    }
  }
  return DiscreteDistribution::FromUnnormalized(Support::Grid(grid), std::move(weights));
}

ToyResult run_toy(const ToySpec& spec) {
  const ProblemSpec problem = toy_problem(spec.n, spec.grid, spec.beta);
  const SupportPtr& support = problem.reference.support();
  const DiscreteDistribution star = spec.n >= 2
                                        ? toy_optimal_policy(spec.n, spec.grid)
                                        : nearest_point_mass(support, 0.5);
  // Same support object so every comparison below is pointer-equal.
  const DiscreteDistribution pi_star(
      support, std::vector<double>(star.weights().begin(), star.weights().end()));

  ToyResult result{{}, {}, {}, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, solve(problem, spec.solver)};
  const DiscreteDistribution& final_policy = result.trajectory.final_policy;
  result.y.assign(support->points().begin(), support->points().end());
  result.pi_final.assign(final_policy.weights().begin(), final_policy.weights().end());
  result.pi_star.assign(pi_star.weights().begin(), pi_star.weights().end());
  result.tv = tv_distance(final_policy, pi_star);
  result.final_objective = problem.objective->value(final_policy);
  result.oracle_objective = problem.objective->value(pi_star);
  result.final_loss = problem.loss(final_policy);
  result.oracle_loss = problem.loss(pi_star);
  result.eta = result.trajectory.eta;
  return result;
}

CsvTable toy_csv(const ToyResult& result) {
  CsvTable table({"y", "pi_final", "pi_star"});
  for (std::size_t k = 0; k < result.y.size(); ++k) {
    table.add_row({cell(result.y[k]), cell(result.pi_final[k]), cell(result.pi_star[k])});
  }
  return table;
}

double beta_study_truth(int n, double alpha) {
  const double a = n * alpha;
  return a / (a + 1.0) - n / (n + 1.0);
}

double beta_study_estimate(std::span<const double> samples, int n, double alpha,
                           Centering centering) {
  const std::size_t m = samples.size();
  if (m == 0) throw std::invalid_argument("beta study needs M >= 1");
  const std::vector<double> linear = bon_linearized_rewards(samples, n);
  double center = 0.0;
  if (centering == Centering::kGroup) {
    for (double v : linear) center += v;
    center /= static_cast<double>(m);
  } else {
    // ∫_0^1 d(y) dy for d(y) = -∫_y^1 f(Ĉ(r)) dr, shifted to the
    // linearized-reward convention (zero at the largest sample).
    std::vector<double> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end());
    const TiltFunction tilt = TiltFunction::BestOfN(n);
    double integral = 0.0;
    double lower = 0.0;
    for (std::size_t i = 0; i <= m; ++i) {
      const double upper = i < m ? sorted[i] : 1.0;
      integral -= tilt.density(static_cast<double>(i) / static_cast<double>(m)) *
                  (upper * upper - lower * lower) / 2.0;
      lower = upper;
    }
    center = integral + tilt.density(1.0) * (1.0 - sorted.back());
  }
  double estimate = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    estimate += (linear[j] - center) * (alpha * std::pow(samples[j], alpha - 1.0) - 1.0);
  }
  return estimate / static_cast<double>(m);
}

std::vector<BetaRow> run_beta_study(const BetaStudySpec& spec) {
  if (spec.trials < 1) throw std::invalid_argument("beta study needs trials >= 1");
  const double alpha = 1.0 + spec.alpha_offset;
  std::vector<BetaRow> rows;
  for (int n : spec.n_list) {
    if (n < 1) throw std::invalid_argument("beta study needs N >= 1");
    const double truth = beta_study_truth(n, alpha);
    for (std::size_t m : spec.m_list) {
      if (m < 1) throw std::invalid_argument("beta study needs M >= 1");
      Rng rng(derive_seed(spec.seed, static_cast<std::uint64_t>(n), m));
      std::vector<double> estimates(spec.trials);
      std::vector<double> samples(m);
      for (double& est : estimates) {
        for (double& y : samples) y = rng.uniform();
        est = beta_study_estimate(samples, n, alpha, spec.centering);
      }
      const double trials = static_cast<double>(spec.trials);
      double mean = 0.0;
      for (double e : estimates) mean += e;
      mean /= trials;
      double mse = 0.0;
      double variance = 0.0;
      for (double e : estimates) {
        mse += (e - truth) * (e - truth);
        variance += (e - mean) * (e - mean);
      }
      rows.push_back({n, m, mse / trials, (mean - truth) * (mean - truth),
                      variance / trials, truth, mean});
    }
  }
  return rows;
}

CsvTable beta_csv(const std::vector<BetaRow>& rows) {
  CsvTable table({"n", "m", "mse", "bias_sq", "variance"});
  for (const auto& r : rows) {
    table.add_row({cell(r.n), cell(r.m), cell(r.mse), cell(r.bias_sq), cell(r.variance)});
  }
  return table;
}

std::vector<DkwRow> run_dkw_study(const DkwStudySpec& spec) {
  const SupportPtr support = Support::Grid(spec.grid);
  const std::vector<double> values(support->points().begin(), support->points().end());
  const RewardView reward{values, 1.0};
  const DiscreteDistribution pi = DiscreteDistribution::Uniform(support);
  std::vector<DkwRow> rows;
  for (int n : spec.n_list) {
    const double lip = static_cast<double>(n) * (n - 1.0);
    for (std::size_t m : spec.m_list) {
      const std::vector<double> errors = dkw_error_sample(
          pi, reward, n, m, spec.trials,
          derive_seed(spec.seed, static_cast<std::uint64_t>(n), m));
      double mean = 0.0;
      for (double e : errors) mean += e;
      mean /= static_cast<double>(errors.size());
      rows.push_back({n, m, mean, lip * lip * reward.r_max * reward.r_max /
                                      static_cast<double>(m)});
    }
  }
  return rows;
}

CsvTable dkw_csv(const std::vector<DkwRow>& rows) {
  CsvTable table({"n", "m", "mean_sq_error", "bound"});
  for (const auto& r : rows) {
    table.add_row({cell(r.n), cell(r.m), cell(r.mean_sq_error), cell(r.bound)});
  }
  return table;
}

ProblemSpec random_bon_instance(std::size_t grid, int n, double beta,
                                std::uint64_t seed) {
  Rng rng(seed);
  const SupportPtr support = Support::Grid(grid);
  std::vector<std::vector<double>> values(2, std::vector<double>(grid));
  for (auto& reward : values) {
    for (double& v : reward) v = rng.uniform();
  }
  const double w = rng.uniform();
  std::vector<double> reference(grid);
  for (double& p : reference) p = 0.1 + rng.uniform();
  auto table = std::make_shared<const RewardTable>(support, std::move(values),
                                                   std::vector<double>{1.0, 1.0});
  auto objective = std::make_shared<const IamaObjective>(
      std::move(table), std::vector<TransformSpec>{BestOfN{n}, BestOfN{n}},
      WeightedSum{{w, 1.0 - w}});
  return ProblemSpec{std::move(objective),
                     DiscreteDistribution::FromUnnormalized(support, std::move(reference)),
                     beta};
}

RateCheckResult run_rate_check(const RateCheckSpec& spec) {
  if (spec.iterations < 1) throw std::invalid_argument("rate check needs T >= 1");
  RateCheckResult result;
  std::size_t instance = 0;
  for (std::size_t draw = 0; draw < spec.draws; ++draw) {
    for (int n : spec.n_list) {
      for (double beta : spec.beta_list) {
        if (!(beta > 0.0)) throw std::invalid_argument("rate check needs beta > 0");
        const ProblemSpec problem = random_bon_instance(
            spec.grid, n, beta, derive_seed(spec.seed, 3, draw * 1000 + static_cast<std::uint64_t>(n)));
        const double lip = smoothness_constant(*problem.objective);

        SolverConfig reference_config;
        reference_config.iterations = spec.reference_iterations;
        const Trajectory reference = run_exact(problem, reference_config);
        const DiscreteDistribution& optimum = reference.final_policy;
        const double optimal_loss = problem.loss(optimum);
        const double kl0 = kl_divergence(optimum, problem.reference);
        result.instances.push_back({instance, n, beta, lip, kl0});

        SolverConfig config;
        config.iterations = spec.iterations;
        config.optimum = optimum;
        const Trajectory exact = run_exact(problem, config);
        double previous_gap = INFINITY;
        for (std::size_t t = 1; t <= spec.iterations; ++t) {
          const IterationRecord& record = exact.records[t];
          const double gap = record.loss - optimal_loss;
          const double bound = theorem1_bound(beta, lip, t, kl0);
          if (gap > bound * (1.0 + 1e-9)) ++result.bound_violations;
          if (gap > previous_gap + 1e-12) ++result.monotonicity_violations;
          previous_gap = gap;
          result.rows.push_back({instance, t, gap, bound, *record.kl_opt});
        }

        if (spec.empirical) {
          const std::vector<double> weights = hat_t_weights(spec.iterations, beta, lip);
          EmpiricalRateRow row;
          row.instance = instance;
          double error_sq = 0.0;
          double residual_sq = 0.0;
          std::size_t count = 0;
          for (std::size_t s = 0; s < spec.empirical_seeds; ++s) {
            SolverConfig noisy = config;
            noisy.mode = SolverMode::kEmpirical;
            noisy.samples = spec.samples;
            noisy.optimum.reset();
            noisy.seed = derive_seed(spec.seed, 4, instance * 1000 + s);
            const Trajectory run = run_empirical(problem, noisy);
            for (std::size_t t = 1; t <= spec.iterations; ++t) {
              row.expected_gap += weights[t - 1] * (run.records[t].loss - optimal_loss);
            }
            for (std::size_t t = 0; t < spec.iterations; ++t) {
              const double e = *run.records[t].derivative_error_span;
              const double r = *run.records[t].residual_span;
              error_sq += e * e;
              residual_sq += r * r;
              ++count;
            }
          }
          row.expected_gap /= static_cast<double>(spec.empirical_seeds);
          row.epsilon = error_sq / static_cast<double>(count);
          row.delta = residual_sq / static_cast<double>(count);
          row.bound = theorem2_bound(beta, lip, spec.iterations, kl0, row.epsilon, row.delta);
          if (row.expected_gap > row.bound) ++result.empirical_violations;
          result.empirical.push_back(row);
        }
        ++instance;
      }
    }
  }
  return result;
}

CsvTable rate_csv(const RateCheckResult& result) {
  CsvTable table({"instance", "t", "gap", "bound", "kl_to_opt"});
  for (const auto& r : result.rows) {
    table.add_row({cell(r.instance), cell(r.t), cell(r.gap), cell(r.bound),
                   cell(r.kl_to_opt)});
  }
  return table;
}

}  // namespace iama
