#include "iama/optimizers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace iama {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

struct ObjectiveScale {
  double lipschitz;   // L_i
  double derivative;  // bound on the span of dR_i
};

ObjectiveScale scale_of(const TransformSpec& spec, double r_max) {
  return std::visit(
      Overloaded{
          [&](const BestOfN& s) {
            const double n = s.n;
            return ObjectiveScale{n * (n - 1.0) * r_max, n * r_max};
          },
          [&](const SoftBestOfN& s) {
            return ObjectiveScale{r_max * r_max / s.tau, r_max};
          },
          [&](const BestOfPoisson& s) {
            return ObjectiveScale{s.lambda * s.lambda * r_max, s.lambda * r_max};
          },
      },
      spec);
}

double resolve_eta(const ProblemSpec& problem, const SolverConfig& config) {
  if (config.eta) {
    if (!(*config.eta > 0.0)) throw std::invalid_argument("step size must be > 0");
    return *config.eta;
  }
  return default_step_size(*problem.objective);
}

DiscreteDistribution initial_policy(const ProblemSpec& problem,
                                    const SolverConfig& config) {
  const DiscreteDistribution& pi0 = config.initial ? *config.initial : problem.reference;
  if (!same_support(pi0, problem.reference)) {
    throw std::invalid_argument("initial policy lives on a different support");
  }
  return pi0;
}

void validate_config(const SolverConfig& config) {
  if (config.mode != SolverMode::kExact && config.samples < 1) {
    throw std::invalid_argument("sampled solvers need M >= 1");
  }
  if (!(config.clip_epsilon > 0.0)) {
    throw std::invalid_argument("clip epsilon must be positive");
  }
  if (config.kl.enabled && !(config.kl.target > 0.0)) {
    throw std::invalid_argument("KL controller needs a positive target");
  }
}

IterationRecord make_record(const ProblemSpec& problem, const SolverConfig& config,
                            std::size_t t, const DiscreteDistribution& pi,
                            double beta) {
  IterationRecord record;
  record.t = t;
  record.components = problem.objective->components(pi);
  record.reward = aggregate_value(record.components, problem.objective->aggregator());
  record.kl_ref = kl_divergence(pi, problem.reference);
  record.loss = -record.reward + beta * record.kl_ref;
  record.beta = beta;
  if (config.optimum) record.kl_opt = kl_divergence(*config.optimum, pi);
  return record;
}

double next_beta(const SolverConfig& config, double beta,
                 const DiscreteDistribution& next,
                 const DiscreteDistribution& reference) {
  if (!config.kl.enabled) return beta;
  return kl_controller_step(beta, kl_divergence(next, reference), config.kl.target,
                            config.kl.gain, config.kl.clip);
}

std::vector<double> softmax(std::span<const double> logits) {
  const double top = *std::max_element(logits.begin(), logits.end());
  std::vector<double> p(logits.size());
  double total = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    p[k] = std::exp(logits[k] - top);
    total += p[k];
  }
  for (double& v : p) v /= total;
  return p;
}

}  // namespace

void ProblemSpec::validate() const {
  if (!objective) throw std::invalid_argument("problem needs an objective");
  if (!(reference.support() == objective->rewards().support() ||
        *reference.support() == *objective->rewards().support())) {
    throw std::invalid_argument("reference policy lives on a different support");
  }
  if (!(beta >= 0.0) || !std::isfinite(beta)) {
    throw std::invalid_argument("beta must be finite and >= 0");
  }
}

double ProblemSpec::loss(const DiscreteDistribution& pi, double beta_t) const {
  const double kl = beta_t == 0.0 ? 0.0 : kl_divergence(pi, reference);
  return -objective->value(pi) + beta_t * kl;
}

std::string to_string(SolverMode mode) {
  switch (mode) {
    case SolverMode::kExact:
      return "exact";
    case SolverMode::kEmpirical:
      return "empirical";
    case SolverMode::kParametric:
      return "parametric";
  }
  return "exact";
}

SolverMode parse_solver_mode(const std::string& name) {
  if (name == "exact") return SolverMode::kExact;
  if (name == "empirical") return SolverMode::kEmpirical;
  if (name == "parametric") return SolverMode::kParametric;
  throw std::invalid_argument("unknown solver mode '" + name + "'");
}

double smoothness_constant(const IamaObjective& objective) {
  const std::size_t m = objective.num_objectives();
  std::vector<ObjectiveScale> scales;
  scales.reserve(m);
  for (std::size_t i = 0; i < m; ++i) {
    scales.push_back(scale_of(objective.transforms()[i], objective.rewards().r_max(i)));
  }
  return std::visit(
      Overloaded{
          [&](const WeightedSum& s) {
            double total = 0.0;
            for (std::size_t i = 0; i < m; ++i) total += s.weights[i] * scales[i].lipschitz;
            return total;
          },
          [&](const SmoothMin& s) {
            double lip = 0.0;
            double slope = 0.0;
            for (const auto& sc : scales) {
              lip = std::max(lip, sc.lipschitz);
              slope = std::max(slope, sc.derivative);
            }
            return lip + 0.25 * s.gamma * slope * slope;
          },
          [&](const HardMin&) {
            double lip = 0.0;
            for (const auto& sc : scales) lip = std::max(lip, sc.lipschitz);
            return lip;
          },
      },
      objective.aggregator());
}

double default_step_size(const IamaObjective& objective) {
  const double lip = smoothness_constant(objective);
  return lip > 0.0 ? 1.0 / lip : kInf;
}

DiscreteDistribution exact_prox_step(const DiscreteDistribution& pi_t,
                                     const DerivativeVector& g, double beta,
                                     double eta, const DiscreteDistribution& reference) {
  if (!same_support(pi_t, reference)) throw std::invalid_argument("support mismatch");
  if (g.size() != pi_t.size()) throw std::invalid_argument("derivative size mismatch");
  if (!(eta > 0.0)) throw std::invalid_argument("step size must be > 0");
  if (!(beta >= 0.0)) throw std::invalid_argument("beta must be >= 0");
  const bool pure_pull = std::isinf(eta);
  if ((!pure_pull && !pi_t.strictly_positive()) || !reference.strictly_positive()) {
    throw std::invalid_argument("prox step needs strictly positive policies");
  }
  double w_ref, w_cur, w_g;
  if (pure_pull) {
    if (beta == 0.0) throw std::invalid_argument("eta = inf requires beta > 0");
    w_ref = 1.0;
    w_cur = 0.0;
    w_g = 1.0 / beta;
  } else {
    const double denom = 1.0 + beta * eta;
    w_ref = beta * eta / denom;
    w_cur = 1.0 / denom;
    w_g = eta / denom;
  }
  std::vector<double> logits(pi_t.size());
  for (std::size_t k = 0; k < logits.size(); ++k) {
    logits[k] = w_ref * std::log(reference[k]) + w_g * g[k];
    if (w_cur != 0.0) logits[k] += w_cur * std::log(pi_t[k]);
  }
  return DiscreteDistribution::FromLogWeights(pi_t.support(), logits);
}

double prox_residual_span(const DiscreteDistribution& next,
                          const DiscreteDistribution& pi_t, std::span<const double> g,
                          double beta, double eta,
                          const DiscreteDistribution& reference) {
  const double inv_eta = std::isinf(eta) ? 0.0 : 1.0 / eta;
  // Points where the update underflowed to zero mass carry no condition.
  std::vector<double> residual;
  residual.reserve(next.size());
  for (std::size_t k = 0; k < next.size(); ++k) {
    if (next[k] == 0.0) continue;
    double r = -g[k] + beta * std::log(next[k] / reference[k]);
    if (inv_eta != 0.0) r += inv_eta * std::log(next[k] / pi_t[k]);
    residual.push_back(r);
  }
  return span_seminorm(residual);
}

DerivativeVector sampled_derivative(const IamaObjective& objective,
                                    std::span<const std::size_t> samples) {
  const DiscreteDistribution empirical =
      empirical_distribution(samples, objective.rewards().support());
  DerivativeVector g = objective.derivative(empirical);
  const std::vector<double> linear = objective.linearized(samples);
  const double shift = linear[0] - g[samples[0]];
  for (double& v : g.values) v += shift;
  return g;
}

Trajectory run_exact(const ProblemSpec& problem, const SolverConfig& config) {
  problem.validate();
  validate_config(config);
  const double eta = resolve_eta(problem, config);
  DiscreteDistribution pi = initial_policy(problem, config);
  double beta = problem.beta;
  std::vector<IterationRecord> records;
  records.reserve(config.iterations + 1);
  for (std::size_t t = 0;; ++t) {
    IterationRecord record = make_record(problem, config, t, pi, beta);
    if (t == config.iterations) {
      records.push_back(std::move(record));
      break;
    }
    const DerivativeVector g = problem.objective->derivative(pi);
    DiscreteDistribution next = exact_prox_step(pi, g, beta, eta, problem.reference);
    record.residual_span =
        prox_residual_span(next, pi, g.values, beta, eta, problem.reference);
    records.push_back(std::move(record));
    beta = next_beta(config, beta, next, problem.reference);
    pi = std::move(next);
  }
  return Trajectory{eta, std::move(records), std::move(pi)};
}

Trajectory run_empirical(const ProblemSpec& problem, const SolverConfig& config) {
  problem.validate();
  validate_config(config);
  if (config.samples < 2) throw std::invalid_argument("empirical mode needs M >= 2");
  const double eta = resolve_eta(problem, config);
  DiscreteDistribution pi = initial_policy(problem, config);
  double beta = problem.beta;
  std::vector<IterationRecord> records;
  records.reserve(config.iterations + 1);
  for (std::size_t t = 0;; ++t) {
    IterationRecord record = make_record(problem, config, t, pi, beta);
    if (t == config.iterations) {
      records.push_back(std::move(record));
      break;
    }
    Rng rng(derive_seed(config.seed, 1, t));
    const auto samples = sample_indices(pi, config.samples, rng);
    const DerivativeVector noisy = sampled_derivative(*problem.objective, samples);
    const DerivativeVector exact = problem.objective->derivative(pi);
    std::vector<double> error(pi.size());
    for (std::size_t k = 0; k < error.size(); ++k) error[k] = noisy[k] - exact[k];
    record.derivative_error_span = span_seminorm(error);

    DiscreteDistribution next = exact_prox_step(pi, noisy, beta, eta, problem.reference);
    record.residual_span =
        prox_residual_span(next, pi, noisy.values, beta, eta, problem.reference);
    records.push_back(std::move(record));
    beta = next_beta(config, beta, next, problem.reference);
    pi = std::move(next);
  }
  return Trajectory{eta, std::move(records), std::move(pi)};
}

Trajectory run_parametric(const ProblemSpec& problem, const SolverConfig& config) {
  problem.validate();
  validate_config(config);
  if (!(config.learning_rate > 0.0)) {
    throw std::invalid_argument("learning rate must be > 0");
  }
  const double eta = resolve_eta(problem, config);
  const double eta_eff = config.eta_eff.value_or(eta);
  const SupportPtr& support = problem.reference.support();
  const std::size_t k_size = support->size();
  DiscreteDistribution pi = initial_policy(problem, config);
  if (!pi.strictly_positive()) {
    throw std::invalid_argument("softmax policy needs a strictly positive start");
  }
  std::vector<double> logits(k_size);
  for (std::size_t k = 0; k < k_size; ++k) logits[k] = std::log(pi[k]);

  const std::size_t m = config.samples;
  const double inv_m = 1.0 / static_cast<double>(m);
  const double eps = config.clip_epsilon;
  double beta = problem.beta;
  std::vector<IterationRecord> records;
  records.reserve(config.iterations + 1);
  std::vector<double> advantages(m);
  std::vector<double> grad(k_size);

  for (std::size_t t = 0;; ++t) {
    IterationRecord record = make_record(problem, config, t, pi, beta);
    if (t == config.iterations) {
      records.push_back(std::move(record));
      break;
    }
    Rng rng(derive_seed(config.seed, 2, t));
    const auto samples = sample_indices(pi, m, rng);
    const std::vector<double> linear = problem.objective->linearized(samples);
    const double mean = std::accumulate(linear.begin(), linear.end(), 0.0) * inv_m;
    double scale = 1.0;
    if (config.scale_advantages) {
      double var = 0.0;
      for (double v : linear) var += (v - mean) * (v - mean);
      scale = std::max(std::sqrt(var * inv_m), 1e-8);
    }
    for (std::size_t j = 0; j < m; ++j) advantages[j] = (linear[j] - mean) / scale;

    for (std::size_t step = 0; step < config.inner_steps; ++step) {
      const std::vector<double> current = softmax(logits);
      std::fill(grad.begin(), grad.end(), 0.0);
      double total = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        const std::size_t y = samples[j];
        const double rho = current[y] / pi[y];
        const double a = advantages[j];
        const bool clipped = (a > 0.0 && rho > 1.0 + eps) || (a < 0.0 && rho < 1.0 - eps);
        double coef = clipped ? 0.0 : a * rho;
        coef += beta * (problem.reference[y] / current[y] - 1.0);
        grad[y] += coef;
        total += coef;
      }
      for (std::size_t k = 0; k < k_size; ++k) {
        logits[k] += config.learning_rate * inv_m * (grad[k] - current[k] * total);
      }
    }
    const double top = *std::max_element(logits.begin(), logits.end());
    for (double& l : logits) l -= top;

    DiscreteDistribution next = DiscreteDistribution::FromLogWeights(support, logits);
    if (!next.strictly_positive()) {
      throw std::runtime_error("softmax policy underflowed to zero mass");
    }
    const DerivativeVector noisy = sampled_derivative(*problem.objective, samples);
    record.residual_span =
        prox_residual_span(next, pi, noisy.values, beta, eta_eff, problem.reference);
    const DerivativeVector exact = problem.objective->derivative(pi);
    std::vector<double> error(k_size);
    for (std::size_t k = 0; k < k_size; ++k) error[k] = noisy[k] - exact[k];
    record.derivative_error_span = span_seminorm(error);
    records.push_back(std::move(record));
    beta = next_beta(config, beta, next, problem.reference);
    pi = std::move(next);
  }
  return Trajectory{eta, std::move(records), std::move(pi)};
}

Trajectory solve(const ProblemSpec& problem, const SolverConfig& config) {
  switch (config.mode) {
    case SolverMode::kExact:
      return run_exact(problem, config);
    case SolverMode::kEmpirical:
      return run_empirical(problem, config);
    case SolverMode::kParametric:
      return run_parametric(problem, config);
  }
  throw std::invalid_argument("unknown solver mode");
}

double kl_controller_step(double beta, double kl, double target, double gain,
                          double clip) {
  if (!(beta > 0.0)) throw std::invalid_argument("KL controller needs beta > 0");
  if (!(target > 0.0)) throw std::invalid_argument("KL controller needs target > 0");
  const double e = std::clamp((kl - target) / target, -clip, clip);
  return beta * (1.0 + gain * e);
}

namespace {

double geometric_first_term(double beta, double lipschitz, std::size_t t, double kl0) {
  if (t == 0) throw std::invalid_argument("bound is vacuous at T = 0");
  if (!(beta > 0.0)) throw std::invalid_argument("bound requires beta > 0");
  if (!(lipschitz > 0.0)) throw std::invalid_argument("bound requires L > 0");
  // ((L+β)/L)^T - 1 = expm1(T log1p(β/L)), accurate for small β/L.
  const double growth = std::expm1(static_cast<double>(t) * std::log1p(beta / lipschitz));
  return beta * kl0 / growth;
}

}  // namespace

double theorem1_bound(double beta, double lipschitz, std::size_t t, double kl0) {
  return geometric_first_term(beta, lipschitz, t, kl0);
}

double theorem2_bound(double beta, double lipschitz, std::size_t t, double kl0,
                      double epsilon, double delta) {
  return geometric_first_term(0.5 * beta, lipschitz, t, kl0) +
         2.0 * (epsilon + delta) / beta;
}

std::vector<double> hat_t_weights(std::size_t t_max, double beta, double lipschitz) {
  if (t_max == 0) throw std::invalid_argument("T must be >= 1");
  if (!(beta >= 0.0)) throw std::invalid_argument("beta must be >= 0");
  if (!(lipschitz > 0.0)) throw std::invalid_argument("L must be > 0");
  const double log_ratio = std::log1p(0.5 * beta / lipschitz);
  std::vector<double> weights(t_max);
  double total = 0.0;
  for (std::size_t t = 1; t <= t_max; ++t) {
    weights[t - 1] =
        std::exp((static_cast<double>(t) - static_cast<double>(t_max)) * log_ratio);
    total += weights[t - 1];
  }
  for (double& w : weights) w /= total;
  return weights;
}

std::size_t sample_hat_t(std::size_t t_max, double beta, double lipschitz,
                         std::uint64_t seed) {
  const std::vector<double> weights = hat_t_weights(t_max, beta, lipschitz);
  std::vector<double> cumulative(weights.size());
  std::partial_sum(weights.begin(), weights.end(), cumulative.begin());
  Rng rng(seed);
  const double u = rng.uniform() * cumulative.back();
  const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
  return std::min(static_cast<std::size_t>(it - cumulative.begin()), t_max - 1) + 1;
}

}  // namespace iama
