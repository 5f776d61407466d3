#ifndef IAMA_OPTIMIZERS_HPP_
#define IAMA_OPTIMIZERS_HPP_

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "iama/derivatives.hpp"
#include "iama/measures.hpp"

namespace iama {

// Loss 𝓛[π] = -R[π] + β KL(π | π_ref).
struct ProblemSpec {
  std::shared_ptr<const IamaObjective> objective;
  DiscreteDistribution reference;
  double beta = 0.0;

  void validate() const;
  double loss(const DiscreteDistribution& pi) const { return loss(pi, beta); }
  double loss(const DiscreteDistribution& pi, double beta_t) const;
};

enum class SolverMode { kExact, kEmpirical, kParametric };

std::string to_string(SolverMode mode);
// "exact", "empirical", "parametric"; throws std::invalid_argument otherwise.
SolverMode parse_solver_mode(const std::string& name);

// e = clip((KL - target)/target, ±clip); β ← β(1 + gain·e).
struct KlControllerConfig {
  bool enabled = false;
  double target = 0.1;
  double gain = 0.1;
  double clip = 0.2;
};

struct SolverConfig {
  SolverMode mode = SolverMode::kExact;
  std::optional<double> eta;  // defaults to 1/L
  std::size_t iterations = 100;
  std::size_t samples = 8;  // M, empirical and parametric modes
  // Parametric mode.
  std::size_t inner_steps = 4;
  double learning_rate = 0.5;
  double clip_epsilon = 0.2;
  bool scale_advantages = false;
  std::optional<double> eta_eff;  // residual bookkeeping; defaults to eta
  KlControllerConfig kl;
  std::uint64_t seed = 0;
  std::optional<DiscreteDistribution> initial;  // defaults to π_ref
  std::optional<DiscreteDistribution> optimum;  // enables KL(π*|π_t)
};

struct IterationRecord {
  std::size_t t = 0;
  double loss = 0.0;
  double reward = 0.0;
  std::vector<double> components;
  double kl_ref = 0.0;
  std::optional<double> kl_opt;
  double beta = 0.0;
  std::optional<double> residual_span;
  std::optional<double> derivative_error_span;
};

struct Trajectory {
  double eta = 0.0;
  std::vector<IterationRecord> records;
  DiscreteDistribution final_policy;
};

// Relative-smoothness constant of R with respect to KL.
double smoothness_constant(const IamaObjective& objective);
// 1/L, or +inf when L = 0.
double default_step_size(const IamaObjective& objective);

// argmin_π -⟨g, π⟩ + β KL(π|π_ref) + (1/η) KL(π|π_t) in closed form:
// π ∝ π_ref^{βη/(1+βη)} π_t^{1/(1+βη)} exp(η g/(1+βη)). η = +inf gives
// π ∝ π_ref exp(g/β).
DiscreteDistribution exact_prox_step(const DiscreteDistribution& pi_t,
                                     const DerivativeVector& g, double beta,
                                     double eta, const DiscreteDistribution& reference);

// span(-g + β log(π_next/π_ref) + (1/η) log(π_next/π_t)).
double prox_residual_span(const DiscreteDistribution& next,
                          const DiscreteDistribution& pi_t, std::span<const double> g,
                          double beta, double eta,
                          const DiscreteDistribution& reference);

Trajectory run_exact(const ProblemSpec& problem, const SolverConfig& config);
Trajectory run_empirical(const ProblemSpec& problem, const SolverConfig& config);
Trajectory run_parametric(const ProblemSpec& problem, const SolverConfig& config);
Trajectory solve(const ProblemSpec& problem, const SolverConfig& config);

// Full-support derivative at the empirical distribution of the samples,
// shifted so its values at the samples equal the linearized rewards.
DerivativeVector sampled_derivative(const IamaObjective& objective,
                                    std::span<const std::size_t> samples);

double kl_controller_step(double beta, double kl, double target,
                          double gain = 0.1, double clip = 0.2);

// β KL₀ / (((L+β)/L)^T - 1).
double theorem1_bound(double beta, double lipschitz, std::size_t t, double kl0);
// (β/2) KL₀ / (((L+β/2)/L)^T - 1) + 2(ε+δ)/β.
double theorem2_bound(double beta, double lipschitz, std::size_t t, double kl0,
                      double epsilon, double delta);

// Draws t ∈ {1..T} with P(t) ∝ ((L+β/2)/L)^t.
std::size_t sample_hat_t(std::size_t t_max, double beta, double lipschitz,
                         std::uint64_t seed);
std::vector<double> hat_t_weights(std::size_t t_max, double beta, double lipschitz);

}  // namespace iama

#endif  // IAMA_OPTIMIZERS_HPP_
