#ifndef IAMA_DERIVATIVES_HPP_
#define IAMA_DERIVATIVES_HPP_

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <variant>
#include <vector>

#include "iama/measures.hpp"
#include "iama/transforms.hpp"

namespace iama {

// Aggregation g(R_1, ..., R_m) of per-objective expected rewards.
struct WeightedSum {
  std::vector<double> weights;
};
// -(1/γ) log Σ w_i exp(-γ R_i).
struct SmoothMin {
  double gamma = 1.0;
  std::vector<double> weights;
};
// min_i R_i; the subgradient picks the lowest argmin index.
struct HardMin {};

using Aggregator = std::variant<WeightedSum, SmoothMin, HardMin>;

void validate(const Aggregator& aggregator, std::size_t num_objectives);
std::string to_string(const Aggregator& aggregator);

double aggregate_value(std::span<const double> components,
                       const Aggregator& aggregator);
// ∂g/∂R_i at the given components.
std::vector<double> aggregate_gradient(std::span<const double> components,
                                       const Aggregator& aggregator);

// First-order variation ∂R/∂π[π](y_k). Defined up to an additive constant;
// the formulas here are not recentered.
struct DerivativeVector {
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t k) const { return values[k]; }
  // ⟨d, p - q⟩.
  double pair(const DiscreteDistribution& p, const DiscreteDistribution& q) const;
};

// -∫_{r(y)}^{r_max} f(C[π](r)) dr, evaluated exactly for the piecewise
// constant discrete CDF with one reverse pass over the reward levels.
DerivativeVector tilt_derivative(const DiscreteDistribution& pi, RewardView reward,
                                 const TiltFunction& tilt);
DerivativeVector bon_derivative(const DiscreteDistribution& pi, RewardView reward,
                                int n);
DerivativeVector bop_derivative(const DiscreteDistribution& pi, RewardView reward,
                                double lambda);
DerivativeVector softbon_derivative(const DiscreteDistribution& pi,
                                    RewardView reward, double tau);
DerivativeVector transform_derivative(const DiscreteDistribution& pi,
                                      RewardView reward, const TransformSpec& spec);

// Chain rule Σ_i ∂g/∂R_i · d_i.
DerivativeVector aggregate_derivative(std::span<const double> components,
                                      std::span<const DerivativeVector> derivatives,
                                      const Aggregator& aggregator);

// Linearized rewards at M sampled reward values: the functional derivative
// at the empirical distribution of the samples, O(M log M) for BoN.
std::vector<double> bon_linearized_rewards(std::span<const double> rewards, int n);
// Same reverse pass with a general BoN-type tilt (used for BoP).
std::vector<double> tilt_linearized_rewards(std::span<const double> rewards,
                                            const TiltFunction& tilt);
// O(M) Soft BoN variant.
std::vector<double> softbon_linearized_rewards(std::span<const double> rewards,
                                               double tau);
std::vector<double> linearized_rewards(std::span<const double> rewards,
                                       const TransformSpec& spec);

using Functional = std::function<double(const DiscreteDistribution&)>;

struct FiniteDifference {
  double value = 0.0;
  bool central = true;  // false when the backward point left the simplex
};

// d/dε R[π + ε(π' - π)] by central differences; falls back to a forward
// difference when π - ε(π' - π) is not a distribution.
FiniteDifference finite_difference_directional(const Functional& objective,
                                               const DiscreteDistribution& pi,
                                               const DiscreteDistribution& target,
                                               double epsilon = 1e-6);

// Per trial: span_seminorm(dR[π̂] - dR[π])² for BoN with M samples.
std::vector<double> dkw_error_sample(const DiscreteDistribution& pi,
                                     RewardView reward, int n, std::size_t samples,
                                     std::size_t trials, std::uint64_t seed);

// R[π] = g(R_1[π], ..., R_m[π]) over a reward table, one transform per reward.
class IamaObjective {
 public:
  IamaObjective(std::shared_ptr<const RewardTable> rewards,
                std::vector<TransformSpec> transforms, Aggregator aggregator);

  const RewardTable& rewards() const { return *rewards_; }
  const std::shared_ptr<const RewardTable>& rewards_ptr() const { return rewards_; }
  const std::vector<TransformSpec>& transforms() const { return transforms_; }
  const Aggregator& aggregator() const { return aggregator_; }
  std::size_t num_objectives() const { return transforms_.size(); }

  std::vector<double> components(const DiscreteDistribution& pi) const;
  double value(const DiscreteDistribution& pi) const;
  DerivativeVector derivative(const DiscreteDistribution& pi) const;

  // Aggregated linearized rewards at sampled support indices. The aggregation
  // weights are taken at the empirical distribution of the samples.
  std::vector<double> linearized(std::span<const std::size_t> samples) const;

 private:
  std::shared_ptr<const RewardTable> rewards_;
  std::vector<TransformSpec> transforms_;
  Aggregator aggregator_;
};

}  // namespace iama

#endif  // IAMA_DERIVATIVES_HPP_
