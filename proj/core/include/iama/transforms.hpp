#ifndef IAMA_TRANSFORMS_HPP_
#define IAMA_TRANSFORMS_HPP_

#include <cstddef>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "iama/measures.hpp"

namespace iama {

// Inference-time alignment operators.
struct BestOfN {
  int n = 1;
};
struct SoftBestOfN {
  double tau = 1.0;
};
// Best-of-N with N ~ Poisson(lambda).
struct BestOfPoisson {
  double lambda = 1.0;
};

using TransformSpec = std::variant<BestOfN, SoftBestOfN, BestOfPoisson>;

// Throws std::invalid_argument on out-of-range parameters.
void validate(const TransformSpec& spec);
// "bon:4", "softbon:0.5", "bop:3".
std::string to_string(const TransformSpec& spec);

// Density tilt f of a BoN-type operator T[π](y) = f(C[π](r(y))) π(y),
// together with its antiderivative F and Lipschitz constant on [0, 1].
class TiltFunction {
 public:
  static TiltFunction BestOfN(int n);
  static TiltFunction BestOfPoisson(double lambda);

  double density(double z) const;
  double antiderivative(double z) const;
  double lipschitz() const;

 private:
  enum class Kind { kBestOfN, kBestOfPoisson };
  TiltFunction(Kind kind, double parameter) : kind_(kind), parameter_(parameter) {}

  Kind kind_;
  double parameter_;
};

// Tilt for BoN and BoP; nullopt for Soft BoN.
std::optional<TiltFunction> tilt_of(const TransformSpec& spec);

// Reward values of one objective compressed to sorted unique levels with
// aggregated mass, computed with a stable sort.
struct RewardLevels {
  std::vector<double> values;      // ascending, unique
  std::vector<double> cumulative;  // C at each level: mass with reward <= value
  std::vector<std::size_t> level_of;  // support index -> level
};

RewardLevels reward_levels(std::span<const double> weights,
                           std::span<const double> rewards);

// C[π](r(y_k)) with the weak-inequality convention.
std::vector<double> reward_cdf(const DiscreteDistribution& pi, RewardView reward);

// BoN/BoP: f(C)·π renormalized. Soft BoN: exp(r/τ)·π / Z.
DiscreteDistribution apply_transform(const DiscreteDistribution& pi,
                                     RewardView reward, const TransformSpec& spec);

// R[π] = E_{T[π]} r. BoN uses the exact order-statistics formula; BoP uses
// the CDF-integral form r_max F(1) - ∫ F(C) dr; Soft BoN the tilted mean.
double expected_reward(const DiscreteDistribution& pi, RewardView reward,
                       const TransformSpec& spec);

// Σ r(y) T[π](y) using apply_transform (the f(C)·π path for BoN/BoP).
double tilted_expected_reward(const DiscreteDistribution& pi, RewardView reward,
                              const TransformSpec& spec);

// E[max_{j<=N} r(Y_j)] = Σ_u u (C(u)^N - C(u-)^N) over reward levels.
double bon_order_statistics_reward(const DiscreteDistribution& pi,
                                   RewardView reward, int n);

// r_max F(1) - ∫_0^{r_max} F(C[π](r)) dr for a BoN-type tilt.
double cdf_integral_reward(const DiscreteDistribution& pi, RewardView reward,
                           const TiltFunction& tilt);

// Enumerates all K^N ordered tuples. Refuses K^N > 1e7.
double brute_force_bon(const DiscreteDistribution& pi, RewardView reward, int n);

// order 0: log Σ π e^{r/τ}; order 1: d/dλ of it at λ = 1/τ (the Soft BoN
// expected reward).
double softbon_log_partition(const DiscreteDistribution& pi, RewardView reward,
                             double tau, int order);

}  // namespace iama

#endif  // IAMA_TRANSFORMS_HPP_
