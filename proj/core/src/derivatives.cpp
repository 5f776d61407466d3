#include "iama/derivatives.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace iama {
namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void validate_simplex_weights(std::span<const double> weights, std::size_t m,
                              bool strictly_positive) {
  if (weights.size() != m) {
    throw std::invalid_argument("aggregator needs one weight per objective");
  }
  double total = 0.0;
  for (double w : weights) {
    if (strictly_positive ? !(w > 0.0) : !(w >= 0.0)) {
      throw std::invalid_argument("aggregator weights out of range");
    }
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw std::invalid_argument("aggregator weights must sum to one");
  }
}

// Softmax of log w_i - γ R_i.
std::vector<double> smooth_min_weights(std::span<const double> components,
                                       const SmoothMin& s) {
  std::vector<double> logits(components.size());
  for (std::size_t i = 0; i < logits.size(); ++i) {
    logits[i] = std::log(s.weights[i]) - s.gamma * components[i];
  }
  const double top = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (double& l : logits) {
    l = std::exp(l - top);
    total += l;
  }
  for (double& l : logits) l /= total;
  return logits;
}

}  // namespace

void validate(const Aggregator& aggregator, std::size_t num_objectives) {
  if (num_objectives == 0) throw std::invalid_argument("no objectives");
  std::visit(Overloaded{
                 [&](const WeightedSum& s) {
                   validate_simplex_weights(s.weights, num_objectives, false);
                 },
                 [&](const SmoothMin& s) {
                   if (!(s.gamma > 0.0)) {
                     throw std::invalid_argument("smooth min needs gamma > 0");
                   }
                   validate_simplex_weights(s.weights, num_objectives, true);
                 },
                 [](const HardMin&) {},
             },
             aggregator);
}

std::string to_string(const Aggregator& aggregator) {
  std::ostringstream out;
  auto weights = [&](const std::vector<double>& w) {
    for (std::size_t i = 0; i < w.size(); ++i) out << (i ? "," : "") << w[i];
  };
  std::visit(Overloaded{
                 [&](const WeightedSum& s) {
                   out << "sum:";
                   weights(s.weights);
                 },
                 [&](const SmoothMin& s) {
                   out << "smoothmin:" << s.gamma << ":";
                   weights(s.weights);
                 },
                 [&](const HardMin&) { out << "min"; },
             },
             aggregator);
  return out.str();
}

double aggregate_value(std::span<const double> components,
                       const Aggregator& aggregator) {
  validate(aggregator, components.size());
  return std::visit(
      Overloaded{
          [&](const WeightedSum& s) {
            return std::inner_product(components.begin(), components.end(),
                                      s.weights.begin(), 0.0);
          },
          [&](const SmoothMin& s) {
            double top = -INFINITY;
            for (std::size_t i = 0; i < components.size(); ++i) {
              top = std::max(top, std::log(s.weights[i]) - s.gamma * components[i]);
            }
            double total = 0.0;
            for (std::size_t i = 0; i < components.size(); ++i) {
              total += std::exp(std::log(s.weights[i]) - s.gamma * components[i] - top);
            }
            return -(top + std::log(total)) / s.gamma;
          },
          [&](const HardMin&) {
            return *std::min_element(components.begin(), components.end());
          },
      },
      aggregator);
}

std::vector<double> aggregate_gradient(std::span<const double> components,
                                       const Aggregator& aggregator) {
  validate(aggregator, components.size());
  return std::visit(
      Overloaded{
          [&](const WeightedSum& s) { return s.weights; },
          [&](const SmoothMin& s) { return smooth_min_weights(components, s); },
          [&](const HardMin&) {
            std::vector<double> g(components.size(), 0.0);
            g[static_cast<std::size_t>(
                std::min_element(components.begin(), components.end()) -
                components.begin())] = 1.0;
            return g;
          },
      },
      aggregator);
}

double DerivativeVector::pair(const DiscreteDistribution& p,
                              const DiscreteDistribution& q) const {
  if (p.size() != values.size() || q.size() != values.size()) {
    throw std::invalid_argument("derivative and distributions differ in size");
  }
  double total = 0.0;
  for (std::size_t k = 0; k < values.size(); ++k) total += values[k] * (p[k] - q[k]);
  return total;
}

DerivativeVector tilt_derivative(const DiscreteDistribution& pi, RewardView reward,
                                 const TiltFunction& tilt) {
  if (pi.size() != reward.values.size()) {
    throw std::invalid_argument("reward vector does not match the support");
  }
  const RewardLevels levels = reward_levels(pi.weights(), reward.values);
  const std::size_t count = levels.values.size();
  std::vector<double> per_level(count);
  // C = 1 on [u_top, r_max].
  double tail = tilt.density(1.0) * (reward.r_max - levels.values[count - 1]);
  per_level[count - 1] = -tail;
  for (std::size_t j = count - 1; j-- > 0;) {
    const double c = std::min(levels.cumulative[j], 1.0);
    tail += tilt.density(c) * (levels.values[j + 1] - levels.values[j]);
    per_level[j] = -tail;
  }
  DerivativeVector out{std::vector<double>(pi.size())};
  for (std::size_t k = 0; k < pi.size(); ++k) {
    out.values[k] = per_level[levels.level_of[k]];
  }
  return out;
}

DerivativeVector bon_derivative(const DiscreteDistribution& pi, RewardView reward,
                                int n) {
  return tilt_derivative(pi, reward, TiltFunction::BestOfN(n));
}

DerivativeVector bop_derivative(const DiscreteDistribution& pi, RewardView reward,
                                double lambda) {
  return tilt_derivative(pi, reward, TiltFunction::BestOfPoisson(lambda));
}

DerivativeVector softbon_derivative(const DiscreteDistribution& pi,
                                    RewardView reward, double tau) {
  if (pi.size() != reward.values.size()) {
    throw std::invalid_argument("reward vector does not match the support");
  }
  if (!(tau > 0.0)) throw std::invalid_argument("Soft BoN needs tau > 0");
  double shift = -INFINITY;
  for (std::size_t k = 0; k < pi.size(); ++k) {
    if (pi[k] > 0.0) shift = std::max(shift, reward.values[k] / tau);
  }
  std::vector<double> tilt(pi.size());
  double z = 0.0;
  double weighted = 0.0;
  for (std::size_t k = 0; k < pi.size(); ++k) {
    tilt[k] = std::exp(reward.values[k] / tau - shift);
    if (pi[k] > 0.0) {
      z += tilt[k] * pi[k];
      weighted += reward.values[k] * tilt[k] * pi[k];
    }
  }
  const double mean = weighted / z;
  DerivativeVector out{std::vector<double>(pi.size())};
  for (std::size_t k = 0; k < pi.size(); ++k) {
    out.values[k] = reward.values[k] * tilt[k] / z - tilt[k] * mean / z;
  }
  return out;
}

DerivativeVector transform_derivative(const DiscreteDistribution& pi,
                                      RewardView reward, const TransformSpec& spec) {
  validate(spec);
  if (const auto* soft = std::get_if<SoftBestOfN>(&spec)) {
    return softbon_derivative(pi, reward, soft->tau);
  }
  return tilt_derivative(pi, reward, *tilt_of(spec));
}

DerivativeVector aggregate_derivative(std::span<const double> components,
                                      std::span<const DerivativeVector> derivatives,
                                      const Aggregator& aggregator) {
  if (components.size() != derivatives.size() || derivatives.empty()) {
    throw std::invalid_argument("one derivative per objective is required");
  }
  const std::size_t k = derivatives.front().size();
  for (const auto& d : derivatives) {
    if (d.size() != k) throw std::invalid_argument("derivative sizes differ");
  }
  const std::vector<double> grad = aggregate_gradient(components, aggregator);
  DerivativeVector out{std::vector<double>(k, 0.0)};
  for (std::size_t i = 0; i < derivatives.size(); ++i) {
    if (grad[i] == 0.0) continue;
    for (std::size_t j = 0; j < k; ++j) {
      out.values[j] += grad[i] * derivatives[i].values[j];
    }
  }
  return out;
}

std::vector<double> bon_linearized_rewards(std::span<const double> rewards, int n) {
  if (rewards.empty()) throw std::invalid_argument("no sampled rewards");
  if (n < 1) throw std::invalid_argument("BoN needs N >= 1");
  const std::size_t m = rewards.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return rewards[a] < rewards[b];
  });

  std::vector<double> out(m, 0.0);
  double cumulative = 0.0;
  double next = rewards[order[m - 1]];
  for (std::size_t i = m; i >= 1; --i) {
    const double current = rewards[order[i - 1]];
    const double q = static_cast<double>(i) / static_cast<double>(m);
    cumulative += n * std::pow(q, n - 1) * (next - current);
    out[order[i - 1]] = -cumulative;
    next = current;
  }
  return out;
}

std::vector<double> tilt_linearized_rewards(std::span<const double> rewards,
                                            const TiltFunction& tilt) {
  if (rewards.empty()) throw std::invalid_argument("no sampled rewards");
  const std::size_t m = rewards.size();
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return rewards[a] < rewards[b];
  });

  std::vector<double> out(m, 0.0);
  double cumulative = 0.0;
  double next = rewards[order[m - 1]];
  for (std::size_t i = m; i >= 1; --i) {
    const double current = rewards[order[i - 1]];
    const double q = static_cast<double>(i) / static_cast<double>(m);
    cumulative += tilt.density(q) * (next - current);
    out[order[i - 1]] = -cumulative;
    next = current;
  }
  return out;
}

std::vector<double> softbon_linearized_rewards(std::span<const double> rewards,
                                               double tau) {
  if (rewards.empty()) throw std::invalid_argument("no sampled rewards");
  if (!(tau > 0.0)) throw std::invalid_argument("Soft BoN needs tau > 0");
  const double m = static_cast<double>(rewards.size());
  const double shift = *std::max_element(rewards.begin(), rewards.end()) / tau;
  std::vector<double> tilt(rewards.size());
  double z = 0.0;
  for (std::size_t j = 0; j < rewards.size(); ++j) {
    tilt[j] = std::exp(rewards[j] / tau - shift);
    z += tilt[j];
  }
  z /= m;
  double mean = 0.0;
  for (std::size_t j = 0; j < rewards.size(); ++j) mean += rewards[j] * tilt[j] / z;
  mean /= m;
  std::vector<double> out(rewards.size());
  for (std::size_t j = 0; j < rewards.size(); ++j) {
    out[j] = rewards[j] * tilt[j] / z - tilt[j] * mean / z;
  }
  return out;
}

std::vector<double> linearized_rewards(std::span<const double> rewards,
                                       const TransformSpec& spec) {
  validate(spec);
  return std::visit(
      Overloaded{
          [&](const BestOfN& s) { return bon_linearized_rewards(rewards, s.n); },
          [&](const SoftBestOfN& s) { return softbon_linearized_rewards(rewards, s.tau); },
          [&](const BestOfPoisson& s) {
            return tilt_linearized_rewards(rewards, TiltFunction::BestOfPoisson(s.lambda));
          },
      },
      spec);
}

FiniteDifference finite_difference_directional(const Functional& objective,
                                               const DiscreteDistribution& pi,
                                               const DiscreteDistribution& target,
                                               double epsilon) {
  if (!same_support(pi, target)) throw std::invalid_argument("support mismatch");
  if (!(epsilon > 0.0 && epsilon <= 1.0)) {
    throw std::invalid_argument("perturbation must lie in (0, 1]");
  }
  const std::size_t k = pi.size();
  std::vector<double> forward(k);
  std::vector<double> backward(k);
  bool central = true;
  for (std::size_t j = 0; j < k; ++j) {
    const double direction = target[j] - pi[j];
    forward[j] = pi[j] + epsilon * direction;
    backward[j] = pi[j] - epsilon * direction;
    if (backward[j] < 0.0) {
      if (backward[j] < -1e-15) central = false;
      backward[j] = 0.0;
    }
    forward[j] = std::max(forward[j], 0.0);
  }
  const DiscreteDistribution plus(pi.support(), std::move(forward));
  if (central) {
    const DiscreteDistribution minus(pi.support(), std::move(backward));
    return {(objective(plus) - objective(minus)) / (2.0 * epsilon), true};
  }
  return {(objective(plus) - objective(pi)) / epsilon, false};
}

std::vector<double> dkw_error_sample(const DiscreteDistribution& pi,
                                     RewardView reward, int n, std::size_t samples,
                                     std::size_t trials, std::uint64_t seed) {
  if (samples < 2) throw std::invalid_argument("DKW study needs M >= 2");
  const DerivativeVector exact = bon_derivative(pi, reward, n);
  std::vector<double> errors(trials);
  std::vector<double> difference(pi.size());
  for (std::size_t t = 0; t < trials; ++t) {
    Rng rng(derive_seed(seed, 0xd4b, t));
    const auto indices = sample_indices(pi, samples, rng);
    const DerivativeVector approx =
        bon_derivative(empirical_distribution(indices, pi.support()), reward, n);
    for (std::size_t k = 0; k < pi.size(); ++k) {
      difference[k] = approx[k] - exact[k];
    }
    const double s = span_seminorm(difference);
    errors[t] = s * s;
  }
  return errors;
}

IamaObjective::IamaObjective(std::shared_ptr<const RewardTable> rewards,
                             std::vector<TransformSpec> transforms,
                             Aggregator aggregator)
    : rewards_(std::move(rewards)),
      transforms_(std::move(transforms)),
      aggregator_(std::move(aggregator)) {
  if (!rewards_) throw std::invalid_argument("objective needs a reward table");
  if (transforms_.size() != rewards_->num_objectives()) {
    throw std::invalid_argument("one transform per reward is required");
  }
  for (const auto& t : transforms_) validate(t);
  validate(aggregator_, transforms_.size());
}

std::vector<double> IamaObjective::components(const DiscreteDistribution& pi) const {
  std::vector<double> out(transforms_.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = expected_reward(pi, rewards_->objective(i), transforms_[i]);
  }
  return out;
}

double IamaObjective::value(const DiscreteDistribution& pi) const {
  return aggregate_value(components(pi), aggregator_);
}

DerivativeVector IamaObjective::derivative(const DiscreteDistribution& pi) const {
  std::vector<DerivativeVector> parts;
  parts.reserve(transforms_.size());
  for (std::size_t i = 0; i < transforms_.size(); ++i) {
    parts.push_back(transform_derivative(pi, rewards_->objective(i), transforms_[i]));
  }
  // Only the non-linear aggregators need the component values.
  if (std::holds_alternative<WeightedSum>(aggregator_)) {
    return aggregate_derivative(std::vector<double>(parts.size(), 0.0), parts,
                                aggregator_);
  }
  return aggregate_derivative(components(pi), parts, aggregator_);
}

std::vector<double> IamaObjective::linearized(
    std::span<const std::size_t> samples) const {
  if (samples.empty()) throw std::invalid_argument("no samples");
  std::vector<double> grad;
  if (std::holds_alternative<WeightedSum>(aggregator_)) {
    grad = std::get<WeightedSum>(aggregator_).weights;
  } else {
    grad = aggregate_gradient(
        components(empirical_distribution(samples, rewards_->support())), aggregator_);
  }
  std::vector<double> out(samples.size(), 0.0);
  std::vector<double> sampled(samples.size());
  for (std::size_t i = 0; i < transforms_.size(); ++i) {
    if (grad[i] == 0.0) continue;
    const RewardView reward = rewards_->objective(i);
    for (std::size_t j = 0; j < samples.size(); ++j) {
      sampled[j] = reward.values[samples[j]];
    }
    const std::vector<double> part = linearized_rewards(sampled, transforms_[i]);
    for (std::size_t j = 0; j < samples.size(); ++j) out[j] += grad[i] * part[j];
  }
  return out;
}

}  // namespace iama
