#include "iama/transforms.hpp"

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

void require_matching(const DiscreteDistribution& pi, RewardView reward) {
  if (pi.size() != reward.values.size()) {
    throw std::invalid_argument("reward vector does not match the support");
  }
}

// exp(r/τ - shift)·π with the shift taken over points carrying mass.
std::vector<double> softmax_tilt(std::span<const double> weights,
                                 std::span<const double> rewards, double tau) {
  double shift = -INFINITY;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (weights[k] > 0.0) shift = std::max(shift, rewards[k] / tau);
  }
  std::vector<double> tilted(weights.size(), 0.0);
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (weights[k] > 0.0) tilted[k] = std::exp(rewards[k] / tau - shift) * weights[k];
  }
  return tilted;
}

}  // namespace

void validate(const TransformSpec& spec) {
  std::visit(Overloaded{
                 [](const BestOfN& s) {
                   if (s.n < 1) throw std::invalid_argument("BoN needs N >= 1");
                 },
                 [](const SoftBestOfN& s) {
                   if (!(s.tau > 0.0) || !std::isfinite(s.tau)) {
                     throw std::invalid_argument("Soft BoN needs tau > 0");
                   }
                 },
                 [](const BestOfPoisson& s) {
                   if (!(s.lambda > 0.0) || !std::isfinite(s.lambda)) {
                     throw std::invalid_argument("BoP needs lambda > 0");
                   }
                 },
             },
             spec);
}

std::string to_string(const TransformSpec& spec) {
  std::ostringstream out;
  std::visit(Overloaded{
                 [&](const BestOfN& s) { out << "bon:" << s.n; },
                 [&](const SoftBestOfN& s) { out << "softbon:" << s.tau; },
                 [&](const BestOfPoisson& s) { out << "bop:" << s.lambda; },
             },
             spec);
  return out.str();
}

TiltFunction TiltFunction::BestOfN(int n) {
  if (n < 1) throw std::invalid_argument("BoN needs N >= 1");
  return TiltFunction(Kind::kBestOfN, static_cast<double>(n));
}

TiltFunction TiltFunction::BestOfPoisson(double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("BoP needs lambda > 0");
  return TiltFunction(Kind::kBestOfPoisson, lambda);
}

double TiltFunction::density(double z) const {
  switch (kind_) {
    case Kind::kBestOfN:
      return parameter_ * std::pow(z, parameter_ - 1.0);
    case Kind::kBestOfPoisson:
      return parameter_ * std::exp(parameter_ * (z - 1.0));
  }
  return 0.0;
}

double TiltFunction::antiderivative(double z) const {
  switch (kind_) {
    case Kind::kBestOfN:
      return std::pow(z, parameter_);
    case Kind::kBestOfPoisson:
      return std::exp(parameter_ * (z - 1.0));
  }
  return 0.0;
}

double TiltFunction::lipschitz() const {
  switch (kind_) {
    case Kind::kBestOfN:
      return parameter_ * (parameter_ - 1.0);
    case Kind::kBestOfPoisson:
      return parameter_ * parameter_;
  }
  return 0.0;
}

std::optional<TiltFunction> tilt_of(const TransformSpec& spec) {
  return std::visit(
      Overloaded{
          [](const BestOfN& s) -> std::optional<TiltFunction> {
            return TiltFunction::BestOfN(s.n);
          },
          [](const SoftBestOfN&) -> std::optional<TiltFunction> {
            return std::nullopt;
          },
          [](const BestOfPoisson& s) -> std::optional<TiltFunction> {
            return TiltFunction::BestOfPoisson(s.lambda);
          },
      },
      spec);
}

RewardLevels reward_levels(std::span<const double> weights,
                           std::span<const double> rewards) {
  if (weights.size() != rewards.size()) {
    throw std::invalid_argument("reward vector does not match the weights");
  }
  std::vector<std::size_t> order(rewards.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return rewards[a] < rewards[b];
  });

  RewardLevels levels;
  levels.level_of.resize(rewards.size());
  double running = 0.0;
  for (std::size_t index : order) {
    running += weights[index];
    if (levels.values.empty() || rewards[index] != levels.values.back()) {
      levels.values.push_back(rewards[index]);
      levels.cumulative.push_back(running);
    } else {
      levels.cumulative.back() = running;
    }
    levels.level_of[index] = levels.values.size() - 1;
  }
  return levels;
}

std::vector<double> reward_cdf(const DiscreteDistribution& pi, RewardView reward) {
  require_matching(pi, reward);
  const RewardLevels levels = reward_levels(pi.weights(), reward.values);
  std::vector<double> cdf(pi.size());
  for (std::size_t k = 0; k < cdf.size(); ++k) {
    cdf[k] = levels.cumulative[levels.level_of[k]];
  }
  return cdf;
}

DiscreteDistribution apply_transform(const DiscreteDistribution& pi,
                                     RewardView reward, const TransformSpec& spec) {
  require_matching(pi, reward);
  validate(spec);
  if (const auto* soft = std::get_if<SoftBestOfN>(&spec)) {
    return DiscreteDistribution::FromUnnormalized(
        pi.support(), softmax_tilt(pi.weights(), reward.values, soft->tau));
  }
  const TiltFunction tilt = *tilt_of(spec);
  const std::vector<double> cdf = reward_cdf(pi, reward);
  std::vector<double> weights(pi.size());
  for (std::size_t k = 0; k < weights.size(); ++k) {
    weights[k] = pi[k] > 0.0 ? tilt.density(std::min(cdf[k], 1.0)) * pi[k] : 0.0;
  }
  return DiscreteDistribution::FromUnnormalized(pi.support(), std::move(weights));
}

double bon_order_statistics_reward(const DiscreteDistribution& pi,
                                   RewardView reward, int n) {
  require_matching(pi, reward);
  if (n < 1) throw std::invalid_argument("BoN needs N >= 1");
  const RewardLevels levels = reward_levels(pi.weights(), reward.values);
  double value = 0.0;
  double previous = 0.0;
  for (std::size_t j = 0; j < levels.values.size(); ++j) {
    const double current = std::pow(levels.cumulative[j], n);
    value += levels.values[j] * (current - previous);
    previous = current;
  }
  return value;
}

double cdf_integral_reward(const DiscreteDistribution& pi, RewardView reward,
                           const TiltFunction& tilt) {
  require_matching(pi, reward);
  const RewardLevels levels = reward_levels(pi.weights(), reward.values);
  const std::size_t top = levels.values.size() - 1;
  // Above the highest level C = 1, so r_max F(1) - F(1)(r_max - u_top)
  // leaves u_top F(1); below the lowest level C = 0.
  double value = levels.values[top] * tilt.antiderivative(1.0) -
                 levels.values[0] * tilt.antiderivative(0.0);
  for (std::size_t j = 0; j < top; ++j) {
    value -= tilt.antiderivative(levels.cumulative[j]) *
             (levels.values[j + 1] - levels.values[j]);
  }
  return value;
}

double softbon_log_partition(const DiscreteDistribution& pi, RewardView reward,
                             double tau, int order) {
  require_matching(pi, reward);
  if (!(tau > 0.0)) throw std::invalid_argument("Soft BoN needs tau > 0");
  double shift = -INFINITY;
  for (std::size_t k = 0; k < pi.size(); ++k) {
    if (pi[k] > 0.0) shift = std::max(shift, reward.values[k] / tau);
  }
  const std::vector<double> tilted = softmax_tilt(pi.weights(), reward.values, tau);
  const double z = std::accumulate(tilted.begin(), tilted.end(), 0.0);
  if (order == 0) return shift + std::log(z);
  if (order == 1) {
    double mean = 0.0;
    for (std::size_t k = 0; k < pi.size(); ++k) mean += reward.values[k] * tilted[k];
    return mean / z;
  }
  throw std::invalid_argument("derivative order must be 0 or 1");
}

double expected_reward(const DiscreteDistribution& pi, RewardView reward,
                       const TransformSpec& spec) {
  validate(spec);
  return std::visit(
      Overloaded{
          [&](const BestOfN& s) { return bon_order_statistics_reward(pi, reward, s.n); },
          [&](const SoftBestOfN& s) {
            return softbon_log_partition(pi, reward, s.tau, 1);
          },
          [&](const BestOfPoisson& s) {
            return cdf_integral_reward(pi, reward, TiltFunction::BestOfPoisson(s.lambda));
          },
      },
      spec);
}

double tilted_expected_reward(const DiscreteDistribution& pi, RewardView reward,
                              const TransformSpec& spec) {
  const DiscreteDistribution tilted = apply_transform(pi, reward, spec);
  double value = 0.0;
  for (std::size_t k = 0; k < tilted.size(); ++k) {
    value += reward.values[k] * tilted[k];
  }
  return value;
}

double brute_force_bon(const DiscreteDistribution& pi, RewardView reward, int n) {
  require_matching(pi, reward);
  if (n < 1) throw std::invalid_argument("BoN needs N >= 1");
  const std::size_t k = pi.size();
  if (std::pow(static_cast<double>(k), n) > 1e7) {
    throw std::length_error("brute-force BoN limited to K^N <= 1e7 tuples");
  }
  std::vector<std::size_t> tuple(static_cast<std::size_t>(n), 0);
  double value = 0.0;
  while (true) {
    double probability = 1.0;
    double best = -INFINITY;
    for (std::size_t index : tuple) {
      probability *= pi[index];
      best = std::max(best, reward.values[index]);
    }
    value += probability * best;
    std::size_t position = 0;
    while (position < tuple.size() && ++tuple[position] == k) {
      tuple[position++] = 0;
    }
    if (position == tuple.size()) break;
  }
  return value;
}

}  // namespace iama
