#include "iama/measures.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

namespace iama {

Support::Support(std::vector<double> points) : points_(std::move(points)) {
  if (points_.empty()) throw std::invalid_argument("support must be non-empty");
  std::vector<double> sorted = points_;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw std::invalid_argument("support labels must be unique");
  }
}

SupportPtr Support::Grid(std::size_t size) {
  if (size == 0) throw std::invalid_argument("grid size must be positive");
  std::vector<double> points(size);
  for (std::size_t k = 0; k < size; ++k) {
    points[k] = (static_cast<double>(k) + 0.5) / static_cast<double>(size);
  }
  return std::make_shared<const Support>(std::move(points));
}

SupportPtr Support::Indexed(std::size_t size) {
  if (size == 0) throw std::invalid_argument("support size must be positive");
  std::vector<double> points(size);
  std::iota(points.begin(), points.end(), 0.0);
  return std::make_shared<const Support>(std::move(points));
}

SupportPtr Support::FromPoints(std::vector<double> points) {
  return std::make_shared<const Support>(std::move(points));
}

DiscreteDistribution::DiscreteDistribution(SupportPtr support,
                                           std::vector<double> weights)
    : support_(std::move(support)), weights_(std::move(weights)) {
  if (!support_) throw std::invalid_argument("distribution needs a support");
  if (weights_.size() != support_->size()) {
    throw std::invalid_argument("weight count does not match support size");
  }
  double total = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw std::invalid_argument("weights must be finite and non-negative");
    }
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw std::invalid_argument("weights must sum to one, got " +
                                std::to_string(total));
  }
  for (double& w : weights_) w /= total;
}

DiscreteDistribution DiscreteDistribution::FromUnnormalized(
    SupportPtr support, std::vector<double> weights) {
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw std::invalid_argument("weights must be finite and non-negative");
    }
    total += w;
  }
  if (!(total > 0.0)) throw std::invalid_argument("total weight must be positive");
  for (double& w : weights) w /= total;
  return DiscreteDistribution(std::move(support), std::move(weights));
}

DiscreteDistribution DiscreteDistribution::FromLogWeights(
    SupportPtr support, std::span<const double> log_weights) {
  if (log_weights.empty()) throw std::invalid_argument("empty log weights");
  const double top = *std::max_element(log_weights.begin(), log_weights.end());
  if (!std::isfinite(top)) throw std::invalid_argument("log weights must be finite");
  std::vector<double> weights(log_weights.size());
  for (std::size_t k = 0; k < weights.size(); ++k) {
    weights[k] = std::exp(log_weights[k] - top);
  }
  return FromUnnormalized(std::move(support), std::move(weights));
}

DiscreteDistribution DiscreteDistribution::Uniform(SupportPtr support) {
  const std::size_t n = support->size();
  return DiscreteDistribution(std::move(support),
                              std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

DiscreteDistribution DiscreteDistribution::PointMass(SupportPtr support,
                                                     std::size_t index) {
  if (index >= support->size()) throw std::out_of_range("point mass index");
  std::vector<double> weights(support->size(), 0.0);
  weights[index] = 1.0;
  return DiscreteDistribution(std::move(support), std::move(weights));
}

bool DiscreteDistribution::strictly_positive() const {
  return std::all_of(weights_.begin(), weights_.end(),
                     [](double w) { return w > 0.0; });
}

bool same_support(const DiscreteDistribution& p, const DiscreteDistribution& q) {
  return p.support() == q.support() || *p.support() == *q.support();
}

namespace {

void require_same_support(const DiscreteDistribution& p,
                          const DiscreteDistribution& q) {
  if (!same_support(p, q)) throw std::invalid_argument("support mismatch");
}

}  // namespace

RewardTable::RewardTable(SupportPtr support,
                         std::vector<std::vector<double>> values,
                         std::vector<double> r_max)
    : support_(std::move(support)),
      values_(std::move(values)),
      r_max_(std::move(r_max)) {
  if (values_.empty()) throw std::invalid_argument("need at least one reward");
  if (values_.size() != r_max_.size()) {
    throw std::invalid_argument("one r_max per reward is required");
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (values_[i].size() != support_->size()) {
      throw std::invalid_argument("reward vector length does not match support");
    }
    for (double v : values_[i]) {
      if (!(v >= 0.0 && v <= r_max_[i])) {
        throw std::invalid_argument("reward " + std::to_string(i) +
                                    " leaves [0, r_max]");
      }
    }
  }
}

RewardTable::View RewardTable::objective(std::size_t i) const {
  return View{values_.at(i), r_max_.at(i)};
}

double kl_divergence(const DiscreteDistribution& p,
                     const DiscreteDistribution& q) {
  require_same_support(p, q);
  double kl = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k] == 0.0) continue;
    if (q[k] == 0.0) {
      throw std::domain_error("KL undefined: q has zero mass where p is positive");
    }
    kl += p[k] * std::log(p[k] / q[k]);
  }
  // Rounding can leave tiny negatives for p ≈ q.
  return std::max(kl, 0.0);
}

double tv_distance(const DiscreteDistribution& p, const DiscreteDistribution& q) {
  require_same_support(p, q);
  double total = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) total += std::abs(p[k] - q[k]);
  return 0.5 * total;
}

double span_seminorm(std::span<const double> f) {
  if (f.empty()) throw std::invalid_argument("span of an empty vector");
  const auto [lo, hi] = std::minmax_element(f.begin(), f.end());
  return 0.5 * (*hi - *lo);
}

std::vector<std::size_t> sample_indices(const DiscreteDistribution& p,
                                        std::size_t count, Rng& rng) {
  std::vector<double> cumulative(p.size());
  std::partial_sum(p.weights().begin(), p.weights().end(), cumulative.begin());
  const double total = cumulative.back();
  // Largest index with positive mass catches u*total landing past the end.
  std::size_t last = p.size() - 1;
  while (last > 0 && p[last] == 0.0) --last;

  std::vector<std::size_t> out(count);
  for (auto& index : out) {
    const double u = rng.uniform() * total;
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    index = std::min(static_cast<std::size_t>(it - cumulative.begin()), last);
  }
  return out;
}

std::vector<std::size_t> sample_indices(const DiscreteDistribution& p,
                                        std::size_t count, std::uint64_t seed) {
  Rng rng(seed);
  return sample_indices(p, count, rng);
}

DiscreteDistribution empirical_distribution(std::span<const std::size_t> indices,
                                            SupportPtr support) {
  if (indices.empty()) throw std::invalid_argument("no samples");
  std::vector<double> weights(support->size(), 0.0);
  const double unit = 1.0 / static_cast<double>(indices.size());
  for (std::size_t index : indices) {
    if (index >= weights.size()) throw std::out_of_range("sample index");
    weights[index] += unit;
  }
  return DiscreteDistribution::FromUnnormalized(std::move(support),
                                                std::move(weights));
}

DiscreteDistribution mixture(const DiscreteDistribution& p,
                             const DiscreteDistribution& q, double lambda) {
  require_same_support(p, q);
  if (!(lambda >= 0.0 && lambda <= 1.0)) {
    throw std::invalid_argument("mixture weight must lie in [0, 1]");
  }
  std::vector<double> weights(p.size());
  for (std::size_t k = 0; k < p.size(); ++k) {
    weights[k] = lambda * p[k] + (1.0 - lambda) * q[k];
  }
  return DiscreteDistribution::FromUnnormalized(p.support(), std::move(weights));
}

}  // namespace iama
