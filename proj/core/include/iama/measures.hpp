#ifndef IAMA_MEASURES_HPP_
#define IAMA_MEASURES_HPP_

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "iama/rng.hpp"

namespace iama {

// Tolerance on |sum(weights) - 1| guaranteed by every distribution.
inline constexpr double kNormalizationTolerance = 1e-12;

// Finite response space. Each point carries a unique real label; the toy
// problems on [0,1] use the midpoint grid y_k = (k + 0.5) / K.
class Support {
 public:
  explicit Support(std::vector<double> points);

  static std::shared_ptr<const Support> Grid(std::size_t size);
  static std::shared_ptr<const Support> Indexed(std::size_t size);
  static std::shared_ptr<const Support> FromPoints(std::vector<double> points);

  std::size_t size() const { return points_.size(); }
  double point(std::size_t k) const { return points_[k]; }
  std::span<const double> points() const { return points_; }

  friend bool operator==(const Support&, const Support&) = default;

 private:
  std::vector<double> points_;
};

using SupportPtr = std::shared_ptr<const Support>;

// Normalized non-negative weights over a Support. Immutable once built.
class DiscreteDistribution {
 public:
  // Weights must be non-negative and sum to one within 1e-9; they are
  // rescaled so the stored sum is one to rounding.
  DiscreteDistribution(SupportPtr support, std::vector<double> weights);

  // Any non-negative weights with a positive total.
  static DiscreteDistribution FromUnnormalized(SupportPtr support,
                                               std::vector<double> weights);
  // exp(log_weights - max), normalized.
  static DiscreteDistribution FromLogWeights(SupportPtr support,
                                             std::span<const double> log_weights);
  static DiscreteDistribution Uniform(SupportPtr support);
  static DiscreteDistribution PointMass(SupportPtr support, std::size_t index);

  const SupportPtr& support() const { return support_; }
  std::size_t size() const { return weights_.size(); }
  double operator[](std::size_t k) const { return weights_[k]; }
  std::span<const double> weights() const { return weights_; }

  bool strictly_positive() const;

 private:
  SupportPtr support_;
  std::vector<double> weights_;
};

bool same_support(const DiscreteDistribution& p, const DiscreteDistribution& q);

// m reward vectors over a support, each bounded in [0, r_max[i]].
class RewardTable {
 public:
  RewardTable(SupportPtr support, std::vector<std::vector<double>> values,
              std::vector<double> r_max);

  // Borrowed view of one objective's rewards.
  struct View {
    std::span<const double> values;
    double r_max;
  };

  const SupportPtr& support() const { return support_; }
  std::size_t num_objectives() const { return values_.size(); }
  std::size_t size() const { return support_->size(); }
  View objective(std::size_t i) const;
  double r_max(std::size_t i) const { return r_max_.at(i); }

 private:
  SupportPtr support_;
  std::vector<std::vector<double>> values_;
  std::vector<double> r_max_;
};

using RewardView = RewardTable::View;

// Σ p log(p/q) with 0·log(0/·) = 0. Throws std::domain_error when q
// vanishes where p does not.
double kl_divergence(const DiscreteDistribution& p,
                     const DiscreteDistribution& q);

double tv_distance(const DiscreteDistribution& p, const DiscreteDistribution& q);

// (max f - min f) / 2.
double span_seminorm(std::span<const double> f);

std::vector<std::size_t> sample_indices(const DiscreteDistribution& p,
                                        std::size_t count, Rng& rng);
std::vector<std::size_t> sample_indices(const DiscreteDistribution& p,
                                        std::size_t count, std::uint64_t seed);

DiscreteDistribution empirical_distribution(std::span<const std::size_t> indices,
                                            SupportPtr support);

// λp + (1-λ)q.
DiscreteDistribution mixture(const DiscreteDistribution& p,
                             const DiscreteDistribution& q, double lambda);

}  // namespace iama

#endif  // IAMA_MEASURES_HPP_
