#pragma once

#include <span>
#include <vector>

#include "hetfl/tensor.hpp"

namespace hetfl {

/// Floor applied to predicted probabilities inside every log.
inline constexpr double kProbabilityFloor = 1e-7;
/// Value substituted for log(0) of a label distribution in the reverse cross entropy.
inline constexpr double kLogZero = -4.0;

/// Rows on the probability simplex. When built from logits, `temperature` records the
/// softmax temperature so that loss gradients can be expressed w.r.t. the raw logits.
class ClassDistribution {
 public:
  ClassDistribution() = default;
  /// Validates that every row sums to 1 within 1e-9 and has no negative entry.
  explicit ClassDistribution(Tensor probs, double temperature = 1.0);

  static ClassDistribution from_logits(const Tensor& logits, double temperature = 1.0);
  static ClassDistribution one_hot(std::span<const int> labels, std::size_t num_classes);

  const Tensor& probs() const { return probs_; }
  double temperature() const { return temperature_; }
  std::size_t rows() const { return probs_.dim(0); }
  std::size_t classes() const { return probs_.dim(1); }

  /// Rows [begin, end), keeping the temperature.
  ClassDistribution slice_rows(std::size_t begin, std::size_t end) const;

 private:
  Tensor probs_;
  double temperature_ = 1.0;
};

/// Scalar loss (batch mean) and its gradient with respect to the prediction's logits.
struct LossValue {
  double value = 0.0;
  Tensor grad_wrt_logits;
};

LossValue cross_entropy(const ClassDistribution& pred, const ClassDistribution& target);

/// -sum p log g, with log g floored at kLogZero. For a one-hot target this is 4 (1 - p_y).
LossValue reverse_cross_entropy(const ClassDistribution& pred, const ClassDistribution& target);

/// lambda * CE + RCE.
LossValue symmetric_loss(const ClassDistribution& pred, const ClassDistribution& target, double lambda);

/// Mean over rows of sum d1 log(d1 / d2); d2 is floored at kProbabilityFloor.
double kl_divergence(const ClassDistribution& d1, const ClassDistribution& d2);

/// Mean over rows of -sum g log g.
double entropy(const ClassDistribution& g);

/// Sum over peers of KL(peer || own). Only `own` receives a gradient.
LossValue peer_learning_loss(const ClassDistribution& own, std::span<const ClassDistribution> peers);

}  // namespace hetfl
