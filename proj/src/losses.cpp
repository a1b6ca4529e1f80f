#include "hetfl/losses.hpp"

#include <algorithm>
#include <cmath>

#include "hetfl/errors.hpp"
#include "hetfl/nn.hpp"

namespace hetfl {
namespace {

void require_same_shape(const ClassDistribution& a, const ClassDistribution& b, const char* what) {
  if (a.probs().shape() != b.probs().shape()) {
    throw DimensionError(std::string(what) + ": shape " + shape_to_string(a.probs().shape()) +
                         " does not match " + shape_to_string(b.probs().shape()));
  }
}

double floored_log(double p) { return std::log(std::max(p, kProbabilityFloor)); }

// Accumulates into `grad` the logit gradient of -sum_i g_i log max(p_i, floor) for one row,
// scaled by `scale`. Classes whose probability sits below the floor contribute no slope.
void add_cross_entropy_row_grad(std::span<const double> p, std::span<const double> g, double scale,
                                std::span<double> grad) {
  double below_floor_mass = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] < kProbabilityFloor) below_floor_mass += g[i];
  }
  const double kept = 1.0 - below_floor_mass;
  for (std::size_t j = 0; j < p.size(); ++j) {
    const double target = p[j] < kProbabilityFloor ? 0.0 : g[j];
    grad[j] += scale * (p[j] * kept - target);
  }
}

}  // namespace

ClassDistribution::ClassDistribution(Tensor probs, double temperature)
    : probs_(std::move(probs)), temperature_(temperature) {
  if (probs_.rank() != 2 || probs_.dim(1) < 2) {
    throw DimensionError("class distribution must be (b, C>=2), got " + shape_to_string(probs_.shape()));
  }
  if (!(temperature_ > 0.0)) throw ConfigError("temperature must be positive");
  for (std::size_t r = 0; r < probs_.dim(0); ++r) {
    double total = 0.0;
    for (double v : probs_.row(r)) {
      if (!(v >= 0.0)) throw ValidationError("negative or NaN probability in row " + std::to_string(r));
      total += v;
    }
    if (std::abs(total - 1.0) > 1e-9) {
      throw ValidationError("row " + std::to_string(r) + " sums to " + std::to_string(total));
    }
  }
}

ClassDistribution ClassDistribution::from_logits(const Tensor& logits, double temperature) {
  return ClassDistribution(softmax(logits, temperature), temperature);
}

ClassDistribution ClassDistribution::one_hot(std::span<const int> labels, std::size_t num_classes) {
  if (labels.empty()) throw DimensionError("one_hot needs at least one label");
  Tensor t({labels.size(), num_classes});
  for (std::size_t r = 0; r < labels.size(); ++r) {
    if (labels[r] < 0 || static_cast<std::size_t>(labels[r]) >= num_classes) {
      throw ValidationError("label " + std::to_string(labels[r]) + " outside [0, " +
                            std::to_string(num_classes) + ")");
    }
    t.at(r, static_cast<std::size_t>(labels[r])) = 1.0;
  }
  return ClassDistribution(std::move(t));
}

ClassDistribution ClassDistribution::slice_rows(std::size_t begin, std::size_t end) const {
  ClassDistribution out;
  out.probs_ = probs_.slice_rows(begin, end);
  out.temperature_ = temperature_;
  return out;
}

LossValue cross_entropy(const ClassDistribution& pred, const ClassDistribution& target) {
  require_same_shape(pred, target, "cross_entropy");
  const std::size_t batch = pred.rows();
  const double scale = 1.0 / (static_cast<double>(batch) * pred.temperature());
  LossValue out{0.0, Tensor(pred.probs().shape())};
  for (std::size_t r = 0; r < batch; ++r) {
    auto p = pred.probs().row(r);
    auto g = target.probs().row(r);
    double row_loss = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (g[i] != 0.0) row_loss -= g[i] * floored_log(p[i]);
    }
    out.value += row_loss;
    add_cross_entropy_row_grad(p, g, scale, out.grad_wrt_logits.row(r));
  }
  out.value /= static_cast<double>(batch);
  return out;
}

LossValue reverse_cross_entropy(const ClassDistribution& pred, const ClassDistribution& target) {
  require_same_shape(pred, target, "reverse_cross_entropy");
  const std::size_t batch = pred.rows();
  const double scale = 1.0 / (static_cast<double>(batch) * pred.temperature());
  LossValue out{0.0, Tensor(pred.probs().shape())};
  std::vector<double> log_g(pred.classes());
  for (std::size_t r = 0; r < batch; ++r) {
    auto p = pred.probs().row(r);
    auto g = target.probs().row(r);
    double expected_log = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      log_g[i] = g[i] > 0.0 ? std::max(std::log(g[i]), kLogZero) : kLogZero;
      expected_log += p[i] * log_g[i];
    }
    out.value -= expected_log;
    auto grad = out.grad_wrt_logits.row(r);
    for (std::size_t j = 0; j < p.size(); ++j) grad[j] = -scale * p[j] * (log_g[j] - expected_log);
  }
  out.value /= static_cast<double>(batch);
  return out;
}

LossValue symmetric_loss(const ClassDistribution& pred, const ClassDistribution& target, double lambda) {
  if (!(lambda >= 0.0)) throw ConfigError("symmetric loss lambda must be >= 0, got " + std::to_string(lambda));
  LossValue ce = cross_entropy(pred, target);
  LossValue rce = reverse_cross_entropy(pred, target);
  LossValue out{lambda * ce.value + rce.value, std::move(rce.grad_wrt_logits)};
  auto grad = out.grad_wrt_logits.values();
  auto ce_grad = ce.grad_wrt_logits.values();
  for (std::size_t i = 0; i < grad.size(); ++i) grad[i] = lambda * ce_grad[i] + grad[i];
  return out;
}

double kl_divergence(const ClassDistribution& d1, const ClassDistribution& d2) {
  require_same_shape(d1, d2, "kl_divergence");
  double total = 0.0;
  for (std::size_t r = 0; r < d1.rows(); ++r) {
    auto a = d1.probs().row(r);
    auto b = d2.probs().row(r);
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (a[i] > 0.0) total += a[i] * (std::log(a[i]) - floored_log(b[i]));
    }
  }
  return total / static_cast<double>(d1.rows());
}

double entropy(const ClassDistribution& g) {
  double total = 0.0;
  for (double v : g.probs().values()) {
    if (v > 0.0) total -= v * std::log(v);
  }
  return total / static_cast<double>(g.rows());
}

LossValue peer_learning_loss(const ClassDistribution& own, std::span<const ClassDistribution> peers) {
  if (peers.empty()) throw ConfigError("peer_learning_loss needs at least one peer");
  const std::size_t batch = own.rows();
  const double scale = 1.0 / (static_cast<double>(batch) * own.temperature());
  LossValue out{0.0, Tensor(own.probs().shape())};
  for (const auto& peer : peers) {
    require_same_shape(own, peer, "peer_learning_loss");
    out.value += kl_divergence(peer, own);
    // KL(q || p) differs from the cross entropy of p against q by a constant in p.
    for (std::size_t r = 0; r < batch; ++r) {
      add_cross_entropy_row_grad(own.probs().row(r), peer.probs().row(r), scale, out.grad_wrt_logits.row(r));
    }
  }
  return out;
}

}  // namespace hetfl
