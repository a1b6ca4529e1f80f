#include <random>

#include "hetfl/data.hpp"
#include "hetfl/errors.hpp"

namespace hetfl {

std::string to_string(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::none:
      return "none";
    case NoiseKind::pair:
      return "pair";
    case NoiseKind::symmetric:
      return "symmetric";
  }
  return "unknown";
}

NoiseKind parse_noise_kind(const std::string& text) {
  if (text == "none") return NoiseKind::none;
  if (text == "pair") return NoiseKind::pair;
  if (text == "symmetric") return NoiseKind::symmetric;
  throw ConfigError("unknown noise kind '" + text + "' (expected none, pair or symmetric)");
}

LabelTransitionMatrix build_transition_matrix(NoiseKind kind, double mu, std::size_t num_classes) {
  if (num_classes < 2) throw ConfigError("transition matrix needs at least 2 classes");
  if (!(mu >= 0.0 && mu < 1.0)) throw ConfigError("noise rate mu must lie in [0, 1), got " + std::to_string(mu));
  if (kind == NoiseKind::pair && mu > 0.5) {
    throw ConfigError("pair flip needs mu <= 0.5 to keep the true class modal, got " + std::to_string(mu));
  }
  if (kind == NoiseKind::none && mu != 0.0) throw ConfigError("noise kind 'none' requires mu = 0");

  LabelTransitionMatrix out{Tensor({num_classes, num_classes}), kind, mu};
  for (std::size_t i = 0; i < num_classes; ++i) {
    out.m.at(i, i) = 1.0 - mu;
    if (kind == NoiseKind::symmetric) {
      const double off = mu / static_cast<double>(num_classes - 1);
      for (std::size_t j = 0; j < num_classes; ++j) {
        if (j != i) out.m.at(i, j) = off;
      }
    } else if (kind == NoiseKind::pair) {
      out.m.at(i, (i + 1) % num_classes) = mu;
    }
  }
  return out;
}

LabeledDataset corrupt_labels(const LabeledDataset& dataset, const LabelTransitionMatrix& matrix,
                              std::uint64_t seed) {
  if (matrix.num_classes() != dataset.num_classes) {
    throw ConfigError("transition matrix has " + std::to_string(matrix.num_classes()) + " classes, dataset has " +
                      std::to_string(dataset.num_classes));
  }
  LabeledDataset out = dataset;
  out.clean_labels = dataset.clean_labels ? *dataset.clean_labels : dataset.labels;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const std::size_t classes = matrix.num_classes();
  for (std::size_t i = 0; i < out.labels.size(); ++i) {
    const auto row = matrix.m.row(static_cast<std::size_t>((*out.clean_labels)[i]));
    const double u = uniform(rng);
    double cumulative = 0.0;
    std::size_t chosen = classes;
    std::size_t last_support = 0;
    for (std::size_t j = 0; j < classes; ++j) {
      if (row[j] <= 0.0) continue;
      last_support = j;
      cumulative += row[j];
      if (u < cumulative) {
        chosen = j;
        break;
      }
    }
    // Rounding can leave the cumulative sum a hair below 1.
    if (chosen == classes) chosen = last_support;
    out.labels[i] = static_cast<int>(chosen);
  }
  return out;
}

}  // namespace hetfl
