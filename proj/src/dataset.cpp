#include <algorithm>
#include <cmath>
#include <random>

#include "hetfl/data.hpp"
#include "hetfl/errors.hpp"

namespace hetfl {

void LabeledDataset::validate() const {
  if (labels.empty()) throw ValidationError("dataset must contain at least one sample");
  if (num_classes < 2) throw ValidationError("dataset needs at least two classes");
  if (features.rank() != 2 || features.dim(0) != labels.size()) {
    throw ValidationError("feature rows " + shape_to_string(features.shape()) + " do not match " +
                          std::to_string(labels.size()) + " labels");
  }
  auto check_range = [this](const std::vector<int>& ys, const char* what) {
    for (std::size_t i = 0; i < ys.size(); ++i) {
      if (ys[i] < 0 || static_cast<std::size_t>(ys[i]) >= num_classes) {
        throw ValidationError(std::string(what) + " " + std::to_string(ys[i]) + " at row " + std::to_string(i) +
                              " outside [0, " + std::to_string(num_classes) + ")");
      }
    }
  };
  check_range(labels, "label");
  if (clean_labels) {
    if (clean_labels->size() != labels.size()) throw ValidationError("clean label count differs from label count");
    check_range(*clean_labels, "clean label");
  }
}

LabeledDataset LabeledDataset::subset(std::span<const std::size_t> indices) const {
  LabeledDataset out;
  out.features = features.gather_rows(indices);
  out.num_classes = num_classes;
  out.labels.reserve(indices.size());
  for (auto i : indices) out.labels.push_back(labels.at(i));
  if (clean_labels) {
    std::vector<int> clean;
    clean.reserve(indices.size());
    for (auto i : indices) clean.push_back(clean_labels->at(i));
    out.clean_labels = std::move(clean);
  }
  return out;
}

double LabeledDataset::flip_fraction() const {
  if (!clean_labels || labels.empty()) return 0.0;
  std::size_t flipped = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) flipped += labels[i] != (*clean_labels)[i];
  return static_cast<double>(flipped) / static_cast<double>(labels.size());
}

std::vector<std::size_t> LabeledDataset::class_counts() const {
  std::vector<std::size_t> counts(num_classes, 0);
  for (int y : labels) ++counts.at(static_cast<std::size_t>(y));
  return counts;
}

LabeledDataset generate_synthetic(const SyntheticParams& params) {
  if (params.num_classes < 2) throw ConfigError("synthetic data needs num_classes >= 2");
  if (params.dim < 2) throw ConfigError("synthetic data needs dim >= 2");
  if (params.samples < params.num_classes) {
    throw ConfigError("synthetic data needs at least one sample per class (n=" + std::to_string(params.samples) +
                      " < num_classes=" + std::to_string(params.num_classes) + ")");
  }
  if (!(params.separation > 0.0)) throw ConfigError("synthetic separation must be positive");

  std::mt19937_64 rng(params.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  Tensor means({params.num_classes, params.dim});
  for (auto& v : means.values()) v = params.separation * gauss(rng);

  std::vector<int> labels(params.samples);
  for (std::size_t i = 0; i < params.samples; ++i) labels[i] = static_cast<int>(i % params.num_classes);
  std::shuffle(labels.begin(), labels.end(), rng);

  LabeledDataset out;
  out.num_classes = params.num_classes;
  out.features = Tensor({params.samples, params.dim});
  for (std::size_t i = 0; i < params.samples; ++i) {
    auto mean = means.row(static_cast<std::size_t>(labels[i]));
    auto row = out.features.row(i);
    for (std::size_t j = 0; j < params.dim; ++j) row[j] = mean[j] + gauss(rng);
  }
  out.labels = std::move(labels);
  return out;
}

}  // namespace hetfl
