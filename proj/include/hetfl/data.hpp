#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hetfl/tensor.hpp"

namespace hetfl {

/// Features plus integer labels. After corruption, `clean_labels` keeps the originals.
struct LabeledDataset {
  Tensor features;
  std::vector<int> labels;
  std::optional<std::vector<int>> clean_labels;
  std::size_t num_classes = 0;

  std::size_t size() const { return labels.size(); }
  std::size_t dim() const { return features.dim(1); }

  /// Throws ValidationError when sizes disagree or a label is out of range.
  void validate() const;

  /// Rows picked by index, clean labels included when present.
  LabeledDataset subset(std::span<const std::size_t> indices) const;

  /// Fraction of samples whose label differs from the clean label (0 when no clean labels).
  double flip_fraction() const;

  std::vector<std::size_t> class_counts() const;
};

struct SyntheticParams {
  std::size_t num_classes = 13;
  std::size_t dim = 64;
  std::size_t samples = 2600;
  // Standard deviation of every class-mean coordinate; samples have unit variance around it.
  double separation = 1.0;
  std::uint64_t seed = 0;

  friend bool operator==(const SyntheticParams&, const SyntheticParams&) = default;
};

/// Gaussian class clusters with exactly balanced (+-1) class counts in shuffled order.
LabeledDataset generate_synthetic(const SyntheticParams& params);

struct PartitionPlan {
  std::vector<std::vector<std::size_t>> assignments;
  double gamma = 0.0;
  std::uint64_t seed = 0;
};

inline constexpr int kPartitionRetries = 100;

/// Per-class Dir(gamma) split over clients with largest-remainder rounding. The whole draw
/// is repeated when a client would end up empty.
PartitionPlan dirichlet_partition(const LabeledDataset& dataset, std::size_t num_clients, double gamma,
                                  std::uint64_t seed);

/// Mean over clients of the chi-square distance between the client's class proportions and uniform.
double partition_skew(const LabeledDataset& dataset, const PartitionPlan& plan);

enum class NoiseKind { none, pair, symmetric };

std::string to_string(NoiseKind kind);
NoiseKind parse_noise_kind(const std::string& text);

struct LabelTransitionMatrix {
  Tensor m;
  NoiseKind kind = NoiseKind::none;
  double mu = 0.0;

  std::size_t num_classes() const { return m.dim(0); }
};

/// Row-stochastic flip matrix with diagonal 1 - mu. Pair flips send class i to (i + 1) mod C.
LabelTransitionMatrix build_transition_matrix(NoiseKind kind, double mu, std::size_t num_classes);

/// Resamples each label from its matrix row. Features are untouched.
LabeledDataset corrupt_labels(const LabeledDataset& dataset, const LabelTransitionMatrix& matrix,
                              std::uint64_t seed);

/// Text format: `n d C` header, then n rows of d reals and one integer label.
void save_dataset(const LabeledDataset& dataset, const std::string& path);
LabeledDataset load_dataset(const std::string& path);

}  // namespace hetfl
