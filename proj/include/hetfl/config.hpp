#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hetfl/data.hpp"

namespace hetfl {

inline constexpr const char* kHeterogeneousZoo = "heterogeneous-zoo";
inline constexpr const char* kSyntheticDataset = "synthetic";

/// Every experiment knob. alpha, b, lambda, gamma and E_c use the customary values; the rest
/// are sized for a single machine.
struct FederationConfig {
  std::size_t num_clients = 4;
  int rounds = 40;
  int local_epochs = 1;
  double learning_rate = 0.001;
  std::size_t batch_size = 16;
  double lambda = 0.1;
  double noise_rate = 0.0;
  NoiseKind noise_kind = NoiseKind::none;
  double gamma = 0.5;
  std::uint64_t seed = 0;
  // "heterogeneous-zoo" or a single arch id given to every client.
  std::string architecture = kHeterogeneousZoo;
  // "synthetic" or a path to a dataset file.
  std::string dataset = kSyntheticDataset;
  std::size_t synthetic_classes = 13;
  std::size_t synthetic_dim = 64;
  std::size_t synthetic_samples = 6500;
  double synthetic_separation = 0.5;
  double test_fraction = 0.2;
  double public_fraction = 0.2;
  double temperature = 1.0;
  bool use_symmetric_loss = true;
  bool use_collaboration = true;

  /// Throws ValidationError naming the offending key.
  void validate() const;

  friend bool operator==(const FederationConfig&, const FederationConfig&) = default;
};

/// An ablation flag-set; `full` is symmetric loss plus collaboration.
struct Method {
  std::string name;
  bool use_symmetric_loss = true;
  bool use_collaboration = true;

  friend bool operator==(const Method&, const Method&) = default;
};

/// full, sl-local, ce-collab, ce-local.
const std::vector<Method>& builtin_methods();
Method parse_method(const std::string& name);
/// Name of the flag-set a config runs with.
std::string method_name(const FederationConfig& config);

}  // namespace hetfl
