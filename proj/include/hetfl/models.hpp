#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "hetfl/nn.hpp"

namespace hetfl {

struct ArchitectureSpec {
  std::string arch_id;
  std::vector<LayerSpec> layer_plan;
  std::size_t input_dim = 0;
  std::size_t num_classes = 0;

  std::size_t parameter_count() const;
  /// Number of trainable layers.
  std::size_t depth() const;
};

/// The four heterogeneous MLPs: mlp-shallow, mlp-deep, mlp-wide, mlp-pyramid.
std::vector<ArchitectureSpec> register_builtin_zoo(std::size_t input_dim, std::size_t num_classes);

/// Builtin zoo plus `cnn-small` (when the input is a square image) and parametric
/// `mlp-<w1>-<w2>-...` ids resolved on lookup.
class ArchitectureRegistry {
 public:
  ArchitectureRegistry(std::size_t input_dim, std::size_t num_classes);

  const std::vector<ArchitectureSpec>& zoo() const { return zoo_; }
  std::vector<std::string> registered_ids() const;

  std::optional<ArchitectureSpec> find(const std::string& arch_id) const;
  /// Throws ConfigError listing the registered ids when arch_id is unknown.
  ArchitectureSpec at(const std::string& arch_id) const;

  std::size_t input_dim() const { return input_dim_; }
  std::size_t num_classes() const { return num_classes_; }

 private:
  std::size_t input_dim_;
  std::size_t num_classes_;
  std::vector<ArchitectureSpec> zoo_;
  std::vector<ArchitectureSpec> extra_;
};

Model init_model(const ArchitectureSpec& spec, std::uint64_t seed);
Model init_model(const ArchitectureRegistry& registry, const std::string& arch_id, std::uint64_t seed);

std::vector<std::string> homogeneous_assignment(const ArchitectureSpec& spec, std::size_t num_clients);
/// Client p gets zoo[p mod zoo size].
std::vector<std::string> heterogeneous_assignment(const std::vector<ArchitectureSpec>& zoo, std::size_t num_clients);

}  // namespace hetfl
