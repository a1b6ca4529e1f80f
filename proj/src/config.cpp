#include "hetfl/config.hpp"

#include "hetfl/errors.hpp"

namespace hetfl {
namespace {

void require(bool ok, const std::string& key, const std::string& constraint) {
  if (!ok) throw ValidationError("config key '" + key + "' must satisfy " + constraint);
}

}  // namespace

void FederationConfig::validate() const {
  require(num_clients >= 2, "num_clients", "P >= 2");
  require(rounds >= 0, "rounds", "E_c >= 0");
  require(local_epochs >= 1, "local_epochs", "E_l >= 1");
  require(learning_rate > 0.0, "learning_rate", "alpha > 0");
  require(batch_size >= 1, "batch_size", "b >= 1");
  require(lambda >= 0.0, "lambda", "lambda >= 0");
  require(noise_rate >= 0.0 && noise_rate < 1.0, "noise_rate", "0 <= mu < 1");
  require(noise_kind != NoiseKind::pair || noise_rate <= 0.5, "noise_rate", "mu <= 0.5 for pair flip");
  require(noise_kind != NoiseKind::none || noise_rate == 0.0, "noise_rate", "mu = 0 when noise_kind = none");
  require(gamma > 0.0, "gamma", "gamma > 0");
  require(!architecture.empty(), "architecture", "a non-empty arch id or heterogeneous-zoo");
  require(!dataset.empty(), "dataset", "synthetic or a file path");
  require(synthetic_classes >= 2, "synthetic_classes", ">= 2");
  require(synthetic_dim >= 2, "synthetic_dim", ">= 2");
  require(synthetic_samples >= synthetic_classes, "synthetic_samples", ">= synthetic_classes");
  require(synthetic_separation > 0.0, "synthetic_separation", "> 0");
  require(test_fraction > 0.0 && test_fraction < 1.0, "test_fraction", "0 < value < 1");
  require(public_fraction > 0.0 && public_fraction < 1.0, "public_fraction", "0 < value < 1");
  require(test_fraction + public_fraction < 1.0, "public_fraction", "test_fraction + public_fraction < 1");
  require(temperature > 0.0, "temperature", "> 0");
}

const std::vector<Method>& builtin_methods() {
  static const std::vector<Method> methods = {
      {"full", true, true},
      {"sl-local", true, false},
      {"ce-collab", false, true},
      {"ce-local", false, false},
  };
  return methods;
}

Method parse_method(const std::string& name) {
  for (const auto& m : builtin_methods()) {
    if (m.name == name) return m;
  }
  throw ValidationError("unknown method '" + name + "' (expected full, sl-local, ce-collab or ce-local)");
}

std::string method_name(const FederationConfig& config) {
  for (const auto& m : builtin_methods()) {
    if (m.use_symmetric_loss == config.use_symmetric_loss && m.use_collaboration == config.use_collaboration) {
      return m.name;
    }
  }
  return "custom";
}

}  // namespace hetfl
