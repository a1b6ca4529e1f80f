#include "hetfl/models.hpp"

#include <cmath>

#include "hetfl/errors.hpp"

namespace hetfl {
namespace {

ArchitectureSpec mlp(std::string id, const std::vector<std::size_t>& hidden, std::size_t input_dim,
                     std::size_t num_classes) {
  ArchitectureSpec spec{std::move(id), {}, input_dim, num_classes};
  for (auto width : hidden) {
    spec.layer_plan.push_back(LayerSpec::dense(width));
    spec.layer_plan.push_back(LayerSpec::relu());
  }
  spec.layer_plan.push_back(LayerSpec::dense(num_classes));
  return spec;
}

// "mlp-64-32" -> {64, 32}; nullopt when the id is not of that form.
std::optional<std::vector<std::size_t>> parse_mlp_widths(const std::string& id) {
  const std::string prefix = "mlp-";
  if (id.rfind(prefix, 0) != 0 || id.size() == prefix.size()) return std::nullopt;
  std::vector<std::size_t> widths;
  std::size_t pos = prefix.size();
  while (pos <= id.size()) {
    const std::size_t dash = id.find('-', pos);
    const std::string part = id.substr(pos, dash == std::string::npos ? std::string::npos : dash - pos);
    if (part.empty() || part.find_first_not_of("0123456789") != std::string::npos || part.size() > 6) {
      return std::nullopt;
    }
    const auto width = static_cast<std::size_t>(std::stoul(part));
    if (width == 0) return std::nullopt;
    widths.push_back(width);
    if (dash == std::string::npos) break;
    pos = dash + 1;
  }
  return widths;
}

}  // namespace

std::size_t ArchitectureSpec::parameter_count() const {
  std::size_t count = 0;
  std::size_t features = input_dim;
  for (const auto& layer : layer_plan) {
    switch (layer.kind) {
      case LayerKind::dense:
        count += features * layer.units + layer.units;
        features = layer.units;
        break;
      case LayerKind::conv2d_small: {
        const auto& cg = layer.conv;
        count += cg.out_channels * cg.in_channels * cg.kernel * cg.kernel + cg.out_channels;
        features = cg.out_channels * cg.out_height() * cg.out_width();
        break;
      }
      case LayerKind::relu:
      case LayerKind::flatten:
        break;
    }
  }
  return count;
}

std::size_t ArchitectureSpec::depth() const {
  std::size_t d = 0;
  for (const auto& layer : layer_plan) d += layer.kind == LayerKind::dense || layer.kind == LayerKind::conv2d_small;
  return d;
}

std::vector<ArchitectureSpec> register_builtin_zoo(std::size_t input_dim, std::size_t num_classes) {
  return {
      mlp("mlp-shallow", {64}, input_dim, num_classes),
      mlp("mlp-deep", {64, 64, 64}, input_dim, num_classes),
      mlp("mlp-wide", {256}, input_dim, num_classes),
      mlp("mlp-pyramid", {128, 64, 32}, input_dim, num_classes),
  };
}

ArchitectureRegistry::ArchitectureRegistry(std::size_t input_dim, std::size_t num_classes)
    : input_dim_(input_dim), num_classes_(num_classes), zoo_(register_builtin_zoo(input_dim, num_classes)) {
  if (input_dim < 2 || num_classes < 2) throw ConfigError("architectures need input_dim >= 2 and num_classes >= 2");
  const auto side = static_cast<std::size_t>(std::lround(std::sqrt(static_cast<double>(input_dim))));
  if (side * side == input_dim && side >= 4) {
    ConvGeometry cg{1, side, side, 4, 3};
    extra_.push_back({"cnn-small",
                      {LayerSpec::conv2d(cg), LayerSpec::relu(), LayerSpec::flatten(), LayerSpec::dense(num_classes)},
                      input_dim,
                      num_classes});
  }
}

std::vector<std::string> ArchitectureRegistry::registered_ids() const {
  std::vector<std::string> ids;
  for (const auto& s : zoo_) ids.push_back(s.arch_id);
  for (const auto& s : extra_) ids.push_back(s.arch_id);
  return ids;
}

std::optional<ArchitectureSpec> ArchitectureRegistry::find(const std::string& arch_id) const {
  for (const auto& s : zoo_) {
    if (s.arch_id == arch_id) return s;
  }
  for (const auto& s : extra_) {
    if (s.arch_id == arch_id) return s;
  }
  if (auto widths = parse_mlp_widths(arch_id)) return mlp(arch_id, *widths, input_dim_, num_classes_);
  return std::nullopt;
}

ArchitectureSpec ArchitectureRegistry::at(const std::string& arch_id) const {
  auto found = find(arch_id);
  if (!found) {
    std::string ids;
    for (const auto& id : registered_ids()) ids += (ids.empty() ? "" : ", ") + id;
    throw ConfigError("unknown architecture '" + arch_id + "'; registered: " + ids + ", or mlp-<w1>-<w2>-...");
  }
  return std::move(*found);
}

Model init_model(const ArchitectureSpec& spec, std::uint64_t seed) {
  return build_model(spec.arch_id, spec.input_dim, spec.layer_plan, seed);
}

Model init_model(const ArchitectureRegistry& registry, const std::string& arch_id, std::uint64_t seed) {
  return init_model(registry.at(arch_id), seed);
}

std::vector<std::string> homogeneous_assignment(const ArchitectureSpec& spec, std::size_t num_clients) {
  if (num_clients < 1) throw ConfigError("homogeneous_assignment needs at least one client");
  return std::vector<std::string>(num_clients, spec.arch_id);
}

std::vector<std::string> heterogeneous_assignment(const std::vector<ArchitectureSpec>& zoo, std::size_t num_clients) {
  if (zoo.empty()) throw ConfigError("heterogeneous_assignment needs a non-empty zoo");
  std::vector<std::string> out;
  for (std::size_t p = 0; p < num_clients; ++p) out.push_back(zoo[p % zoo.size()].arch_id);
  return out;
}

}  // namespace hetfl
