#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hetfl/tensor.hpp"

namespace hetfl {

enum class LayerKind { dense, relu, conv2d_small, flatten };

std::string to_string(LayerKind kind);

/// One trainable tensor of a layer together with its gradient slot.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
};

/// Geometry of a small stride-1, unpadded convolution over a CHW volume.
struct ConvGeometry {
  std::size_t in_channels = 1;
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t out_channels = 1;
  std::size_t kernel = 3;

  std::size_t out_height() const { return height - kernel + 1; }
  std::size_t out_width() const { return width - kernel + 1; }
};

/// Descriptor used to build a layer; `units` is the output width of a dense layer.
struct LayerSpec {
  LayerKind kind = LayerKind::dense;
  std::size_t units = 0;
  ConvGeometry conv{};

  static LayerSpec dense(std::size_t units) { return {LayerKind::dense, units, {}}; }
  static LayerSpec relu() { return {LayerKind::relu, 0, {}}; }
  static LayerSpec flatten() { return {LayerKind::flatten, 0, {}}; }
  static LayerSpec conv2d(ConvGeometry geometry) { return {LayerKind::conv2d_small, 0, geometry}; }

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

/// A layer of a feed-forward network. Dense weights are (fan_in, fan_out), bias (fan_out).
/// Conv weights are (out_channels, in_channels, k, k), bias (out_channels).
struct Layer {
  LayerKind kind = LayerKind::dense;
  std::vector<Parameter> params;
  ConvGeometry conv{};

  // Input seen by the last forward(); consumed by backward().
  Tensor input_cache;
  bool has_cache = false;
};

class Model {
 public:
  Model() = default;
  Model(std::string arch_id, std::size_t input_dim, std::vector<Layer> layers);

  const std::string& arch_id() const { return arch_id_; }
  std::size_t input_dim() const { return input_dim_; }
  std::size_t output_dim() const;

  std::vector<Layer>& layers() { return layers_; }
  const std::vector<Layer>& layers() const { return layers_; }

  std::size_t parameter_count() const;

  /// Flat views over all parameters in layer order; stable for the model's lifetime.
  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;

  /// Logits without caching anything; bitwise equal to forward() on the same rows.
  Tensor predict(const Tensor& batch) const;

  /// True iff every parameter value is bitwise equal.
  bool same_parameters(const Model& other) const;

 private:
  std::string arch_id_;
  std::size_t input_dim_ = 0;
  std::vector<Layer> layers_;
};

/// Raw logits for a (b x input_dim) batch; caches per-layer inputs for backward().
Tensor forward(Model& model, const Tensor& batch);

/// Fills (overwrites) every parameter gradient from dL/dlogits.
void backward(Model& model, const Tensor& loss_grad);

/// Row-wise softmax of logits / temperature, max-subtracted.
Tensor softmax(const Tensor& logits, double temperature = 1.0);

/// Deterministic Xavier-uniform initialisation of a layer plan. Biases start at zero.
Model build_model(std::string arch_id, std::size_t input_dim, const std::vector<LayerSpec>& plan,
                  std::uint64_t seed);

struct AdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::uint64_t t = 0;
  double alpha = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

AdamState make_adam_state(const Model& model, double alpha, double beta1 = 0.9,
                          double beta2 = 0.999, double eps = 1e-8);

/// One bias-corrected Adam update from the gradients currently held by the model.
/// A gradient that is exactly zero everywhere advances t and the moments but leaves
/// the parameters untouched.
void adam_step(Model& model, AdamState& state);

}  // namespace hetfl
