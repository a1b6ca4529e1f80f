#include "hetfl/nn.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "hetfl/errors.hpp"

namespace hetfl {
namespace {

std::string layer_name(std::size_t index, LayerKind kind) {
  return "layer " + std::to_string(index) + " (" + to_string(kind) + ")";
}

std::size_t features_of(const Tensor& t) { return t.size() / t.dim(0); }

Tensor dense_forward(const Layer& layer, const Tensor& x) {
  const Tensor& w = layer.params[0].value;
  const Tensor& bias = layer.params[1].value;
  const std::size_t batch = x.dim(0), fan_in = w.dim(0), fan_out = w.dim(1);
  Tensor out({batch, fan_out});
  for (std::size_t i = 0; i < batch; ++i) {
    double* o = out.data() + i * fan_out;
    std::copy(bias.data(), bias.data() + fan_out, o);
    const double* xi = x.data() + i * fan_in;
    for (std::size_t k = 0; k < fan_in; ++k) {
      const double xv = xi[k];
      if (xv == 0.0) continue;
      const double* wk = w.data() + k * fan_out;
      for (std::size_t j = 0; j < fan_out; ++j) o[j] += xv * wk[j];
    }
  }
  return out;
}

Tensor dense_backward(Layer& layer, const Tensor& g) {
  const Tensor& x = layer.input_cache;
  const Tensor& w = layer.params[0].value;
  Tensor& gw = layer.params[0].grad;
  Tensor& gb = layer.params[1].grad;
  const std::size_t batch = x.dim(0), fan_in = w.dim(0), fan_out = w.dim(1);
  gw.fill(0.0);
  gb.fill(0.0);
  Tensor gx({batch, fan_in});
  for (std::size_t i = 0; i < batch; ++i) {
    const double* gi = g.data() + i * fan_out;
    const double* xi = x.data() + i * fan_in;
    double* gxi = gx.data() + i * fan_in;
    for (std::size_t j = 0; j < fan_out; ++j) gb[j] += gi[j];
    for (std::size_t k = 0; k < fan_in; ++k) {
      const double* wk = w.data() + k * fan_out;
      double* gwk = gw.data() + k * fan_out;
      const double xv = xi[k];
      double acc = 0.0;
      for (std::size_t j = 0; j < fan_out; ++j) {
        gwk[j] += xv * gi[j];
        acc += gi[j] * wk[j];
      }
      gxi[k] = acc;
    }
  }
  return gx;
}

Tensor relu_forward(const Tensor& x) {
  Tensor out = x;
  for (auto& v : out.values()) v = v > 0.0 ? v : 0.0;
  return out;
}

Tensor relu_backward(const Layer& layer, const Tensor& g) {
  Tensor gx = g;
  const auto in = layer.input_cache.values();
  auto out = gx.values();
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!(in[i] > 0.0)) out[i] = 0.0;
  }
  return gx;
}

Tensor conv_forward(const Layer& layer, const Tensor& x) {
  const ConvGeometry& cg = layer.conv;
  const Tensor& w = layer.params[0].value;
  const Tensor& bias = layer.params[1].value;
  const std::size_t batch = x.dim(0), oh = cg.out_height(), ow = cg.out_width();
  const std::size_t k = cg.kernel, h = cg.height, wd = cg.width;
  Tensor out({batch, cg.out_channels, oh, ow});
  for (std::size_t n = 0; n < batch; ++n) {
    const double* xin = x.data() + n * cg.in_channels * h * wd;
    for (std::size_t o = 0; o < cg.out_channels; ++o) {
      double* plane = out.data() + (n * cg.out_channels + o) * oh * ow;
      std::fill(plane, plane + oh * ow, bias[o]);
      for (std::size_t c = 0; c < cg.in_channels; ++c) {
        const double* kern = w.data() + (o * cg.in_channels + c) * k * k;
        const double* chan = xin + c * h * wd;
        for (std::size_t y = 0; y < oh; ++y) {
          for (std::size_t xx = 0; xx < ow; ++xx) {
            double acc = 0.0;
            for (std::size_t ky = 0; ky < k; ++ky) {
              for (std::size_t kx = 0; kx < k; ++kx) {
                acc += kern[ky * k + kx] * chan[(y + ky) * wd + xx + kx];
              }
            }
            plane[y * ow + xx] += acc;
          }
        }
      }
    }
  }
  return out;
}

Tensor conv_backward(Layer& layer, const Tensor& g) {
  const ConvGeometry& cg = layer.conv;
  const Tensor& x = layer.input_cache;
  const Tensor& w = layer.params[0].value;
  Tensor& gw = layer.params[0].grad;
  Tensor& gb = layer.params[1].grad;
  const std::size_t batch = x.dim(0), oh = cg.out_height(), ow = cg.out_width();
  const std::size_t k = cg.kernel, h = cg.height, wd = cg.width;
  gw.fill(0.0);
  gb.fill(0.0);
  Tensor gx(x.shape());
  for (std::size_t n = 0; n < batch; ++n) {
    const double* xin = x.data() + n * cg.in_channels * h * wd;
    double* gin = gx.data() + n * cg.in_channels * h * wd;
    for (std::size_t o = 0; o < cg.out_channels; ++o) {
      const double* gplane = g.data() + (n * cg.out_channels + o) * oh * ow;
      for (std::size_t i = 0; i < oh * ow; ++i) gb[o] += gplane[i];
      for (std::size_t c = 0; c < cg.in_channels; ++c) {
        const std::size_t koff = (o * cg.in_channels + c) * k * k;
        const double* chan = xin + c * h * wd;
        double* gchan = gin + c * h * wd;
        for (std::size_t y = 0; y < oh; ++y) {
          for (std::size_t xx = 0; xx < ow; ++xx) {
            const double gv = gplane[y * ow + xx];
            for (std::size_t ky = 0; ky < k; ++ky) {
              for (std::size_t kx = 0; kx < k; ++kx) {
                gw[koff + ky * k + kx] += gv * chan[(y + ky) * wd + xx + kx];
                gchan[(y + ky) * wd + xx + kx] += gv * w[koff + ky * k + kx];
              }
            }
          }
        }
      }
    }
  }
  return gx;
}

Tensor flatten_forward(const Tensor& x) {
  const std::size_t batch = x.dim(0);
  return Tensor({batch, features_of(x)}, std::vector<double>(x.values().begin(), x.values().end()));
}

void check_input(const Layer& layer, std::size_t index, const Tensor& x) {
  switch (layer.kind) {
    case LayerKind::dense: {
      const std::size_t fan_in = layer.params[0].value.dim(0);
      if (x.rank() != 2 || x.dim(1) != fan_in) {
        throw DimensionError(layer_name(index, layer.kind) + " expects input (b, " +
                             std::to_string(fan_in) + "), got " + shape_to_string(x.shape()));
      }
      break;
    }
    case LayerKind::conv2d_small: {
      const ConvGeometry& cg = layer.conv;
      const std::size_t expected = cg.in_channels * cg.height * cg.width;
      if (features_of(x) != expected) {
        throw DimensionError(layer_name(index, layer.kind) + " expects " + std::to_string(expected) +
                             " input features per sample, got " + shape_to_string(x.shape()));
      }
      break;
    }
    case LayerKind::relu:
    case LayerKind::flatten:
      break;
  }
}

Tensor layer_forward(const Layer& layer, const Tensor& x) {
  switch (layer.kind) {
    case LayerKind::dense:
      return dense_forward(layer, x);
    case LayerKind::relu:
      return relu_forward(x);
    case LayerKind::conv2d_small:
      return conv_forward(layer, x);
    case LayerKind::flatten:
      return flatten_forward(x);
  }
  return x;
}

Tensor layer_backward(Layer& layer, const Tensor& g) {
  switch (layer.kind) {
    case LayerKind::dense:
      return dense_backward(layer, g);
    case LayerKind::relu:
      return relu_backward(layer, g);
    case LayerKind::conv2d_small:
      return conv_backward(layer, g);
    case LayerKind::flatten:
      return Tensor(layer.input_cache.shape(), std::vector<double>(g.values().begin(), g.values().end()));
  }
  return g;
}

void check_batch(const Model& model, const Tensor& batch) {
  if (batch.rank() != 2 || batch.dim(0) < 1) {
    throw DimensionError("model " + model.arch_id() + " expects a (b, features) batch, got " +
                         shape_to_string(batch.shape()));
  }
  if (batch.dim(1) != model.input_dim()) {
    throw DimensionError("layer 0 (" + to_string(model.layers().front().kind) + ") of " +
                         model.arch_id() + " expects " + std::to_string(model.input_dim()) +
                         " input features, got " + std::to_string(batch.dim(1)));
  }
}

void check_logits(const Model& model, const Tensor& logits) {
  if (!logits.all_finite()) throw NumericError("non-finite logits from model " + model.arch_id());
}

}  // namespace

std::string to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::dense:
      return "dense";
    case LayerKind::relu:
      return "relu";
    case LayerKind::conv2d_small:
      return "conv2d-small";
    case LayerKind::flatten:
      return "flatten";
  }
  return "unknown";
}

Model::Model(std::string arch_id, std::size_t input_dim, std::vector<Layer> layers)
    : arch_id_(std::move(arch_id)), input_dim_(input_dim), layers_(std::move(layers)) {
  if (layers_.empty()) throw ConfigError("model " + arch_id_ + " has no layers");
  if (layers_.back().kind != LayerKind::dense) {
    throw ConfigError("model " + arch_id_ + " must end in a dense layer");
  }
}

std::size_t Model::output_dim() const { return layers_.back().params[0].value.dim(1); }

std::size_t Model::parameter_count() const {
  std::size_t n = 0;
  for (const auto& layer : layers_) {
    for (const auto& p : layer.params) n += p.value.size();
  }
  return n;
}

std::vector<Parameter*> Model::parameters() {
  std::vector<Parameter*> out;
  for (auto& layer : layers_) {
    for (auto& p : layer.params) out.push_back(&p);
  }
  return out;
}

std::vector<const Parameter*> Model::parameters() const {
  std::vector<const Parameter*> out;
  for (const auto& layer : layers_) {
    for (const auto& p : layer.params) out.push_back(&p);
  }
  return out;
}

Tensor Model::predict(const Tensor& batch) const {
  check_batch(*this, batch);
  Tensor x = batch;
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    check_input(layers_[i], i, x);
    x = layer_forward(layers_[i], x);
  }
  check_logits(*this, x);
  return x;
}

bool Model::same_parameters(const Model& other) const {
  const auto mine = parameters();
  const auto theirs = other.parameters();
  if (mine.size() != theirs.size()) return false;
  for (std::size_t i = 0; i < mine.size(); ++i) {
    if (!(mine[i]->value == theirs[i]->value)) return false;
  }
  return true;
}

Tensor forward(Model& model, const Tensor& batch) {
  check_batch(model, batch);
  auto& layers = model.layers();
  Tensor x = batch;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    check_input(layers[i], i, x);
    layers[i].input_cache = x;
    layers[i].has_cache = true;
    x = layer_forward(layers[i], x);
  }
  check_logits(model, x);
  return x;
}

void backward(Model& model, const Tensor& loss_grad) {
  auto& layers = model.layers();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (!layers[i].has_cache) {
      throw StateError("backward on " + model.arch_id() + " without a prior forward (" +
                       layer_name(i, layers[i].kind) + " has no cached input)");
    }
  }
  const std::size_t batch = layers.front().input_cache.dim(0);
  if (loss_grad.rank() != 2 || loss_grad.dim(0) != batch || loss_grad.dim(1) != model.output_dim()) {
    throw DimensionError("loss gradient " + shape_to_string(loss_grad.shape()) + " does not match logits (" +
                         std::to_string(batch) + ", " + std::to_string(model.output_dim()) + ")");
  }
  Tensor g = loss_grad;
  for (std::size_t i = layers.size(); i-- > 0;) g = layer_backward(layers[i], g);
}

Tensor softmax(const Tensor& logits, double temperature) {
  if (logits.rank() != 2 || logits.dim(1) < 2) {
    throw DimensionError("softmax expects (b, C>=2) logits, got " + shape_to_string(logits.shape()));
  }
  if (!(temperature > 0.0)) throw ConfigError("softmax temperature must be positive");
  Tensor out = logits;
  const std::size_t classes = logits.dim(1);
  for (std::size_t r = 0; r < logits.dim(0); ++r) {
    auto row = out.row(r);
    if (temperature != 1.0) {
      for (auto& v : row) v /= temperature;
    }
    const double peak = *std::max_element(row.begin(), row.end());
    double total = 0.0;
    for (auto& v : row) {
      v = std::exp(v - peak);
      total += v;
    }
    for (std::size_t c = 0; c < classes; ++c) row[c] /= total;
  }
  return out;
}

Model build_model(std::string arch_id, std::size_t input_dim, const std::vector<LayerSpec>& plan,
                  std::uint64_t seed) {
  if (input_dim == 0) throw ConfigError("input dimension must be positive");
  std::mt19937_64 rng(seed);
  std::vector<Layer> layers;
  // Per-sample feature shape flowing between layers.
  Shape features{input_dim};

  auto xavier = [&rng](Tensor& t, std::size_t fan_in, std::size_t fan_out) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-bound, bound);
    for (auto& v : t.values()) v = dist(rng);
  };

  for (std::size_t i = 0; i < plan.size(); ++i) {
    const LayerSpec& spec = plan[i];
    Layer layer;
    layer.kind = spec.kind;
    switch (spec.kind) {
      case LayerKind::dense: {
        if (features.size() != 1) {
          throw ConfigError(layer_name(i, spec.kind) + " of " + arch_id + " needs flat input; add a flatten layer");
        }
        if (spec.units == 0) throw ConfigError(layer_name(i, spec.kind) + " of " + arch_id + " has zero units");
        const std::size_t fan_in = features[0];
        Tensor w({fan_in, spec.units});
        xavier(w, fan_in, spec.units);
        layer.params.push_back({"weight", std::move(w), Tensor({fan_in, spec.units})});
        layer.params.push_back({"bias", Tensor({spec.units}), Tensor({spec.units})});
        features = {spec.units};
        break;
      }
      case LayerKind::relu:
        break;
      case LayerKind::conv2d_small: {
        const ConvGeometry& cg = spec.conv;
        if (cg.kernel == 0 || cg.kernel > cg.height || cg.kernel > cg.width || cg.out_channels == 0 ||
            cg.in_channels == 0) {
          throw ConfigError(layer_name(i, spec.kind) + " of " + arch_id + " has invalid geometry");
        }
        if (shape_size(features) != cg.in_channels * cg.height * cg.width) {
          throw ConfigError(layer_name(i, spec.kind) + " of " + arch_id + " expects " +
                            std::to_string(cg.in_channels * cg.height * cg.width) + " input features, got " +
                            std::to_string(shape_size(features)));
        }
        const std::size_t k2 = cg.kernel * cg.kernel;
        Tensor w({cg.out_channels, cg.in_channels, cg.kernel, cg.kernel});
        xavier(w, cg.in_channels * k2, cg.out_channels * k2);
        layer.params.push_back({"weight", std::move(w), Tensor({cg.out_channels, cg.in_channels, cg.kernel, cg.kernel})});
        layer.params.push_back({"bias", Tensor({cg.out_channels}), Tensor({cg.out_channels})});
        layer.conv = cg;
        features = {cg.out_channels, cg.out_height(), cg.out_width()};
        break;
      }
      case LayerKind::flatten:
        features = {shape_size(features)};
        break;
    }
    layers.push_back(std::move(layer));
  }
  return Model(std::move(arch_id), input_dim, std::move(layers));
}

AdamState make_adam_state(const Model& model, double alpha, double beta1, double beta2, double eps) {
  AdamState state;
  state.alpha = alpha;
  state.beta1 = beta1;
  state.beta2 = beta2;
  state.eps = eps;
  for (const Parameter* p : model.parameters()) {
    state.m.emplace_back(p->value.shape());
    state.v.emplace_back(p->value.shape());
  }
  return state;
}

void adam_step(Model& model, AdamState& state) {
  auto params = model.parameters();
  if (params.size() != state.m.size() || params.size() != state.v.size()) {
    throw ConfigError("optimizer state tracks " + std::to_string(state.m.size()) + " tensors but model " +
                      model.arch_id() + " has " + std::to_string(params.size()));
  }
  bool any_gradient = false;
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i]->value.shape() != state.m[i].shape() || params[i]->value.shape() != state.v[i].shape() ||
        params[i]->grad.shape() != params[i]->value.shape()) {
      throw ConfigError("optimizer state shape mismatch for parameter " + std::to_string(i) + " (" +
                        params[i]->name + ") of " + model.arch_id());
    }
    for (double g : params[i]->grad.values()) any_gradient = any_gradient || g != 0.0;
  }

  state.t += 1;
  const double t = static_cast<double>(state.t);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto w = params[i]->value.values();
    auto g = params[i]->grad.values();
    auto m = state.m[i].values();
    auto v = state.v[i].values();
    for (std::size_t j = 0; j < w.size(); ++j) {
      m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * g[j];
      v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * g[j] * g[j];
      if (any_gradient) {
        const double m_hat = m[j] / correction1;
        const double v_hat = v[j] / correction2;
        w[j] -= state.alpha * m_hat / (std::sqrt(v_hat) + state.eps);
      }
    }
  }
}

}  // namespace hetfl
