#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "fairtab/core/matrix.hpp"
#include "fairtab/core/rng.hpp"
#include "fairtab/error.hpp"

namespace fairtab {

enum class Activation { relu, linear, sigmoid };

inline std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::linear: return "linear";
    case Activation::sigmoid: return "sigmoid";
  }
  return "linear";
}

inline Activation activation_from_string(std::string_view name) {
  if (name == "relu") return Activation::relu;
  if (name == "linear") return Activation::linear;
  if (name == "sigmoid") return Activation::sigmoid;
  throw ConfigError("unknown activation '" + std::string(name) + "'");
}

/// One dense layer: weights are out_dim x in_dim.
struct LayerParams {
  Matrix weights;
  Vector bias;

  Index in_dim() const { return weights.cols(); }
  Index out_dim() const { return weights.rows(); }
};

/// Fully connected stack. Hidden layers use `hidden`, the last layer `output`.
struct Mlp {
  std::vector<LayerParams> layers;
  Activation hidden = Activation::relu;
  Activation output = Activation::linear;

  Index in_dim() const { return layers.empty() ? 0 : layers.front().in_dim(); }
  Index out_dim() const { return layers.empty() ? 0 : layers.back().out_dim(); }

  Activation activation_of(std::size_t layer) const {
    return layer + 1 == layers.size() ? output : hidden;
  }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += static_cast<std::size_t>(l.weights.size() + l.bias.size());
    return n;
  }
};

/// Builds a network in_dim -> sizes[0] -> ... -> sizes.back() with uniform
/// He-style initialisation, U(-sqrt(6/fan_in), sqrt(6/fan_in)), and zero biases.
inline Mlp make_mlp(std::size_t in_dim, std::span<const std::size_t> sizes, Activation hidden,
                    Activation output, Rng& rng) {
  if (in_dim == 0) throw ShapeError("make_mlp: input dimension must be positive");
  Mlp net;
  net.hidden = hidden;
  net.output = output;
  std::size_t fan_in = in_dim;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (sizes[i] == 0) throw ShapeError("make_mlp: layer " + std::to_string(i) + " has zero width");
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    LayerParams layer;
    layer.weights.resize(static_cast<Index>(sizes[i]), static_cast<Index>(fan_in));
    for (Index r = 0; r < layer.weights.rows(); ++r)
      for (Index c = 0; c < layer.weights.cols(); ++c) layer.weights(r, c) = rng.uniform(-bound, bound);
    layer.bias = Vector::Zero(static_cast<Index>(sizes[i]));
    net.layers.push_back(std::move(layer));
    fan_in = sizes[i];
  }
  return net;
}

/// activations[0] is the input, activations[l + 1] the output of layer l.
struct ForwardCache {
  std::vector<Matrix> activations;

  const Matrix& output() const { return activations.back(); }
};

namespace detail {

inline void apply_activation(Matrix& m, Activation a) {
  switch (a) {
    case Activation::relu: m = m.cwiseMax(0.0); break;
    case Activation::linear: break;
    case Activation::sigmoid: m = (1.0 + (-m.array()).exp()).inverse().matrix(); break;
  }
}

// Multiplies `grad` in place by the activation derivative, expressed through the
// activation output `out`.
inline void apply_activation_derivative(Matrix& grad, const Matrix& out, Activation a) {
  switch (a) {
    case Activation::relu: grad = (out.array() > 0.0).select(grad, 0.0); break;
    case Activation::linear: break;
    case Activation::sigmoid: grad.array() *= out.array() * (1.0 - out.array()); break;
  }
}

}  // namespace detail

inline ForwardCache forward(const Mlp& net, const Matrix& x) {
  ForwardCache cache;
  cache.activations.reserve(net.layers.size() + 1);
  cache.activations.push_back(x);
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const auto& layer = net.layers[l];
    const Matrix& in = cache.activations.back();
    if (in.cols() != layer.in_dim()) {
      throw ShapeError("forward: layer " + std::to_string(l) + " expects " +
                       std::to_string(layer.in_dim()) + " inputs, got " + std::to_string(in.cols()));
    }
    Matrix out = in * layer.weights.transpose();
    out.rowwise() += layer.bias.transpose();
    detail::apply_activation(out, net.activation_of(l));
    cache.activations.push_back(std::move(out));
  }
  return cache;
}

struct LayerGrad {
  Matrix weights;
  Vector bias;
};

struct MlpGrad {
  std::vector<LayerGrad> layers;
  Matrix input;  // gradient w.r.t. the network input
};

/// Backpropagates `upstream` (gradient w.r.t. the network output activations).
inline MlpGrad backward(const Mlp& net, const ForwardCache& cache, const Matrix& upstream) {
  if (cache.activations.size() != net.layers.size() + 1)
    throw ShapeError("backward: cache does not match network depth");
  require_shape(upstream, cache.output().rows(), cache.output().cols(), "backward: upstream gradient");
  MlpGrad grads;
  grads.layers.resize(net.layers.size());
  Matrix delta = upstream;
  for (std::size_t l = net.layers.size(); l-- > 0;) {
    detail::apply_activation_derivative(delta, cache.activations[l + 1], net.activation_of(l));
    const Matrix& in = cache.activations[l];
    grads.layers[l].weights = delta.transpose() * in;
    grads.layers[l].bias = delta.colwise().sum().transpose();
    delta = delta * net.layers[l].weights;
  }
  grads.input = std::move(delta);
  return grads;
}

/// Named view of a contiguous parameter block.
struct ParamBlock {
  std::string name;
  std::span<double> values;
};

struct GradBlock {
  std::string name;
  std::span<const double> values;
};

inline void append_param_blocks(Mlp& net, const std::string& prefix, std::vector<ParamBlock>& out) {
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    auto& layer = net.layers[l];
    const std::string base = prefix + "." + std::to_string(l);
    out.push_back({base + ".weights", {layer.weights.data(), static_cast<std::size_t>(layer.weights.size())}});
    out.push_back({base + ".bias", {layer.bias.data(), static_cast<std::size_t>(layer.bias.size())}});
  }
}

inline void append_grad_blocks(const MlpGrad& grads, const std::string& prefix, std::vector<GradBlock>& out) {
  for (std::size_t l = 0; l < grads.layers.size(); ++l) {
    const auto& g = grads.layers[l];
    const std::string base = prefix + "." + std::to_string(l);
    out.push_back({base + ".weights", {g.weights.data(), static_cast<std::size_t>(g.weights.size())}});
    out.push_back({base + ".bias", {g.bias.data(), static_cast<std::size_t>(g.bias.size())}});
  }
}

/// Zero gradient with the same shapes as `net`.
inline MlpGrad zero_grad(const Mlp& net) {
  MlpGrad g;
  for (const auto& l : net.layers) g.layers.push_back({Matrix::Zero(l.out_dim(), l.in_dim()), Vector::Zero(l.out_dim())});
  return g;
}

// Snapshot format: {"sizes": [in, h1, ...], "hidden": "relu", "output": "linear",
//                   "layers": [{"rows": r, "cols": c, "weights": [row-major], "bias": [...]}]}
inline nlohmann::json to_json(const Mlp& net) {
  nlohmann::json j;
  std::vector<Index> sizes;
  if (!net.layers.empty()) sizes.push_back(net.in_dim());
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& l : net.layers) {
    sizes.push_back(l.out_dim());
    std::vector<double> w(l.weights.data(), l.weights.data() + l.weights.size());
    std::vector<double> b(l.bias.data(), l.bias.data() + l.bias.size());
    layers.push_back({{"rows", l.out_dim()}, {"cols", l.in_dim()}, {"weights", w}, {"bias", b}});
  }
  j["sizes"] = sizes;
  j["hidden"] = std::string(to_string(net.hidden));
  j["output"] = std::string(to_string(net.output));
  j["layers"] = std::move(layers);
  return j;
}

inline Mlp mlp_from_json(const nlohmann::json& j) {
  Mlp net;
  net.hidden = activation_from_string(j.at("hidden").get<std::string>());
  net.output = activation_from_string(j.at("output").get<std::string>());
  Index prev = -1;
  for (const auto& lj : j.at("layers")) {
    const auto rows = lj.at("rows").get<Index>();
    const auto cols = lj.at("cols").get<Index>();
    const auto w = lj.at("weights").get<std::vector<double>>();
    const auto b = lj.at("bias").get<std::vector<double>>();
    if (static_cast<Index>(w.size()) != rows * cols || static_cast<Index>(b.size()) != rows)
      throw ShapeError("mlp snapshot: layer " + std::to_string(net.layers.size()) + " has inconsistent sizes");
    if (prev >= 0 && cols != prev)
      throw ShapeError("mlp snapshot: layer " + std::to_string(net.layers.size()) + " does not chain");
    LayerParams l;
    l.weights = Eigen::Map<const Matrix>(w.data(), rows, cols);
    l.bias = Eigen::Map<const Vector>(b.data(), rows);
    if (!l.weights.allFinite() || !l.bias.allFinite())
      throw NumericError("mlp snapshot: non-finite parameter in layer " + std::to_string(net.layers.size()));
    net.layers.push_back(std::move(l));
    prev = rows;
  }
  return net;
}

}  // namespace fairtab
