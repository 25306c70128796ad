#include "cnnabs/network.hpp"

#include <algorithm>
#include <array>
#include <numeric>
#include <string>

namespace cnnabs {

LayerShape::LayerShape(std::vector<std::size_t> dims) : dims_(std::move(dims)) {
  if (dims_.empty()) {
    throw StructuralError("layer shape must have at least one dimension");
  }
  for (std::size_t d : dims_) {
    if (d == 0) {
      throw StructuralError("layer shape dimensions must be positive");
    }
  }
}

std::size_t LayerShape::size() const {
  return std::accumulate(dims_.begin(), dims_.end(), std::size_t{1}, std::multiplies<>());
}

std::vector<std::size_t> neuronCoordinates(const LayerShape& shape, std::size_t flatIndex) {
  if (flatIndex >= shape.size()) {
    throw StructuralError("neuron index " + std::to_string(flatIndex) + " out of range for layer of size " +
                          std::to_string(shape.size()));
  }
  std::vector<std::size_t> coords(shape.rank());
  for (std::size_t d = shape.rank(); d-- > 0;) {
    coords[d] = flatIndex % shape.dims()[d];
    flatIndex /= shape.dims()[d];
  }
  return coords;
}

std::size_t flatIndex(const LayerShape& shape, std::span<const std::size_t> coords) {
  if (coords.size() != shape.rank()) {
    throw StructuralError("coordinate rank does not match layer shape");
  }
  std::size_t index = 0;
  for (std::size_t d = 0; d < coords.size(); ++d) {
    if (coords[d] >= shape.dims()[d]) {
      throw StructuralError("coordinate out of range");
    }
    index = index * shape.dims()[d] + coords[d];
  }
  return index;
}

namespace {

constexpr std::array<std::pair<LayerKind, std::string_view>, 6> kLayerNames{{
    {LayerKind::Input, "input"},
    {LayerKind::WeightedSum, "ws"},
    {LayerKind::Convolution, "conv"},
    {LayerKind::Relu, "relu"},
    {LayerKind::MaxPool, "maxpool"},
    {LayerKind::Output, "output"},
}};

void checkAffine(const SparseAffine& affine, std::size_t rows, std::size_t cols, std::size_t layerIndex) {
  const std::string where = "layer " + std::to_string(layerIndex);
  if (affine.rows.size() != rows || affine.bias.size() != rows) {
    throw StructuralError(where + ": weight rows/bias do not match layer size " + std::to_string(rows));
  }
  for (const auto& row : affine.rows) {
    for (const Term& t : row) {
      if (t.source >= cols) {
        throw StructuralError(where + ": weight column " + std::to_string(t.source) +
                              " exceeds preceding layer size " + std::to_string(cols));
      }
    }
  }
}

std::vector<double> applyAffine(const SparseAffine& affine, std::span<const double> in) {
  std::vector<double> out(affine.rows.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    double v = affine.bias[i];
    for (const Term& t : affine.rows[i]) {
      v += t.weight * in[t.source];
    }
    out[i] = v;
  }
  return out;
}

SparseAffine kernelRows(const Layer& layer, std::size_t inputSize) {
  SparseAffine affine;
  const std::size_t outSize = inputSize - layer.kernel.size() + 1;
  affine.rows.resize(outSize);
  affine.bias.assign(outSize, layer.kernelBias);
  for (std::size_t i = 0; i < outSize; ++i) {
    for (std::size_t j = 0; j < layer.kernel.size(); ++j) {
      if (layer.kernel[j] != 0.0) {
        affine.rows[i].push_back({i + j, layer.kernel[j]});
      }
    }
  }
  return affine;
}

}  // namespace

std::string_view toString(LayerKind kind) {
  for (const auto& [k, name] : kLayerNames) {
    if (k == kind) return name;
  }
  return "unknown";
}

LayerKind parseLayerKind(std::string_view name) {
  for (const auto& [k, n] : kLayerNames) {
    if (n == name) return k;
  }
  throw StructuralError("unknown layer kind '" + std::string(name) + "'");
}

SparseAffine denseAffine(const std::vector<std::vector<double>>& weights, std::vector<double> bias) {
  SparseAffine affine;
  affine.bias = std::move(bias);
  affine.rows.resize(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i) {
    for (std::size_t j = 0; j < weights[i].size(); ++j) {
      if (weights[i][j] != 0.0) {
        affine.rows[i].push_back({j, weights[i][j]});
      }
    }
  }
  return affine;
}

Layer Layer::input(LayerShape shape) {
  Layer l;
  l.kind = LayerKind::Input;
  l.shape = std::move(shape);
  return l;
}

Layer Layer::weightedSum(LayerShape shape, SparseAffine affine) {
  Layer l;
  l.kind = LayerKind::WeightedSum;
  l.shape = std::move(shape);
  l.affine = std::move(affine);
  return l;
}

Layer Layer::output(LayerShape shape, SparseAffine affine) {
  Layer l = weightedSum(std::move(shape), std::move(affine));
  l.kind = LayerKind::Output;
  return l;
}

Layer Layer::convolution(LayerShape shape, std::vector<double> kernel, double bias) {
  if (kernel.empty()) {
    throw StructuralError("convolution kernel must not be empty");
  }
  Layer l;
  l.kind = LayerKind::Convolution;
  l.shape = std::move(shape);
  l.kernel = std::move(kernel);
  l.kernelBias = bias;
  return l;
}

Layer Layer::loweredConvolution(LayerShape shape, SparseAffine affine) {
  Layer l = weightedSum(std::move(shape), std::move(affine));
  l.kind = LayerKind::Convolution;
  return l;
}

Layer Layer::relu(LayerShape shape) {
  Layer l;
  l.kind = LayerKind::Relu;
  l.shape = std::move(shape);
  return l;
}

Layer Layer::maxPool(LayerShape shape, std::size_t poolSize) {
  Layer l;
  l.kind = LayerKind::MaxPool;
  l.shape = std::move(shape);
  l.poolSize = poolSize;
  return l;
}

Network::Network(std::string name, std::vector<Layer> layers) : name_(std::move(name)), layers_(std::move(layers)) {
  if (layers_.size() < 2) {
    throw StructuralError("a network needs at least an input and an output layer");
  }
  if (layers_.front().kind != LayerKind::Input) {
    throw StructuralError("first layer must be an input layer");
  }
  if (layers_.back().kind != LayerKind::Output) {
    throw StructuralError("last layer must be an output layer");
  }
  for (std::size_t i = 1; i < layers_.size(); ++i) {
    const Layer& layer = layers_[i];
    const std::size_t prev = layers_[i - 1].size();
    const std::string where = "layer " + std::to_string(i);
    switch (layer.kind) {
      case LayerKind::Input:
        throw StructuralError(where + ": input layer must come first");
      case LayerKind::Output:
        if (i + 1 != layers_.size()) throw StructuralError(where + ": output layer must come last");
        [[fallthrough]];
      case LayerKind::WeightedSum:
        checkAffine(layer.affine, layer.size(), prev, i);
        break;
      case LayerKind::Convolution:
        if (layer.isKernelConvolution()) {
          if (layer.kernel.size() > prev || layer.size() != prev - layer.kernel.size() + 1) {
            throw StructuralError(where + ": convolution output must have size l - k + 1");
          }
        } else {
          checkAffine(layer.affine, layer.size(), prev, i);
        }
        break;
      case LayerKind::Relu:
        if (layer.size() != prev) throw StructuralError(where + ": relu layer must match preceding size");
        break;
      case LayerKind::MaxPool:
        if (layer.poolSize == 0 || prev % layer.poolSize != 0 || layer.size() != prev / layer.poolSize) {
          throw StructuralError(where + ": pool size must divide the preceding layer size");
        }
        break;
    }
  }
}

std::size_t Network::neuronCount() const {
  std::size_t n = 0;
  for (const Layer& l : layers_) n += l.size();
  return n;
}

Assignment evaluate(const Network& net, std::span<const double> input) {
  if (input.size() != net.inputSize()) {
    throw StructuralError("input has " + std::to_string(input.size()) + " values, network expects " +
                          std::to_string(net.inputSize()));
  }
  Assignment a;
  a.layers.reserve(net.layerCount());
  a.layers.emplace_back(input.begin(), input.end());
  for (std::size_t i = 1; i < net.layerCount(); ++i) {
    const Layer& layer = net.layer(i);
    const std::vector<double>& prev = a.layers.back();
    std::vector<double> out;
    switch (layer.kind) {
      case LayerKind::WeightedSum:
      case LayerKind::Output:
        out = applyAffine(layer.affine, prev);
        break;
      case LayerKind::Convolution:
        if (layer.isKernelConvolution()) {
          out.resize(layer.size());
          for (std::size_t n = 0; n < out.size(); ++n) {
            double v = layer.kernelBias;
            for (std::size_t j = 0; j < layer.kernel.size(); ++j) v += layer.kernel[j] * prev[n + j];
            out[n] = v;
          }
        } else {
          out = applyAffine(layer.affine, prev);
        }
        break;
      case LayerKind::Relu:
        out.resize(prev.size());
        std::transform(prev.begin(), prev.end(), out.begin(), [](double v) { return std::max(0.0, v); });
        break;
      case LayerKind::MaxPool:
        out.resize(layer.size());
        for (std::size_t n = 0; n < out.size(); ++n) {
          const auto first = prev.begin() + static_cast<std::ptrdiff_t>(n * layer.poolSize);
          out[n] = *std::max_element(first, first + static_cast<std::ptrdiff_t>(layer.poolSize));
        }
        break;
      case LayerKind::Input:
        break;
    }
    a.layers.push_back(std::move(out));
  }
  return a;
}

Network flatten(const Network& net) {
  std::vector<Layer> layers = net.layers();
  for (std::size_t i = 1; i < layers.size(); ++i) {
    Layer& layer = layers[i];
    if (layer.kind != LayerKind::Convolution) continue;
    SparseAffine affine = layer.isKernelConvolution() ? kernelRows(layer, layers[i - 1].size()) : layer.affine;
    layer = Layer::weightedSum(layer.shape, std::move(affine));
  }
  return Network(net.name(), std::move(layers));
}

NetworkBuilder::NetworkBuilder(LayerShape inputShape) { layers_.push_back(Layer::input(std::move(inputShape))); }

NetworkBuilder& NetworkBuilder::convolution(std::vector<double> kernel, double bias) {
  if (kernel.size() > lastSize()) throw StructuralError("kernel larger than preceding layer");
  const std::size_t out = lastSize() - kernel.size() + 1;
  layers_.push_back(Layer::convolution(LayerShape{out}, std::move(kernel), bias));
  return *this;
}

NetworkBuilder& NetworkBuilder::loweredConvolution(SparseAffine affine, std::optional<LayerShape> shape) {
  LayerShape s = shape ? *shape : LayerShape{affine.rows.size()};
  layers_.push_back(Layer::loweredConvolution(std::move(s), std::move(affine)));
  return *this;
}

NetworkBuilder& NetworkBuilder::relu() {
  layers_.push_back(Layer::relu(layers_.back().shape));
  return *this;
}

NetworkBuilder& NetworkBuilder::maxPool(std::size_t poolSize, std::optional<LayerShape> shape) {
  if (poolSize == 0) throw StructuralError("pool size must be positive");
  LayerShape s = shape ? *shape : LayerShape{lastSize() / poolSize};
  layers_.push_back(Layer::maxPool(std::move(s), poolSize));
  return *this;
}

NetworkBuilder& NetworkBuilder::weightedSum(const std::vector<std::vector<double>>& weights,
                                            std::vector<double> bias) {
  return weightedSum(denseAffine(weights, std::move(bias)));
}

NetworkBuilder& NetworkBuilder::weightedSum(SparseAffine affine, std::optional<LayerShape> shape) {
  LayerShape s = shape ? *shape : LayerShape{affine.rows.size()};
  layers_.push_back(Layer::weightedSum(std::move(s), std::move(affine)));
  return *this;
}

NetworkBuilder& NetworkBuilder::output(const std::vector<std::vector<double>>& weights, std::vector<double> bias) {
  layers_.push_back(Layer::output(LayerShape{weights.size()}, denseAffine(weights, std::move(bias))));
  return *this;
}

Network NetworkBuilder::build(std::string name) const { return Network(std::move(name), layers_); }

}  // namespace cnnabs
