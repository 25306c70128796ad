#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace cnnabs {

// Thrown when a network, query or file does not have the expected structure.
class StructuralError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Dimensions d_1 x ... x d_D of a layer viewed as a multi-dimensional array.
class LayerShape {
 public:
  LayerShape() = default;
  explicit LayerShape(std::vector<std::size_t> dims);
  LayerShape(std::initializer_list<std::size_t> dims)
      : LayerShape(std::vector<std::size_t>(dims)) {}

  const std::vector<std::size_t>& dims() const { return dims_; }
  std::size_t rank() const { return dims_.size(); }
  std::size_t size() const;

  bool operator==(const LayerShape&) const = default;

 private:
  std::vector<std::size_t> dims_;
};

// Row-major coordinates of a neuron; inverse of flatIndex.
std::vector<std::size_t> neuronCoordinates(const LayerShape& shape, std::size_t flatIndex);
std::size_t flatIndex(const LayerShape& shape, std::span<const std::size_t> coords);

enum class LayerKind { Input, WeightedSum, Convolution, Relu, MaxPool, Output };

std::string_view toString(LayerKind kind);
LayerKind parseLayerKind(std::string_view name);

// One incoming edge of a neuron: value of `source` (index into the preceding
// layer, or a node id in a NeuronGraph) scaled by `weight`.
struct Term {
  std::size_t source = 0;
  double weight = 0.0;

  bool operator==(const Term&) const = default;
};

// Sparse affine map, one row of terms per output neuron.
struct SparseAffine {
  std::vector<std::vector<Term>> rows;
  std::vector<double> bias;

  bool operator==(const SparseAffine&) const = default;
};

// Builds sparse rows from a dense t x l matrix, dropping zero weights.
SparseAffine denseAffine(const std::vector<std::vector<double>>& weights, std::vector<double> bias);

struct Layer {
  LayerKind kind = LayerKind::Input;
  LayerShape shape;

  // WeightedSum / Output, and Convolution in lowered (explicit rows) form.
  SparseAffine affine;

  // Convolution in the shared-kernel 1-D form: V[i] = b + sum_j W[j] * U[i + j].
  std::vector<double> kernel;
  double kernelBias = 0.0;

  // MaxPool: neuron i pools {ik, ..., ik + k - 1}.
  std::size_t poolSize = 0;

  std::size_t size() const { return shape.size(); }
  bool isKernelConvolution() const { return kind == LayerKind::Convolution && !kernel.empty(); }

  bool operator==(const Layer&) const = default;

  static Layer input(LayerShape shape);
  static Layer weightedSum(LayerShape shape, SparseAffine affine);
  static Layer output(LayerShape shape, SparseAffine affine);
  static Layer convolution(LayerShape shape, std::vector<double> kernel, double bias);
  static Layer loweredConvolution(LayerShape shape, SparseAffine affine);
  static Layer relu(LayerShape shape);
  static Layer maxPool(LayerShape shape, std::size_t poolSize);
};

// Feed-forward network: an Input layer, hidden layers, and an Output layer.
// Immutable once constructed; the constructor validates layer sizes.
class Network {
 public:
  Network(std::string name, std::vector<Layer> layers);

  const std::string& name() const { return name_; }
  const std::vector<Layer>& layers() const { return layers_; }
  const Layer& layer(std::size_t i) const { return layers_.at(i); }
  std::size_t layerCount() const { return layers_.size(); }
  std::size_t inputSize() const { return layers_.front().size(); }
  std::size_t outputSize() const { return layers_.back().size(); }
  std::size_t neuronCount() const;

  bool operator==(const Network&) const = default;

 private:
  std::string name_;
  std::vector<Layer> layers_;
};

// Values of every layer after one forward pass.
struct Assignment {
  std::vector<std::vector<double>> layers;

  const std::vector<double>& output() const { return layers.back(); }
};

Assignment evaluate(const Network& net, std::span<const double> input);

// Rewrites every Convolution layer as an equivalent sparse WeightedSum layer.
Network flatten(const Network& net);

// Convenience builder that infers layer shapes from the preceding layer.
class NetworkBuilder {
 public:
  explicit NetworkBuilder(LayerShape inputShape);

  NetworkBuilder& convolution(std::vector<double> kernel, double bias);
  NetworkBuilder& loweredConvolution(SparseAffine affine, std::optional<LayerShape> shape = {});
  NetworkBuilder& relu();
  NetworkBuilder& maxPool(std::size_t poolSize, std::optional<LayerShape> shape = {});
  NetworkBuilder& weightedSum(const std::vector<std::vector<double>>& weights, std::vector<double> bias);
  NetworkBuilder& weightedSum(SparseAffine affine, std::optional<LayerShape> shape = {});
  NetworkBuilder& output(const std::vector<std::vector<double>>& weights, std::vector<double> bias);

  Network build(std::string name = "network") const;

 private:
  std::size_t lastSize() const { return layers_.back().size(); }

  std::vector<Layer> layers_;
};

}  // namespace cnnabs
