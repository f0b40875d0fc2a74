#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "swapnas/bit_matrix.hpp"
#include "swapnas/tensor.hpp"

namespace swapnas {

enum class LayerKind {
  Input,          // graph entry, exactly one, always layer 0
  Conv,           // k x k convolution, optional ReLU
  AvgPool,        // k x k average pool, padding excluded from the divisor
  Skip,           // identity
  Sum,            // elementwise sum of all inputs
  Dense,          // fully connected over the flattened input, optional ReLU
  GlobalAvgPool,  // C x H x W -> C x 1 x 1
};

const char* to_string(LayerKind kind) noexcept;

/// One node of the layer DAG. Any node with several inputs sees their sum.
/// Only Conv and Dense layers carry weights; `relu` marks layers whose
/// output passes through a ReLU and is therefore captured.
struct LayerSpec {
  LayerKind kind = LayerKind::Skip;
  std::string name;
  std::vector<int> inputs;
  int out_channels = 0;  // Conv
  int kernel = 1;        // Conv, AvgPool
  int stride = 1;        // Conv, AvgPool
  int padding = 0;       // Conv, AvgPool
  int units = 0;         // Dense
  bool relu = false;

  // Filled in by shape inference.
  Shape in_shape;
  Shape out_shape;

  bool has_weights() const noexcept { return kind == LayerKind::Conv || kind == LayerKind::Dense; }
  /// Weight tensor element count (biases excluded). Valid after shape inference.
  std::size_t weight_count() const noexcept;
  std::size_t fan_in() const noexcept;
};

/// Layer DAG plus the input it expects. Spatial input dims of 0 mean "any";
/// layers are topologically ordered (inputs always refer to earlier layers).
struct LayerGraph {
  Shape input;
  std::vector<LayerSpec> layers;

  /// Number of layers that perform an operation (excludes Input, Sum).
  std::size_t op_layer_count() const noexcept;
};

/// Conv/pool output extent along one axis: floor((in + 2p - k) / t) + 1.
int conv_output_extent(int in, int kernel, int stride, int padding);

/// Copies `graph` with in/out shapes resolved for the given input shape.
/// Throws ShapeError if a kernel exceeds its (padded) feature map and
/// AssemblyError (naming the node) on fan-in shape mismatches.
LayerGraph infer_shapes(const LayerGraph& graph, const Shape& input);

/// Untrained network: a layer DAG with seeded Gaussian weights, zero biases.
class NetworkInstance {
 public:
  /// Weights ~ N(0, 2 / fan_in), one independent stream per layer derived
  /// from `seed`. Identical (graph, seed) give bit-identical weights.
  static NetworkInstance build(LayerGraph graph, std::uint64_t seed, std::string descriptor = {});

  const LayerGraph& graph() const noexcept { return graph_; }
  std::uint64_t seed() const noexcept { return seed_; }
  const std::string& descriptor() const noexcept { return descriptor_; }

  /// Weights of layer `i` in [out][in][ky][kx] (conv) or [out][in] (dense)
  /// order; empty for weightless layers.
  std::span<const float> weights(std::size_t i) const noexcept { return weights_[i]; }

  /// Copy with every weight of layer `i` multiplied by `factor`.
  NetworkInstance with_scaled_layer(std::size_t i, float factor) const;
  /// Copy with all weights set to zero.
  NetworkInstance with_zero_weights() const;

 private:
  LayerGraph graph_;
  std::vector<std::vector<float>> weights_;
  std::uint64_t seed_ = 0;
  std::string descriptor_;
};

/// Number of scalars feeding ReLU layers for one sample of shape `dims`
/// (sum over ReLU layers of c * out_h * out_w, or units for dense layers).
std::size_t count_intermediate_values(const NetworkInstance& net, const Shape& dims);

struct CaptureOptions {
  /// Standardise each ReLU layer's pre-activations per channel over the
  /// batch (mean 0, variance 1), the way batch-norm behaves at init.
  bool standardise = true;
  double epsilon = 1e-5;
};

/// V x S matrix of binarised post-activation values. Row v holds value v
/// (layer order, then channel, row, column) across all samples.
class ActivationCapture {
 public:
  ActivationCapture() = default;
  explicit ActivationCapture(BitMatrix bits) : bits_(std::move(bits)) {}

  std::size_t values() const noexcept { return bits_.rows(); }
  std::size_t samples() const noexcept { return bits_.cols(); }
  bool bit(std::size_t v, std::size_t s) const noexcept { return bits_.get(v, s); }
  const BitMatrix& bits() const noexcept { return bits_; }

  ActivationCapture transposed() const { return ActivationCapture(bits_.transposed()); }

  friend bool operator==(const ActivationCapture&, const ActivationCapture&) = default;

 private:
  BitMatrix bits_;
};

/// Runs the batch through the network and records, for every value feeding
/// a ReLU, whether its post-activation is positive. Throws NumericError
/// naming the layer when a non-finite value appears.
ActivationCapture forward_capture(const NetworkInstance& net, const InputBatch& batch,
                                  const CaptureOptions& options = {});

}  // namespace swapnas
