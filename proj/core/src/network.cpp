#include "swapnas/network.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "swapnas/errors.hpp"
#include "swapnas/rng.hpp"
#include "swapnas/swap_metric.hpp"

namespace swapnas {

const char* to_string(LayerKind kind) noexcept {
  switch (kind) {
    case LayerKind::Input: return "input";
    case LayerKind::Conv: return "conv";
    case LayerKind::AvgPool: return "avg-pool";
    case LayerKind::Skip: return "skip";
    case LayerKind::Sum: return "sum";
    case LayerKind::Dense: return "dense";
    case LayerKind::GlobalAvgPool: return "global-avg-pool";
  }
  return "?";
}

std::size_t LayerSpec::fan_in() const noexcept {
  if (kind == LayerKind::Conv)
    return static_cast<std::size_t>(in_shape.channels) * static_cast<std::size_t>(kernel * kernel);
  if (kind == LayerKind::Dense) return in_shape.size();
  return 0;
}

std::size_t LayerSpec::weight_count() const noexcept {
  if (kind == LayerKind::Conv) return static_cast<std::size_t>(out_channels) * fan_in();
  if (kind == LayerKind::Dense) return static_cast<std::size_t>(units) * fan_in();
  return 0;
}

std::size_t LayerGraph::op_layer_count() const noexcept {
  return static_cast<std::size_t>(std::count_if(layers.begin(), layers.end(), [](const LayerSpec& l) {
    return l.kind != LayerKind::Input && l.kind != LayerKind::Sum;
  }));
}

int conv_output_extent(int in, int kernel, int stride, int padding) {
  if (in + 2 * padding < kernel) return 0;
  return (in + 2 * padding - kernel) / stride + 1;
}

LayerGraph infer_shapes(const LayerGraph& graph, const Shape& input) {
  if (graph.layers.empty() || graph.layers.front().kind != LayerKind::Input)
    throw AssemblyError("layer graph must start with an input layer");
  if (input.channels != graph.input.channels)
    throw ShapeError("input has " + std::to_string(input.channels) + " channels, network expects " +
                     std::to_string(graph.input.channels));
  if ((graph.input.height && graph.input.height != input.height) ||
      (graph.input.width && graph.input.width != input.width))
    throw ShapeError("network was built for a fixed " + std::to_string(graph.input.width) + "x" +
                     std::to_string(graph.input.height) + " input");

  LayerGraph out = graph;
  out.layers[0].in_shape = out.layers[0].out_shape = input;
  for (std::size_t i = 1; i < out.layers.size(); ++i) {
    LayerSpec& l = out.layers[i];
    if (l.inputs.empty()) throw AssemblyError("layer '" + l.name + "' has no inputs");
    for (int src : l.inputs)
      if (src < 0 || static_cast<std::size_t>(src) >= i)
        throw AssemblyError("layer '" + l.name + "' references a later or missing layer (graph not acyclic)");
    l.in_shape = out.layers[static_cast<std::size_t>(l.inputs.front())].out_shape;
    for (int src : l.inputs)
      if (!(out.layers[static_cast<std::size_t>(src)].out_shape == l.in_shape))
        throw AssemblyError("fan-in shape mismatch at node '" + l.name + "'");

    const Shape& in = l.in_shape;
    switch (l.kind) {
      case LayerKind::Input:
        throw AssemblyError("second input layer '" + l.name + "'");
      case LayerKind::Conv:
      case LayerKind::AvgPool: {
        if (l.kernel < 1 || l.stride < 1 || l.padding < 0)
          throw AssemblyError("layer '" + l.name + "' has invalid kernel/stride/padding");
        if (l.kernel > in.width + 2 * l.padding || l.kernel > in.height + 2 * l.padding)
          throw ShapeError("kernel " + std::to_string(l.kernel) + " larger than the " +
                           std::to_string(in.width) + "x" + std::to_string(in.height) +
                           " feature map at layer '" + l.name + "'");
        const int c = l.kind == LayerKind::Conv ? l.out_channels : in.channels;
        if (c < 1) throw AssemblyError("conv layer '" + l.name + "' needs at least one output channel");
        l.out_shape = Shape{c, conv_output_extent(in.height, l.kernel, l.stride, l.padding),
                            conv_output_extent(in.width, l.kernel, l.stride, l.padding)};
        break;
      }
      case LayerKind::Skip:
      case LayerKind::Sum:
        l.out_shape = in;
        break;
      case LayerKind::Dense:
        if (l.units < 1) throw AssemblyError("dense layer '" + l.name + "' needs at least one unit");
        l.out_shape = Shape{l.units, 1, 1};
        break;
      case LayerKind::GlobalAvgPool:
        l.out_shape = Shape{in.channels, 1, 1};
        break;
    }
  }
  return out;
}

NetworkInstance NetworkInstance::build(LayerGraph graph, std::uint64_t seed, std::string descriptor) {
  NetworkInstance net;
  // Weight shapes only depend on channels unless a dense layer flattens a
  // spatial map, in which case the graph must pin its input dims.
  Shape probe = graph.input;
  if (probe.height == 0) probe.height = 64;
  if (probe.width == 0) probe.width = 64;
  LayerGraph resolved = infer_shapes(graph, probe);
  const bool flexible = graph.input.height == 0 || graph.input.width == 0;
  for (const LayerSpec& l : resolved.layers)
    if (flexible && l.kind == LayerKind::Dense && (l.in_shape.height != 1 || l.in_shape.width != 1))
      throw AssemblyError("dense layer '" + l.name + "' flattens a spatial map; input dims must be fixed");

  net.weights_.resize(resolved.layers.size());
  for (std::size_t i = 0; i < resolved.layers.size(); ++i) {
    const LayerSpec& l = resolved.layers[i];
    if (!l.has_weights()) continue;
    Rng rng(derive_seed(seed, i));
    std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / static_cast<double>(l.fan_in())));
    auto& w = net.weights_[i];
    w.resize(l.weight_count());
    for (float& x : w) x = static_cast<float>(normal(rng));
  }
  net.graph_ = std::move(graph);
  net.seed_ = seed;
  net.descriptor_ = std::move(descriptor);
  return net;
}

NetworkInstance NetworkInstance::with_scaled_layer(std::size_t i, float factor) const {
  NetworkInstance copy = *this;
  for (float& w : copy.weights_.at(i)) w *= factor;
  return copy;
}

NetworkInstance NetworkInstance::with_zero_weights() const {
  NetworkInstance copy = *this;
  for (auto& w : copy.weights_) std::fill(w.begin(), w.end(), 0.0f);
  return copy;
}

std::size_t count_intermediate_values(const NetworkInstance& net, const Shape& dims) {
  const LayerGraph g = infer_shapes(net.graph(), dims);
  std::size_t v = 0;
  for (const LayerSpec& l : g.layers)
    if (l.relu) v += l.out_shape.size();
  return v;
}

namespace {

using Tensor = std::vector<float>;  // S x C x H x W

void conv_forward(const LayerSpec& l, std::span<const float> w, const Tensor& in, Tensor& out, int samples) {
  const Shape& is = l.in_shape;
  const Shape& os = l.out_shape;
  const int k = l.kernel, t = l.stride, p = l.padding;
  const std::size_t in_plane = static_cast<std::size_t>(is.height) * is.width;
  const std::size_t out_plane = static_cast<std::size_t>(os.height) * os.width;
  out.assign(static_cast<std::size_t>(samples) * os.size(), 0.0f);
  for (int s = 0; s < samples; ++s) {
    const float* src = in.data() + static_cast<std::size_t>(s) * is.size();
    float* dst_sample = out.data() + static_cast<std::size_t>(s) * os.size();
    for (int oc = 0; oc < os.channels; ++oc) {
      float* dst = dst_sample + static_cast<std::size_t>(oc) * out_plane;
      for (int ic = 0; ic < is.channels; ++ic) {
        const float* plane = src + static_cast<std::size_t>(ic) * in_plane;
        const float* wk = w.data() + (static_cast<std::size_t>(oc) * is.channels + ic) * k * k;
        for (int ky = 0; ky < k; ++ky) {
          for (int kx = 0; kx < k; ++kx) {
            const float wv = wk[ky * k + kx];
            // ox range with 0 <= ox*t - p + kx < width
            int ox_lo = 0;
            while (ox_lo < os.width && ox_lo * t - p + kx < 0) ++ox_lo;
            int ox_hi = os.width;
            while (ox_hi > ox_lo && (ox_hi - 1) * t - p + kx >= is.width) --ox_hi;
            for (int oy = 0; oy < os.height; ++oy) {
              const int iy = oy * t - p + ky;
              if (iy < 0 || iy >= is.height) continue;
              const float* row = plane + static_cast<std::size_t>(iy) * is.width;
              float* orow = dst + static_cast<std::size_t>(oy) * os.width;
              if (t == 1) {
                const float* r = row - p + kx;
                for (int ox = ox_lo; ox < ox_hi; ++ox) orow[ox] += wv * r[ox];
              } else {
                for (int ox = ox_lo; ox < ox_hi; ++ox) orow[ox] += wv * row[ox * t - p + kx];
              }
            }
          }
        }
      }
    }
  }
}

void avgpool_forward(const LayerSpec& l, const Tensor& in, Tensor& out, int samples) {
  const Shape& is = l.in_shape;
  const Shape& os = l.out_shape;
  out.assign(static_cast<std::size_t>(samples) * os.size(), 0.0f);
  for (int s = 0; s < samples; ++s) {
    for (int c = 0; c < os.channels; ++c) {
      const float* plane = in.data() + static_cast<std::size_t>(s) * is.size() +
                           static_cast<std::size_t>(c) * is.height * is.width;
      float* dst = out.data() + static_cast<std::size_t>(s) * os.size() +
                   static_cast<std::size_t>(c) * os.height * os.width;
      for (int oy = 0; oy < os.height; ++oy) {
        for (int ox = 0; ox < os.width; ++ox) {
          float acc = 0.0f;
          int n = 0;
          for (int ky = 0; ky < l.kernel; ++ky) {
            const int iy = oy * l.stride - l.padding + ky;
            if (iy < 0 || iy >= is.height) continue;
            for (int kx = 0; kx < l.kernel; ++kx) {
              const int ix = ox * l.stride - l.padding + kx;
              if (ix < 0 || ix >= is.width) continue;
              acc += plane[iy * is.width + ix];
              ++n;
            }
          }
          dst[oy * os.width + ox] = n ? acc / static_cast<float>(n) : 0.0f;
        }
      }
    }
  }
}

void dense_forward(const LayerSpec& l, std::span<const float> w, const Tensor& in, Tensor& out, int samples) {
  const std::size_t n_in = l.in_shape.size();
  out.assign(static_cast<std::size_t>(samples) * static_cast<std::size_t>(l.units), 0.0f);
  for (int s = 0; s < samples; ++s) {
    const float* x = in.data() + static_cast<std::size_t>(s) * n_in;
    for (int u = 0; u < l.units; ++u) {
      const float* wr = w.data() + static_cast<std::size_t>(u) * n_in;
      float acc = 0.0f;
      for (std::size_t i = 0; i < n_in; ++i) acc += wr[i] * x[i];
      out[static_cast<std::size_t>(s) * l.units + u] = acc;
    }
  }
}

void global_pool_forward(const LayerSpec& l, const Tensor& in, Tensor& out, int samples) {
  const Shape& is = l.in_shape;
  const std::size_t plane = static_cast<std::size_t>(is.height) * is.width;
  out.assign(static_cast<std::size_t>(samples) * is.channels, 0.0f);
  for (int s = 0; s < samples; ++s)
    for (int c = 0; c < is.channels; ++c) {
      const float* p = in.data() + static_cast<std::size_t>(s) * is.size() + c * plane;
      double acc = 0.0;
      for (std::size_t i = 0; i < plane; ++i) acc += p[i];
      out[static_cast<std::size_t>(s) * is.channels + c] = static_cast<float>(acc / static_cast<double>(plane));
    }
}

// Per-channel standardisation over samples and spatial positions.
void standardise(const Shape& shape, Tensor& x, int samples, double eps) {
  const std::size_t plane = static_cast<std::size_t>(shape.height) * shape.width;
  const double count = static_cast<double>(plane) * samples;
  for (int c = 0; c < shape.channels; ++c) {
    double sum = 0.0, sq = 0.0;
    for (int s = 0; s < samples; ++s) {
      const float* p = x.data() + static_cast<std::size_t>(s) * shape.size() + c * plane;
      for (std::size_t i = 0; i < plane; ++i) sum += p[i];
    }
    const double mean = sum / count;
    for (int s = 0; s < samples; ++s) {
      const float* p = x.data() + static_cast<std::size_t>(s) * shape.size() + c * plane;
      for (std::size_t i = 0; i < plane; ++i) sq += (p[i] - mean) * (p[i] - mean);
    }
    const double inv = 1.0 / std::sqrt(sq / count + eps);
    for (int s = 0; s < samples; ++s) {
      float* p = x.data() + static_cast<std::size_t>(s) * shape.size() + c * plane;
      for (std::size_t i = 0; i < plane; ++i) p[i] = static_cast<float>((p[i] - mean) * inv);
    }
  }
}

}  // namespace

ActivationCapture forward_capture(const NetworkInstance& net, const InputBatch& batch,
                                  const CaptureOptions& options) {
  const LayerGraph g = infer_shapes(net.graph(), batch.shape());
  const int samples = batch.samples();
  std::size_t total_values = 0;
  for (const LayerSpec& l : g.layers)
    if (l.relu) total_values += l.out_shape.size();

  // Release each activation after its last consumer has run.
  std::vector<std::size_t> last_use(g.layers.size(), 0);
  for (std::size_t i = 0; i < g.layers.size(); ++i)
    for (int src : g.layers[i].inputs) last_use[static_cast<std::size_t>(src)] = i;

  BitMatrix bits(total_values, static_cast<std::size_t>(samples));
  std::size_t row = 0;
  std::vector<Tensor> act(g.layers.size());
  act[0].assign(batch.payload().begin(), batch.payload().end());
  Tensor summed;

  for (std::size_t i = 1; i < g.layers.size(); ++i) {
    const LayerSpec& l = g.layers[i];
    const Tensor* in = &act[static_cast<std::size_t>(l.inputs.front())];
    if (l.inputs.size() > 1) {
      summed = *in;
      for (std::size_t j = 1; j < l.inputs.size(); ++j) {
        const Tensor& other = act[static_cast<std::size_t>(l.inputs[j])];
        for (std::size_t e = 0; e < summed.size(); ++e) summed[e] += other[e];
      }
      in = &summed;
    }
    Tensor& out = act[i];
    switch (l.kind) {
      case LayerKind::Conv: conv_forward(l, net.weights(i), *in, out, samples); break;
      case LayerKind::AvgPool: avgpool_forward(l, *in, out, samples); break;
      case LayerKind::Dense: dense_forward(l, net.weights(i), *in, out, samples); break;
      case LayerKind::GlobalAvgPool: global_pool_forward(l, *in, out, samples); break;
      case LayerKind::Skip:
      case LayerKind::Sum: out = *in; break;
      case LayerKind::Input: break;
    }
    for (float v : out)
      if (!std::isfinite(v)) throw NumericError("non-finite intermediate value in layer '" + l.name + "'");

    if (l.relu) {
      if (options.standardise) standardise(l.out_shape, out, samples, options.epsilon);
      const std::size_t n = l.out_shape.size();
      for (float& v : out) v = v > 0.0f ? v : 0.0f;
      for (int s = 0; s < samples; ++s) {
        const float* p = out.data() + static_cast<std::size_t>(s) * n;
        for (std::size_t e = 0; e < n; ++e)
          if (binarise_indicator(p[e])) bits.set(row + e, static_cast<std::size_t>(s), true);
      }
      row += n;
    }
    for (int src : l.inputs)
      if (last_use[static_cast<std::size_t>(src)] == i) Tensor().swap(act[static_cast<std::size_t>(src)]);
  }
  return ActivationCapture(std::move(bits));
}

}  // namespace swapnas
