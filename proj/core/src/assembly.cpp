#include "swapnas/assembly.hpp"

#include <algorithm>
#include <sstream>

#include "swapnas/errors.hpp"

namespace swapnas {

void AssemblyConfig::validate() const {
  if (depth < 1) throw ValidationError("assembly depth must be >= 1");
  if (stem_channels < 1) throw ValidationError("stem channels must be >= 1");
  if (input_channels < 1) throw ValidationError("input channels must be >= 1");
  if (head && num_classes < 1) throw ValidationError("head needs at least one class");
  for (int r : reduction_points)
    if (r < 0 || r >= depth) throw ValidationError("reduction point " + std::to_string(r) + " outside [0, depth)");
}

std::string AssemblyConfig::to_string() const {
  std::ostringstream os;
  os << "depth=" << depth << ",stem=" << stem_channels << ",in=" << input_channels << ",reduce=";
  for (std::size_t i = 0; i < reduction_points.size(); ++i) os << (i ? ":" : "") << reduction_points[i];
  os << ",head=" << (head ? num_classes : 0);
  return os.str();
}

namespace {

bool reduces_before(const AssemblyConfig& cfg, int k) {
  return std::find(cfg.reduction_points.begin(), cfg.reduction_points.end(), k) != cfg.reduction_points.end();
}

int add_layer(LayerGraph& g, LayerSpec spec) {
  g.layers.push_back(std::move(spec));
  return static_cast<int>(g.layers.size()) - 1;
}

LayerSpec conv(std::string name, int from, int channels, int kernel, int stride, int padding, bool relu) {
  LayerSpec l;
  l.kind = LayerKind::Conv;
  l.name = std::move(name);
  l.inputs = {from};
  l.out_channels = channels;
  l.kernel = kernel;
  l.stride = stride;
  l.padding = padding;
  l.relu = relu;
  return l;
}

LayerSpec plain(LayerKind kind, std::string name, std::vector<int> inputs) {
  LayerSpec l;
  l.kind = kind;
  l.name = std::move(name);
  l.inputs = std::move(inputs);
  return l;
}

}  // namespace

LayerGraph assemble_descriptor(const CellMatrix& cell, const AssemblyConfig& cfg) {
  if (auto v = validate_cell(cell); !v.empty()) throw ValidationError("invalid cell: " + v.front().message);
  cfg.validate();

  LayerGraph g;
  g.input = Shape{cfg.input_channels, 0, 0};
  g.layers.push_back(plain(LayerKind::Input, "input", {}));
  int prev = add_layer(g, conv("stem", 0, cfg.stem_channels, 3, 1, 1, true));
  int channels = cfg.stem_channels;

  const int n = cell.nodes();
  for (int k = 0; k < cfg.depth; ++k) {
    const std::string tag = "cell" + std::to_string(k);
    if (reduces_before(cfg, k)) {
      const std::string rtag = "reduce" + std::to_string(k);
      const int a = add_layer(g, conv(rtag + ".conv3x3", prev, channels * 2, 3, 2, 1, true));
      // Shortcut changes shape, so the skip becomes a 1x1 projection.
      const int b = add_layer(g, conv(rtag + ".proj", prev, channels * 2, 1, 2, 0, false));
      prev = add_layer(g, plain(LayerKind::Sum, rtag + ".out", {a, b}));
      channels *= 2;
    }
    std::vector<int> node_layer(static_cast<std::size_t>(n), -1);
    node_layer[0] = prev;
    for (int j = 1; j < n; ++j) {
      std::vector<int> incoming;
      for (int i = 0; i < j; ++i) {
        const int code = cell.at(i, j);
        if (code == 0) continue;
        const int from = node_layer[static_cast<std::size_t>(i)];
        const std::string name = tag + ".e" + std::to_string(i) + std::to_string(j) + "." + op_name(code);
        switch (static_cast<Op>(code)) {
          case Op::Conv3x3: incoming.push_back(add_layer(g, conv(name, from, channels, 3, 1, 1, true))); break;
          case Op::Conv1x1: incoming.push_back(add_layer(g, conv(name, from, channels, 1, 1, 0, true))); break;
          case Op::AvgPool3x3: {
            LayerSpec pool = plain(LayerKind::AvgPool, name, {from});
            pool.kernel = 3;
            pool.padding = 1;
            incoming.push_back(add_layer(g, std::move(pool)));
            break;
          }
          case Op::Skip:
            incoming.push_back(add_layer(g, plain(LayerKind::Skip, name, {from})));
            break;
          case Op::None: break;
        }
      }
      if (incoming.empty()) throw AssemblyError("node '" + tag + ".n" + std::to_string(j) + "' has no inputs");
      node_layer[static_cast<std::size_t>(j)] =
          add_layer(g, plain(LayerKind::Sum, tag + ".n" + std::to_string(j), incoming));
    }
    prev = node_layer[static_cast<std::size_t>(n - 1)];
  }
  if (cfg.head) {
    prev = add_layer(g, plain(LayerKind::GlobalAvgPool, "head.pool", {prev}));
    LayerSpec fc = plain(LayerKind::Dense, "head.fc", {prev});
    fc.units = cfg.num_classes;
    add_layer(g, std::move(fc));
  }
  return g;
}

NetworkInstance build_network(const CellMatrix& cell, const AssemblyConfig& cfg, std::uint64_t seed) {
  return NetworkInstance::build(assemble_descriptor(cell, cfg), seed, encode_cell_inline(cell) + "|" + cfg.to_string());
}

namespace {

struct CellCost {
  std::uint64_t conv3 = 0;  // number of 3x3 conv edges
  std::uint64_t conv1 = 0;
};

CellCost cell_cost(const CellMatrix& cell) {
  CellCost c;
  for (int i = 0; i < cell.nodes(); ++i)
    for (int j = i + 1; j < cell.nodes(); ++j) {
      c.conv3 += cell.at(i, j) == static_cast<int>(Op::Conv3x3);
      c.conv1 += cell.at(i, j) == static_cast<int>(Op::Conv1x1);
    }
  return c;
}

// Walks the macro structure once; `visit(weights, biases, out_h, out_w)` is
// called for every weighted layer.
template <typename Visit>
void walk_weighted(const CellMatrix& cell, const AssemblyConfig& cfg, int h, int w, Visit&& visit) {
  const CellCost cost = cell_cost(cell);
  const std::uint64_t cin = static_cast<std::uint64_t>(cfg.input_channels);
  std::uint64_t c = static_cast<std::uint64_t>(cfg.stem_channels);
  visit(c * cin * 9, c, h, w);
  for (int k = 0; k < cfg.depth; ++k) {
    if (reduces_before(cfg, k)) {
      const int rh = conv_output_extent(h, 3, 2, 1), rw = conv_output_extent(w, 3, 2, 1);
      visit(2 * c * c * 9, 2 * c, rh, rw);
      visit(2 * c * c, 0, conv_output_extent(h, 1, 2, 0), conv_output_extent(w, 1, 2, 0));
      h = rh;
      w = rw;
      c *= 2;
    }
    for (std::uint64_t e = 0; e < cost.conv3; ++e) visit(c * c * 9, c, h, w);
    for (std::uint64_t e = 0; e < cost.conv1; ++e) visit(c * c, c, h, w);
  }
  if (cfg.head) visit(c * static_cast<std::uint64_t>(cfg.num_classes), static_cast<std::uint64_t>(cfg.num_classes), 1, 1);
}

}  // namespace

BaselineMetrics count_parameters(const CellMatrix& cell, const AssemblyConfig& cfg) {
  if (auto v = validate_cell(cell); !v.empty()) throw ValidationError("invalid cell: " + v.front().message);
  cfg.validate();
  BaselineMetrics m;
  walk_weighted(cell, cfg, 1, 1, [&](std::uint64_t weights, std::uint64_t biases, int, int) {
    m.params += weights + (cfg.count_biases ? biases : 0);
  });
  m.theta_mb = params_to_mb(m.params);
  return m;
}

std::uint64_t count_flops(const CellMatrix& cell, const AssemblyConfig& cfg, const Shape& input) {
  if (auto v = validate_cell(cell); !v.empty()) throw ValidationError("invalid cell: " + v.front().message);
  cfg.validate();
  std::uint64_t macs = 0;
  walk_weighted(cell, cfg, input.height, input.width, [&](std::uint64_t weights, std::uint64_t, int h, int w) {
    macs += weights * static_cast<std::uint64_t>(h) * static_cast<std::uint64_t>(w);
  });
  return macs;
}

BaselineMetrics baseline_metrics(const CellMatrix& cell, const AssemblyConfig& cfg, const Shape& input) {
  BaselineMetrics m = count_parameters(cell, cfg);
  m.flops = count_flops(cell, cfg, input);
  return m;
}

}  // namespace swapnas
