#pragma once

#include <set>
#include <vector>

#include "swapnas/bit_matrix.hpp"
#include "swapnas/network.hpp"
#include "swapnas/rng.hpp"

namespace swapnas::test {

inline BitMatrix random_bits(std::size_t rows, std::size_t cols, Rng& rng, double p = 0.5) {
  std::bernoulli_distribution bit(p);
  BitMatrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) m.set(r, c, bit(rng));
  return m;
}

inline BitMatrix from_rows(const std::vector<std::vector<int>>& rows) {
  BitMatrix m(rows.size(), rows.empty() ? 0 : rows.front().size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c) m.set(r, c, rows[r][c] != 0);
  return m;
}

// Naive oracles: full vectors in an ordered set.
inline std::size_t naive_distinct_rows(const BitMatrix& m) {
  std::set<std::vector<bool>> seen;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    std::vector<bool> v(m.cols());
    for (std::size_t c = 0; c < m.cols(); ++c) v[c] = m.get(r, c);
    seen.insert(v);
  }
  return seen.size();
}

inline std::size_t naive_distinct_cols(const BitMatrix& m) {
  std::set<std::vector<bool>> seen;
  for (std::size_t c = 0; c < m.cols(); ++c) {
    std::vector<bool> v(m.rows());
    for (std::size_t r = 0; r < m.rows(); ++r) v[r] = m.get(r, c);
    seen.insert(v);
  }
  return seen.size();
}

inline LayerSpec make_layer(LayerKind kind, std::string name, std::vector<int> inputs) {
  LayerSpec l;
  l.kind = kind;
  l.name = std::move(name);
  l.inputs = std::move(inputs);
  return l;
}

inline LayerSpec make_conv(std::string name, int from, int channels, int kernel, int stride, int padding,
                           bool relu = true) {
  LayerSpec l = make_layer(LayerKind::Conv, std::move(name), {from});
  l.out_channels = channels;
  l.kernel = kernel;
  l.stride = stride;
  l.padding = padding;
  l.relu = relu;
  return l;
}

inline LayerSpec make_dense(std::string name, int from, int units, bool relu = true) {
  LayerSpec l = make_layer(LayerKind::Dense, std::move(name), {from});
  l.units = units;
  l.relu = relu;
  return l;
}

/// Random plain chain: convs (some strided, some pooled), then pool + dense.
inline LayerGraph random_chain(Rng& rng, int in_channels) {
  std::uniform_int_distribution<int> n_conv(1, 4), ch(1, 6), coin(0, 1);
  LayerGraph g;
  g.input = Shape{in_channels, 0, 0};
  g.layers.push_back(make_layer(LayerKind::Input, "input", {}));
  const int convs = n_conv(rng);
  for (int i = 0; i < convs; ++i) {
    const int prev = static_cast<int>(g.layers.size()) - 1;
    const bool wide = coin(rng);
    g.layers.push_back(make_conv("conv" + std::to_string(i), prev, ch(rng), wide ? 3 : 1, 1, wide ? 1 : 0));
    if (coin(rng)) {
      LayerSpec pool = make_layer(LayerKind::AvgPool, "pool" + std::to_string(i), {static_cast<int>(g.layers.size()) - 1});
      pool.kernel = 3;
      pool.padding = 1;
      g.layers.push_back(pool);
    }
  }
  g.layers.push_back(make_layer(LayerKind::GlobalAvgPool, "gap", {static_cast<int>(g.layers.size()) - 1}));
  g.layers.push_back(make_dense("fc", static_cast<int>(g.layers.size()) - 1, ch(rng) + 2));
  return g;
}

}  // namespace swapnas::test
