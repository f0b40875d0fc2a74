#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <cstring>
#include <numeric>

#include "helpers.hpp"
#include "swapnas/assembly.hpp"
#include "swapnas/errors.hpp"
#include "swapnas/swap_metric.hpp"
#include "swapnas/tensor.hpp"

using namespace swapnas;
using namespace swapnas::test;

namespace {

LayerGraph single_conv(int in_c, int out_c, int k, int t) {
  LayerGraph g;
  g.input = Shape{in_c, 0, 0};
  g.layers.push_back(make_layer(LayerKind::Input, "input", {}));
  g.layers.push_back(make_conv("conv", 0, out_c, k, t, 0));
  return g;
}

CellMatrix nb201_cell() { return CellMatrix(4, {0, 1, 2, 3, 0, 0, 4, 1, 0, 0, 0, 2, 0, 0, 0, 0}); }

CellMatrix all_skip_cell() { return CellMatrix(4, {0, 4, 4, 4, 0, 0, 4, 4, 0, 0, 0, 4, 0, 0, 0, 0}); }

}  // namespace

TEST_CASE("intermediate value count") {
  SUBCASE("MLP branch") {
    LayerGraph g;
    g.input = Shape{2, 1, 1};
    g.layers.push_back(make_layer(LayerKind::Input, "input", {}));
    g.layers.push_back(make_dense("h1", 0, 4));
    g.layers.push_back(make_dense("h2", 1, 3));
    g.layers.push_back(make_dense("out", 2, 5, false));
    const NetworkInstance net = NetworkInstance::build(g, 1);
    CHECK(count_intermediate_values(net, Shape{2, 1, 1}) == 7);
  }
  SUBCASE("conv branch") {
    CHECK(count_intermediate_values(NetworkInstance::build(single_conv(1, 4, 3, 1), 1), Shape{1, 5, 5}) == 36);
    CHECK(count_intermediate_values(NetworkInstance::build(single_conv(1, 2, 2, 2), 1), Shape{1, 4, 4}) == 8);
  }
  SUBCASE("kernel larger than the feature map") {
    const NetworkInstance net = NetworkInstance::build(single_conv(1, 2, 3, 1), 1);
    CHECK_THROWS_AS(count_intermediate_values(net, Shape{1, 2, 2}), ShapeError);
  }
  SUBCASE("padded form") {
    CHECK(conv_output_extent(32, 3, 1, 1) == 32);
    CHECK(conv_output_extent(32, 3, 2, 1) == 16);
    CHECK(conv_output_extent(15, 3, 2, 1) == 8);
    CHECK(conv_output_extent(15, 1, 2, 0) == 8);
    CHECK(conv_output_extent(5, 3, 1, 0) == 3);
  }
}

TEST_CASE("capture dimensions equal (V, S)") {
  const AssemblyConfig cfg;
  const NetworkInstance net = build_network(nb201_cell(), cfg, 3);
  for (const Shape& s : {Shape{3, 8, 8}, Shape{3, 3, 3}, Shape{3, 9, 5}}) {
    const InputBatch batch = make_gaussian_batch(BatchSpec{5, 3, s.width, s.height, 0.0}, 1);
    const ActivationCapture cap = forward_capture(net, batch);
    CHECK(cap.values() == count_intermediate_values(net, s));
    CHECK(cap.samples() == 5);
  }
}

TEST_CASE("weights are deterministic and fan-in scaled") {
  AssemblyConfig cfg;
  cfg.depth = 1;
  cfg.reduction_points = {};
  const NetworkInstance a = build_network(nb201_cell(), cfg, 7);
  const NetworkInstance b = build_network(nb201_cell(), cfg, 7);
  const NetworkInstance c = build_network(nb201_cell(), cfg, 8);
  const LayerGraph resolved = infer_shapes(a.graph(), Shape{3, 8, 8});
  bool any_diff = false;
  for (std::size_t i = 0; i < a.graph().layers.size(); ++i) {
    const auto wa = a.weights(i), wb = b.weights(i), wc = c.weights(i);
    REQUIRE(wa.size() == wb.size());
    CHECK(std::memcmp(wa.data(), wb.data(), wa.size() * sizeof(float)) == 0);
    any_diff = any_diff || !std::equal(wa.begin(), wa.end(), wc.begin(), wc.end());
    const LayerSpec& l = resolved.layers[i];
    CHECK(wa.size() == (l.has_weights() ? l.weight_count() : 0));
  }
  CHECK(any_diff);

  // Empirical variance of a large layer is close to 2 / fan_in.
  LayerGraph g = single_conv(64, 64, 3, 1);
  const NetworkInstance big = NetworkInstance::build(g, 99);
  const auto w = big.weights(1);
  double ss = 0.0, sum = 0.0;
  for (float x : w) {
    ss += double(x) * x;
    sum += x;
  }
  const double n = static_cast<double>(w.size());
  CHECK(std::abs(sum / n) < 0.01);
  CHECK(ss / n == doctest::Approx(2.0 / (64 * 9)).epsilon(0.03));
}

TEST_CASE("all-skip cell has no weighted layers besides stem and head") {
  AssemblyConfig cfg;
  cfg.depth = 3;
  cfg.reduction_points = {};
  const NetworkInstance net = build_network(all_skip_cell(), cfg, 1);
  std::vector<std::string> weighted;
  for (const auto& l : net.graph().layers)
    if (l.has_weights()) weighted.push_back(l.name);
  CHECK(weighted == std::vector<std::string>{"stem", "head.fc"});
}

TEST_CASE("invalid cells are rejected before assembly") {
  CellMatrix bad(4);
  bad.set(0, 1, 1);
  CHECK_THROWS_AS(build_network(bad, AssemblyConfig{}, 1), ValidationError);
}

TEST_CASE("fan-in shape mismatch names the node") {
  LayerGraph g;
  g.input = Shape{3, 8, 8};
  g.layers.push_back(make_layer(LayerKind::Input, "input", {}));
  g.layers.push_back(make_conv("a", 0, 4, 3, 1, 1));
  g.layers.push_back(make_conv("b", 0, 5, 3, 1, 1));
  g.layers.push_back(make_layer(LayerKind::Sum, "join", {1, 2}));
  try {
    (void)NetworkInstance::build(g, 1);
    FAIL("expected AssemblyError");
  } catch (const AssemblyError& e) {
    CHECK(std::string(e.what()).find("join") != std::string::npos);
  }
  LayerGraph cyc = g;
  cyc.layers[3] = make_layer(LayerKind::Sum, "loop", {3});
  CHECK_THROWS_AS(NetworkInstance::build(cyc, 1), AssemblyError);
}

TEST_CASE("zero weights give an all-zero capture") {
  const NetworkInstance net = build_network(nb201_cell(), AssemblyConfig{}, 5).with_zero_weights();
  const InputBatch batch = make_gaussian_batch(BatchSpec{6, 3, 8, 8, 0.0}, 2);
  for (bool standardise : {false, true}) {
    const ActivationCapture cap = forward_capture(net, batch, CaptureOptions{standardise, 1e-5});
    CHECK(cap.bits().popcount() == 0);
    CHECK(swap_score(cap) == 1);
  }
}

TEST_CASE("identical samples give constant rows") {
  const NetworkInstance net = build_network(nb201_cell(), AssemblyConfig{}, 5);
  const InputBatch one = make_gaussian_batch(BatchSpec{1, 3, 8, 8, 0.0}, 4);
  std::vector<float> payload;
  for (int s = 0; s < 6; ++s) payload.insert(payload.end(), one.payload().begin(), one.payload().end());
  const InputBatch batch(6, one.shape(), payload);
  const ActivationCapture cap = forward_capture(net, batch, CaptureOptions{false, 1e-5});
  for (std::size_t v = 0; v < cap.values(); ++v)
    for (std::size_t s = 1; s < cap.samples(); ++s) REQUIRE(cap.bit(v, s) == cap.bit(v, 0));
  CHECK(swap_score(cap) <= 2);
  CHECK(standard_pattern_cardinality(cap) == 1);
}

TEST_CASE("captures are deterministic") {
  const NetworkInstance net = build_network(nb201_cell(), AssemblyConfig{}, 5);
  const InputBatch batch = make_gaussian_batch(BatchSpec{8, 3, 8, 8, 0.0}, 2);
  CHECK(forward_capture(net, batch) == forward_capture(net, batch));
  CHECK(forward_capture(build_network(nb201_cell(), AssemblyConfig{}, 5), batch) == forward_capture(net, batch));
}

TEST_CASE("permuting samples permutes capture columns") {
  Rng rng(31);
  const NetworkInstance net = build_network(nb201_cell(), AssemblyConfig{}, 12);
  const InputBatch batch = make_gaussian_batch(BatchSpec{9, 3, 6, 6, 0.0}, 3);
  std::vector<int> order(9);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  for (bool standardise : {false, true}) {
    const CaptureOptions opt{standardise, 1e-5};
    const ActivationCapture base = forward_capture(net, batch, opt);
    const ActivationCapture perm = forward_capture(net, batch.with_samples_permuted(order), opt);
    REQUIRE(perm.values() == base.values());
    for (std::size_t v = 0; v < base.values(); ++v)
      for (std::size_t s = 0; s < 9; ++s) REQUIRE(perm.bit(v, s) == base.bit(v, static_cast<std::size_t>(order[s])));
  }
}

TEST_CASE("positive rescaling of one layer leaves the capture unchanged") {
  const CaptureOptions off{false, 1e-5};
  SUBCASE("any layer of a plain chain") {
    Rng rng(8);
    for (int trial = 0; trial < 20; ++trial) {
      const LayerGraph g = random_chain(rng, 2);
      const NetworkInstance net = NetworkInstance::build(g, 100 + trial);
      const InputBatch batch = make_gaussian_batch(BatchSpec{7, 2, 6, 5, 0.0}, trial);
      const ActivationCapture base = forward_capture(net, batch, off);
      for (std::size_t i = 0; i < g.layers.size(); ++i) {
        if (!g.layers[i].has_weights()) continue;
        for (float factor : {10.0f, 0.25f}) REQUIRE(forward_capture(net.with_scaled_layer(i, factor), batch, off) == base);
      }
    }
  }
  SUBCASE("stem of an assembled cell network") {
    Rng rng(9);
    for (int trial = 0; trial < 5; ++trial) {
      const NetworkInstance net = build_network(random_cell(4, rng), AssemblyConfig{}, trial);
      const InputBatch batch = make_gaussian_batch(BatchSpec{6, 3, 8, 8, 0.0}, trial);
      CHECK(forward_capture(net.with_scaled_layer(1, 10.0f), batch, off) == forward_capture(net, batch, off));
    }
  }
}

TEST_CASE("overflow is reported with the layer name") {
  LayerGraph g;
  g.input = Shape{1, 0, 0};
  g.layers.push_back(make_layer(LayerKind::Input, "input", {}));
  for (int i = 0; i < 4; ++i) g.layers.push_back(make_conv("c" + std::to_string(i), i, 4, 3, 1, 1));
  NetworkInstance net = NetworkInstance::build(g, 3);
  for (std::size_t i = 1; i <= 4; ++i) net = net.with_scaled_layer(i, 1e20f);
  const InputBatch batch = make_gaussian_batch(BatchSpec{3, 1, 5, 5, 0.0}, 1);
  try {
    (void)forward_capture(net, batch, CaptureOptions{false, 1e-5});
    FAIL("expected NumericError");
  } catch (const NumericError& e) {
    CHECK(std::string(e.what()).find("'c") != std::string::npos);
  }
}

TEST_CASE("dense layers need a fixed input when flattening a map") {
  LayerGraph g;
  g.input = Shape{3, 0, 0};
  g.layers.push_back(make_layer(LayerKind::Input, "input", {}));
  g.layers.push_back(make_dense("fc", 0, 4));
  CHECK_THROWS_AS(NetworkInstance::build(g, 1), AssemblyError);
}

TEST_CASE("input batch validation") {
  CHECK_THROWS_AS(InputBatch(0, Shape{1, 1, 1}, {}), ValidationError);
  CHECK_THROWS_AS(InputBatch(1, Shape{1, 2, 2}, std::vector<float>(3)), ValidationError);
  CHECK_THROWS_AS(InputBatch(1, Shape{0, 2, 2}, {}), ValidationError);
  CHECK_THROWS_AS(InputBatch(1, Shape{1, 1, 1}, std::vector<float>{std::numeric_limits<float>::infinity()}),
                  ValidationError);
}

TEST_CASE("batch specs") {
  const BatchSpec s = BatchSpec::parse("gauss:32x3x15x9");
  CHECK(s.samples == 32);
  CHECK(s.channels == 3);
  CHECK(s.width == 15);
  CHECK(s.height == 9);
  CHECK(s.jitter == 0.0);
  CHECK(BatchSpec::parse(s.to_string()).to_string() == s.to_string());
  const BatchSpec j = BatchSpec::parse("gauss:4x1x2x2@0.01");
  CHECK(j.jitter == 0.01);
  CHECK(BatchSpec::parse(j.to_string()).jitter == 0.01);
  for (const char* bad : {"gauss:32x3x32", "uniform:1x1x1x1", "gauss:0x3x3x3", "gauss:2x3x3x3@0", "gauss:2x3x3x3@x"})
    CHECK_THROWS_AS(BatchSpec::parse(bad), ValidationError);

  const InputBatch a = make_gaussian_batch(s, 5), b = make_gaussian_batch(s, 5), c = make_gaussian_batch(s, 6);
  CHECK(std::equal(a.payload().begin(), a.payload().end(), b.payload().begin(), b.payload().end()));
  CHECK(!std::equal(a.payload().begin(), a.payload().end(), c.payload().begin(), c.payload().end()));
  CHECK(a.shape().width == 15);
  CHECK(a.shape().height == 9);

  // Jittered samples stay close to one shared image.
  const InputBatch near = make_gaussian_batch(BatchSpec{4, 1, 3, 3, 0.001}, 2);
  const std::size_t n = near.shape().size();
  for (std::size_t s2 = 1; s2 < 4; ++s2)
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(near.payload()[s2 * n + i] - near.payload()[i]) < 0.01);
}

TEST_CASE("tensor files round-trip and reject malformed content") {
  const auto dir = std::filesystem::temp_directory_path() / "swapnas_tensor_test";
  std::filesystem::create_directories(dir);
  const InputBatch batch = make_gaussian_batch(BatchSpec{3, 2, 4, 5, 0.0}, 9);
  write_tensor_file(dir / "t.bin", batch);
  const InputBatch back = read_tensor_file(dir / "t.bin");
  CHECK(back.samples() == 3);
  CHECK(back.shape().channels == 2);
  CHECK(back.shape().width == 4);
  CHECK(back.shape().height == 5);
  CHECK(std::equal(back.payload().begin(), back.payload().end(), batch.payload().begin(), batch.payload().end()));

  {
    std::ofstream out(dir / "short.bin", std::ios::binary);
    out << "SWAPTENSOR v1 1 1 2 2\n" << std::string(8, '\0');
  }
  CHECK_THROWS_AS(read_tensor_file(dir / "short.bin"), ParseError);
  {
    std::ofstream out(dir / "long.bin", std::ios::binary);
    out << "SWAPTENSOR v1 1 1 1 1\n" << std::string(5, '\0');
  }
  CHECK_THROWS_AS(read_tensor_file(dir / "long.bin"), ParseError);
  {
    std::ofstream out(dir / "hdr.bin", std::ios::binary);
    out << "TENSOR 1 1 1 1\n" << std::string(4, '\0');
  }
  CHECK_THROWS_AS(read_tensor_file(dir / "hdr.bin"), ParseError);
  CHECK_THROWS_AS(read_tensor_file(dir / "missing.bin"), ParseError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("stacked NB201-like network matches a hand-built layer list") {
  AssemblyConfig cfg;
  cfg.depth = 5;
  cfg.stem_channels = 16;
  cfg.reduction_points = {2, 4};
  const CellMatrix cell = nb201_cell();
  const NetworkInstance net = build_network(cell, cfg, 1);
  const LayerGraph g = infer_shapes(net.graph(), Shape{3, 32, 32});

  struct Expect {
    LayerKind kind;
    std::string name;
    std::vector<std::string> inputs;
    int channels, size;
    bool relu;
  };
  std::vector<Expect> want;
  want.push_back({LayerKind::Input, "input", {}, 3, 32, false});
  want.push_back({LayerKind::Conv, "stem", {"input"}, 16, 32, true});
  std::string prev = "stem";
  int c = 16, hw = 32;
  for (int k = 0; k < 5; ++k) {
    if (k == 2 || k == 4) {
      const std::string r = "reduce" + std::to_string(k);
      want.push_back({LayerKind::Conv, r + ".conv3x3", {prev}, 2 * c, hw / 2, true});
      want.push_back({LayerKind::Conv, r + ".proj", {prev}, 2 * c, hw / 2, false});
      want.push_back({LayerKind::Sum, r + ".out", {r + ".conv3x3", r + ".proj"}, 2 * c, hw / 2, false});
      prev = r + ".out";
      c *= 2;
      hw /= 2;
    }
    const std::string t = "cell" + std::to_string(k);
    // Edges: 0->1 conv3x3, 0->2 conv1x1, 0->3 avgpool, 1->2 skip, 1->3 conv3x3, 2->3 conv1x1.
    want.push_back({LayerKind::Conv, t + ".e01.conv3x3", {prev}, c, hw, true});
    want.push_back({LayerKind::Sum, t + ".n1", {t + ".e01.conv3x3"}, c, hw, false});
    want.push_back({LayerKind::Conv, t + ".e02.conv1x1", {prev}, c, hw, true});
    want.push_back({LayerKind::Skip, t + ".e12.skip", {t + ".n1"}, c, hw, false});
    want.push_back({LayerKind::Sum, t + ".n2", {t + ".e02.conv1x1", t + ".e12.skip"}, c, hw, false});
    want.push_back({LayerKind::AvgPool, t + ".e03.avgpool3x3", {prev}, c, hw, false});
    want.push_back({LayerKind::Conv, t + ".e13.conv3x3", {t + ".n1"}, c, hw, true});
    want.push_back({LayerKind::Conv, t + ".e23.conv1x1", {t + ".n2"}, c, hw, true});
    want.push_back(
        {LayerKind::Sum, t + ".n3", {t + ".e03.avgpool3x3", t + ".e13.conv3x3", t + ".e23.conv1x1"}, c, hw, false});
    prev = t + ".n3";
  }
  want.push_back({LayerKind::GlobalAvgPool, "head.pool", {prev}, c, 1, false});
  want.push_back({LayerKind::Dense, "head.fc", {"head.pool"}, 10, 1, false});

  REQUIRE(g.layers.size() == want.size());
  for (std::size_t i = 0; i < want.size(); ++i) {
    const LayerSpec& l = g.layers[i];
    INFO(want[i].name);
    CHECK(l.name == want[i].name);
    CHECK(l.kind == want[i].kind);
    CHECK(l.relu == want[i].relu);
    CHECK(l.out_shape.channels == want[i].channels);
    CHECK(l.out_shape.width == want[i].size);
    CHECK(l.out_shape.height == want[i].size);
    std::vector<std::string> inputs;
    for (int j : l.inputs) inputs.push_back(g.layers[static_cast<std::size_t>(j)].name);
    CHECK(inputs == want[i].inputs);
  }
}
