#include <benchmark/benchmark.h>

#include "swapnas/assembly.hpp"
#include "swapnas/bit_matrix.hpp"
#include "swapnas/network.hpp"
#include "swapnas/rng.hpp"
#include "swapnas/swap_metric.hpp"
#include "swapnas/tensor.hpp"

namespace {

using namespace swapnas;

// rows x cols matrix with `distinct` different rows repeated cyclically.
BitMatrix make_matrix(std::size_t rows, std::size_t cols, std::size_t distinct) {
  Rng rng(7);
  BitMatrix proto(distinct, cols);
  for (std::size_t r = 0; r < distinct; ++r)
    for (std::size_t c = 0; c < cols; ++c) proto.set(r, c, rng() & 1U);
  BitMatrix m(rows, cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) m.set(r, c, proto.get(r % distinct, c));
  return m;
}

void BM_SwapScore(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const ActivationCapture capture(make_matrix(rows, 32, rows / 4));
  for (auto _ : state) benchmark::DoNotOptimize(swap_score(capture));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(rows));
}
BENCHMARK(BM_SwapScore)->RangeMultiplier(8)->Range(1 << 10, 1 << 19);

void BM_PatternCardinality(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const ActivationCapture capture(make_matrix(rows, 32, rows / 4));
  for (auto _ : state) benchmark::DoNotOptimize(standard_pattern_cardinality(capture));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(rows));
}
BENCHMARK(BM_PatternCardinality)->RangeMultiplier(8)->Range(1 << 10, 1 << 19);

void BM_Transpose(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const BitMatrix m = make_matrix(rows, 64, 97);
  for (auto _ : state) benchmark::DoNotOptimize(m.transposed());
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(rows));
}
BENCHMARK(BM_Transpose)->RangeMultiplier(8)->Range(1 << 10, 1 << 19);

void BM_ForwardCapture(benchmark::State& state) {
  AssemblyConfig cfg;
  cfg.depth = 3;
  cfg.stem_channels = 16;
  cfg.reduction_points = {1, 2};
  Rng rng(11);
  const NetworkInstance net = build_network(random_cell(4, rng), cfg, 5);
  BatchSpec spec;
  spec.width = spec.height = static_cast<int>(state.range(0));
  const InputBatch batch = make_gaussian_batch(spec, 3);
  for (auto _ : state) benchmark::DoNotOptimize(forward_capture(net, batch));
}
BENCHMARK(BM_ForwardCapture)->Arg(8)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
