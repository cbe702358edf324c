#include <benchmark/benchmark.h>

#include <random>

#include "../tests/common/oracles.hpp"
#include "soco/kernels.hpp"
#include "soco/synthetic.hpp"

namespace {

using namespace soco;

std::vector<Mask> masks_for(const Dataset& d, double p) {
  std::mt19937_64 gen(7);
  std::vector<Mask> masks;
  for (std::size_t i = 0; i < d.size(); ++i) masks.push_back(oracle::random_mask(d.shape().size(), p, gen));
  return masks;
}

Dataset grids(std::size_t n, std::size_t side) {
  std::mt19937_64 gen(3);
  std::vector<Sample> s;
  std::vector<int> labels;
  for (std::size_t i = 0; i < n; ++i) {
    s.push_back(oracle::random_grid(side, side, 3, i, gen));
    labels.push_back(static_cast<int>(i % 2));
  }
  return Dataset(Shape::image(side, side, 3), std::move(s), std::move(labels), 2);
}

const Dataset& tabular() {
  static const Dataset d = synthetic::generate({2000, 200, 1});
  return d;
}

const Dataset& images() {
  static const Dataset d = grids(64, 32);
  return d;
}

void BM_TabularSerial(benchmark::State& st) {
  const auto masks = masks_for(tabular(), 0.5);
  const perturb::Imputer imp{perturb::ImputerKind::mean, 0.1};
  for (auto _ : st) benchmark::DoNotOptimize(kernels::perturb_batch_serial(tabular(), masks, imp, {1, "bench", 0}));
  st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(tabular().size()));
}

void BM_TabularParallel(benchmark::State& st) {
  const auto masks = masks_for(tabular(), 0.5);
  const perturb::Imputer imp{perturb::ImputerKind::mean, 0.1};
  const int workers = static_cast<int>(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(kernels::perturb_batch(tabular(), masks, imp, {1, "bench", 0}, workers));
  st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(tabular().size()));
}

void BM_GridSerial(benchmark::State& st) {
  const auto masks = masks_for(images(), 0.3);
  const perturb::Imputer imp{perturb::ImputerKind::noisy_linear, 0.05};
  for (auto _ : st) benchmark::DoNotOptimize(kernels::perturb_batch_serial(images(), masks, imp, {1, "bench", 0}));
  st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(images().size()));
}

void BM_GridParallel(benchmark::State& st) {
  const auto masks = masks_for(images(), 0.3);
  const perturb::Imputer imp{perturb::ImputerKind::noisy_linear, 0.05};
  const int workers = static_cast<int>(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(kernels::perturb_batch(images(), masks, imp, {1, "bench", 0}, workers));
  st.SetItemsProcessed(st.iterations() * static_cast<std::int64_t>(images().size()));
}

void BM_RankAll(benchmark::State& st) {
  std::mt19937_64 gen(5);
  std::vector<AttributionMap> maps;
  for (int i = 0; i < 1000; ++i) maps.push_back(oracle::random_map(500, gen, 0.1));
  const int workers = static_cast<int>(st.range(0));
  for (auto _ : st) benchmark::DoNotOptimize(kernels::rank_all(maps, workers));
}

}  // namespace

BENCHMARK(BM_TabularSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TabularParallel)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GridSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GridParallel)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RankAll)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
