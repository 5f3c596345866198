#include <map>

#include <benchmark/benchmark.h>

#include "anie/anie.hpp"

namespace {

const anie::EventStream& dsbm_stream(anie::NodeId n) {
  static std::map<anie::NodeId, anie::EventStream> cache;
  auto it = cache.find(n);
  if (it == cache.end()) {
    it = cache.emplace(n, anie::generate_network(anie::dsbm_ground_truth(n), 1)).first;
  }
  return it->second;
}

void BM_Generate(benchmark::State& state) {
  const auto truth = anie::dsbm_ground_truth(static_cast<anie::NodeId>(state.range(0)));
  std::uint64_t seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(anie::generate_network(truth, seed++));
}
BENCHMARK(BM_Generate)->Arg(100)->Arg(400)->Unit(benchmark::kMillisecond);

void BM_ProjectHaar(benchmark::State& state) {
  const auto& stream = dsbm_stream(static_cast<anie::NodeId>(state.range(0)));
  const auto basis = anie::haar_basis(static_cast<int>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(anie::project(stream, basis));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(stream.size()));
}
BENCHMARK(BM_ProjectHaar)->Args({100, 6})->Args({400, 6})->Args({400, 10})->Unit(benchmark::kMillisecond);

void BM_TruncatedSvd(benchmark::State& state) {
  const auto& stream = dsbm_stream(static_cast<anie::NodeId>(state.range(0)));
  const auto coeffs = anie::project(stream, anie::haar_basis(6));
  anie::SvdOptions opts;
  opts.rank = static_cast<int>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(anie::truncated_svd(coeffs, opts));
}
BENCHMARK(BM_TruncatedSvd)->Args({100, 2})->Args({400, 2})->Args({400, 8})->Unit(benchmark::kMillisecond);

void BM_EstimateAffinity(benchmark::State& state) {
  const auto& stream = dsbm_stream(static_cast<anie::NodeId>(state.range(0)));
  const auto basis = anie::haar_basis(6);
  const auto coeffs = anie::project(stream, basis);
  anie::SvdOptions opts;
  opts.rank = 2;
  const auto sub = anie::truncated_svd(coeffs, opts);
  for (auto _ : state) benchmark::DoNotOptimize(anie::estimate_affinity(coeffs, sub, basis, 0.05));
}
BENCHMARK(BM_EstimateAffinity)->Arg(100)->Arg(400)->Unit(benchmark::kMillisecond);

void BM_EvaluateGrid(benchmark::State& state) {
  anie::FitOptions opts;
  opts.rank = 2;
  const auto model = anie::fit_model(dsbm_stream(100), anie::haar_basis(6), opts);
  const auto pairs = anie::pair_patch(100);
  std::vector<double> grid(static_cast<std::size_t>(state.range(0)));
  for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = (i + 0.5) / grid.size();
  for (auto _ : state) benchmark::DoNotOptimize(model.evaluate_grid(pairs, grid));
}
BENCHMARK(BM_EvaluateGrid)->Arg(64)->Arg(512)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
