#include <benchmark/benchmark.h>

#include "fcopf/dataset.hpp"
#include "fcopf/encode.hpp"
#include "fcopf/nn.hpp"
#include "fcopf/opf.hpp"

using namespace fcopf;

namespace {

const GridCase& grid() {
  static const GridCase g = load_case(default_case_path());
  return g;
}

MlpModel bench_model() {
  const auto layout = FeatureLayout::for_case(grid(), credible_contingencies(grid()));
  MlpModel m = make_model({layout.arity(), 32, 32, 2}, 7);
  m.case_fingerprint = grid().fingerprint;
  return m;
}

Execution exec_of(const benchmark::State& state) {
  return state.range(0) ? Execution::parallel : Execution::serial;
}

void BM_LabelScenarios(benchmark::State& state) {
  const auto scenarios = sample_scenarios(grid(), SamplingConfig{}, 64, 1);
  const SimConfig sim;
  for (auto _ : state) benchmark::DoNotOptimize(label_scenarios(grid(), scenarios, sim, exec_of(state)));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(scenarios.size()));
}
BENCHMARK(BM_LabelScenarios)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_ForwardBatch(benchmark::State& state) {
  const MlpModel model = bench_model();
  Rng rng(3);
  Matrix x(8192, model.input_dim());
  for (std::size_t i = 0; i < x.rows(); ++i)
    for (std::size_t j = 0; j < x.cols(); ++j) x(i, j) = rng.uniform(-1, 1);
  for (auto _ : state) benchmark::DoNotOptimize(forward_batch(model, x, exec_of(state)));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(x.rows()));
}
BENCHMARK(BM_ForwardBatch)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_Soundness(benchmark::State& state) {
  const MlpModel model = fold_normalization(bench_model());
  InputBox box{std::vector<double>(model.input_dim(), -1.0), std::vector<double>(model.input_dim(), 1.0)};
  const NeuronBounds bounds = propagate_bounds(model, box);
  for (auto _ : state) benchmark::DoNotOptimize(check_soundness(model, box, bounds, 20000, 5, exec_of(state)));
}
BENCHMARK(BM_Soundness)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_VerifyEncoding(benchmark::State& state) {
  MlpModel small = make_model({4, 8, 8, 2}, 11);
  InputBox box{std::vector<double>(4, -1.0), std::vector<double>(4, 1.0)};
  const NeuronBounds bounds = propagate_bounds(small, box);
  for (auto _ : state)
    benchmark::DoNotOptimize(verify_encoding(small, box, bounds, 16, 5, EncodeOptions{}, exec_of(state)));
}
BENCHMARK(BM_VerifyEncoding)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
