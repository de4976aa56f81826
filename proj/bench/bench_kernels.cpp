// Serial reference kernels against the optimised OpenMP/SIMD paths.
//   bench_kernels [--benchmark_filter=Entropy]
// Thread count follows OMP_NUM_THREADS.

#include <benchmark/benchmark.h>

#include <vector>

#include "physio/features/entropy.hpp"
#include "physio/features/entropy_reference.hpp"
#include "physio/gbdt/train.hpp"
#include "physio/shap/treeshap.hpp"
#include "physio/util/rng.hpp"

using namespace physio;

namespace {

std::vector<double> ar1(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> x(n);
  double prev = 0.0;
  for (double& v : x) prev = v = 0.6 * prev + normal01(rng);
  return x;
}

void BM_SampEnReference(benchmark::State& st) {
  const auto x = ar1(static_cast<std::size_t>(st.range(0)), 1);
  const features::EntropyConfig cfg;
  for (auto _ : st) benchmark::DoNotOptimize(features::reference::sample_entropy(x, cfg));
  st.SetComplexityN(st.range(0));
}

void BM_SampEn(benchmark::State& st) {
  const signal::TimeSeries ts(ar1(static_cast<std::size_t>(st.range(0)), 1));
  const features::EntropyConfig cfg;
  for (auto _ : st) benchmark::DoNotOptimize(features::sample_entropy(ts, cfg));
  st.SetComplexityN(st.range(0));
}

void BM_FuzzyEnReference(benchmark::State& st) {
  const auto x = ar1(static_cast<std::size_t>(st.range(0)), 2);
  const features::EntropyConfig cfg;
  for (auto _ : st) benchmark::DoNotOptimize(features::reference::fuzzy_entropy(x, cfg));
  st.SetComplexityN(st.range(0));
}

void BM_FuzzyEn(benchmark::State& st) {
  const signal::TimeSeries ts(ar1(static_cast<std::size_t>(st.range(0)), 2));
  const features::EntropyConfig cfg;
  for (auto _ : st) benchmark::DoNotOptimize(features::fuzzy_entropy(ts, cfg));
  st.SetComplexityN(st.range(0));
}

BENCHMARK(BM_SampEnReference)->RangeMultiplier(2)->Range(1024, 8192)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SampEn)->RangeMultiplier(2)->Range(1024, 8192)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FuzzyEnReference)->RangeMultiplier(2)->Range(1024, 8192)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FuzzyEn)->RangeMultiplier(2)->Range(1024, 8192)->Unit(benchmark::kMillisecond);

struct ShapFixture {
  gbdt::GbdtModel model;
  gbdt::Matrix x;
};

const ShapFixture& shap_fixture() {
  static const ShapFixture f = [] {
    Rng rng(7);
    const std::size_t rows = 1280, nf = 51;
    gbdt::Matrix x(rows, nf);
    std::vector<int> y(rows);
    for (std::size_t r = 0; r < rows; ++r) {
      double s = 0.0;
      for (std::size_t c = 0; c < nf; ++c) {
        x(r, c) = normal01(rng);
        if (c < 6) s += x(r, c);
      }
      y[r] = s + x(r, 0) * x(r, 1) + normal01(rng) > 0.0;
    }
    gbdt::TrainConfig cfg;
    cfg.max_rounds = 200;
    cfg.num_leaves = 31;
    return ShapFixture{gbdt::train(x, y, {}, cfg), x};
  }();
  return f;
}

// Row-at-a-time calls: the serial baseline for the batched path.
void BM_ShapRowLoop(benchmark::State& st) {
  const auto& f = shap_fixture();
  for (auto _ : st) {
    for (std::size_t r = 0; r < f.x.rows(); ++r) benchmark::DoNotOptimize(shap::shap_values(f.model, f.x.row(r)));
  }
  st.SetItemsProcessed(static_cast<std::int64_t>(st.iterations() * f.x.rows()));
}

void BM_ShapBatch(benchmark::State& st) {
  const auto& f = shap_fixture();
  for (auto _ : st) benchmark::DoNotOptimize(shap::shap_values(f.model, f.x));
  st.SetItemsProcessed(static_cast<std::int64_t>(st.iterations() * f.x.rows()));
}

BENCHMARK(BM_ShapRowLoop)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ShapBatch)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
