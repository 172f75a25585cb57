#include <benchmark/benchmark.h>

#include <random>

#include "cag/cluster.hpp"
#include "cag/features.hpp"
#include "cag/metrics.hpp"
#include "cag/nn.hpp"
#include "cag/resample.hpp"
#include "cag/router.hpp"
#include "cag/trace.hpp"

namespace {

std::vector<double> bursts(std::size_t n) {
  cag::FixtureSpec s;
  s.kind = cag::FixtureKind::IntermittentBursts;
  s.length = n;
  return cag::make_fixture(s).samples;
}

void BM_RoutingStats(benchmark::State& st) {
  const auto x = bursts(static_cast<std::size_t>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(cag::routing_stats(x));
  st.SetItemsProcessed(st.iterations() * st.range(0));
}
BENCHMARK(BM_RoutingStats)->Arg(10000)->Arg(1000000);

void BM_SegmentFeatures(benchmark::State& st) {
  const auto x = bursts(436);
  for (auto _ : st) benchmark::DoNotOptimize(cag::segment_features(x));
}
BENCHMARK(BM_SegmentFeatures);

void BM_KMeans(benchmark::State& st) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0, 1);
  cag::PointSet pts(static_cast<std::size_t>(st.range(0)), cag::Point(30));
  for (auto& p : pts)
    for (auto& v : p) v = n(rng);
  cag::ClusterConfig cfg;
  for (auto _ : st) benchmark::DoNotOptimize(cag::kmeans(pts, 5, cfg));
}
BENCHMARK(BM_KMeans)->Arg(200)->Arg(2000);

void BM_Silhouette(benchmark::State& st) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0, 1);
  const auto count = static_cast<std::size_t>(st.range(0));
  cag::PointSet pts(count, cag::Point(30));
  std::vector<std::size_t> labels(count);
  for (std::size_t i = 0; i < count; ++i) {
    for (auto& v : pts[i]) v = n(rng);
    labels[i] = i % 4;
  }
  for (auto _ : st) benchmark::DoNotOptimize(cag::silhouette(pts, labels));
}
BENCHMARK(BM_Silhouette)->Arg(500);

void BM_ConvForwardBackward(benchmark::State& st) {
  using cag::LayerSpec;
  cag::Network net({LayerSpec::reshape({1, 64}), LayerSpec::conv1d(1, 16, 5),
                    LayerSpec::act(cag::ActivationKind::LeakyRelu), LayerSpec::conv1d(16, 8, 3), LayerSpec::flatten(),
                    LayerSpec::dense(512, 1)},
                   3);
  cag::Tensor x({32, 64}, 0.1), g({32, 1}, 1.0);
  for (auto _ : st) {
    benchmark::DoNotOptimize(net.forward(x));
    benchmark::DoNotOptimize(net.backward(g));
  }
}
BENCHMARK(BM_ConvForwardBackward);

void BM_LstmForwardBackward(benchmark::State& st) {
  cag::Network net({cag::LayerSpec::lstm(1, 16, 2, false)}, 4);
  cag::Tensor x({8, static_cast<std::size_t>(st.range(0)), 1}, 0.2), g({8, 16}, 1.0);
  for (auto _ : st) {
    benchmark::DoNotOptimize(net.forward(x));
    benchmark::DoNotOptimize(net.backward(g));
  }
}
BENCHMARK(BM_LstmForwardBackward)->Arg(100);

void BM_DownsampleReconstruct(benchmark::State& st) {
  const auto x = bursts(1000000);
  for (auto _ : st) {
    const auto s = cag::downsample(x, cag::choose_factor(x.size(), 1000));
    benchmark::DoNotOptimize(cag::reconstruct(s.values, s.factor, x.size()));
  }
}
BENCHMARK(BM_DownsampleReconstruct);

void BM_FeatureFid(benchmark::State& st) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n(0, 1);
  cag::SeriesSet a(100, cag::Series(64)), b(100, cag::Series(64));
  for (auto* s : {&a, &b})
    for (auto& x : *s)
      for (auto& v : x) v = n(rng);
  for (auto _ : st) benchmark::DoNotOptimize(cag::feature_fid(a, b));
}
BENCHMARK(BM_FeatureFid);

}  // namespace

BENCHMARK_MAIN();
