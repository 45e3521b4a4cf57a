#include <confloc/config.hpp>
#include <confloc/conformal.hpp>
#include <confloc/features.hpp>
#include <confloc/gpr.hpp>
#include <confloc/kernel.hpp>
#include <confloc/room_sim.hpp>

#include <benchmark/benchmark.h>

#include <random>

using namespace confloc;

namespace {

// Default-sized problem: 5 nodes x 87 bins, 225 labeled, 100 unlabeled.
constexpr std::size_t kNodes = 5, kBins = 87;

std::vector<AggregatedRtf> features(std::size_t count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 0.5);
  std::vector<AggregatedRtf> out;
  for (std::size_t i = 0; i < count; ++i) {
    Eigen::VectorXcd flat(static_cast<Eigen::Index>(kNodes * kBins));
    for (auto& v : flat) v = {1.0 + normal(rng), normal(rng)};
    out.emplace_back(std::move(flat), kNodes);
  }
  return out;
}

MmgpModel default_sized_model(std::size_t n_labeled) {
  const auto labeled = features(n_labeled, 1);
  const auto unlabeled = features(100, 2);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(1.6, 3.6);
  std::vector<Position2> labels;
  for (std::size_t i = 0; i < n_labeled; ++i) labels.push_back({u(rng), u(rng)});
  return fit(labeled, labels, unlabeled, KernelConfig{}, 0.1);
}

void BM_GenerateRir(benchmark::State& state) {
  RoomSpec room;
  room.t60 = static_cast<double>(state.range(0)) / 1000.0;
  const int order = default_max_order(room);
  reflection_coefficient(room);  // calibrate outside the timed loop
  for (auto _ : state)
    benchmark::DoNotOptimize(generate_rir(room, {2.1, 3.3, 1.5}, {1.6, 0.5, 1.5}, order));
  state.counters["order"] = order;
}
BENCHMARK(BM_GenerateRir)->Arg(300)->Arg(700)->Unit(benchmark::kMillisecond);

void BM_ExtractFeatures(benchmark::State& state) {
  const auto cfg = default_pipeline_config();
  MultichannelRecording rec;
  rec.samples = Eigen::MatrixXd::Random(10, 32000);
  for (auto _ : state) benchmark::DoNotOptimize(extract_features(rec, cfg.stft, cfg.band));
}
BENCHMARK(BM_ExtractFeatures)->Unit(benchmark::kMillisecond);

void BM_KernelMatrix(benchmark::State& state) {
  ReferenceSet refs;
  refs.features = features(325, 4);
  refs.n_labeled = 225;
  const auto cfg = select_scales(refs);
  for (auto _ : state) benchmark::DoNotOptimize(combined_kernel_matrix(refs.features, refs, cfg));
}
BENCHMARK(BM_KernelMatrix)->Unit(benchmark::kMillisecond);

void BM_Fit(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(default_sized_model(225));
}
BENCHMARK(BM_Fit)->Unit(benchmark::kMillisecond);

void BM_LooTable(benchmark::State& state) {
  const auto model = default_sized_model(static_cast<std::size_t>(state.range(0)));
  const auto h_t = features(1, 5).front();
  for (auto _ : state) benchmark::DoNotOptimize(loo_table(model, h_t));
}
BENCHMARK(BM_LooTable)->Arg(50)->Arg(225)->Unit(benchmark::kMillisecond);

void BM_PredictInterval(benchmark::State& state) {
  const auto model = default_sized_model(static_cast<std::size_t>(state.range(0)));
  const auto loo = loo_table(model, features(1, 6).front());
  const auto profile = build_profile(loo, model.labels(Axis::X), 32.0);
  for (auto _ : state) benchmark::DoNotOptimize(predict_interval(profile, 0.1));
}
BENCHMARK(BM_PredictInterval)->Arg(50)->Arg(225)->Unit(benchmark::kMicrosecond);

void BM_LocalizeWithInterval(benchmark::State& state) {
  const auto model = default_sized_model(225);
  const auto h_t = features(1, 7).front();
  for (auto _ : state) benchmark::DoNotOptimize(localize_with_pi(model, h_t, 0.1, 32.0));
}
BENCHMARK(BM_LocalizeWithInterval)->Unit(benchmark::kMillisecond);

void BM_JackknifePlus(benchmark::State& state) {
  const auto model = default_sized_model(225);
  const JackknifePlus jk(model);
  const auto tk = model.test_kernel(features(1, 8).front());
  for (auto _ : state) benchmark::DoNotOptimize(jk.interval(tk, Axis::X, 0.1));
}
BENCHMARK(BM_JackknifePlus)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
