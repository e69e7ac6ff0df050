// SPDX-License-Identifier: Apache-2.0
//
// Serial reference vs OpenMP kernel for frame analysis, mel cepstra and the
// APO-down batch evaluation. The parallel variants take the thread count as
// the benchmark argument.
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <benchmark/benchmark.h>
#include <omp.h>

#include "vocalplan/apo.hpp"
#include "vocalplan/dsp.hpp"
#include "vocalplan/mcd.hpp"

namespace {

using namespace vocalplan;

const AudioBuffer& speechlike() {
  static const AudioBuffer buffer = [] {
    constexpr int sr = 16000;
    std::mt19937_64 rng(1);
    std::normal_distribution<double> noise(0.0, 0.01);
    std::vector<double> x(sr * 10);
    double phase = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double t = static_cast<double>(i) / sr;
      phase += 2.0 * std::numbers::pi * (150.0 + 40.0 * std::sin(2.0 * t)) / sr;
      for (int h = 1; h <= 5; ++h) x[i] += 0.3 / h * std::sin(h * phase);
      x[i] += noise(rng);
    }
    return AudioBuffer(std::move(x), sr);
  }();
  return buffer;
}

struct ApoFixture {
  ToyPolicy theta{2, 1};
  ToyPolicy ref{2, 1};
  std::vector<PreferenceTuple> batch;
};

const ApoFixture& apo_fixture() {
  static const ApoFixture fixture = [] {
    constexpr std::size_t vocab = 300;
    ApoFixture f{ToyPolicy::random(vocab, 1, 1), ToyPolicy::random(vocab, 1, 2), {}};
    std::mt19937_64 rng(3);
    auto tokens = [&](std::size_t n) {
      std::vector<TokenId> out(n);
      for (auto& t : out) t = static_cast<TokenId>(rng() % vocab);
      return out;
    };
    for (int i = 0; i < 256; ++i) f.batch.push_back({"", tokens(40), tokens(60), tokens(200), tokens(200)});
    return f;
  }();
  return fixture;
}

void BM_AnalyzeSerial(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(serial::analyze(speechlike()));
}

void BM_AnalyzeParallel(benchmark::State& state) {
  omp_set_num_threads(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(analyze(speechlike()));
}

void BM_CepstrumSerial(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(serial::mel_cepstrum(speechlike()));
}

void BM_CepstrumParallel(benchmark::State& state) {
  omp_set_num_threads(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(mel_cepstrum(speechlike()));
}

void BM_ApoSerial(benchmark::State& state) {
  const auto& f = apo_fixture();
  for (auto _ : state) benchmark::DoNotOptimize(serial::apo_down_evaluate(f.theta, f.ref, f.batch, 0.1));
}

void BM_ApoParallel(benchmark::State& state) {
  const auto& f = apo_fixture();
  omp_set_num_threads(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(apo_down_evaluate(f.theta, f.ref, f.batch, 0.1));
}

}  // namespace

BENCHMARK(BM_AnalyzeSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AnalyzeParallel)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_CepstrumSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CepstrumParallel)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_ApoSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ApoParallel)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
