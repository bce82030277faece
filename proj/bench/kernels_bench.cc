// bench/kernels_bench.cc
//
// Serial reference vs OpenMP kernels, batch loss scaling, and blank skipping.

#include <benchmark/benchmark.h>
#include <omp.h>

#include <random>
#include <vector>

#include "ctccrf/crf_loss.h"
#include "ctccrf/decoder.h"
#include "ctccrf/den_table.h"
#include "ctccrf/gradcheck.h"
#include "ctccrf/graphs.h"

namespace ctccrf {
namespace {

Alphabet Letters(int n) {
  std::vector<std::string> names;
  for (int i = 0; i < n; ++i) names.emplace_back(1, static_cast<char>('a' + i));
  return Alphabet(names);
}

struct Fixture {
  Alphabet alphabet = Letters(10);
  lm::NGramModel lm;
  crf::DenominatorTable den;
  fst::Wfst tlg;

  Fixture() {
    std::mt19937_64 rng(1);
    lm = oracle::RandomLabelLm(rng, alphabet, 3, 200);
    den = crf::FlattenDenominator(fst::BuildDenominatorGraph(alphabet, lm));
    tlg = fst::BuildDecodingGraph(alphabet, std::nullopt, lm);
  }
};

const Fixture& Shared() {
  static const Fixture f;
  return f;
}

Matrix Potentials(int frames, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return oracle::RandomLogSoftmax(rng, frames, Shared().alphabet.NumStates());
}

void BM_DenominatorReference(benchmark::State& state) {
  const Matrix pot = Potentials(static_cast<int>(state.range(0)), 2);
  for (auto _ : state) {
    benchmark::DoNotOptimize(crf::reference::DenominatorForwardBackward(pot, Shared().den));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_DenominatorReference)->Arg(200)->Arg(1000)->Unit(benchmark::kMillisecond);

// Arg 0: frames, arg 1: OpenMP threads.
void BM_DenominatorOpenMP(benchmark::State& state) {
  const Matrix pot = Potentials(static_cast<int>(state.range(0)), 2);
  omp_set_num_threads(static_cast<int>(state.range(1)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(crf::DenominatorForwardBackward(pot, Shared().den));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_DenominatorOpenMP)
    ->ArgsProduct({{200, 1000}, {1, 4}})
    ->Unit(benchmark::kMillisecond)
    ->UseRealTime();

void BM_BatchLoss(benchmark::State& state) {
  std::vector<Matrix> pots;
  std::vector<crf::UtteranceRef> batch;
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> sym(1, Shared().alphabet.NumLabels());
  for (int u = 0; u < 16; ++u) pots.push_back(Potentials(300, 10 + u));
  for (const Matrix& p : pots) {
    std::vector<int> l(40);
    for (int& x : l) x = sym(rng);
    batch.push_back({&p, l, lm::ScoreSequenceIds(Shared().lm, l)});
  }
  const int workers = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(crf::BatchCrfLoss(batch, Shared().den, 0.1, workers));
  }
  state.SetItemsProcessed(state.iterations() * 16);
}
BENCHMARK(BM_BatchLoss)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();

// Spiky posteriors with blank runs: each label frame is followed by two
// blank frames. Arg: 1 with skipping at 0.7, 0 without.
void BM_DecodeBlankSkip(benchmark::State& state) {
  const int width = Shared().alphabet.NumStates();
  const int frames = 1000;
  Matrix pot(frames, width);
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> sym(1, width - 1);
  for (int t = 0; t < frames; ++t) {
    const int peak = t % 3 == 0 ? sym(rng) : 0;
    pot.row(t).setConstant(std::log(0.1 / (width - 1)));
    pot(t, peak) = std::log(0.9);
  }
  decode::BeamConfig config;
  config.width = 64;
  if (state.range(0) == 1) config.blank_skip = 0.7;
  const decode::BeamDecoder decoder(Shared().tlg);
  for (auto _ : state) benchmark::DoNotOptimize(decoder.Decode(pot, config));
  state.SetItemsProcessed(state.iterations() * frames);
}
BENCHMARK(BM_DecodeBlankSkip)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace ctccrf

BENCHMARK_MAIN();
