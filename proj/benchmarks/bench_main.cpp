// Copyright 2026 The memlang Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include <filesystem>

#include "memlang/grammar.hpp"
#include "memlang/memorization.hpp"
#include "memlang/model.hpp"
#include "memlang/training.hpp"

namespace {

using namespace memlang;

const ProbabilisticGrammar& desk() {
  static const auto g =
      load_grammar(std::filesystem::path(MEMLANG_ASSET_DIR) / "grammars" / "desk_high.pcfg");
  return g;
}

ModelConfig model_config(std::size_t d) {
  ModelConfig c;
  c.vocab_size = desk().num_terminals() + 3;
  c.d_model = d;
  c.n_layers = 2;
  c.n_heads = 2;
  c.context_len = 16;
  return c;
}

std::vector<TokenId> tokens(Seed seed) {
  const auto s = sample_string(desk(), seed).tokens;
  return {s.begin(), s.end()};
}

void BM_InsideLogprob(benchmark::State& state) {
  const auto s = sample_string(desk(), 3).tokens;
  for (auto _ : state) benchmark::DoNotOptimize(string_logprob(desk(), s));
}
BENCHMARK(BM_InsideLogprob);

void BM_SampleString(benchmark::State& state) {
  Seed seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(sample_string(desk(), ++seed));
}
BENCHMARK(BM_SampleString);

void BM_SequenceLoss(benchmark::State& state) {
  const auto p = init_params(model_config(state.range(0)), 1);
  const auto t = tokens(5);
  for (auto _ : state) benchmark::DoNotOptimize(sequence_loss(p, t));
}
BENCHMARK(BM_SequenceLoss)->Arg(16)->Arg(32)->Arg(64);

void BM_LossGradient(benchmark::State& state) {
  const auto p = init_params(model_config(state.range(0)), 1);
  std::vector<std::vector<TokenId>> batch;
  for (Seed s = 0; s < 8; ++s) batch.push_back(tokens(s));
  for (auto _ : state) benchmark::DoNotOptimize(loss_gradient(p, batch));
  state.SetItemsProcessed(state.iterations() * 8);
}
BENCHMARK(BM_LossGradient)->Arg(16)->Arg(32)->Arg(64);

void BM_TrainEpoch(benchmark::State& state) {
  const auto data = sample_dataset(desk(), static_cast<std::size_t>(state.range(0)), 9);
  TrainConfig t;
  t.epochs = 1;
  t.peak_lr = 3e-3;
  for (auto _ : state)
    benchmark::DoNotOptimize(train(data, {}, {}, model_config(32), t, 1));
}
BENCHMARK(BM_TrainEpoch)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_ContextualMeasure(benchmark::State& state) {
  std::vector<double> tr(50), ho(50);
  for (std::size_t e = 0; e < 50; ++e) {
    tr[e] = 3.0 / (1.0 + 0.2 * e);
    ho[e] = 2.0 + 0.01 * (e - 25.0) * (e - 25.0) / 25.0;
  }
  const PairedLossCurves p{{}, tr, ho};
  for (auto _ : state) benchmark::DoNotOptimize(contextual_measure(p));
}
BENCHMARK(BM_ContextualMeasure);

}  // namespace

BENCHMARK_MAIN();
