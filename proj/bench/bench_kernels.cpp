// SPDX-License-Identifier: Apache-2.0

// Serial reference vs OpenMP kernels.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "genfrontier/core_metrics.hpp"
#include "genfrontier/kernels.hpp"
#include "genfrontier/oracle.hpp"

namespace gf = genfrontier;
namespace orc = genfrontier::oracle;

namespace {

std::vector<gf::TokenId> random_tokens(std::size_t n, int vocab) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> tok(0, vocab - 1);
  std::vector<gf::TokenId> out(n);
  for (auto& t : out) t = static_cast<gf::TokenId>(tok(rng));
  return out;
}

std::pair<orc::ExactModel, orc::ExactModel> models(int vocab, int len) {
  std::mt19937_64 rng(2);
  auto q = orc::random_model(orc::ModelKind::Markov1, vocab, len, rng);
  auto p = orc::random_model(orc::ModelKind::Markov1, vocab, len, rng);
  return {std::move(q), std::move(p)};
}

std::vector<gf::ScoredSample> sweep_samples(int cells, int per_cell, int len) {
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> tok(0, 50256);
  std::exponential_distribution<double> nll(0.3);
  std::vector<gf::ScoredSample> out;
  for (int c = 0; c < cells; ++c) {
    for (int i = 0; i < per_cell; ++i) {
      gf::ScoredSample s;
      s.method_id = c % 2 ? "mdlm" : "duo";
      s.temperature = 0.8 + 0.05 * (c / 2 % 8);
      s.nfe = 8 << (c / 16);
      for (int k = 0; k < len; ++k) {
        s.tokens.push_back(static_cast<gf::TokenId>(tok(rng)));
        s.ref_nll.push_back(nll(rng));
      }
      out.push_back(std::move(s));
    }
  }
  return out;
}

void BM_Enumerate(benchmark::State& state, bool parallel) {
  const auto [q, p] = models(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
  for (auto _ : state) {
    auto sums = parallel ? gf::kernels::enumerate_parallel(q, p) : gf::kernels::enumerate_serial(q, p);
    benchmark::DoNotOptimize(sums.ref_nll.value());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(q.num_sequences()));
}

void BM_WindowEntropies(benchmark::State& state, bool parallel) {
  const auto tokens = random_tokens(static_cast<std::size_t>(state.range(0)), 50257);
  for (auto _ : state) {
    auto e = parallel ? gf::kernels::window_entropies_parallel(tokens, 1024)
                      : gf::kernels::window_entropies_serial(tokens, 1024);
    benchmark::DoNotOptimize(e.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_AggregateCells(benchmark::State& state, bool parallel) {
  const auto samples = sweep_samples(64, static_cast<int>(state.range(0)), 1024);
  for (auto _ : state) {
    auto pts = gf::aggregate_cells(samples, {}, parallel ? gf::Execution::Parallel : gf::Execution::Serial);
    benchmark::DoNotOptimize(pts.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(samples.size()));
}

}  // namespace

BENCHMARK_CAPTURE(BM_Enumerate, serial, false)->Args({8, 5})->Args({12, 6})->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Enumerate, parallel, true)->Args({8, 5})->Args({12, 6})->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_WindowEntropies, serial, false)->Arg(1 << 20)->Arg(1 << 23)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_WindowEntropies, parallel, true)->Arg(1 << 20)->Arg(1 << 23)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_AggregateCells, serial, false)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_AggregateCells, parallel, true)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
