// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include "na/asym.hpp"
#include "na/compile.hpp"
#include "na/statecomp.hpp"
#include "na/tape.hpp"
#include "na/train.hpp"

namespace {

void BM_SymbolicParityAccept(benchmark::State& state) {
  const na::compile::DfaCompilation comp =
      na::compile::compile_dfa_to_srn(na::compile::parity_dfa());
  const na::asym::LimitEvaluator ev(comp.net);
  std::string s(state.range(0), '1');
  for (int i = 0; i < state.range(0); i += 2) s[i] = '0';
  const na::lang::SentenceMatrix X = na::lang::encode_one_hot(s, comp.net.alphabet);
  for (auto _ : state) {
    auto tr = ev.evaluate(X);
    benchmark::DoNotOptimize(tr);
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_SymbolicParityAccept)->RangeMultiplier(2)->Range(8, 128)->Complexity();

void BM_ConfigSetCounter(benchmark::State& state) {
  const na::nets::NetworkSpec net =
      na::compile::counter_cell_spec(na::compile::counter_params().plus);
  for (auto _ : state) {
    auto cs = na::statecomp::config_set(net, na::statecomp::Selector::Hidden,
                                        static_cast<int>(state.range(0)));
    benchmark::DoNotOptimize(cs);
  }
}
BENCHMARK(BM_ConfigSetCounter)->Arg(8)->Arg(10)->Arg(12);

void BM_LmLossBackward(benchmark::State& state) {
  const na::lang::Alphabet abc("abc");
  na::train::LmModel model(na::nets::Arch::Lstm, 2, abc, 42);
  na::lang::CorpusItem item;
  const int n = static_cast<int>(state.range(0));
  item.input = std::string(n, 'a') + std::string(n, 'b') + "c";
  item.target = item.input.substr(1) + na::lang::kEos;
  std::vector<double> grads;
  for (auto _ : state) {
    const double loss = na::train::lm_loss_and_grad(model, item, &grads);
    benchmark::DoNotOptimize(loss);
  }
  state.SetItemsProcessed(state.iterations() * item.input.size());
}
BENCHMARK(BM_LmLossBackward)->Arg(8)->Arg(32)->Arg(64);

void BM_ContinuousForwardScaled(benchmark::State& state) {
  const na::compile::DfaCompilation comp =
      na::compile::compile_dfa_to_gru(na::compile::astar_b_astar_dfa());
  const na::lang::SentenceMatrix X =
      na::lang::encode_one_hot("aabaaabaa", comp.net.alphabet);
  for (auto _ : state) {
    auto tr = na::nets::acceptor_forward(comp.net, X, static_cast<double>(state.range(0)));
    benchmark::DoNotOptimize(tr);
  }
}
BENCHMARK(BM_ContinuousForwardScaled)->Arg(1)->Arg(64)->Arg(4096);

}  // namespace

BENCHMARK_MAIN();
