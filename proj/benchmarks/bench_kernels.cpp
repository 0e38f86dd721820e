#include <benchmark/benchmark.h>

#include <vector>

#include "tdse/er_fusion.hpp"
#include "tdse/evaluation.hpp"
#include "tdse/meta.hpp"
#include "tdse/nn.hpp"
#include "tdse/rng.hpp"
#include "tdse/spectral.hpp"

using namespace tdse;

namespace {

nn::Tensor random_tensor(Rng& rng, std::vector<std::size_t> shape) {
  nn::Tensor t(std::move(shape));
  for (auto& v : t.values()) v = rng.normal();
  return t;
}

meta::Rows random_rows(Rng& rng, std::size_t n, std::size_t d) {
  meta::Rows X(n, meta::Row(d));
  for (auto& r : X)
    for (auto& v : r) v = rng.uniform();
  return X;
}

std::vector<int> planted_labels(const meta::Rows& X) {
  std::vector<int> y;
  for (const auto& r : X) y.push_back(r[0] + 0.3 * r[1] > 0.65 ? 1 : 0);
  return y;
}

void BM_Conv1dForwardBackward(benchmark::State& state) {
  Rng rng(1);
  const auto width = static_cast<std::size_t>(state.range(0));
  nn::Conv1d conv("c", 6, 8, 3);
  nn::glorot_uniform(conv.kernel().value, 18, 24, rng);
  const auto x = random_tensor(rng, {32, 6, width});
  for (auto _ : state) {
    const auto y = conv.forward(x);
    benchmark::DoNotOptimize(conv.backward(y));
  }
  state.SetItemsProcessed(state.iterations() * 32);
}
BENCHMARK(BM_Conv1dForwardBackward)->Arg(5)->Arg(20);

void BM_Rnn2ForwardBackward(benchmark::State& state) {
  Rng rng(2);
  const auto steps = static_cast<std::size_t>(state.range(0));
  nn::Rnn2 rnn("r", 4, 16, 8);
  for (auto* p : rnn.parameters()) nn::glorot_uniform(p->value, 16, 16, rng);
  const auto x = random_tensor(rng, {32, steps, 4});
  for (auto _ : state) {
    const auto y = rnn.forward(x);
    benchmark::DoNotOptimize(rnn.backward(y));
  }
  state.SetItemsProcessed(state.iterations() * 32);
}
BENCHMARK(BM_Rnn2ForwardBackward)->Arg(5)->Arg(20);

void BM_ErCombine(benchmark::State& state) {
  Rng rng(3);
  std::vector<er::Evidence> e(static_cast<std::size_t>(state.range(0)));
  for (auto& x : e) {
    const double a = rng.uniform();
    x = {a, 1.0 - a, 0.2 + 0.8 * rng.uniform(), 0.1 + 0.8 * rng.uniform()};
  }
  for (auto _ : state) benchmark::DoNotOptimize(er::er_combine(e));
}
BENCHMARK(BM_ErCombine)->Arg(5)->Arg(50);

void BM_SymmetricEigen(benchmark::State& state) {
  Rng rng(4);
  const auto n = static_cast<std::size_t>(state.range(0));
  spectral::Matrix M(n, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j <= i; ++j) M[i][j] = M[j][i] = rng.normal();
  for (auto _ : state) benchmark::DoNotOptimize(spectral::symmetric_eigen(M));
}
BENCHMARK(BM_SymmetricEigen)->Arg(12)->Arg(28)->Arg(64);

void BM_ClusterIndustries(benchmark::State& state) {
  Rng rng(5);
  const auto n = static_cast<std::size_t>(state.range(0));
  spectral::IndustryMatrix m;
  for (std::size_t i = 0; i < n; ++i) {
    m.industries.push_back("i" + std::to_string(i));
    std::vector<double> row(150);
    for (auto& v : row) v = rng.normal();
    m.features.push_back(std::move(row));
  }
  for (auto _ : state) benchmark::DoNotOptimize(spectral::cluster_industries(m, std::nullopt, std::nullopt, 7));
}
BENCHMARK(BM_ClusterIndustries)->Arg(12)->Arg(28);

void BM_MetaFit(benchmark::State& state) {
  Rng rng(6);
  const auto X = random_rows(rng, static_cast<std::size_t>(state.range(1)), 6);
  const auto y = planted_labels(X);
  const auto kind = meta::kAllKinds[static_cast<std::size_t>(state.range(0))];
  state.SetLabel(meta::to_string(kind));
  for (auto _ : state) benchmark::DoNotOptimize(meta::fit_kind(kind, X, y, meta::MetaHyper{}, 11));
}
BENCHMARK(BM_MetaFit)->ArgsProduct({{0, 1, 2, 3, 4, 5, 6}, {60}})->Unit(benchmark::kMillisecond);

void BM_Auc(benchmark::State& state) {
  Rng rng(7);
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<double> s(n);
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    s[i] = rng.uniform();
    y[i] = rng.bernoulli(0.5) ? 1 : 0;
  }
  for (auto _ : state) benchmark::DoNotOptimize(eval::auc(s, y));
}
BENCHMARK(BM_Auc)->Arg(60)->Arg(10000);

}  // namespace

BENCHMARK_MAIN();
