#include <benchmark/benchmark.h>

#include "ladder/graph.hpp"
#include "ladder/rng.hpp"

namespace {

using namespace ladder;

Tensor random(const Shape& shape, Rng& rng) {
  Tensor t(shape);
  for (auto& v : t.data()) v = rng.normal();
  return t;
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  const Tensor a = random({n, n}, rng), b = random({n, n}, rng);
  for (auto _ : state) {
    Graph g;
    benchmark::DoNotOptimize(matmul(g.constant(a), g.constant(b)).value().data().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(32)->Arg(100)->Arg(300);

void BM_MatmulBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(2);
  const Tensor a = random({n, n}, rng), b = random({n, n}, rng);
  for (auto _ : state) {
    Graph g;
    Var x = g.leaf(a), y = g.leaf(b);
    g.backward(sum(matmul(x, y)));
    benchmark::DoNotOptimize(x.grad().data().data());
  }
}
BENCHMARK(BM_MatmulBackward)->Arg(100);

// Batch of 7x7 patches with 15 channels, the conv ladder's input layer.
void BM_Conv2d(benchmark::State& state) {
  const auto co = static_cast<std::size_t>(state.range(0));
  Rng rng(3);
  const Tensor x = random({100, 7, 7, 15}, rng), k = random({3, 3, 15, co}, rng);
  for (auto _ : state) {
    Graph g;
    benchmark::DoNotOptimize(conv2d(g.constant(x), g.constant(k)).value().data().data());
  }
}
BENCHMARK(BM_Conv2d)->Arg(30)->Arg(90);

void BM_Conv2dBackward(benchmark::State& state) {
  Rng rng(4);
  const Tensor x = random({100, 7, 7, 15}, rng), k = random({3, 3, 15, 90}, rng);
  for (auto _ : state) {
    Graph g;
    Var xv = g.leaf(x), kv = g.leaf(k);
    g.backward(sum(conv2d(xv, kv)));
    benchmark::DoNotOptimize(kv.grad().data().data());
  }
}
BENCHMARK(BM_Conv2dBackward);

}  // namespace
