// Serial reference kernels against the OpenMP ones on classifier-sized layers.

#include <benchmark/benchmark.h>

#include <vector>

#include "pointaugment/kernels.hpp"
#include "pointaugment/kernels_reference.hpp"
#include "pointaugment/random.hpp"

using namespace pointaugment;

namespace {

struct Layer {
  Matrix x, dy;
  std::vector<double> w, b, dw, db;
  std::size_t out;
};

Layer make_layer(std::size_t n, std::size_t in, std::size_t out) {
  Rng rng(1);
  Layer l{Matrix(n, in), Matrix(n, out), std::vector<double>(in * out), std::vector<double>(out),
          std::vector<double>(in * out), std::vector<double>(out), out};
  for (double& v : l.x.values()) v = rng.uniform(-1, 1);
  for (double& v : l.dy.values()) v = rng.uniform(-1, 1);
  for (double& v : l.w) v = rng.uniform(-1, 1);
  return l;
}

template <bool Reference>
void BM_DenseForward(benchmark::State& state) {
  Layer l = make_layer(state.range(0), state.range(1), state.range(2));
  Matrix y;
  for (auto _ : state) {
    if constexpr (Reference) {
      kernels::reference::dense_forward(l.x, l.w, l.b, l.out, y);
    } else {
      kernels::dense_forward(l.x, l.w, l.b, l.out, y);
    }
    benchmark::DoNotOptimize(y.values().data());
  }
}

template <bool Reference>
void BM_DenseBackward(benchmark::State& state) {
  Layer l = make_layer(state.range(0), state.range(1), state.range(2));
  Matrix dx;
  for (auto _ : state) {
    if constexpr (Reference) {
      kernels::reference::dense_backward_params(l.x, l.dy, l.dw, l.db);
      kernels::reference::dense_backward_input(l.dy, l.w, l.x.cols(), dx);
    } else {
      kernels::dense_backward_params(l.x, l.dy, l.dw, l.db);
      kernels::dense_backward_input(l.dy, l.w, l.x.cols(), dx);
    }
    benchmark::DoNotOptimize(dx.values().data());
  }
}

template <bool Reference>
void BM_MaxPool(benchmark::State& state) {
  Layer l = make_layer(state.range(0), state.range(1), 1);
  std::vector<double> out(l.x.cols());
  std::vector<std::size_t> arg(l.x.cols());
  for (auto _ : state) {
    if constexpr (Reference) {
      kernels::reference::max_pool_rows(l.x, out, arg);
    } else {
      kernels::max_pool_rows(l.x, out, arg);
    }
    benchmark::DoNotOptimize(out.data());
  }
}

void layer_args(benchmark::internal::Benchmark* b) {
  b->Args({256, 3, 64})->Args({256, 64, 128})->Args({1024, 64, 128})->Args({1024, 128, 1024});
}

}  // namespace

BENCHMARK(BM_DenseForward<true>)->Name("dense_forward/reference")->Apply(layer_args);
BENCHMARK(BM_DenseForward<false>)->Name("dense_forward/openmp")->Apply(layer_args);
BENCHMARK(BM_DenseBackward<true>)->Name("dense_backward/reference")->Apply(layer_args);
BENCHMARK(BM_DenseBackward<false>)->Name("dense_backward/openmp")->Apply(layer_args);
BENCHMARK(BM_MaxPool<true>)->Name("max_pool/reference")->Args({256, 128})->Args({1024, 1024});
BENCHMARK(BM_MaxPool<false>)->Name("max_pool/openmp")->Args({256, 128})->Args({1024, 1024});

BENCHMARK_MAIN();
