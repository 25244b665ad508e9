#include <benchmark/benchmark.h>

#include "z2v/specfn.hpp"

// placeholder until the lattice kernels land; keeps the target building
static void BM_log_gamma(benchmark::State& state) {
    z2v::specfn::cplx z{3.1, 4.2};
    for (auto _ : state) benchmark::DoNotOptimize(z2v::specfn::log_gamma(z));
}
BENCHMARK(BM_log_gamma);

BENCHMARK_MAIN();
