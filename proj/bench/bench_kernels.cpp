// Serial reference against the OpenMP kernels. Arg(0) = serial, Arg(n) = n threads.

#include <benchmark/benchmark.h>

#include <cmath>
#include <omp.h>

#include "trotter/rabi_experiment.hpp"
#include "trotter/trotter_engine.hpp"

using namespace trotter;

namespace {

std::vector<double> synthetic_trace(int K) {
    std::vector<double> x(K);
    for (int k = 0; k < K; ++k) x[k] = 0.5 + 0.4 * std::cos(0.0011 * 100.0 * k) + 0.01 * std::sin(0.37 * k);
    return x;
}

void BM_dft(benchmark::State& state) {
    const auto x = synthetic_trace(4000);
    const int threads = static_cast<int>(state.range(0));
    for (auto _ : state) {
        Spectrum s = threads == 0 ? dft_spectrum(x, 100.0) : dft_spectrum_parallel(x, 100.0, threads);
        benchmark::DoNotOptimize(s.power.data());
    }
}

void BM_batch_evolve(benchmark::State& state) {
    const ChainSpec spec = build_chain(200, 1.0, PotentialFamily::cosine(1.25));
    const TrotterCircuit circuit(spec, {0.5, Ordering::even_potential_odd, 0.5});
    const int threads = static_cast<int>(state.range(0));
    for (auto _ : state) {
        Eigen::MatrixXcd states = Eigen::MatrixXcd::Identity(200, 64);
        if (threads == 0)
            circuit.evolve(states, 200);
        else
            circuit.evolve_parallel(states, 200, threads);
        benchmark::DoNotOptimize(states.data());
    }
}

void BM_sweep(benchmark::State& state) {
    ExperimentConfig c;
    c.M = 20000;
    c.dt_grid = {0.5, 1.0, 1.5, 2.0};
    // workers = 1 is the serial path
    const int threads = state.range(0) == 0 ? 1 : static_cast<int>(state.range(0));
    for (auto _ : state) {
        DensityMap m = rabi_density_map(c, threads);
        benchmark::DoNotOptimize(m.traces.data());
    }
}

void thread_args(benchmark::internal::Benchmark* b) {
    b->Arg(0);
    for (int n = 1; n <= omp_get_max_threads(); n *= 2) b->Arg(n);
}

}  // namespace

BENCHMARK(BM_dft)->Apply(thread_args)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_batch_evolve)->Apply(thread_args)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_sweep)->Apply(thread_args)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
