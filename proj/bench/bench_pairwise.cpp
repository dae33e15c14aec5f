// Serial reference vs OpenMP versions of the O(n²) pair loops and the deposit.
#include <benchmark/benchmark.h>

#include "vortexldp/kernels.hpp"
#include "vortexldp/mollify.hpp"
#include "vortexldp/pairwise.hpp"
#include "vortexldp/vortex.hpp"

using namespace vortexldp;

namespace {

const KernelTable& kt() { return *KernelTable::shared(); }
const MollifierProfile& prof() { return *MollifierProfile::shared(); }

template <Exec E>
void BM_drift_direct(benchmark::State& st) {
    const auto X = uniform_positions(static_cast<int>(st.range(0)), 1);
    for (auto _ : st) benchmark::DoNotOptimize(drift_direct(X, kt(), 1e-9, E));
    st.SetComplexityN(st.range(0));
}

template <Exec E>
void BM_drift_mollified(benchmark::State& st) {
    const int n = static_cast<int>(st.range(0));
    const auto X = uniform_positions(n, 2);
    const int m = MollifierFamily::standard().m(n);
    for (auto _ : st) benchmark::DoNotOptimize(drift_mollified(X, kt(), prof(), m, E));
}

template <Exec E>
void BM_pair_sum_G(benchmark::State& st) {
    const int n = static_cast<int>(st.range(0));
    const auto X = uniform_positions(n, 3);
    const int m = MollifierFamily::standard().m(n);
    for (auto _ : st) benchmark::DoNotOptimize(pair_sum_G(X, prof(), m, E));
}

void BM_deposit_serial(benchmark::State& st) {
    const int n = static_cast<int>(st.range(0));
    const auto X = uniform_positions(n, 4);
    const int m = MollifierFamily::standard().m(n);
    const PeriodicGrid g(required_grid_size(m));
    for (auto _ : st) benchmark::DoNotOptimize(mollify_empirical_serial(X, m, g, prof()));
}

void BM_deposit_parallel(benchmark::State& st) {
    const int n = static_cast<int>(st.range(0));
    const auto X = uniform_positions(n, 4);
    const int m = MollifierFamily::standard().m(n);
    const PeriodicGrid g(required_grid_size(m));
    for (auto _ : st) benchmark::DoNotOptimize(mollify_empirical_m(X, m, g, prof()));
}

}  // namespace

BENCHMARK(BM_drift_direct<Exec::serial>)->RangeMultiplier(4)->Range(64, 1024);
BENCHMARK(BM_drift_direct<Exec::parallel>)->RangeMultiplier(4)->Range(64, 1024);
BENCHMARK(BM_drift_mollified<Exec::serial>)->RangeMultiplier(4)->Range(64, 1024);
BENCHMARK(BM_drift_mollified<Exec::parallel>)->RangeMultiplier(4)->Range(64, 1024);
BENCHMARK(BM_pair_sum_G<Exec::serial>)->RangeMultiplier(4)->Range(64, 1024);
BENCHMARK(BM_pair_sum_G<Exec::parallel>)->RangeMultiplier(4)->Range(64, 1024);
BENCHMARK(BM_deposit_serial)->RangeMultiplier(4)->Range(64, 1024);
BENCHMARK(BM_deposit_parallel)->RangeMultiplier(4)->Range(64, 1024);

BENCHMARK_MAIN();
