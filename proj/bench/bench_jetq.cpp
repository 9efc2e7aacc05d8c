// Serial reference vs OpenMP paths. Thread count follows OMP_NUM_THREADS.

#include <benchmark/benchmark.h>

#include "jetq/bidisc.hpp"
#include "jetq/equivalence.hpp"
#include "jetq/grid.hpp"

using namespace jetq;

namespace {

const KernelExpr& kernel() {
    static const KernelExpr k = to_u_coordinates(bidisc_kernel({1.5, 2.5})) * exp(KernelExpr::z(1) * KernelExpr::wb(2));
    return k;
}

std::vector<EvalPoint> points(int n) {
    std::vector<EvalPoint> out;
    for (const CVector& z : on_hypersurface(sample_grid(1, n, 0.6, kDefaultSeed))) out.push_back(EvalPoint::diagonal(z));
    return out;
}

void BM_Grid(benchmark::State& state, bool parallel) {
    DerivativeIndex idx = DerivativeIndex::zeros(2);
    idx.add_z(1, 2).add_wb(2, 2);
    const Tape tape = Tape::compile(differentiate(kernel(), idx), {});
    const auto pts = points(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(parallel ? evaluate_grid(tape, pts) : evaluate_grid_serial(tape, pts));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_Equivalence(benchmark::State& state, bool parallel) {
    const KernelExpr other = to_u_coordinates(bidisc_kernel({2.0, 2.0}));
    const auto samples = sample_grid(1, static_cast<int>(state.range(0)), 0.6, kDefaultSeed);
    for (auto _ : state)
        benchmark::DoNotOptimize(order_k_equivalent(kernel(), other, 3, samples, kDefaultTol, {}, parallel));
}

void BM_BruteForceSweep(benchmark::State& state, bool parallel) {
    std::vector<ModuleParams> cells;
    for (double l : {0.5, 1.0, 1.7, 2.0, 3.0})
        for (double m : {0.5, 1.0, 1.7, 2.0, 3.0}) cells.push_back({l, m});
    const int p_max = static_cast<int>(state.range(0));
    for (auto _ : state)
        benchmark::DoNotOptimize(parallel ? brute_force_sweep(cells, p_max) : brute_force_sweep_serial(cells, p_max));
}

void BM_KQSeries(benchmark::State& state, bool parallel) {
    const int p_max = static_cast<int>(state.range(0));
    for (auto _ : state)
        benchmark::DoNotOptimize(parallel ? quotient_kernel_series({1, 2}, 0.45, p_max)
                                          : quotient_kernel_series_serial({1, 2}, 0.45, p_max));
}

}  // namespace

BENCHMARK_CAPTURE(BM_Grid, serial, false)->Arg(1 << 12)->Arg(1 << 15);
BENCHMARK_CAPTURE(BM_Grid, omp, true)->Arg(1 << 12)->Arg(1 << 15);
BENCHMARK_CAPTURE(BM_Equivalence, serial, false)->Arg(64)->Arg(512);
BENCHMARK_CAPTURE(BM_Equivalence, omp, true)->Arg(64)->Arg(512);
BENCHMARK_CAPTURE(BM_BruteForceSweep, serial, false)->Arg(25)->Arg(60);
BENCHMARK_CAPTURE(BM_BruteForceSweep, omp, true)->Arg(25)->Arg(60);
BENCHMARK_CAPTURE(BM_KQSeries, serial, false)->Arg(300)->Arg(3000);
BENCHMARK_CAPTURE(BM_KQSeries, omp, true)->Arg(300)->Arg(3000);

BENCHMARK_MAIN();
