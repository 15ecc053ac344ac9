#include <benchmark/benchmark.h>

#include "freqctl/controllers.hpp"
#include "freqctl/dispatch.hpp"
#include "freqctl/simulator.hpp"
#include "freqctl/stability.hpp"

using namespace freqctl;

static void BM_OptimalDispatch(benchmark::State& state) {
    const auto sc = toy_grid();
    const Vector p = sc.steady_injection();
    for (auto _ : state) {
        benchmark::DoNotOptimize(optimal_dispatch(sc.grid, p));
    }
}
BENCHMARK(BM_OptimalDispatch);

static void BM_Derivative(benchmark::State& state) {
    const auto sc = toy_grid();
    const auto ctx = final_context(sc);
    const auto s = initial_state(sc);
    const Vector p = sc.steady_injection();
    StateDerivative out = derivative(s, sc.grid, sc.comm, ctx, p);
    for (auto _ : state) {
        derivative_into(s, sc.grid, sc.comm, ctx, p, out);
        benchmark::DoNotOptimize(out.domega.data());
    }
}
BENCHMARK(BM_Derivative);

// Simulated seconds per iteration on the bundled grid.
static void BM_ToyRun(benchmark::State& state) {
    auto sc = toy_grid();
    sc.horizon = static_cast<double>(state.range(0));
    for (auto _ : state) {
        benchmark::DoNotOptimize(integrate(sc));
    }
}
BENCHMARK(BM_ToyRun)->Arg(10)->Unit(benchmark::kMillisecond);

static void BM_ToySpectrum(benchmark::State& state) {
    auto sc = toy_grid();
    sc.comm = CommGraph(sc.comm.links(), {{{1, 6}, 0.5}}, std::nullopt);
    sc.scheme = Scheme::HybridSingle;
    const auto a = assemble_state_matrix(sc.grid, sc.comm, final_context(sc)).a;
    for (auto _ : state) {
        benchmark::DoNotOptimize(spectrum(a));
    }
}
BENCHMARK(BM_ToySpectrum);
