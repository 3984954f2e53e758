// Serial vs OpenMP batch execution of independent simulations.

#include <benchmark/benchmark.h>

#include <filesystem>

#include "rtvsim/scenario_io.hpp"
#include "rtvsim/sweep.hpp"

using namespace rtvsim;

namespace {

std::vector<Scenario> batch(std::size_t n) {
    const auto base = load_scenario(std::filesystem::path(RTVSIM_SOURCE_DIR) / "scenarios" / "full-opt-load.json",
                                    {"duration_ns=100000000"});
    std::vector<Scenario> out;
    for (std::size_t i = 0; i < n; ++i) {
        auto s = base;
        s.seed = i + 1;
        out.push_back(s);
    }
    return out;
}

void run(benchmark::State& state, Exec exec) {
    const auto scenarios = batch(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        auto reports = run_batch(scenarios, exec);
        benchmark::DoNotOptimize(reports.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_BatchSerial(benchmark::State& state) {
    run(state, Exec::Serial);
}
void BM_BatchParallel(benchmark::State& state) {
    run(state, Exec::Parallel);
}

void BM_Ladder(benchmark::State& state) {
    auto base = batch(1).front();
    const auto exec = state.range(0) ? Exec::Parallel : Exec::Serial;
    for (auto _ : state) {
        auto rows = ladder(base);
        run_ladder(rows, exec);
        benchmark::DoNotOptimize(rows.data());
    }
}

} // namespace

BENCHMARK(BM_BatchSerial)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_BatchParallel)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_Ladder)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
