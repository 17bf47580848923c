// Serial reference kernels against their OpenMP counterparts.
// Thread count follows FACTOR_COLLAPSE_THREADS / OMP_NUM_THREADS.

#include <benchmark/benchmark.h>

#include <vector>

#include "fcollapse/experiment.hpp"
#include "fcollapse/kernels.hpp"

using namespace fcollapse;
namespace k = fcollapse::kernels;

namespace {

const k::SimulationPlan& figure1_plan() {
    static const k::SimulationPlan plan = k::make_simulation_plan(builtin_scenario("figure1").spec, 41, 42);
    return plan;
}

template <void (*Simulate)(const k::SimulationPlan&, std::size_t, std::span<double>, std::span<double>)>
void BM_Simulate(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const k::SimulationPlan& plan = figure1_plan();
    std::vector<double> obs(n * plan.n_waves * plan.p);
    for (auto _ : state) {
        Simulate(plan, n, obs, {});
        benchmark::DoNotOptimize(obs.data());
    }
    state.SetItemsProcessed(static_cast<int64_t>(state.iterations() * n));
}

template <Matrix (*Covariance)(const k::RowView&)>
void BM_Covariance(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const k::SimulationPlan& plan = figure1_plan();
    std::vector<double> obs(n * plan.n_waves * plan.p);
    k::serial::simulate(plan, n, obs, {});
    const k::RowView rows{obs, n, plan.p, plan.n_waves * plan.p, 40 * plan.p};
    for (auto _ : state) benchmark::DoNotOptimize(Covariance(rows));
    state.SetItemsProcessed(static_cast<int64_t>(state.iterations() * n));
}

template <std::vector<double> (*Null)(std::size_t, std::size_t, std::size_t, std::uint64_t)>
void BM_NullEigenvalues(benchmark::State& state) {
    const auto replicates = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(Null(1000, 12, replicates, 42));
    state.SetItemsProcessed(static_cast<int64_t>(state.iterations() * replicates));
}

}  // namespace

BENCHMARK(BM_Simulate<k::serial::simulate>)->Name("simulate/serial")->Arg(1000)->Arg(5000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Simulate<k::omp::simulate>)->Name("simulate/omp")->Arg(1000)->Arg(5000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Covariance<k::serial::covariance>)->Name("covariance/serial")->Arg(5000)->Arg(50000)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Covariance<k::omp::covariance>)->Name("covariance/omp")->Arg(5000)->Arg(50000)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_NullEigenvalues<k::serial::null_leading_eigenvalues>)->Name("null_eigen/serial")->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_NullEigenvalues<k::omp::null_leading_eigenvalues>)->Name("null_eigen/omp")->Arg(50)->Arg(200)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
