// Serial reference vs OpenMP kernels. Thread count follows OMP_NUM_THREADS.

#include <benchmark/benchmark.h>

#include "cadro/causal.hpp"
#include "cadro/evaluators.hpp"
#include "cadro/forest.hpp"
#include "cadro/metrics.hpp"
#include "cadro/nsga2.hpp"

using namespace cadro;

namespace {

auto points(std::size_t n, std::size_t m, std::uint64_t seed) -> std::vector<std::vector<double>>
{
    Rng rng(seed);
    std::vector<std::vector<double>> p(n, std::vector<double>(m));
    for (auto& x : p) {
        for (auto& v : x) { v = uniform01(rng); }
    }
    return p;
}

void BM_sort_parallel(benchmark::State& state)
{
    const auto p = points(static_cast<std::size_t>(state.range(0)), 3, 1);
    for (auto _ : state) { benchmark::DoNotOptimize(fast_non_dominated_sort(p)); }
}

void BM_sort_serial(benchmark::State& state)
{
    const auto p = points(static_cast<std::size_t>(state.range(0)), 3, 1);
    for (auto _ : state) { benchmark::DoNotOptimize(serial::fast_non_dominated_sort(p)); }
}

void BM_mc_hv_parallel(benchmark::State& state)
{
    const auto f = non_dominated(points(200, 4, 2));
    const std::vector<double> ref(4, 1.1);
    for (auto _ : state) { benchmark::DoNotOptimize(hypervolume_monte_carlo(f, ref, 200000, 7)); }
}

void BM_mc_hv_serial(benchmark::State& state)
{
    const auto f = non_dominated(points(200, 4, 2));
    const std::vector<double> ref(4, 1.1);
    for (auto _ : state) { benchmark::DoNotOptimize(serial::hypervolume_monte_carlo(f, ref, 200000, 7)); }
}

auto forest_data() -> std::pair<FeatureColumns, std::vector<double>>
{
    Rng rng(3);
    FeatureColumns x(10, std::vector<double>(2000));
    for (auto& c : x) {
        for (auto& v : c) { v = uniform01(rng); }
    }
    std::vector<double> y(2000);
    for (std::size_t i = 0; i < y.size(); ++i) { y[i] = x[0][i] * x[0][i] + 0.5 * x[1][i]; }
    return {x, y};
}

void BM_forest_parallel(benchmark::State& state)
{
    const auto [x, y] = forest_data();
    for (auto _ : state) { benchmark::DoNotOptimize(forest_importance(x, y, ForestConfig{})); }
}

void BM_forest_serial(benchmark::State& state)
{
    const auto [x, y] = forest_data();
    for (auto _ : state) { benchmark::DoNotOptimize(serial::forest_importance(x, y, ForestConfig{})); }
}

auto planted_dataset() -> Dataset
{
    const auto bp = make_builtin("planted", {{"d", 10}, {"k", 3}, {"sigma", 0.05}});
    const auto ev = make_evaluator(bp.definition);
    EvaluationSession s(bp.definition, *ev);
    s.evaluate(points(2000, 10, 4), Tag::Exploration);
    return s.dataset();
}

void BM_links_parallel(benchmark::State& state)
{
    const auto data = planted_dataset();
    const DiscoveryConfig cfg;
    for (auto _ : state) { benchmark::DoNotOptimize(observational_links(data, cfg)); }
}

void BM_links_serial(benchmark::State& state)
{
    const auto data = planted_dataset();
    const DiscoveryConfig cfg;
    for (auto _ : state) { benchmark::DoNotOptimize(serial::observational_links(data, cfg)); }
}

void batch(benchmark::State& state, bool parallel)
{
    const auto bp = make_builtin("dtlz2-padded");
    const auto ev = make_evaluator(bp.definition, {parallel, 0});
    std::vector<EvaluationRequest> reqs;
    std::uint64_t id = 0;
    for (auto& p : points(20000, bp.definition.dimension(), 5)) { reqs.push_back({id++, p}); }
    for (auto _ : state) { benchmark::DoNotOptimize(ev->evaluate_batch(reqs)); }
}

void BM_batch_parallel(benchmark::State& state) { batch(state, true); }
void BM_batch_serial(benchmark::State& state) { batch(state, false); }

} // namespace

BENCHMARK(BM_sort_parallel)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_sort_serial)->Arg(500)->Arg(2000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_mc_hv_parallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_mc_hv_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_forest_parallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_forest_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_links_parallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_links_serial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_batch_parallel)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_batch_serial)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
