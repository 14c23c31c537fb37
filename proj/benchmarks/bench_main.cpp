#include <benchmark/benchmark.h>

#include "sentinel/estimator.hpp"
#include "sentinel/scenario.hpp"
#include "sentinel/synthesis.hpp"

using namespace sentinel;

namespace {

const PlantModel& plant() {
    static const PlantModel m = example_model(0.1, 1.0);
    return m;
}

const std::vector<ObserverDesign>& designs() {
    static const std::vector<ObserverDesign> d = synthesize_bank(plant(), 1);
    return d;
}

void BM_SolveGridPoint(benchmark::State& state) {
    const double c3 = static_cast<double>(state.range(0)) / 100.0;
    const AssembledLmi lmi = assemble(plant(), full_set(plant()), c3);
    int iterations = 0;
    for (auto _ : state) {
        const auto sol = sdp::solve(lmi.problem);
        iterations = sol.iterations;
        benchmark::DoNotOptimize(sol.objective);
    }
    state.counters["admm_iters"] = iterations;
}
BENCHMARK(BM_SolveGridPoint)->Arg(10)->Arg(50)->Arg(90)->Unit(benchmark::kMillisecond);

void BM_SynthesizeAllSensors(benchmark::State& state) {
    for (auto _ : state) benchmark::DoNotOptimize(synthesize(plant(), full_set(plant())).certificate.gamma);
}
BENCHMARK(BM_SynthesizeAllSensors)->Unit(benchmark::kMillisecond)->Iterations(3);

void BM_BankStep(benchmark::State& state) {
    EstimatorBank bank(plant(), 1, designs(), Vector::Zero(2));
    bank.set_threads(static_cast<unsigned>(state.range(0)));
    const Vector y = (Vector(4) << 0.1, -0.2, 0.3, 0.4).finished();
    const Vector u = Vector::Zero(1);
    for (auto _ : state) {
        bank.step(y, u);
        benchmark::DoNotOptimize(bank.sigma());
    }
}
BENCHMARK(BM_BankStep)->Arg(1)->Arg(2);

void BM_Simulate(benchmark::State& state) {
    Scenario s = example_scenario(Mode::kExample2);
    s.horizon = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(simulate(s, plant(), 1).x.back());
}
BENCHMARK(BM_Simulate)->Arg(500)->Arg(5000);

}  // namespace

BENCHMARK_MAIN();
