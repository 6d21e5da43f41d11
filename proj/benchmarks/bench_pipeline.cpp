// Microbenchmarks for the hot paths: mixed-norm quadrature, the separable
// kernel pairing engine, semigroup trajectories, and the tied forward pass.

#include <benchmark/benchmark.h>

#include <random>

#include "pno/expansion.hpp"
#include "pno/heat_kernel.hpp"
#include "pno/nonlinearity.hpp"
#include "pno/operator_model.hpp"

namespace {

using namespace pno;

const SpaceTimeGrid kGrid(129, 127, 0.1);

Field random_field(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Field f(kGrid);
    for (double& v : f.values) v = dist(rng);
    return f;
}

const KernelApplicator& applicator() {
    static const KernelApplicator app(
        build_expansion(OperatorSpec{}, BasisKind::haar, 256, kGrid.T, 8), kGrid);
    return app;
}

void BM_MixedNorm(benchmark::State& state) {
    const Field f = random_field(7);
    const NormSpec specs[] = {{2.0, 2.0}, {kInf, kInf}, {2.0, kInf}};
    const NormSpec n = specs[state.range(0)];
    for (auto _ : state) benchmark::DoNotOptimize(mixed_norm(f, n));
}
BENCHMARK(BM_MixedNorm)->Arg(0)->Arg(1)->Arg(2);

void BM_SemigroupTrajectory(benchmark::State& state) {
    const OperatorSpec op;
    const std::vector<double> u0 =
        sample_initial_data(0.1, kGrid.nx, 1, InitialDataKind::random_trig);
    for (auto _ : state) benchmark::DoNotOptimize(semigroup_trajectory(op, kGrid, u0));
}
BENCHMARK(BM_SemigroupTrajectory);

void BM_DuhamelApply(benchmark::State& state) {
    const KernelApplicator& app = applicator();
    const Field f = random_field(11);
    for (auto _ : state) benchmark::DoNotOptimize(app.duhamel_apply(f));
}
BENCHMARK(BM_DuhamelApply);

void BM_ModelForward(benchmark::State& state) {
    const KernelApplicator& app = applicator();
    NonlinearitySpec spec;  // F(z) = z|z|
    const Fnet fnet = build_fnet(spec, 1e-1, 2.0);
    const NeuralOperatorModel model =
        build_weight_tied(app.expansion(), fnet, int(state.range(0)), 2.0);
    const std::vector<double> u0 =
        sample_initial_data(0.1, kGrid.nx, 1, InitialDataKind::random_trig);
    for (auto _ : state) benchmark::DoNotOptimize(forward(model, app, u0));
}
BENCHMARK(BM_ModelForward)->Arg(1)->Arg(3)->Arg(7);

}  // namespace

BENCHMARK_MAIN();
