// Serial vs OpenMP vs direct reference timings for the hot kernels on a
// desk-scale sequence (n = 10, kernel bandwidth 40). The thread count is
// whatever OpenMP picks up from OMP_NUM_THREADS.
#include <benchmark/benchmark.h>

#include <map>

#include "tvnet/basis.hpp"
#include "tvnet/keller.hpp"
#include "tvnet/moments.hpp"
#include "tvnet/rng.hpp"
#include "tvnet/synth.hpp"

using namespace tvnet;

namespace {

const KernelSpec kKernel{KernelFamily::gaussian, 40.0, 3.0, true};
constexpr double kLambdaBeta = 0.02, kAlpha = 0.5, kKellerLambda = 0.02;

struct Fixture {
    ObservationSequence x;
    BasisSet bases;
    std::vector<StructureCode> codes;
    std::vector<Index> times;

    explicit Fixture(Index length) {
        const GroundTruth truth = make_ground_truth(10, length, 4, 250.0, 7);
        x = standardize(generate_sequence(truth));
        bases = random_bases(10, 6, 11);
        times = all_times(length);
        codes = infer_codes(bases, x, kKernel, kLambdaBeta, kAlpha, times, Exec::parallel);
    }
};

const Fixture& fixture(Index length) {
    static std::map<Index, Fixture> cache;
    auto it = cache.find(length);
    if (it == cache.end()) it = cache.emplace(length, Fixture(length)).first;
    return it->second;
}

Exec exec_of(const benchmark::State& state) { return state.range(1) ? Exec::parallel : Exec::serial; }

void BM_Moments(benchmark::State& state) {
    const Fixture& f = fixture(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(local_second_moments(f.x.data, kKernel, exec_of(state)));
}

void BM_InferCodes(benchmark::State& state) {
    const Fixture& f = fixture(state.range(0));
    for (auto _ : state)
        benchmark::DoNotOptimize(
            infer_codes(f.bases, f.x, kKernel, kLambdaBeta, kAlpha, f.times, exec_of(state)));
}

void BM_InferCodesReference(benchmark::State& state) {
    const Fixture& f = fixture(state.range(0));
    for (auto _ : state)
        benchmark::DoNotOptimize(reference::infer_codes(f.bases, f.x, kKernel, kLambdaBeta, kAlpha, f.times));
}

void BM_Gradient(benchmark::State& state) {
    const Fixture& f = fixture(state.range(0));
    for (auto _ : state)
        benchmark::DoNotOptimize(unsupervised_basis_gradient(f.bases, f.codes, f.x, kKernel, exec_of(state)));
}

void BM_GradientReference(benchmark::State& state) {
    const Fixture& f = fixture(state.range(0));
    for (auto _ : state)
        benchmark::DoNotOptimize(reference::unsupervised_basis_gradient(f.bases, f.codes, f.x, kKernel));
}

void BM_Keller(benchmark::State& state) {
    const Fixture& f = fixture(state.range(0));
    for (auto _ : state)
        benchmark::DoNotOptimize(fit_sequence(f.x, kKernel, kKellerLambda, f.times, exec_of(state)));
}

void BM_KellerReference(benchmark::State& state) {
    const Fixture& f = fixture(state.range(0));
    for (auto _ : state)
        for (Index t : f.times)
            benchmark::DoNotOptimize(reference::estimate_structure_at(f.x, t, kKernel, kKellerLambda));
}

void serial_and_parallel(benchmark::internal::Benchmark* b) {
    b->ArgNames({"T", "parallel"});
    for (Index t : {500, 2000})
        for (int p : {0, 1}) b->Args({t, p});
    b->Unit(benchmark::kMillisecond);
}

void reference_only(benchmark::internal::Benchmark* b) {
    b->ArgNames({"T"});
    b->Arg(500);
    b->Unit(benchmark::kMillisecond);
}

} // namespace

BENCHMARK(BM_Moments)->Apply(serial_and_parallel);
BENCHMARK(BM_InferCodes)->Apply(serial_and_parallel);
BENCHMARK(BM_InferCodesReference)->Apply(reference_only);
BENCHMARK(BM_Gradient)->Apply(serial_and_parallel);
BENCHMARK(BM_GradientReference)->Apply(reference_only);
BENCHMARK(BM_Keller)->Apply(serial_and_parallel);
BENCHMARK(BM_KellerReference)->Apply(reference_only);

BENCHMARK_MAIN();
