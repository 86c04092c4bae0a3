// Serial reference paths against the OpenMP kernels.
#include <benchmark/benchmark.h>

#include "ghzsim/estimation.hpp"
#include "ghzsim/simulator.hpp"
#include "ghzsim/sources.hpp"

using namespace ghz;

namespace {

ExecPolicy policy_of(const benchmark::State& state) {
    return state.range(0) ? ExecPolicy::parallel : ExecPolicy::serial;
}

void label(benchmark::State& state) { state.SetLabel(state.range(0) ? "parallel" : "serial"); }

void BM_WitnessBootstrap(benchmark::State& state) {
    CountRecord x(MeasurementSetting::parse("XXX"), {12, 1, 0, 22, 2, 11, 14, 0});
    CountRecord z(MeasurementSetting::parse("ZZZ"), {24, 0, 1, 0, 0, 0, 0, 22});
    WitnessOptions o;
    o.policy = policy_of(state);
    for (auto _ : state) benchmark::DoNotOptimize(ghz_witness_from_records(x, z, o));
    label(state);
}
BENCHMARK(BM_WitnessBootstrap)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_TomographyBootstrap(benchmark::State& state) {
    const auto rho = noisy_state(psi_pair_state(M_PI / 4, M_PI), 0.03, 0.97);
    std::vector<CountRecord> recs;
    std::uint64_t i = 0;
    for (const auto& s : MeasurementSetting::tomography_set(2)) {
        recs.push_back(sample_counts(rho, s, 1e5, 1.0, 0.0, i++));
    }
    MleOptions o;
    o.bootstrap_replicas = 100;
    o.policy = policy_of(state);
    for (auto _ : state) benchmark::DoNotOptimize(mle_reconstruct(recs, std::nullopt, o));
    label(state);
}
BENCHMARK(BM_TomographyBootstrap)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_GenerateStreams(benchmark::State& state) {
    SourceConfig c;
    c.triplet_rate = 100.0;
    c.dark_rate = 2e4;
    StreamOptions o;
    o.policy = policy_of(state);
    const auto s = MeasurementSetting::parse("XXX");
    const auto rho = ghz_state().density();
    for (auto _ : state) benchmark::DoNotOptimize(generate_streams(c, rho, s, 50.0, 1, o));
    label(state);
}
BENCHMARK(BM_GenerateStreams)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_Coincidences(benchmark::State& state) {
    std::vector<TimestampStream> streams;
    for (int c = 0; c < 6; ++c) streams.push_back(poisson_stream(c, 1e5, 5.0, 10 + c));
    for (auto _ : state) benchmark::DoNotOptimize(find_coincidences(streams, 1e-9, 3));
    state.SetItemsProcessed(state.iterations() * 3'000'000);
}
BENCHMARK(BM_Coincidences)->Unit(benchmark::kMillisecond);

void BM_CoincidenceReference(benchmark::State& state) {
    std::vector<TimestampStream> streams;
    for (int c = 0; c < 6; ++c) streams.push_back(poisson_stream(c, 1e9 / 6, 1e-5, 10 + c));
    for (auto _ : state) benchmark::DoNotOptimize(find_coincidences_reference(streams, 500, 3));
}
BENCHMARK(BM_CoincidenceReference)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
