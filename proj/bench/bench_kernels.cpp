// Serial reference path vs OpenMP path for the three data-parallel kernels.
// Run with OMP_NUM_THREADS set to the core count; on one core both paths should tie.

#include <benchmark/benchmark.h>

#include "freespike/linearize.hpp"
#include "freespike/rmt_sim.hpp"
#include "freespike/spectrum.hpp"

using namespace freespike;

namespace {

const char* kPolynomial = "x*y + y*x + y^2";

FreeModel mp_model() {
    return FreeModel(economical_mp_pencil(), SpectralMeasure::dirac(0.0), SpectralMeasure::semicircle(0.0, 1.0));
}

Exec exec_of(const benchmark::State& state) { return state.range(0) == 0 ? Exec::serial : Exec::parallel; }

const DensityProfile& profile() {
    static const DensityProfile p = [] {
        const auto model = mp_model();
        return density(model, default_grid(4.0, 801));
    }();
    return p;
}

const OutlierReport& report() {
    static const OutlierReport r = [] {
        const auto model = mp_model();
        const auto P = parse(kPolynomial, 2);
        const auto spikes = SpikeSet::make({10.0}, model.mu());
        const auto iv = search_intervals(profile().support_intervals,
                                         outlier_search_radius(P, model.mu(), model.nu(), spikes), 1e-2);
        return detect(model, spikes, iv, profile().support_intervals);
    }();
    return r;
}

void BM_density_grid(benchmark::State& state) {
    const auto model = mp_model();
    DensityOptions o;
    o.exec = exec_of(state);
    o.refine_edges = false;
    const auto grid = default_grid(4.0, 401);
    for (auto _ : state) benchmark::DoNotOptimize(density(model, grid, o));
    state.SetLabel(state.range(0) == 0 ? "serial" : "parallel");
}

void BM_outlier_scan(benchmark::State& state) {
    const auto model = mp_model();
    const auto P = parse(kPolynomial, 2);
    const auto spikes = SpikeSet::make({10.0}, model.mu());
    DetectOptions o;
    o.exec = exec_of(state);
    const auto iv = search_intervals(profile().support_intervals,
                                     outlier_search_radius(P, model.mu(), model.nu(), spikes), o.delta_min);
    for (auto _ : state) benchmark::DoNotOptimize(detect(model, spikes, iv, profile().support_intervals, o));
    state.SetLabel(state.range(0) == 0 ? "serial" : "parallel");
}

void BM_monte_carlo_batch(benchmark::State& state) {
    ModelSpec spec;
    spec.P = parse(kPolynomial, 2);
    spec.spikes = SpikeSet::make({10.0}, spec.mu);
    spec.N = 300;
    const std::vector<std::uint64_t> seeds = {1, 2, 3, 4};
    const DensityProfile& prof = profile();
    const OutlierReport& rep = report();
    for (auto _ : state) benchmark::DoNotOptimize(run_batch(spec, seeds, prof, &rep, {}, exec_of(state)));
    state.SetLabel(state.range(0) == 0 ? "serial" : "parallel");
}

}  // namespace

BENCHMARK(BM_density_grid)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_outlier_scan)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_monte_carlo_batch)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
