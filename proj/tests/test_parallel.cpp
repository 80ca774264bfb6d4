#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>

#include "freespike/rmt_sim.hpp"
#include "models.hpp"

using namespace freespike;
using testing::kMpPolynomial;

// Four threads even on a single core, so the parallel path interleaves.
struct Threads {
    Threads() { set_threads(4); }
};
static Threads threads_guard;

TEST_CASE("for_each_index: every index once, first exception rethrown") {
    std::vector<std::atomic<int>> hits(1000);
    for_each_index(hits.size(), Exec::parallel, [&](std::size_t i) { hits[i]++; });
    for (const auto& h : hits) CHECK(h.load() == 1);
    CHECK_THROWS_AS(for_each_index(100, Exec::parallel,
                                   [](std::size_t i) {
                                       if (i == 37) throw DomainError("boom");
                                   }),
                    DomainError);
}

TEST_CASE("density: serial and parallel paths are bit identical") {
    const auto model = testing::mp_model();
    const auto p = parse(kMpPolynomial, 2);
    const auto a = testing::model_density(model, p, 801, Exec::serial);
    const auto b = testing::model_density(model, p, 801, Exec::parallel);
    CHECK(a.grid == b.grid);
    CHECK(a.density == b.density);
    REQUIRE(a.support_intervals.size() == b.support_intervals.size());
    for (std::size_t i = 0; i < a.support_intervals.size(); ++i) {
        CHECK(a.support_intervals[i].lo == b.support_intervals[i].lo);
        CHECK(a.support_intervals[i].hi == b.support_intervals[i].hi);
    }
}

TEST_CASE("detect: serial and parallel paths are bit identical") {
    const auto model = testing::mp_model();
    const auto p = parse(kMpPolynomial, 2);
    const auto prof = testing::model_density(model, p, 801);
    const auto a = testing::model_outliers(model, p, prof, {10.0, 2.0}, Criterion::regularized, Exec::serial);
    const auto b = testing::model_outliers(model, p, prof, {10.0, 2.0}, Criterion::regularized, Exec::parallel);
    REQUIRE(a.scan.size() == b.scan.size());
    for (std::size_t i = 0; i < a.scan.size(); ++i) {
        CHECK(a.scan[i].H == b.scan[i].H);
        CHECK(a.scan[i].D == b.scan[i].D);
    }
    REQUIRE(a.zeros.size() == b.zeros.size());
    for (std::size_t i = 0; i < a.zeros.size(); ++i) {
        CHECK(a.zeros[i].t == b.zeros[i].t);
        CHECK(a.zeros[i].residues == b.zeros[i].residues);
        CHECK(a.zeros[i].m_per_spike == b.zeros[i].m_per_spike);
    }
}

TEST_CASE("run_batch: serial and parallel paths are bit identical") {
    const auto model = testing::mp_model();
    ModelSpec spec;
    spec.P = parse(kMpPolynomial, 2);
    spec.spikes = SpikeSet::make({10.0}, spec.mu);
    spec.N = 120;
    const auto prof = testing::model_density(model, spec.P, 801);
    const auto rep = testing::model_outliers(model, spec.P, prof, {10.0});
    const std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5, 6};
    const auto a = run_batch(spec, seeds, prof, &rep, {}, Exec::serial);
    const auto b = run_batch(spec, seeds, prof, &rep, {}, Exec::parallel);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].eigenvalues == b[i].eigenvalues);
        CHECK((a[i].overlaps.array() == b[i].overlaps.array()).all());
        CHECK(a[i].ks_distance == b[i].ks_distance);
    }
}
