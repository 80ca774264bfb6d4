#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numeric>

#include "freespike/hermitian_eig.hpp"
#include "freespike/rmt_sim.hpp"
#include "models.hpp"
#include "test_util.hpp"

using namespace freespike;
using testing::kMpPolynomial;

namespace {

ModelSpec mp_spec(double theta, int N, std::uint64_t seed, Ensemble e = Ensemble::unitary_invariant) {
    ModelSpec s;
    s.P = parse(kMpPolynomial, 2);
    s.spikes = SpikeSet::make({theta}, s.mu);
    s.ensemble = e;
    s.N = N;
    s.seed = seed;
    return s;
}

ModelSpec additive_spec(double theta, int N, std::uint64_t seed) {
    ModelSpec s;
    s.P = parse("x + y", 2);
    s.spikes = SpikeSet::make({theta}, s.mu);
    s.N = N;
    s.seed = seed;
    return s;
}

const DensityProfile& mp_profile() {
    static const DensityProfile p = testing::model_density(testing::mp_model(), parse(kMpPolynomial, 2), 2001);
    return p;
}

const DensityProfile& additive_profile() {
    static const DensityProfile p = testing::model_density(testing::additive_model(), parse("x + y", 2), 2001);
    return p;
}

double normalized_trace_power(const CMatrix& m, int k) {
    CMatrix acc = m;
    for (int i = 1; i < k; ++i) acc = acc * m;
    return acc.trace().real() / static_cast<double>(m.rows());
}

}  // namespace

TEST_CASE("haar_unitary: unit scalar, orthonormality, first moment") {
    const CMatrix u1 = haar_unitary(1, 5);
    CHECK(std::abs(std::abs(u1(0, 0)) - 1.0) < 1e-14);
    const CMatrix u = haar_unitary(300, 7);
    CHECK(max_abs(u.adjoint() * u - CMatrix::Identity(300, 300)) <= 1e-12);

    // E|U_11|^2 = 1/N with Var|U_11|^2 = (N - 1) / (N^2 (N + 1)).
    const int N = 500, S = 200;
    double acc = 0.0;
    for (int s = 0; s < S; ++s) acc += std::norm(haar_unitary(N, 1000 + s)(0, 0));
    const double mean = acc / S;
    const double se = std::sqrt((N - 1.0) / (N * N * (N + 1.0)) / S);
    CHECK(std::abs(mean - 1.0 / N) <= 5.0 * se);
}

TEST_CASE("wigner: structure, entry variance and edge") {
    const CMatrix x = wigner(50, WignerLaw::gue, 3);
    CHECK(max_abs(x - x.adjoint()) == 0.0);
    for (int i = 0; i < 50; ++i) CHECK(x(i, i).imag() == 0.0);

    double sum = 0.0, sq = 0.0;
    const int draws = 10000;
    for (int s = 0; s < draws; ++s) {
        const double v = std::sqrt(2.0) * wigner(2, WignerLaw::gue, 50000 + s)(0, 1).real();
        sum += v;
        sq += v * v;
    }
    const double var = sq / draws - (sum / draws) * (sum / draws);
    CHECK(std::abs(var - 1.0) <= 0.05);

    const int N = 2000;
    const CMatrix g = wigner(N, WignerLaw::gue, 11) / std::sqrt(static_cast<double>(N));
    const auto ev = hermitian_eigenvalues(g);
    CHECK(std::max(std::abs(ev(0)), std::abs(ev(N - 1))) <= 2.2);

    const CMatrix r = wigner(N, WignerLaw::rademacher, 12) / std::sqrt(static_cast<double>(N));
    const auto er = hermitian_eigenvalues(r);
    CHECK(kolmogorov_distance(std::vector<double>(er.data(), er.data() + N), SpectralMeasure::semicircle(0, 1)) <= 0.05);
    for (int i = 0; i < 5; ++i) CHECK(std::abs(std::norm(r(i, (i + 1) % N)) * N - 1.0) < 1e-12);
}

TEST_CASE("build_A examples and errors") {
    ModelSpec s;
    s.spikes = SpikeSet::make({10.0}, s.mu);
    s.N = 4;
    CHECK(build_A(s) == std::vector<double>{10.0, 0.0, 0.0, 0.0});
    ModelSpec q;
    q.mu = SpectralMeasure::uniform(0, 1);
    q.N = 4;
    const auto d = build_A(q);
    const auto expected = quantiles(q.mu, 4);
    REQUIRE(d.size() == 4);
    for (int i = 0; i < 4; ++i) CHECK(d[i] == doctest::Approx(expected[i]));
    ModelSpec bad;
    bad.spikes.thetas = {0.0};
    bad.N = 4;
    CHECK_THROWS_AS(build_A(bad), DomainError);
}

TEST_CASE("run: determinism, hermiticity, eigenvalue count") {
    const auto model = testing::mp_model();
    const auto spec = mp_spec(10.0, 200, 9);
    const auto rep = testing::model_outliers(model, spec.P, mp_profile(), {10.0});
    const auto a = run(spec, mp_profile(), &rep);
    const auto b = run(spec, mp_profile(), &rep);
    CHECK(a.eigenvalues == b.eigenvalues);
    CHECK(a.empirical_outliers == b.empirical_outliers);
    CHECK((a.overlaps.array() == b.overlaps.array()).all());
    CHECK(a.eigenvalues.size() == 200);
    CHECK(std::is_sorted(a.eigenvalues.begin(), a.eigenvalues.end()));
    CHECK(a.hermiticity_error <= 1e-10);
    const auto w = run(mp_spec(10.0, 200, 9, Ensemble::wigner_rademacher), mp_profile(), &rep);
    CHECK(w.hermiticity_error <= 1e-10);
    CHECK(w.overlaps.size() == 0);
}

TEST_CASE("run: MP theta = 10 at N = 1000 has exactly two outliers; overlaps are bounded") {
    const auto model = testing::mp_model();
    const auto spec = mp_spec(10.0, 1000, 1);
    const auto rep = testing::model_outliers(model, spec.P, mp_profile(), {10.0});
    const auto r = run(spec, mp_profile(), &rep);
    CHECK(r.empirical_outliers.size() == 2);
    CHECK(r.ks_distance <= 0.06);
    REQUIRE(r.overlaps.cols() == static_cast<Eigen::Index>(rep.zeros.size()));
    for (Eigen::Index j = 0; j < r.overlaps.cols(); ++j) {
        CHECK(r.overlaps.col(j).sum() <= rep.zeros[static_cast<std::size_t>(j)].m + 0.1);
        for (Eigen::Index i = 0; i < r.overlaps.rows(); ++i) {
            CHECK(r.overlaps(i, j) >= 0.0);
            CHECK(r.overlaps(i, j) <= 1.0 + 1e-10);
        }
    }
}

TEST_CASE("run: MP theta = 1 has one negative outlier and none above 4") {
    const auto spec = mp_spec(1.0, 1000, 2);
    const auto rep = testing::model_outliers(testing::mp_model(), spec.P, mp_profile(), {1.0});
    const auto r = run(spec, mp_profile(), &rep);
    REQUIRE(r.empirical_outliers.size() == 1);
    CHECK(std::abs(r.empirical_outliers[0] - testing::mp_outlier(1.0, -1)) <= 0.15);
    CHECK(r.eigenvalues.back() < 4.0 + 0.15);
}

TEST_CASE("run: additive theta = 2 at N = 2000, outlier near 2.5 with overlap near 0.75") {
    const auto spec = additive_spec(2.0, 2000, 4);
    const auto rep = testing::model_outliers(testing::additive_model(), spec.P, additive_profile(), {2.0});
    const auto r = run(spec, additive_profile(), &rep);
    REQUIRE(r.empirical_outliers.size() == 1);
    CHECK(std::abs(r.empirical_outliers[0] - 2.5) <= 0.1);
    REQUIRE(r.overlaps.size() == 1);
    CHECK(std::abs(r.overlaps(0, 0) - 0.75) <= 0.05);
}

TEST_CASE("run: no spikes, no outliers") {
    ModelSpec s;
    s.P = parse("x + y", 2);
    s.mu = SpectralMeasure::semicircle(0, 1);
    s.N = 1000;
    const FreeModel model(linearize_selfadjoint(s.P), s.mu, s.nu);
    const auto prof = testing::model_density(model, s.P, 1201);
    const auto r = run(s, prof, nullptr);
    CHECK(r.empirical_outliers.empty());
    CHECK(r.ks_distance <= 0.06);
}

TEST_CASE("empirical_stieltjes") {
    CHECK(std::abs(empirical_stieltjes({0.0}, kI) - cplx(0, -1)) < 1e-15);
    const cplx z(1.0, 2.0);
    CHECK(std::abs(empirical_stieltjes(std::vector<double>(7, 0.5), z) - 1.0 / (z - 0.5)) < 1e-15);
    const auto spec = mp_spec(10.0, 2000, 3);
    ModelSpec bulk = spec;
    bulk.spikes = SpikeSet{};
    const auto r = run(bulk, mp_profile(), nullptr);
    const cplx w(5.0, 0.5);
    CHECK(std::abs(empirical_stieltjes(r.eigenvalues, w) - testing::mp_cauchy(w)) <= 5e-2);
    CHECK(std::abs(empirical_stieltjes(r.eigenvalues, w) - scalar_cauchy_of_P(testing::mp_model(), w)) <= 5e-2);
}

TEST_CASE("empirical_outliers: margin from edge spacing") {
    std::vector<double> e;
    for (int i = 0; i < 100; ++i) e.push_back(4.0 * i / 99.0);
    e.push_back(4.02);
    e.push_back(6.0);
    std::sort(e.begin(), e.end());
    std::vector<double> margins;
    const auto out = empirical_outliers(e, {{0.0, 4.0, false}}, 0.05, &margins);
    CHECK(out == std::vector<double>{6.0});
    REQUIRE(margins.size() == 2);
    CHECK(margins[1] >= 0.05);
}

TEST_CASE("unitary invariance: first three spectral moments of P(A, B) and P(A, V B V^*)") {
    const int N = 100, trials = 50;
    const auto P = parse(kMpPolynomial, 2);
    const CMatrix V = haar_unitary(N, 424242);
    std::vector<std::vector<double>> m1(3), m2(3);
    for (int t = 0; t < trials; ++t) {
        auto spec = mp_spec(3.0, N, 700 + static_cast<std::uint64_t>(t));
        spec.placement = BulkPlacement::iid;
        spec.mu = SpectralMeasure::uniform(-1, 1);
        spec.spikes = SpikeSet::make({3.0}, spec.mu);
        const auto a = build_A(spec);
        CMatrix A = CMatrix::Zero(N, N);
        for (int i = 0; i < N; ++i) A(i, i) = a[static_cast<std::size_t>(i)];
        const CMatrix B = build_Y(spec);
        const CMatrix VB = V * B * V.adjoint();
        const CMatrix M1 = evaluate(P, std::vector<CMatrix>{A, B});
        const CMatrix M2 = evaluate(P, std::vector<CMatrix>{A, VB});
        for (int k = 1; k <= 3; ++k) {
            m1[k - 1].push_back(normalized_trace_power(M1, k));
            m2[k - 1].push_back(normalized_trace_power(M2, k));
        }
    }
    for (int k = 0; k < 3; ++k) {
        auto stats = [&](const std::vector<double>& v) {
            const double mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
            double var = 0.0;
            for (double x : v) var += (x - mean) * (x - mean);
            return std::pair{mean, var / (v.size() - 1)};
        };
        const auto [a, va] = stats(m1[k]);
        const auto [b, vb] = stats(m2[k]);
        CAPTURE(k);
        CHECK(std::abs(a - b) <= 5.0 * std::sqrt((va + vb) / trials) + 1e-12);
    }
}

TEST_CASE("run_batch: seed order and agreement with run") {
    const auto spec = mp_spec(10.0, 150, 1);
    const auto rep = testing::model_outliers(testing::mp_model(), spec.P, mp_profile(), {10.0});
    const std::vector<std::uint64_t> seeds = {5, 3, 8};
    const auto batch = run_batch(spec, seeds, mp_profile(), &rep);
    REQUIRE(batch.size() == 3);
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        auto s = spec;
        s.seed = seeds[i];
        CHECK(batch[i].seed == seeds[i]);
        CHECK(batch[i].eigenvalues == run(s, mp_profile(), &rep).eigenvalues);
    }
}
