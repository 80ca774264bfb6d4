#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>
#include <sstream>

#include "models.hpp"
#include "test_util.hpp"

using namespace freespike;
using testing::kMpPolynomial;

namespace {

double semicircle_density(double x, double variance) {
    const double r2 = 4.0 * variance;
    return x * x < r2 ? std::sqrt(r2 - x * x) / (2.0 * M_PI * variance) : 0.0;
}

// Trapezoid L1 distance on [lo, hi] between the profile and `oracle`, on a fine uniform grid.
template <class F>
double l1_distance(const DensityProfile& p, F&& oracle, double lo, double hi, int K = 20000) {
    const double h = (hi - lo) / K;
    double acc = 0.0;
    for (int k = 0; k <= K; ++k) {
        const double x = lo + k * h;
        acc += (k == 0 || k == K ? 0.5 : 1.0) * std::abs(p.at(x) - oracle(x)) * h;
    }
    return acc;
}

const DensityProfile& mp_profile() {
    static const DensityProfile p = testing::model_density(testing::mp_model(), parse(kMpPolynomial, 2));
    return p;
}

}  // namespace

TEST_CASE("spectral_radius_bound and default_grid") {
    const auto p = parse(kMpPolynomial, 2);
    CHECK(spectral_radius_bound(p, SpectralMeasure::dirac(0.0), SpectralMeasure::semicircle(0, 1)) == doctest::Approx(4.0));
    CHECK(spectral_radius_bound(p, SpectralMeasure::uniform(-1, 1), SpectralMeasure::semicircle(0, 1)) ==
          doctest::Approx(8.0));
    const auto g = default_grid(2.0, 5, 1.5);
    REQUIRE(g.size() == 5);
    CHECK(g.front() == doctest::Approx(-3.0));
    CHECK(g.back() == doctest::Approx(3.0));
    CHECK(g[2] == doctest::Approx(0.0));
}

TEST_CASE("scalar_cauchy_of_P: MP closed form and the quadratic identity z G^2 - z G + 1 = 0") {
    const auto model = testing::mp_model();
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> re(-2.0, 7.0), im(0.05, 2.0);
    for (int t = 0; t < 20; ++t) {
        const cplx z(re(rng), im(rng));
        const cplx G = scalar_cauchy_of_P(model, z);
        CHECK(std::abs(G - testing::mp_cauchy(z)) < 1e-9);
        CHECK(std::abs(z * G * G - z * G + 1.0) < 1e-9);
    }
}

TEST_CASE("density: MP law of the worked example") {
    const auto& p = mp_profile();
    CHECK(l1_distance(p, testing::mp_density, 0.05, 3.95) <= 1e-3);
    CHECK(std::abs(p.mass() - 1.0) <= 1e-3);
    REQUIRE(p.support_intervals.size() == 1);
    const double step = p.grid[1] - p.grid[0];
    CHECK(std::abs(p.support_intervals[0].lo - 0.0) <= 2.0 * step);
    CHECK(std::abs(p.support_intervals[0].hi - 4.0) <= 2.0 * step);
    CHECK(p.atoms.empty());
    for (double x : {-1.0, 4.5, 6.0}) CHECK(p.at(x) < 1e-10);
}

TEST_CASE("density: free additive convolution of two standard semicircles") {
    const auto model = testing::additive_model(SpectralMeasure::semicircle(0, 1));
    const auto p = testing::model_density(model, parse("x + y", 2), 2001);
    CHECK(l1_distance(p, [](double x) { return semicircle_density(x, 2.0); }, -3.2, 3.2) <= 1e-3);
    CHECK(std::abs(p.mass() - 1.0) <= 1e-3);
    REQUIRE(p.support_intervals.size() == 1);
    const double step = p.grid[1] - p.grid[0];
    CHECK(std::abs(p.support_intervals[0].hi - 2.0 * std::sqrt(2.0)) <= 2.0 * step);
}

TEST_CASE("density: atom detection for P = x with an atomic part") {
    auto piece = SpectralMeasure::uniform(0.0, 1.0).pieces()[0];
    piece.weight = 0.3;
    const auto mu = SpectralMeasure::mixture({{-2.0, 0.7}}, {piece});
    const FreeModel model(linearize_selfadjoint(parse("x", 2)), mu, SpectralMeasure::semicircle(0, 1));
    const auto p = testing::model_density(model, parse("x", 2), 1201);
    REQUIRE(p.atoms.size() == 1);
    CHECK(std::abs(p.atoms[0].location + 2.0) <= p.grid[1] - p.grid[0]);
    CHECK(std::abs(p.atoms[0].mass - 0.7) <= 0.05);
    CHECK(std::abs(p.at(0.5) - 0.3) <= 1e-2);
    CHECK(std::abs(p.mass() - 1.0) <= 0.05);
    bool atomic_interval = false;
    for (const auto& iv : p.support_intervals) atomic_interval = atomic_interval || (iv.atomic && iv.contains(-2.0));
    CHECK(atomic_interval);
}

TEST_CASE("density: delta_0 with P = x is a single atom flagged atomic") {
    const FreeModel model(linearize_selfadjoint(parse("x", 2)), SpectralMeasure::dirac(0.0), SpectralMeasure::semicircle(0, 1));
    const auto p = density(model, default_grid(1.0, 401));
    REQUIRE(p.atoms.size() == 1);
    CHECK(std::abs(p.atoms[0].location) < 1e-12);
    CHECK(std::abs(p.atoms[0].mass - 1.0) <= 0.05);
    REQUIRE(p.support_intervals.size() == 1);
    CHECK(p.support_intervals[0].atomic);
    CHECK(p.support_intervals[0].length() <= 2.5 * (p.grid[1] - p.grid[0]));
}

TEST_CASE("DensityProfile: cdf and interpolation") {
    DensityProfile p;
    p.grid = {0.0, 1.0, 2.0};
    p.density = {0.0, 1.0, 0.0};
    p.atoms = {{5.0, 0.25}};
    CHECK(p.mass() == doctest::Approx(1.25));
    CHECK(p.at(0.5) == doctest::Approx(0.5));
    CHECK(p.at(-1.0) == 0.0);
    CHECK(p.cdf(1.0) == doctest::Approx(0.5));
    CHECK(p.cdf(6.0) == doctest::Approx(1.25));
}

TEST_CASE("support: runs above the threshold are padded by one grid step") {
    DensityProfile p;
    p.grid = {0, 1, 2, 3, 4, 5, 6};
    p.density = {0, 0, 1, 1, 0, 1, 0};
    const auto s = support(p, 0.5);
    REQUIRE(s.size() == 1);  // [1,4] and [4,6] touch and merge
    CHECK(s[0].lo == 1.0);
    CHECK(s[0].hi == 6.0);
    p.density = {0, 1, 0, 0, 0, 1, 0};
    CHECK(support(p, 0.5).size() == 2);
}

TEST_CASE("profile CSV round trip") {
    const auto& p = mp_profile();
    std::stringstream ss;
    write_profile(ss, p, "config_hash,abc");
    const auto r = read_profile(ss);
    REQUIRE(r.grid.size() == p.grid.size());
    CHECK(r.grid == p.grid);
    CHECK(r.density == p.density);
    REQUIRE(r.support_intervals.size() == p.support_intervals.size());
    CHECK(r.support_intervals[0].lo == p.support_intervals[0].lo);
    CHECK(r.support_intervals[0].hi == p.support_intervals[0].hi);
}
