#pragma once

#include <random>

#include "freespike/common.hpp"
#include "freespike/ncpoly.hpp"

namespace freespike::testing {

inline CMatrix random_hermitian(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    CMatrix m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double re = g(rng);
            const double im = g(rng);
            m(i, j) = cplx(re, im);
        }
    return 0.5 * (m + m.adjoint());
}

/// Up to six monomials of degree <= max_degree with complex Gaussian coefficients.
inline NCPolynomial random_polynomial(int arity, int max_degree, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_int_distribution<int> len(0, max_degree), var(0, arity - 1), count(1, 6);
    NCPolynomial p(arity);
    const int terms = count(rng);
    for (int t = 0; t < terms; ++t) {
        Word w(len(rng));
        for (auto& x : w) x = var(rng);
        const double re = g(rng);
        const double im = g(rng);
        p.add_term(w, cplx(re, im));
    }
    return p;
}

/// Selfadjoint random polynomial q + q^* with at least one monomial of degree max_degree.
inline NCPolynomial random_selfadjoint(int arity, int max_degree, std::mt19937_64& rng) {
    auto q = random_polynomial(arity, max_degree, rng);
    Word top(max_degree);
    std::uniform_int_distribution<int> var(0, arity - 1);
    for (auto& x : top) x = var(rng);
    q.add_term(top, cplx(1.0, 0.5));
    return q + adjoint(q);
}

// Ratio-1 Marchenko-Pastur law, the law of s^2 for a standard semicircular s.
inline double mp_density(double x) { return (x > 0.0 && x < 4.0) ? std::sqrt((4.0 - x) * x) / (2.0 * M_PI * x) : 0.0; }

inline cplx mp_cauchy(cplx z) {
    // G(z) = (z - sqrt(z^2 - 4z)) / (2z) with the branch making G ~ 1/z at infinity.
    cplx r = std::sqrt(z * z - 4.0 * z);
    if (std::real(std::conj(r) * (z - 2.0)) < 0.0) r = -r;
    return (z - r) / (2.0 * z);
}

inline cplx semicircle_cauchy(cplx z, double mean = 0.0, double variance = 1.0) {
    const cplx w = z - mean;
    cplx r = std::sqrt(w * w - 4.0 * variance);
    if (std::real(std::conj(r) * w) < 0.0) r = -r;
    return (w - r) / (2.0 * variance);
}

/// Real roots 2 theta^4 / (-(3 theta^2 + 1) +- sqrt(4 theta^2 + 1) (theta^2 + 1)).
inline double mp_outlier(double theta, int sign) {
    const double t2 = theta * theta;
    return 2.0 * t2 * t2 / (-(3.0 * t2 + 1.0) + sign * std::sqrt(4.0 * t2 + 1.0) * (t2 + 1.0));
}

}  // namespace freespike::testing
