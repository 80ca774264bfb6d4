#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "freespike/common.hpp"
#include "freespike/ncpoly.hpp"
#include "freespike/parallel.hpp"

namespace freespike {

/// Linear pencil L = gamma_0 (x) 1 + gamma_1 (x) X_1 + ... + gamma_k (x) X_k written in block
/// form [[c, u], [v, Q]]. The (1,1) entry collects the affine part of the polynomial; for pure
/// higher-degree inputs it is zero. No selfadjointness is assumed.
struct GeneralPencil {
    std::vector<CMatrix> gamma;  // k + 1 matrices, gamma[0] is the constant coefficient

    int size() const { return gamma.empty() ? 0 : static_cast<int>(gamma[0].rows()); }
    int arity() const { return static_cast<int>(gamma.size()) - 1; }
};

enum class Provenance { constructed, user_supplied };

/// Selfadjoint linearization of a selfadjoint polynomial; all gamma_j are Hermitian.
struct LinearizationPencil {
    std::vector<CMatrix> gamma;
    Provenance provenance = Provenance::constructed;

    int size() const { return gamma.empty() ? 0 : static_cast<int>(gamma[0].rows()); }
    int arity() const { return static_cast<int>(gamma.size()) - 1; }
};

/// Pencil of c * X_{w1} ... X_{wl}. For l <= 1 the pencil has size 1 and equals the monomial.
GeneralPencil linearize_monomial(int arity, const Word& word, cplx coeff);

/// Block sum [[c1 + c2, u1, u2], [v1, Q1, 0], [v2, 0, Q2]] of size n1 + n2 - 1.
GeneralPencil linearize_sum(const GeneralPencil& p1, const GeneralPencil& p2);

/// Left fold of linearize_sum over the monomials of p (in canonical order).
GeneralPencil linearize_general(const NCPolynomial& p);

/// Splits p into its affine part plus P0 + P0^* and builds
/// [[c, u0, v0^*], [u0^*, 0, Q0^*], [v0, Q0, 0]]. Throws DomainError if p is not selfadjoint.
LinearizationPencil linearize_selfadjoint(const NCPolynomial& p);

/// Polynomial P0 with P = affine(P) + P0 + P0^* used by linearize_selfadjoint.
NCPolynomial selfadjoint_half(const NCPolynomial& p);

/// Wraps externally supplied coefficient matrices. Throws DomainError on non-Hermitian or
/// non-square input.
LinearizationPencil adopt_pencil(std::vector<CMatrix> gammas);

/// L(S) = sum_j gamma_j (x) S_j with S_0 = I; block (i, j) of the result is the N x N matrix
/// sum_k gamma_k(i, j) S_k.
CMatrix evaluate_pencil(std::span<const CMatrix> gamma, std::span<const CMatrix> args);

/// z e11 (x) I_N - L(S).
CMatrix pencil_resolvent_argument(std::span<const CMatrix> gamma, std::span<const CMatrix> args, cplx z);

struct CertifyOptions {
    int trials = 20;
    int size = 4;
    std::uint64_t seed = 12345;
    double det_tolerance = 1e-8;
    double kernel_threshold = 1e-8;
    int kernel_points = 2;  // real eigenvalues of P(S) probed per trial
    Exec exec = Exec::parallel;
};

struct CertificationFailure {
    std::string identity;  // "determinant", "sign", "kernel", "q_structure"
    int trial = 0;
    std::string detail;
};

struct CertificationReport {
    bool passed = false;
    int trials = 0;
    int size = 0;
    int pencil_size = 0;
    Provenance provenance = Provenance::constructed;
    double max_det_relative_error = 0.0;
    bool sign_checked = false;    // det(-Q(S)) in {-1, +1} and equal to the determinant ratio
    bool q_structure_checked = false;
    std::vector<CertificationFailure> failures;
};

/// Verifies over random Hermitian tuples S and random z that
///   det(z e11 (x) I - L(S)) = s * det(z I - P(S)),  s in {-1, +1},
/// that the kernel dimensions agree at real eigenvalues of P(S), and (constructed pencils only)
/// that s = det(-Q(S)) and Q(0) Q(S)^{-1} - I is nilpotent, i.e. Q(S)^{-1} is a permutation
/// times a unipotent triangular matrix.
CertificationReport certify_pencil(const LinearizationPencil& pencil, const NCPolynomial& p,
                                   const CertifyOptions& options = {});

/// Determinant identity only, for intermediate non-selfadjoint pencils (random general
/// complex matrices are used as arguments).
CertificationReport certify_general_pencil(const GeneralPencil& pencil, const NCPolynomial& p,
                                           const CertifyOptions& options = {});

/// Pencil document (JSON): {"n", "k", "provenance", "gamma": [[[re, im], ...] row-major]}.
/// Doubles are written in shortest round-trip form, so write -> read is bit-exact.
void write_pencil(std::ostream& out, const LinearizationPencil& pencil, const std::string& config_hash = {});
LinearizationPencil read_pencil(std::istream& in);
LinearizationPencil pencil_from_json_text(const std::string& text);
std::string pencil_to_json_text(const LinearizationPencil& pencil, const std::string& config_hash = {});

/// The 3 x 3 selfadjoint linearization of x1*x2 + x2*x1 + x2^2 with gamma_0 = -(e23 + e32),
/// gamma_1 = e13 + e31, gamma_2 = e12 + e21 + (e13 + e31)/2.
LinearizationPencil economical_mp_pencil();

}  // namespace freespike
