#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "freespike/common.hpp"

namespace freespike {

/// Ordered list of 0-based indeterminate indices; the empty word is the constant term.
using Word = std::vector<int>;

/// Canonical monomial order: shorter words first, then lexicographic.
struct WordOrder {
    bool operator()(const Word& a, const Word& b) const {
        if (a.size() != b.size()) return a.size() < b.size();
        return a < b;
    }
};

struct Monomial {
    cplx coefficient;
    Word word;
};

/// Element of C<X_1,...,X_k>, the algebra of polynomials in k noncommuting selfadjoint
/// indeterminates. Terms with |coefficient| < kDropThreshold are removed after every operation.
class NCPolynomial {
public:
    static constexpr double kDropThreshold = 1e-14;
    using TermMap = std::map<Word, cplx, WordOrder>;

    explicit NCPolynomial(int arity);

    static NCPolynomial constant(int arity, cplx c);
    /// X_{index+1}, with 0-based index.
    static NCPolynomial variable(int arity, int index);
    static NCPolynomial monomial(int arity, Word word, cplx c);

    int arity() const { return arity_; }
    /// Maximal word length; -1 for the zero polynomial.
    int degree() const;
    bool is_zero() const { return terms_.empty(); }
    const TermMap& terms() const { return terms_; }
    std::vector<Monomial> monomials() const;
    cplx coefficient(const Word& w) const;

    void add_term(const Word& w, cplx c);

    NCPolynomial& operator+=(const NCPolynomial& o);
    NCPolynomial& operator-=(const NCPolynomial& o);
    NCPolynomial& operator*=(cplx s);

    friend NCPolynomial operator+(NCPolynomial a, const NCPolynomial& b) { return a += b; }
    friend NCPolynomial operator-(NCPolynomial a, const NCPolynomial& b) { return a -= b; }
    friend NCPolynomial operator*(NCPolynomial a, cplx s) { return a *= s; }
    friend NCPolynomial operator*(cplx s, NCPolynomial a) { return a *= s; }
    friend NCPolynomial operator*(const NCPolynomial& a, const NCPolynomial& b);
    friend bool operator==(const NCPolynomial& a, const NCPolynomial& b);

private:
    void check_word(const Word& w) const;

    int arity_;
    TermMap terms_;
};

/// Parses an expression such as "x*y + y*x + y^2".
///
/// Grammar: identifiers x1..xk (or x, y for the first two indeterminates), `i` for the
/// imaginary unit, decimal numbers, binary `+ - * /` (division by constants only), `^` with a
/// nonnegative integer exponent, postfix `'` for the adjoint, parentheses.
/// Throws ParseError carrying the offending position.
NCPolynomial parse(std::string_view text, int arity);

/// Canonical text form, parseable by `parse` with the same arity. Terms appear in WordOrder.
std::string serialize(const NCPolynomial& p);

/// (a X_{i1}...X_{in})^* = conj(a) X_{in}...X_{i1}, extended additively.
NCPolynomial adjoint(const NCPolynomial& p);

bool is_selfadjoint(const NCPolynomial& p, double tol = 1e-12);

/// Substitutes square matrices for the indeterminates. If p is selfadjoint and all arguments
/// are Hermitian the result is hermitized.
CMatrix evaluate(const NCPolynomial& p, std::span<const CMatrix> args);

/// Upper bound on ||p(a_1,...,a_k)|| from the norm radii of the arguments.
double norm_bound(const NCPolynomial& p, std::span<const double> radii);

}  // namespace freespike
