#include "freespike/ncpoly.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <sstream>

namespace freespike {

NCPolynomial::NCPolynomial(int arity) : arity_(arity) {
    if (arity < 1) throw SizeError("polynomial arity must be positive");
}

NCPolynomial NCPolynomial::constant(int arity, cplx c) {
    NCPolynomial p(arity);
    p.add_term({}, c);
    return p;
}

NCPolynomial NCPolynomial::variable(int arity, int index) {
    NCPolynomial p(arity);
    p.add_term({index}, 1.0);
    return p;
}

NCPolynomial NCPolynomial::monomial(int arity, Word word, cplx c) {
    NCPolynomial p(arity);
    p.add_term(word, c);
    return p;
}

int NCPolynomial::degree() const {
    if (terms_.empty()) return -1;
    return static_cast<int>(terms_.rbegin()->first.size());
}

std::vector<Monomial> NCPolynomial::monomials() const {
    std::vector<Monomial> out;
    out.reserve(terms_.size());
    for (const auto& [w, c] : terms_) out.push_back({c, w});
    return out;
}

cplx NCPolynomial::coefficient(const Word& w) const {
    auto it = terms_.find(w);
    return it == terms_.end() ? cplx{} : it->second;
}

void NCPolynomial::check_word(const Word& w) const {
    for (int idx : w) {
        if (idx < 0 || idx >= arity_) {
            throw SizeError("indeterminate index " + std::to_string(idx + 1) + " exceeds arity " +
                            std::to_string(arity_));
        }
    }
}

void NCPolynomial::add_term(const Word& w, cplx c) {
    check_word(w);
    auto [it, inserted] = terms_.try_emplace(w, c);
    if (!inserted) it->second += c;
    if (std::abs(it->second) < kDropThreshold) terms_.erase(it);
}

NCPolynomial& NCPolynomial::operator+=(const NCPolynomial& o) {
    if (o.arity_ != arity_) throw SizeError("arity mismatch in polynomial sum");
    for (const auto& [w, c] : o.terms_) add_term(w, c);
    return *this;
}

NCPolynomial& NCPolynomial::operator-=(const NCPolynomial& o) {
    if (o.arity_ != arity_) throw SizeError("arity mismatch in polynomial difference");
    for (const auto& [w, c] : o.terms_) add_term(w, -c);
    return *this;
}

NCPolynomial& NCPolynomial::operator*=(cplx s) {
    for (auto it = terms_.begin(); it != terms_.end();) {
        it->second *= s;
        if (std::abs(it->second) < kDropThreshold) {
            it = terms_.erase(it);
        } else {
            ++it;
        }
    }
    return *this;
}

NCPolynomial operator*(const NCPolynomial& a, const NCPolynomial& b) {
    if (a.arity_ != b.arity_) throw SizeError("arity mismatch in polynomial product");
    NCPolynomial out(a.arity_);
    for (const auto& [wa, ca] : a.terms_) {
        for (const auto& [wb, cb] : b.terms_) {
            Word w = wa;
            w.insert(w.end(), wb.begin(), wb.end());
            out.add_term(w, ca * cb);
        }
    }
    return out;
}

bool operator==(const NCPolynomial& a, const NCPolynomial& b) {
    return a.arity_ == b.arity_ && a.terms_ == b.terms_;
}

NCPolynomial adjoint(const NCPolynomial& p) {
    NCPolynomial out(p.arity());
    for (const auto& [w, c] : p.terms()) {
        Word r(w.rbegin(), w.rend());
        out.add_term(r, std::conj(c));
    }
    return out;
}

bool is_selfadjoint(const NCPolynomial& p, double tol) {
    const NCPolynomial q = adjoint(p);
    if (q.terms().size() != p.terms().size()) return false;
    for (const auto& [w, c] : p.terms()) {
        const cplx d = q.coefficient(w);
        if (std::abs(d - c) > tol * std::max(1.0, std::abs(c))) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------------------------
// Parser

namespace {

class Parser {
public:
    Parser(std::string_view text, int arity) : text_(text), arity_(arity) {}

    NCPolynomial run() {
        skip_ws();
        if (pos_ >= text_.size()) throw ParseError("empty expression", pos_);
        NCPolynomial p = expr();
        skip_ws();
        if (pos_ < text_.size()) throw ParseError(std::string("unexpected '") + text_[pos_] + "'", pos_);
        return p;
    }

private:
    void skip_ws() {
        while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    }

    bool accept(char c) {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    NCPolynomial expr() {
        NCPolynomial acc = term();
        for (;;) {
            if (accept('+')) {
                acc += term();
            } else if (accept('-')) {
                acc -= term();
            } else {
                return acc;
            }
        }
    }

    NCPolynomial term() {
        NCPolynomial acc = unary();
        for (;;) {
            skip_ws();
            const std::size_t at = pos_;
            if (accept('*')) {
                acc = acc * unary();
            } else if (accept('/')) {
                NCPolynomial d = unary();
                if (d.degree() > 0) throw ParseError("division by a non-constant", at);
                const cplx c = d.coefficient({});
                if (std::abs(c) == 0.0) throw ParseError("division by zero", at);
                acc *= 1.0 / c;
            } else {
                return acc;
            }
        }
    }

    NCPolynomial unary() {
        if (accept('-')) return unary() * cplx(-1.0);
        if (accept('+')) return unary();
        return postfix();
    }

    NCPolynomial postfix() {
        NCPolynomial base = primary();
        for (;;) {
            skip_ws();
            const std::size_t at = pos_;
            if (accept('\'')) {
                base = adjoint(base);
            } else if (accept('^')) {
                skip_ws();
                const std::size_t num_at = pos_;
                unsigned long e = 0;
                auto [ptr, ec] = std::from_chars(text_.data() + pos_, text_.data() + text_.size(), e);
                if (ec != std::errc() || ptr == text_.data() + pos_) {
                    throw ParseError("expected nonnegative integer exponent", num_at);
                }
                pos_ = static_cast<std::size_t>(ptr - text_.data());
                if (pos_ < text_.size() && (text_[pos_] == '.' || text_[pos_] == 'e')) {
                    throw ParseError("exponent must be an integer", num_at);
                }
                if (e > 64) throw ParseError("exponent too large", at);
                NCPolynomial r = NCPolynomial::constant(arity_, 1.0);
                for (unsigned long k = 0; k < e; ++k) r = r * base;
                base = std::move(r);
            } else {
                return base;
            }
        }
    }

    NCPolynomial primary() {
        skip_ws();
        if (pos_ >= text_.size()) throw ParseError("unexpected end of expression", pos_);
        const char c = text_[pos_];
        if (c == '(') {
            const std::size_t open = pos_;
            ++pos_;
            NCPolynomial inner = expr();
            if (!accept(')')) throw ParseError("unbalanced parenthesis opened", open);
            return inner;
        }
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return number();
        if (std::isalpha(static_cast<unsigned char>(c))) return identifier();
        throw ParseError(std::string("unexpected '") + c + "'", pos_);
    }

    NCPolynomial number() {
        const std::size_t start = pos_;
        double value = 0.0;
        auto [ptr, ec] = std::from_chars(text_.data() + pos_, text_.data() + text_.size(), value);
        if (ec != std::errc()) throw ParseError("malformed number", start);
        pos_ = static_cast<std::size_t>(ptr - text_.data());
        return NCPolynomial::constant(arity_, value);
    }

    NCPolynomial identifier() {
        const std::size_t start = pos_;
        std::string name;
        while (pos_ < text_.size() && std::isalnum(static_cast<unsigned char>(text_[pos_]))) {
            name += text_[pos_++];
        }
        if (name == "i") return NCPolynomial::constant(arity_, kI);
        int index = -1;
        if (name == "x") {
            index = 0;
        } else if (name == "y") {
            index = 1;
        } else if (name.size() > 1 && name[0] == 'x' &&
                   std::all_of(name.begin() + 1, name.end(), [](char ch) { return std::isdigit(static_cast<unsigned char>(ch)); })) {
            index = std::stoi(name.substr(1)) - 1;
            if (index < 0) throw ParseError("indeterminates are numbered from 1", start);
        } else {
            throw ParseError("unknown identifier '" + name + "'", start);
        }
        if (index >= arity_) {
            throw ParseError("indeterminate '" + name + "' exceeds arity " + std::to_string(arity_), start);
        }
        return NCPolynomial::variable(arity_, index);
    }

    std::string_view text_;
    int arity_;
    std::size_t pos_ = 0;
};

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    (void)ec;
    return std::string(buf, ptr);
}

std::string format_word(const Word& w) {
    std::string out;
    for (std::size_t i = 0; i < w.size();) {
        std::size_t j = i;
        while (j < w.size() && w[j] == w[i]) ++j;
        if (!out.empty()) out += '*';
        out += 'x' + std::to_string(w[i] + 1);
        if (j - i > 1) out += '^' + std::to_string(j - i);
        i = j;
    }
    return out;
}

}  // namespace

NCPolynomial parse(std::string_view text, int arity) {
    if (arity < 1) throw SizeError("polynomial arity must be positive");
    return Parser(text, arity).run();
}

std::string serialize(const NCPolynomial& p) {
    if (p.is_zero()) return "0";
    std::ostringstream out;
    bool first = true;
    for (const auto& [w, c] : p.terms()) {
        const bool real = c.imag() == 0.0;
        bool negative = real && std::signbit(c.real());
        std::string coef;
        if (real) {
            const double mag = std::abs(c.real());
            if (mag != 1.0 || w.empty()) coef = format_double(mag);
        } else {
            coef = "(" + format_double(c.real()) + (std::signbit(c.imag()) ? "-" : "+") +
                   format_double(std::abs(c.imag())) + "*i)";
        }
        if (first) {
            if (negative) out << '-';
        } else {
            out << (negative ? " - " : " + ");
        }
        first = false;
        const std::string word = format_word(w);
        if (!coef.empty()) {
            out << coef;
            if (!word.empty()) out << '*';
        }
        out << word;
    }
    return out.str();
}

// ---------------------------------------------------------------------------------------------
// Evaluation

namespace {

bool is_diagonal(const CMatrix& m) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            if (i != j && m(i, j) != cplx{}) return false;
        }
    }
    return true;
}

bool is_hermitian(const CMatrix& m) {
    const double scale = std::max(1.0, max_abs(m));
    return max_abs(m - m.adjoint()) <= 1e-12 * scale;
}

}  // namespace

CMatrix evaluate(const NCPolynomial& p, std::span<const CMatrix> args) {
    if (static_cast<int>(args.size()) != p.arity()) {
        throw SizeError("evaluate: expected " + std::to_string(p.arity()) + " matrices, got " +
                        std::to_string(args.size()));
    }
    const Eigen::Index n = args.empty() ? 0 : args[0].rows();
    for (const auto& a : args) {
        if (a.rows() != n || a.cols() != n) throw SizeError("evaluate: arguments must be square and of equal size");
    }
    std::vector<char> diag(args.size());
    for (std::size_t k = 0; k < args.size(); ++k) diag[k] = is_diagonal(args[k]);

    CMatrix out = CMatrix::Zero(n, n);
    CMatrix acc(n, n);
    for (const auto& [w, c] : p.terms()) {
        if (w.empty()) {
            out.diagonal().array() += c;
            continue;
        }
        bool acc_diag = diag[w[0]];
        acc = args[w[0]];
        for (std::size_t k = 1; k < w.size(); ++k) {
            const CMatrix& f = args[w[k]];
            if (diag[w[k]]) {
                acc = acc * f.diagonal().asDiagonal();
            } else if (acc_diag) {
                const CVector d = acc.diagonal();
                acc = d.asDiagonal() * f;
                acc_diag = false;
            } else {
                acc = acc * f;
            }
        }
        out += c * acc;
    }
    if (is_selfadjoint(p) && std::all_of(args.begin(), args.end(), is_hermitian)) {
        out = hermitian_part(out);
    }
    return out;
}

double norm_bound(const NCPolynomial& p, std::span<const double> radii) {
    if (static_cast<int>(radii.size()) != p.arity()) throw SizeError("norm_bound: radius count mismatch");
    double total = 0.0;
    for (const auto& [w, c] : p.terms()) {
        double term = std::abs(c);
        for (int idx : w) term *= radii[idx];
        total += term;
    }
    return total;
}

}  // namespace freespike
