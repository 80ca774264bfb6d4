#include "freespike/linearize.hpp"

#include <istream>
#include <ostream>
#include <random>
#include <sstream>

#include <json.hpp>

namespace freespike {

namespace {

std::vector<CMatrix> zero_gammas(int arity, int n) {
    return std::vector<CMatrix>(static_cast<std::size_t>(arity) + 1, CMatrix::Zero(n, n));
}

bool hermitian(const CMatrix& m) { return (m - m.adjoint()).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, max_abs(m)); }

}  // namespace

GeneralPencil linearize_monomial(int arity, const Word& word, cplx coeff) {
    const int len = static_cast<int>(word.size());
    GeneralPencil out;
    if (len <= 1) {
        out.gamma = zero_gammas(arity, 1);
        const int slot = len == 0 ? 0 : word[0] + 1;
        out.gamma[slot](0, 0) = coeff;
        return out;
    }
    // Anti-diagonal form: row 0 carries coeff * X_{w1} in the last column; row r >= 1 carries
    // -X_{w(r+1)} on the anti-diagonal and +1 just right of it. The Q block then satisfies
    // u Q^{-1} v = -P, so the Schur complement of z e11 - L is z - P.
    out.gamma = zero_gammas(arity, len);
    out.gamma[word[0] + 1](0, len - 1) = coeff;
    for (int r = 1; r < len; ++r) {
        out.gamma[word[r] + 1](r, len - 1 - r) = -1.0;
        out.gamma[0](r, len - r) = 1.0;
    }
    return out;
}

GeneralPencil linearize_sum(const GeneralPencil& p1, const GeneralPencil& p2) {
    if (p1.arity() != p2.arity()) throw SizeError("linearize_sum: arity mismatch");
    const int n1 = p1.size();
    const int n2 = p2.size();
    const int n = n1 + n2 - 1;
    GeneralPencil out;
    out.gamma = zero_gammas(p1.arity(), n);
    for (std::size_t j = 0; j < out.gamma.size(); ++j) {
        CMatrix& g = out.gamma[j];
        const CMatrix& a = p1.gamma[j];
        const CMatrix& b = p2.gamma[j];
        g(0, 0) = a(0, 0) + b(0, 0);
        if (n1 > 1) {
            g.block(0, 1, 1, n1 - 1) = a.block(0, 1, 1, n1 - 1);
            g.block(1, 0, n1 - 1, 1) = a.block(1, 0, n1 - 1, 1);
            g.block(1, 1, n1 - 1, n1 - 1) = a.block(1, 1, n1 - 1, n1 - 1);
        }
        if (n2 > 1) {
            g.block(0, n1, 1, n2 - 1) = b.block(0, 1, 1, n2 - 1);
            g.block(n1, 0, n2 - 1, 1) = b.block(1, 0, n2 - 1, 1);
            g.block(n1, n1, n2 - 1, n2 - 1) = b.block(1, 1, n2 - 1, n2 - 1);
        }
    }
    return out;
}

GeneralPencil linearize_general(const NCPolynomial& p) {
    GeneralPencil acc;
    acc.gamma = zero_gammas(p.arity(), 1);
    for (const auto& [w, c] : p.terms()) acc = linearize_sum(acc, linearize_monomial(p.arity(), w, c));
    return acc;
}

NCPolynomial selfadjoint_half(const NCPolynomial& p) {
    NCPolynomial half(p.arity());
    for (const auto& [w, c] : p.terms()) {
        if (w.size() <= 1) continue;
        const Word r(w.rbegin(), w.rend());
        if (w < r) {
            half.add_term(w, c);
        } else if (w == r) {
            half.add_term(w, 0.5 * c);
        }
    }
    return half;
}

LinearizationPencil linearize_selfadjoint(const NCPolynomial& p) {
    if (!is_selfadjoint(p)) throw DomainError("linearize_selfadjoint: polynomial is not selfadjoint");
    const int k = p.arity();

    // Affine part enters the (1,1) entry directly. Selfadjointness makes its coefficients real.
    std::vector<cplx> affine(static_cast<std::size_t>(k) + 1, cplx{});
    for (const auto& [w, c] : p.terms()) {
        if (w.empty()) affine[0] = c.real();
        if (w.size() == 1) affine[w[0] + 1] = c.real();
    }

    const NCPolynomial half = selfadjoint_half(p);
    LinearizationPencil out;
    out.provenance = Provenance::constructed;
    if (half.is_zero()) {
        out.gamma = zero_gammas(k, 1);
        for (int j = 0; j <= k; ++j) out.gamma[j](0, 0) = affine[j];
        return out;
    }

    const GeneralPencil base = linearize_general(half);
    const int n0 = base.size();
    const int m = n0 - 1;
    const int n = 2 * n0 - 1;
    out.gamma = zero_gammas(k, n);
    for (int j = 0; j <= k; ++j) {
        const CMatrix& g0 = base.gamma[j];
        CMatrix& g = out.gamma[j];
        const auto u0 = g0.block(0, 1, 1, m);
        const auto v0 = g0.block(1, 0, m, 1);
        const auto q0 = g0.block(1, 1, m, m);
        g(0, 0) = affine[j];
        g.block(0, 1, 1, m) = u0;
        g.block(0, 1 + m, 1, m) = v0.adjoint();
        g.block(1, 0, m, 1) = u0.adjoint();
        g.block(1 + m, 0, m, 1) = v0;
        g.block(1, 1 + m, m, m) = q0.adjoint();
        g.block(1 + m, 1, m, m) = q0;
    }
    return out;
}

LinearizationPencil adopt_pencil(std::vector<CMatrix> gammas) {
    if (gammas.size() < 2) throw SizeError("adopt_pencil: need gamma_0 and at least one more coefficient");
    const auto n = gammas[0].rows();
    for (const auto& g : gammas) {
        if (g.rows() != n || g.cols() != n) throw SizeError("adopt_pencil: coefficients must be square of equal size");
        if (!hermitian(g)) throw DomainError("adopt_pencil: coefficient matrices must be Hermitian");
    }
    LinearizationPencil out;
    out.gamma = std::move(gammas);
    out.provenance = Provenance::user_supplied;
    return out;
}

CMatrix evaluate_pencil(std::span<const CMatrix> gamma, std::span<const CMatrix> args) {
    if (gamma.size() != args.size() + 1) throw SizeError("evaluate_pencil: argument count mismatch");
    const Eigen::Index n = gamma[0].rows();
    const Eigen::Index N = args.empty() ? 1 : args[0].rows();
    CMatrix out = CMatrix::Zero(n * N, n * N);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            auto block = out.block(i * N, j * N, N, N);
            if (gamma[0](i, j) != cplx{}) block.diagonal().array() += gamma[0](i, j);
            for (std::size_t k = 0; k < args.size(); ++k) {
                const cplx c = gamma[k + 1](i, j);
                if (c != cplx{}) block += c * args[k];
            }
        }
    }
    return out;
}

CMatrix pencil_resolvent_argument(std::span<const CMatrix> gamma, std::span<const CMatrix> args, cplx z) {
    CMatrix m = -evaluate_pencil(gamma, args);
    const Eigen::Index N = args.empty() ? 1 : args[0].rows();
    m.topLeftCorner(N, N).diagonal().array() += z;
    return m;
}

// ---------------------------------------------------------------------------------------------
// Certification

namespace {

CMatrix random_hermitian(int N, std::mt19937_64& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    CMatrix h(N, N);
    for (int j = 0; j < N; ++j) {
        h(j, j) = g(rng);
        for (int i = 0; i < j; ++i) {
            const cplx v(g(rng) / std::sqrt(2.0), g(rng) / std::sqrt(2.0));
            h(i, j) = v;
            h(j, i) = std::conj(v);
        }
    }
    return h / std::sqrt(static_cast<double>(N));
}

int numerical_kernel_dim(const CMatrix& m, double threshold) {
    Eigen::JacobiSVD<CMatrix> svd(m);
    const auto& s = svd.singularValues();
    const double cut = threshold * std::max(1.0, s(0));
    int k = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i) k += s(i) < cut ? 1 : 0;
    return k;
}

bool is_permutation(const CMatrix& m) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        int ones = 0;
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (m(i, j) == cplx(1.0)) {
                ++ones;
            } else if (m(i, j) != cplx{}) {
                return false;
            }
        }
        if (ones != 1) return false;
    }
    return true;
}

struct TrialOutcome {
    double det_error = 0.0;
    std::vector<CertificationFailure> failures;
};

TrialOutcome run_trial(std::span<const CMatrix> gamma, Provenance provenance, bool selfadjoint,
                       const NCPolynomial& p, const CertifyOptions& opt, int trial) {
    TrialOutcome out;
    std::mt19937_64 rng(opt.seed ^ (0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(trial + 1)));
    const int N = opt.size;
    const int n = static_cast<int>(gamma[0].rows());
    std::vector<CMatrix> S;
    for (int k = 0; k < p.arity(); ++k) S.push_back(random_hermitian(N, rng));

    const CMatrix PS = evaluate(p, S);
    double radius = 1.0;
    Eigen::VectorXd eig;
    if (selfadjoint) {
        Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(PS), Eigen::EigenvaluesOnly);
        eig = es.eigenvalues();
        radius = std::max(1.0, eig.cwiseAbs().maxCoeff());
    } else {
        radius = std::max(1.0, PS.norm());
    }
    std::uniform_real_distribution<double> ure(-radius, radius);
    std::uniform_real_distribution<double> uim(0.3, 1.5);
    const cplx z(ure(rng), uim(rng) * (0.5 + 0.5 * radius));

    const CMatrix zP = cplx(z) * CMatrix::Identity(N, N) - PS;
    const CMatrix zL = pencil_resolvent_argument(gamma, S, z);
    const cplx dP = Eigen::PartialPivLU<CMatrix>(zP).determinant();
    const cplx dL = Eigen::PartialPivLU<CMatrix>(zL).determinant();

    cplx sign = 1.0;
    if (provenance == Provenance::constructed && n > 1) {
        const CMatrix Q = -zL.bottomRightCorner((n - 1) * N, (n - 1) * N);  // Q(S)
        const cplx dQ = Eigen::PartialPivLU<CMatrix>(-Q).determinant();
        if (std::abs(std::abs(dQ) - 1.0) > 1e-8 || std::abs(dQ.imag()) > 1e-8) {
            out.failures.push_back({"sign", trial, "det(-Q(S)) = " + std::to_string(dQ.real()) + "+" +
                                                        std::to_string(dQ.imag()) + "i is not +-1"});
        }
        sign = dQ.real() > 0 ? 1.0 : -1.0;

        CMatrix Q0 = CMatrix::Zero((n - 1) * N, (n - 1) * N);
        for (int i = 1; i < n; ++i) {
            for (int j = 1; j < n; ++j) {
                Q0.block((i - 1) * N, (j - 1) * N, N, N).diagonal().setConstant(gamma[0](i, j));
            }
        }
        if (!is_permutation(Q0)) {
            out.failures.push_back({"q_structure", trial, "constant part of Q is not a permutation"});
        } else {
            const CMatrix Qinv = Q.partialPivLu().inverse();
            const CMatrix Nil = Q0 * Qinv - CMatrix::Identity(Q.rows(), Q.cols());
            CMatrix power = Nil;
            for (int e = 1; e < n - 1; ++e) power = power * Nil;
            const double scale = std::pow(std::max(1.0, Nil.norm()), n - 1);
            if (power.norm() > 1e-8 * scale) {
                out.failures.push_back({"q_structure", trial, "Q(0) Q(S)^{-1} - I is not nilpotent"});
            }
        }
    } else {
        sign = std::abs(dL - dP) <= std::abs(dL + dP) ? 1.0 : -1.0;
    }
    out.det_error = std::abs(dL - sign * dP) / std::max(std::abs(dP), 1e-300);
    if (!(out.det_error <= opt.det_tolerance)) {
        std::ostringstream msg;
        msg << "relative error " << out.det_error << " at z = " << z;
        out.failures.push_back({"determinant", trial, msg.str()});
    }

    if (selfadjoint && eig.size() > 0) {
        const int probes = std::min<int>(opt.kernel_points, static_cast<int>(eig.size()));
        for (int q = 0; q < probes; ++q) {
            const double lambda = q == 0 ? eig(0) : eig(eig.size() - 1 - (q - 1));
            const CMatrix a = lambda * CMatrix::Identity(N, N) - PS;
            const CMatrix b = pencil_resolvent_argument(gamma, S, lambda);
            const int ka = numerical_kernel_dim(a, opt.kernel_threshold);
            const int kb = numerical_kernel_dim(b, opt.kernel_threshold);
            if (ka != kb) {
                out.failures.push_back({"kernel", trial,
                                        "dim ker differs at lambda = " + std::to_string(lambda) + ": " +
                                            std::to_string(ka) + " vs " + std::to_string(kb)});
            }
        }
    }
    return out;
}

CertificationReport certify_impl(std::span<const CMatrix> gamma, Provenance provenance, bool selfadjoint,
                                 const NCPolynomial& p, const CertifyOptions& opt) {
    if (opt.trials < 1 || opt.size < 2) throw DomainError("certify: need trials >= 1 and size >= 2");
    if (static_cast<int>(gamma.size()) != p.arity() + 1) throw SizeError("certify: pencil arity does not match polynomial");
    CertificationReport rep;
    rep.trials = opt.trials;
    rep.size = opt.size;
    rep.pencil_size = static_cast<int>(gamma[0].rows());
    rep.provenance = provenance;
    rep.sign_checked = provenance == Provenance::constructed && rep.pencil_size > 1;
    rep.q_structure_checked = rep.sign_checked;

    std::vector<TrialOutcome> outcomes(static_cast<std::size_t>(opt.trials));
    for_each_index(outcomes.size(), opt.exec, [&](std::size_t t) {
        outcomes[t] = run_trial(gamma, provenance, selfadjoint, p, opt, static_cast<int>(t));
    });
    for (auto& o : outcomes) {
        rep.max_det_relative_error = std::max(rep.max_det_relative_error, o.det_error);
        for (auto& f : o.failures) rep.failures.push_back(std::move(f));
    }
    rep.passed = rep.failures.empty();
    return rep;
}

}  // namespace

CertificationReport certify_pencil(const LinearizationPencil& pencil, const NCPolynomial& p,
                                   const CertifyOptions& options) {
    return certify_impl(pencil.gamma, pencil.provenance, true, p, options);
}

CertificationReport certify_general_pencil(const GeneralPencil& pencil, const NCPolynomial& p,
                                           const CertifyOptions& options) {
    return certify_impl(pencil.gamma, Provenance::constructed, false, p, options);
}

// ---------------------------------------------------------------------------------------------
// Pencil documents

std::string pencil_to_json_text(const LinearizationPencil& pencil, const std::string& config_hash) {
    nlohmann::json doc;
    doc["n"] = pencil.size();
    doc["k"] = pencil.arity();
    doc["provenance"] = pencil.provenance == Provenance::constructed ? "constructed" : "user_supplied";
    if (!config_hash.empty()) doc["config_hash"] = config_hash;
    nlohmann::json gammas = nlohmann::json::array();
    for (const auto& g : pencil.gamma) {
        nlohmann::json flat = nlohmann::json::array();
        for (Eigen::Index i = 0; i < g.rows(); ++i) {
            for (Eigen::Index j = 0; j < g.cols(); ++j) flat.push_back({g(i, j).real(), g(i, j).imag()});
        }
        gammas.push_back(std::move(flat));
    }
    doc["gamma"] = std::move(gammas);
    return doc.dump(1);
}

void write_pencil(std::ostream& out, const LinearizationPencil& pencil, const std::string& config_hash) {
    out << pencil_to_json_text(pencil, config_hash) << '\n';
}

LinearizationPencil pencil_from_json_text(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw DomainError(std::string("pencil document: ") + e.what());
    }
    if (!doc.contains("n") || !doc.contains("gamma")) throw DomainError("pencil document: missing 'n' or 'gamma'");
    const int n = doc.at("n").get<int>();
    if (n < 1) throw DomainError("pencil document: n must be positive");
    std::vector<CMatrix> gammas;
    for (const auto& flat : doc.at("gamma")) {
        if (flat.size() != static_cast<std::size_t>(n) * n) throw DomainError("pencil document: gamma entry count != n*n");
        CMatrix g(n, n);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                const auto& e = flat.at(static_cast<std::size_t>(i) * n + j);
                if (e.is_number()) {
                    g(i, j) = e.get<double>();
                } else {
                    g(i, j) = cplx(e.at(0).get<double>(), e.at(1).get<double>());
                }
            }
        }
        gammas.push_back(std::move(g));
    }
    if (doc.contains("k") && doc.at("k").get<int>() + 1 != static_cast<int>(gammas.size())) {
        throw DomainError("pencil document: k does not match the number of gamma matrices");
    }
    LinearizationPencil out = adopt_pencil(std::move(gammas));
    if (doc.value("provenance", std::string("user_supplied")) == "constructed") out.provenance = Provenance::constructed;
    return out;
}

LinearizationPencil read_pencil(std::istream& in) {
    std::stringstream buf;
    buf << in.rdbuf();
    return pencil_from_json_text(buf.str());
}

LinearizationPencil economical_mp_pencil() {
    CMatrix g0 = CMatrix::Zero(3, 3), g1 = CMatrix::Zero(3, 3), g2 = CMatrix::Zero(3, 3);
    g0(1, 2) = g0(2, 1) = -1.0;
    g1(0, 2) = g1(2, 0) = 1.0;
    g2(0, 1) = g2(1, 0) = 1.0;
    g2(0, 2) = g2(2, 0) = 0.5;
    return adopt_pencil({g0, g1, g2});
}

}  // namespace freespike
