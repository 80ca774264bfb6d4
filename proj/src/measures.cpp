#include "freespike/measures.hpp"

#include <gsl/gsl_integration.h>

#include <map>
#include <mutex>
#include <numbers>
#include <random>

namespace freespike {

using std::numbers::pi;

std::string to_string(Family f) {
    switch (f) {
        case Family::semicircle: return "semicircle";
        case Family::marchenko_pastur: return "marchenko_pastur";
        case Family::arcsine: return "arcsine";
        case Family::uniform: return "uniform";
        case Family::table: return "table";
    }
    return "unknown";
}

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
    static std::mutex guard;
    static std::map<int, std::pair<std::vector<double>, std::vector<double>>> cache;
    std::lock_guard<std::mutex> lock(guard);
    auto it = cache.find(n);
    if (it == cache.end()) {
        gsl_integration_glfixed_table* table = gsl_integration_glfixed_table_alloc(static_cast<std::size_t>(n));
        std::vector<double> x(n), w(n);
        for (int i = 0; i < n; ++i) gsl_integration_glfixed_point(-1.0, 1.0, static_cast<std::size_t>(i), &x[i], &w[i], table);
        gsl_integration_glfixed_table_free(table);
        it = cache.emplace(n, std::make_pair(std::move(x), std::move(w))).first;
    }
    nodes = it->second.first;
    weights = it->second.second;
}

// ---------------------------------------------------------------------------------------------
// Pieces

double DensityPiece::density(double t) const {
    if (t < lo || t > hi) return 0.0;
    const double L = hi - lo;
    switch (family) {
        case Family::semicircle: {
            const double d = variance * 4.0 - (t - mean) * (t - mean);
            return d <= 0.0 ? 0.0 : std::sqrt(d) / (2.0 * pi * variance);
        }
        case Family::marchenko_pastur:
            if (t <= 0.0) return 0.0;
            return std::sqrt(std::max(0.0, (4.0 - t) * t)) / (2.0 * pi * t);
        case Family::arcsine: {
            const double d = (t - lo) * (hi - t);
            return d <= 0.0 ? 0.0 : 1.0 / (pi * std::sqrt(d));
        }
        case Family::uniform:
            return 1.0 / L;
        case Family::table: {
            auto it = std::upper_bound(xs.begin(), xs.end(), t);
            if (it == xs.begin()) return ys.front() / table_mass;
            if (it == xs.end()) return ys.back() / table_mass;
            const std::size_t k = static_cast<std::size_t>(it - xs.begin());
            const double s = (t - xs[k - 1]) / (xs[k] - xs[k - 1]);
            return ((1.0 - s) * ys[k - 1] + s * ys[k]) / table_mass;
        }
    }
    return 0.0;
}

double DensityPiece::cdf(double t) const {
    if (t <= lo) return 0.0;
    if (t >= hi) return 1.0;
    const double L = hi - lo;
    switch (family) {
        case Family::semicircle: {
            const double x = std::clamp((t - mean) / std::sqrt(variance), -2.0, 2.0);
            return 0.5 + x * std::sqrt(4.0 - x * x) / (4.0 * pi) + std::asin(x / 2.0) / pi;
        }
        case Family::marchenko_pastur: {
            const double th = std::asin(std::sqrt(std::clamp(t / 4.0, 0.0, 1.0)));
            return (2.0 / pi) * (th + 0.5 * std::sin(2.0 * th));
        }
        case Family::arcsine:
            return (2.0 / pi) * std::asin(std::sqrt(std::clamp((t - lo) / L, 0.0, 1.0)));
        case Family::uniform:
            return (t - lo) / L;
        case Family::table: {
            double acc = 0.0;
            for (std::size_t k = 1; k < xs.size(); ++k) {
                const double a = xs[k - 1], b = xs[k];
                if (t >= b) {
                    acc += 0.5 * (ys[k - 1] + ys[k]) * (b - a);
                } else {
                    const double s = (t - a) / (b - a);
                    const double yt = (1.0 - s) * ys[k - 1] + s * ys[k];
                    acc += 0.5 * (ys[k - 1] + yt) * (t - a);
                    break;
                }
            }
            return std::clamp(acc / table_mass, 0.0, 1.0);
        }
    }
    return 0.0;
}

namespace {

cplx piece_cauchy_closed(const DensityPiece& p, cplx z) {
    switch (p.family) {
        case Family::semicircle: {
            const double r = 2.0 * std::sqrt(p.variance);
            const cplx w = z - p.mean;
            return (w - std::sqrt(w - r) * std::sqrt(w + r)) / (2.0 * p.variance);
        }
        case Family::marchenko_pastur:
            return (z - std::sqrt(z) * std::sqrt(z - 4.0)) / (2.0 * z);
        case Family::arcsine:
            return 1.0 / (std::sqrt(z - p.lo) * std::sqrt(z - p.hi));
        case Family::uniform:
            return (std::log(z - p.lo) - std::log(z - p.hi)) / (p.hi - p.lo);
        case Family::table:
            break;
    }
    throw DomainError("no closed-form Cauchy transform for table densities");
}

// rho(t(u)) dt/du for t = lo + L sin^2(pi u / 2), written without endpoint singularities.
double mapped_weight(const DensityPiece& p, double u) {
    const double s = std::sin(0.5 * pi * u);
    const double c = std::cos(0.5 * pi * u);
    switch (p.family) {
        case Family::semicircle: return 8.0 * s * s * c * c;
        case Family::marchenko_pastur: return 1.0 + std::cos(pi * u);
        case Family::arcsine: return 1.0;
        case Family::uniform: return pi * s * c;
        case Family::table: break;
    }
    return 0.0;
}

}  // namespace

// ---------------------------------------------------------------------------------------------
// SpectralMeasure

SpectralMeasure SpectralMeasure::dirac(double at) { return mixture({{at, 1.0}}, {}); }

SpectralMeasure SpectralMeasure::semicircle(double mean, double variance) {
    if (!(variance > 0.0)) throw DomainError("semicircle variance must be positive");
    DensityPiece p;
    p.family = Family::semicircle;
    p.mean = mean;
    p.variance = variance;
    p.lo = mean - 2.0 * std::sqrt(variance);
    p.hi = mean + 2.0 * std::sqrt(variance);
    return mixture({}, {p});
}

SpectralMeasure SpectralMeasure::marchenko_pastur() {
    DensityPiece p;
    p.family = Family::marchenko_pastur;
    p.lo = 0.0;
    p.hi = 4.0;
    return mixture({}, {p});
}

SpectralMeasure SpectralMeasure::arcsine(double lo, double hi) {
    if (!(hi > lo)) throw DomainError("arcsine interval must have positive length");
    DensityPiece p;
    p.family = Family::arcsine;
    p.lo = lo;
    p.hi = hi;
    return mixture({}, {p});
}

SpectralMeasure SpectralMeasure::uniform(double lo, double hi) {
    if (!(hi > lo)) throw DomainError("uniform interval must have positive length");
    DensityPiece p;
    p.family = Family::uniform;
    p.lo = lo;
    p.hi = hi;
    return mixture({}, {p});
}

SpectralMeasure SpectralMeasure::table(std::vector<double> xs, std::vector<double> ys) {
    DensityPiece p;
    p.family = Family::table;
    p.xs = std::move(xs);
    p.ys = std::move(ys);
    return mixture({}, {p});
}

SpectralMeasure SpectralMeasure::mixture(std::vector<Atom> atoms, std::vector<DensityPiece> pieces) {
    double total = 0.0;
    for (const auto& a : atoms) {
        if (!(a.mass >= 0.0) || !std::isfinite(a.location)) throw DomainError("atom masses must be nonnegative and locations finite");
        total += a.mass;
    }
    for (auto& p : pieces) {
        if (!(p.weight >= 0.0)) throw DomainError("piece weights must be nonnegative");
        if (p.family == Family::table) {
            if (p.xs.size() < 2 || p.xs.size() != p.ys.size()) throw DomainError("table density needs >= 2 matching samples");
            if (!std::is_sorted(p.xs.begin(), p.xs.end()) ||
                std::adjacent_find(p.xs.begin(), p.xs.end()) != p.xs.end()) {
                throw DomainError("table abscissae must be strictly increasing");
            }
            double mass = 0.0;
            for (std::size_t k = 0; k < p.ys.size(); ++k) {
                if (!(p.ys[k] >= 0.0)) throw DomainError("table density must be nonnegative");
                if (k > 0) mass += 0.5 * (p.ys[k - 1] + p.ys[k]) * (p.xs[k] - p.xs[k - 1]);
            }
            if (!(mass > 0.0)) throw DomainError("table density has zero mass");
            p.table_mass = mass;
            p.lo = p.xs.front();
            p.hi = p.xs.back();
        }
        if (!(p.hi > p.lo)) throw DomainError("density piece has empty support");
        total += p.weight;
    }
    if (std::abs(total - 1.0) > 1e-12) throw DomainError("total mass must be 1, got " + std::to_string(total));
    if (atoms.empty() && pieces.empty()) throw DomainError("measure has no mass");
    SpectralMeasure m;
    m.atoms_ = std::move(atoms);
    m.pieces_ = std::move(pieces);
    return m;
}

std::vector<Interval> SpectralMeasure::support() const {
    std::vector<Interval> ivs;
    for (const auto& a : atoms_) {
        if (a.mass > 0.0) ivs.push_back({a.location, a.location, true});
    }
    for (const auto& p : pieces_) {
        if (p.weight > 0.0) ivs.push_back({p.lo, p.hi, false});
    }
    std::sort(ivs.begin(), ivs.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
    std::vector<Interval> merged;
    for (const auto& iv : ivs) {
        if (!merged.empty() && iv.lo <= merged.back().hi) {
            merged.back().hi = std::max(merged.back().hi, iv.hi);
            merged.back().atomic = merged.back().atomic && iv.atomic;
        } else {
            merged.push_back(iv);
        }
    }
    return merged;
}

double SpectralMeasure::support_lo() const { return support().front().lo; }
double SpectralMeasure::support_hi() const { return support().back().hi; }
double SpectralMeasure::support_radius() const { return std::max(std::abs(support_lo()), std::abs(support_hi())); }
double SpectralMeasure::distance_to_support(double x) const { return distance_to(support(), x); }

bool SpectralMeasure::is_semicircle(double* mean, double* variance) const {
    if (!atoms_.empty() || pieces_.size() != 1 || pieces_[0].family != Family::semicircle) return false;
    if (mean) *mean = pieces_[0].mean;
    if (variance) *variance = pieces_[0].variance;
    return true;
}

double SpectralMeasure::cdf(double x) const {
    double acc = 0.0;
    for (const auto& a : atoms_) {
        if (a.location <= x) acc += a.mass;
    }
    for (const auto& p : pieces_) acc += p.weight * p.cdf(x);
    return std::min(acc, 1.0);
}

double SpectralMeasure::density(double x) const {
    double acc = 0.0;
    for (const auto& p : pieces_) acc += p.weight * p.density(x);
    return acc;
}

double SpectralMeasure::mean() const {
    double acc = 0.0;
    for (const auto& a : atoms_) acc += a.mass * a.location;
    for (const auto& p : pieces_) {
        std::vector<double> x, w;
        gauss_legendre(512, x, w);
        double m1 = 0.0;
        for (std::size_t k = 0; k < x.size(); ++k) {
            const double t = 0.5 * (p.lo + p.hi) + 0.5 * (p.hi - p.lo) * x[k];
            m1 += 0.5 * (p.hi - p.lo) * w[k] * t * p.density(t);
        }
        acc += p.weight * m1;
    }
    return acc;
}

// ---------------------------------------------------------------------------------------------
// Cauchy transforms

CauchyEvaluator::CauchyEvaluator(SpectralMeasure measure, int initial_nodes) : measure_(std::move(measure)) {
    int nodes = std::max(8, initial_nodes);
    build(nodes);
    if (measure_.pieces().empty()) return;
    // Doubling until probe values above the support stop moving.
    auto probes = [&] {
        std::vector<cplx> v;
        for (const auto& p : measure_.pieces()) {
            for (int k = 0; k <= 4; ++k) v.push_back(scalar_quadrature(cplx(p.lo + (p.hi - p.lo) * k / 4.0, 0.25)));
        }
        return v;
    };
    std::vector<cplx> prev = probes();
    while (nodes < 8192) {
        nodes *= 2;
        build(nodes);
        const std::vector<cplx> cur = probes();
        double change = 0.0;
        for (std::size_t i = 0; i < cur.size(); ++i) change = std::max(change, std::abs(cur[i] - prev[i]));
        if (change <= 1e-12) {
            build(nodes / 2);
            break;
        }
        prev = cur;
    }
}

void CauchyEvaluator::build(int nodes_per_piece) {
    nodes_.clear();
    weights_.clear();
    piece_offsets_.assign(1, 0);
    std::vector<double> x, w;
    for (const auto& p : measure_.pieces()) {
        const std::size_t first = nodes_.size();
        if (p.family == Family::table) {
            const int per_segment = std::max(4, nodes_per_piece / static_cast<int>(p.xs.size() - 1));
            gauss_legendre(std::min(per_segment, 64), x, w);
            for (std::size_t k = 1; k < p.xs.size(); ++k) {
                const double a = p.xs[k - 1], b = p.xs[k];
                for (std::size_t q = 0; q < x.size(); ++q) {
                    const double t = 0.5 * (a + b) + 0.5 * (b - a) * x[q];
                    nodes_.push_back(t);
                    weights_.push_back(0.5 * (b - a) * w[q] * p.density(t));
                }
            }
        } else {
            gauss_legendre(nodes_per_piece, x, w);
            const double L = p.hi - p.lo;
            for (std::size_t q = 0; q < x.size(); ++q) {
                const double u = 0.5 * (x[q] + 1.0);
                const double s = std::sin(0.5 * pi * u);
                nodes_.push_back(p.lo + L * s * s);
                weights_.push_back(0.5 * w[q] * mapped_weight(p, u));
            }
        }
        double sum = 0.0;
        for (std::size_t q = first; q < weights_.size(); ++q) sum += weights_[q];
        for (std::size_t q = first; q < weights_.size(); ++q) weights_[q] *= p.weight / sum;
        piece_offsets_.push_back(nodes_.size());
    }
}

double CauchyEvaluator::quadrature_mass() const {
    double m = 0.0;
    for (const auto& a : measure_.atoms()) m += a.mass;
    for (double w : weights_) m += w;
    return m;
}

cplx CauchyEvaluator::scalar_quadrature(cplx z) const {
    cplx acc = 0.0;
    for (const auto& a : measure_.atoms()) acc += a.mass / (z - a.location);
    for (std::size_t q = 0; q < nodes_.size(); ++q) acc += weights_[q] / (z - nodes_[q]);
    return acc;
}

cplx CauchyEvaluator::scalar(cplx z) const {
    if (z.imag() == 0.0 && measure_.distance_to_support(z.real()) <= 1e-9) {
        throw DomainError("Cauchy transform evaluated on the support at x = " + std::to_string(z.real()));
    }
    cplx acc = 0.0;
    for (const auto& a : measure_.atoms()) acc += a.mass / (z - a.location);
    bool has_table = false;
    for (const auto& p : measure_.pieces()) {
        if (p.family == Family::table) {
            has_table = true;
        } else {
            acc += p.weight * piece_cauchy_closed(p, z);
        }
    }
    if (has_table) {
        const auto& pieces = measure_.pieces();
        for (std::size_t i = 0; i < pieces.size(); ++i) {
            if (pieces[i].family != Family::table) continue;
            for (std::size_t k = piece_offsets_[i]; k < piece_offsets_[i + 1]; ++k) acc += weights_[k] / (z - nodes_[k]);
        }
    }
    return acc;
}

CMatrix CauchyEvaluator::matrix_quadrature(const CMatrix& gamma, const CMatrix& beta) const {
    const Eigen::Index n = beta.rows();
    CMatrix out = CMatrix::Zero(n, n);
    auto accumulate = [&](double t, double w) {
        Eigen::PartialPivLU<CMatrix> lu(beta - t * gamma);
        if (!(lu.rcond() > 1e-14)) {
            throw DomainError("cauchy_matrix: beta - t gamma singular at t = " + std::to_string(t));
        }
        out += w * lu.inverse();
    };
    for (const auto& a : measure_.atoms()) accumulate(a.location, a.mass);
    for (std::size_t q = 0; q < nodes_.size(); ++q) accumulate(nodes_[q], weights_[q]);
    return out;
}

namespace {

// In the eigenbasis of gamma = U diag(g, 0) U^*, with B = U^* beta U split into range and
// kernel blocks, (B - t diag(g, 0))^{-1} has range block S(t)^{-1} where
// S(t) = S0 - t g, S0 = B11 - B12 B22^{-1} B21, and the other blocks are affine in S(t)^{-1}.
// Diagonalizing g^{-1} S0 = V L V^{-1} gives int S(t)^{-1} = V diag(G(l)) V^{-1} g^{-1}.
// Returns false when the reduction is ill conditioned.
bool matrix_spectral(const CauchyEvaluator& ev, const CMatrix& gamma, const CMatrix& beta, CMatrix& out) {
    const Eigen::Index n = beta.rows();
    Eigen::SelfAdjointEigenSolver<CMatrix> es(hermitian_part(gamma));
    const Eigen::VectorXd& g = es.eigenvalues();
    const double scale = g.cwiseAbs().maxCoeff();
    std::vector<Eigen::Index> range, kernel;
    for (Eigen::Index i = 0; i < n; ++i) (std::abs(g(i)) > 1e-12 * scale ? range : kernel).push_back(i);
    const auto r = static_cast<Eigen::Index>(range.size());
    const auto k = static_cast<Eigen::Index>(kernel.size());
    CMatrix U(n, n);
    Eigen::VectorXd gr(r);
    for (Eigen::Index i = 0; i < r; ++i) {
        U.col(i) = es.eigenvectors().col(range[i]);
        gr(i) = g(range[i]);
    }
    for (Eigen::Index i = 0; i < k; ++i) U.col(r + i) = es.eigenvectors().col(kernel[i]);
    const CMatrix B = U.adjoint() * beta * U;

    CMatrix S0 = B.topLeftCorner(r, r);
    CMatrix K, KB21, B12K;
    if (k > 0) {
        Eigen::PartialPivLU<CMatrix> lu(B.bottomRightCorner(k, k));
        if (!(lu.rcond() > 1e-12)) return false;
        K = lu.inverse();
        KB21 = K * B.bottomLeftCorner(k, r);
        B12K = B.topRightCorner(r, k) * K;
        S0 -= B.topRightCorner(r, k) * KB21;
    }
    const CMatrix M = gr.cwiseInverse().asDiagonal() * S0;
    Eigen::ComplexEigenSolver<CMatrix> ces(M);
    if (ces.info() != Eigen::Success) return false;
    const CMatrix& V = ces.eigenvectors();
    Eigen::PartialPivLU<CMatrix> vlu(V);
    if (!(vlu.rcond() > 1e-8)) return false;
    const CMatrix Vinv = vlu.inverse();
    const double mscale = std::max(1.0, M.cwiseAbs().maxCoeff());
    Eigen::VectorXcd Gl(r);
    for (Eigen::Index i = 0; i < r; ++i) {
        const cplx l = ces.eigenvalues()(i);
        // An eigenvalue numerically on the support makes the closed form unreliable.
        if (std::abs(l.imag()) <= 1e-10 * mscale && ev.measure().distance_to_support(l.real()) <= 1e-9) return false;
        Gl(i) = ev.scalar(std::abs(l.imag()) <= 1e-14 * mscale ? cplx(l.real(), 0.0) : l);
    }
    const CMatrix X = V * Gl.asDiagonal() * Vinv * gr.cwiseInverse().asDiagonal();

    CMatrix blocks(n, n);
    blocks.topLeftCorner(r, r) = X;
    if (k > 0) {
        blocks.topRightCorner(r, k) = -X * B12K;
        blocks.bottomLeftCorner(k, r) = -KB21 * X;
        blocks.bottomRightCorner(k, k) = K + KB21 * X * B12K;
    }
    out = U * blocks * U.adjoint();
    return true;
}

}  // namespace

CMatrix CauchyEvaluator::matrix(const CMatrix& gamma, const CMatrix& beta) const {
    const Eigen::Index n = beta.rows();
    if (gamma.rows() != n || gamma.cols() != n || beta.cols() != n) throw SizeError("cauchy_matrix: size mismatch");
    if (gamma.isZero(0.0)) {
        Eigen::PartialPivLU<CMatrix> lu(beta);
        if (!(lu.rcond() > 1e-14)) throw DomainError("cauchy_matrix: beta is singular");
        return lu.inverse();
    }
    if (n == 1) {
        // (beta - t g)^{-1} = g^{-1} (beta/g - t)^{-1}
        const cplx g = gamma(0, 0);
        CMatrix out(1, 1);
        out(0, 0) = scalar(beta(0, 0) / g) / g;
        return out;
    }
    CMatrix out;
    if (matrix_spectral(*this, gamma, beta, out)) return out;
    return matrix_quadrature(gamma, beta);
}

cplx cauchy_scalar(const SpectralMeasure& m, cplx z) { return CauchyEvaluator(m).scalar(z); }

CMatrix cauchy_matrix(const SpectralMeasure& m, const CMatrix& gamma, const CMatrix& beta) {
    return CauchyEvaluator(m).matrix(gamma, beta);
}

// ---------------------------------------------------------------------------------------------
// Quantiles and sampling

double inverse_cdf(const SpectralMeasure& m, double q) {
    double lo = m.support_lo();
    double hi = m.support_hi();
    if (m.cdf(lo) >= q) return lo;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++it) {
        const double mid = 0.5 * (lo + hi);
        if (m.cdf(mid) >= q) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    for (const auto& a : m.atoms()) {
        if (std::abs(a.location - hi) <= 1e-12 * std::max(1.0, std::abs(a.location))) return a.location;
    }
    return hi;
}

std::vector<double> quantiles(const SpectralMeasure& m, int N) {
    if (N < 1) throw DomainError("quantiles: N must be positive");
    std::vector<double> out(static_cast<std::size_t>(N));
    for (int i = 0; i < N; ++i) out[i] = inverse_cdf(m, (i + 0.5) / N);
    return out;
}

std::vector<double> sample(const SpectralMeasure& m, int N, std::uint64_t seed) {
    if (N < 0) throw DomainError("sample: N must be nonnegative");
    std::mt19937_64 rng(seed);
    std::vector<double> out(static_cast<std::size_t>(N));
    for (auto& v : out) {
        const double u = (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
        v = inverse_cdf(m, u);
    }
    return out;
}

}  // namespace freespike
