#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "freespike/common.hpp"

namespace freespike {

enum class Family { semicircle, marchenko_pastur, arcsine, uniform, table };

std::string to_string(Family f);

/// Absolutely continuous probability law on [lo, hi], scaled by `weight` inside a mixture.
struct DensityPiece {
    Family family = Family::uniform;
    double weight = 1.0;
    double lo = 0.0;
    double hi = 1.0;
    // semicircle parameters (lo/hi derived as mean -+ 2 sqrt(variance))
    double mean = 0.0;
    double variance = 1.0;
    // table: samples of an unnormalized density, linearly interpolated on [xs.front(), xs.back()]
    std::vector<double> xs;
    std::vector<double> ys;
    double table_mass = 1.0;  // integral of the interpolated table

    /// Normalized density of the piece (integrates to 1, weight not applied).
    double density(double t) const;
    /// Normalized CDF of the piece.
    double cdf(double t) const;
};

struct Atom {
    double location = 0.0;
    double mass = 1.0;
};

/// Compactly supported probability measure: finitely many atoms plus density pieces.
class SpectralMeasure {
public:
    static SpectralMeasure dirac(double at);
    static SpectralMeasure semicircle(double mean, double variance);
    /// Marchenko-Pastur law with ratio 1, density sqrt((4 - x) x) / (2 pi x) on (0, 4).
    static SpectralMeasure marchenko_pastur();
    static SpectralMeasure arcsine(double lo, double hi);
    static SpectralMeasure uniform(double lo, double hi);
    /// Piecewise-linear density through (xs, ys), normalized to mass 1.
    static SpectralMeasure table(std::vector<double> xs, std::vector<double> ys);
    /// General mixture. Atom masses and piece weights must be nonnegative and sum to 1
    /// within 1e-12; throws DomainError otherwise.
    static SpectralMeasure mixture(std::vector<Atom> atoms, std::vector<DensityPiece> pieces);

    const std::vector<Atom>& atoms() const { return atoms_; }
    const std::vector<DensityPiece>& pieces() const { return pieces_; }

    /// Union of closed intervals and degenerate intervals for atoms, merged and sorted.
    std::vector<Interval> support() const;
    double support_lo() const;
    double support_hi() const;
    /// max |t| over the support, i.e. the operator norm of a variable with this law.
    double support_radius() const;
    double distance_to_support(double x) const;

    /// True for a single semicircle piece without atoms; fills mean and variance.
    bool is_semicircle(double* mean = nullptr, double* variance = nullptr) const;
    /// True when the measure is a finite sum of atoms.
    bool is_atomic() const { return pieces_.empty(); }

    double cdf(double x) const;
    /// Density of the absolutely continuous part.
    double density(double x) const;
    double mean() const;

private:
    std::vector<Atom> atoms_;
    std::vector<DensityPiece> pieces_;
};

/// Quadrature tables for Cauchy transforms of a fixed measure. Each density piece is integrated
/// with Gauss-Legendre after the substitution t = lo + (hi - lo) sin^2(pi u / 2), which removes
/// square-root endpoint behaviour; the node count starts at 256 and doubles until doubling
/// leaves the transform unchanged to 1e-12 at probe points a quarter unit above the support.
class CauchyEvaluator {
public:
    explicit CauchyEvaluator(SpectralMeasure measure, int initial_nodes = 256);

    const SpectralMeasure& measure() const { return measure_; }
    /// Total number of quadrature nodes over all pieces.
    std::size_t node_count() const { return nodes_.size(); }
    /// Sum of the quadrature weights plus atom masses (1 up to roundoff).
    double quadrature_mass() const;

    /// Closed form for named families, quadrature for tables.
    cplx scalar(cplx z) const;
    /// Quadrature for every piece (used to cross-check the closed forms).
    cplx scalar_quadrature(cplx z) const;
    /// int (beta - t gamma)^{-1} dm(t): closed form through the eigenbasis of gamma and the
    /// scalar transform, falling back to matrix_quadrature when that reduction is ill conditioned.
    CMatrix matrix(const CMatrix& gamma, const CMatrix& beta) const;
    /// sum over atoms and nodes of w (beta - t gamma)^{-1}.
    CMatrix matrix_quadrature(const CMatrix& gamma, const CMatrix& beta) const;

private:
    void build(int nodes_per_piece);

    SpectralMeasure measure_;
    std::vector<double> nodes_;
    std::vector<double> weights_;
    std::vector<std::size_t> piece_offsets_;  // nodes of piece i are [offsets[i], offsets[i+1])
};

/// G_m(z) = int (z - t)^{-1} dm(t). Real z must be farther than 1e-9 from the support.
cplx cauchy_scalar(const SpectralMeasure& m, cplx z);

/// int (beta - t gamma)^{-1} dm(t) for an n x n Hermitian gamma. Throws DomainError when
/// beta - t gamma is numerically singular at an atom or a quadrature node.
CMatrix cauchy_matrix(const SpectralMeasure& m, const CMatrix& gamma, const CMatrix& beta);

/// Inverse CDF at (i - 1/2) / N, i = 1..N.
std::vector<double> quantiles(const SpectralMeasure& m, int N);

/// N i.i.d. draws by inverse CDF of a 53-bit uniform stream from mt19937_64(seed).
std::vector<double> sample(const SpectralMeasure& m, int N, std::uint64_t seed);

/// Smallest x with cdf(x) >= q.
double inverse_cdf(const SpectralMeasure& m, double q);

/// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

}  // namespace freespike
