#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "freespike/common.hpp"
#include "freespike/measures.hpp"
#include "freespike/ncpoly.hpp"
#include "freespike/parallel.hpp"
#include "freespike/subordination.hpp"

namespace freespike {

/// G(z) = [F(z e11 - gamma_0)]_{11}, the Cauchy transform of the law of P(a, b), for Im z > 0.
cplx scalar_cauchy_of_P(const FreeModel& model, cplx z, const ContinuationOptions& options = {});

/// sum |coeff| ||a||^{#1} ||b||^{#2} over the monomials of P, with the norms taken as support radii.
double spectral_radius_bound(const NCPolynomial& p, const SpectralMeasure& mu, const SpectralMeasure& nu);

/// `points` equispaced values on [-extent R, extent R].
std::vector<double> default_grid(double R, int points = 4001, double extent = 1.2);

struct DensityOptions {
    double support_threshold = 1e-4;
    bool refine_edges = true;
    int edge_points = 32;  // graded points x_e +- h (j / J)^2 on each side of a located edge
    ContinuationOptions continuation = [] {
        ContinuationOptions c;
        c.axis_polish = false;
        return c;
    }();
    Exec exec = Exec::parallel;
};

struct DensityProfile {
    std::vector<double> grid;
    std::vector<double> density;
    std::vector<Interval> support_intervals;
    std::vector<Atom> atoms;
    std::vector<double> eta_used;
    double threshold = 1e-4;

    /// Trapezoid integral of the density plus atom masses.
    double mass() const;
    /// Mass of (-inf, x].
    double cdf(double x) const;
    /// Linear interpolation of the density (0 outside the grid).
    double at(double x) const;
};

/// Stieltjes inversion density(x) = -Im G(x + i eta -> 0) / pi on `grid` (sorted), with
/// edge refinement and atom detection. Grid points are solved independently.
DensityProfile density(const FreeModel& model, std::vector<double> grid, const DensityOptions& options = {});

/// Maximal runs of grid points with density > threshold, padded by one grid step on each side.
/// Atoms stay as separate narrow intervals flagged atomic.
std::vector<Interval> support(const DensityProfile& profile, double threshold);

/// Two-column CSV (x,density) preceded by '#' metadata and followed by "#support,lo,hi,atomic"
/// and "#atom,location,mass" lines.
void write_profile(std::ostream& out, const DensityProfile& profile, const std::string& metadata = {});
DensityProfile read_profile(std::istream& in);

}  // namespace freespike
