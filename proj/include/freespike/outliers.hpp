#pragma once

#include <string>
#include <vector>

#include "freespike/common.hpp"
#include "freespike/linearize.hpp"
#include "freespike/ncpoly.hpp"
#include "freespike/parallel.hpp"
#include "freespike/subordination.hpp"

namespace freespike {

/// Spike eigenvalues theta_1 >= ... >= theta_p of A_N, each outside supp(mu).
struct SpikeSet {
    std::vector<double> thetas;
    bool distinct = true;

    /// Sorts descending, records distinctness, throws DomainError for a spike in supp(mu).
    static SpikeSet make(std::vector<double> thetas, const SpectralMeasure& mu);
    std::size_t size() const { return thetas.size(); }
};

enum class Criterion { regularized, plain };
std::string to_string(Criterion c);

struct UValues {
    double t = 0.0;
    CMatrix u;   // omega(t e11 - gamma_0)
    CMatrix u0;  // (u + i I)^{-1}
    bool pole = false;
};

/// u and u0 at a real point at distance >= delta_min from the support.
UValues u_and_u0(const FreeModel& model, double t, const std::vector<Interval>& support, double delta_min,
                 const ContinuationOptions& options = {});

/// H_j = det[(theta_j gamma_1 + i) u0 - I] and D_j = det[theta_j gamma_1 - u].
cplx regularized_criterion(const CMatrix& gamma1, double theta, const CMatrix& u0);
cplx plain_criterion(const CMatrix& gamma1, double theta, const CMatrix& u);

struct DetectOptions {
    Criterion criterion = Criterion::regularized;
    double delta_min = 1e-2;
    double max_scan_step = 0.02;
    int max_scan_points = 2000;
    int contour_nodes = 64;
    double root_tolerance = 1e-10;
    double zero_threshold = 1e-8;  // |H_j| at an accepted zero
    ContinuationOptions continuation;
    Exec exec = Exec::parallel;
};

struct OutlierZero {
    double t = 0.0;
    std::vector<int> m_per_spike;   // from the criterion in use
    int m = 0;
    std::vector<int> m_regularized;  // winding numbers of H_j
    std::vector<int> m_plain;        // winding numbers of D_j
    std::vector<double> residues;    // C_i(t), empty when spikes are not distinct
    double residue_imag_max = 0.0;
    double radius = 0.0;
    std::vector<double> h_abs;       // |H_j(t)|
};

struct RejectedCandidate {
    double t = 0.0;
    int spike = -1;
    std::string reason;  // "undecidable: edge proximity", "pole", "contour failure", "not a zero"
};

struct ScanPoint {
    double t = 0.0;
    bool ok = false;
    bool pole = false;
    std::vector<cplx> H;
    std::vector<double> D;
};

struct OutlierReport {
    Criterion criterion = Criterion::regularized;
    std::vector<double> thetas;
    std::vector<Interval> search_intervals;
    double delta_min = 0.0;
    std::vector<OutlierZero> zeros;
    std::vector<RejectedCandidate> rejected;
    std::vector<ScanPoint> scan;
};

/// Complement of `support` inside [-R, R], shrunk by delta_min on every side touching the support.
std::vector<Interval> search_intervals(const std::vector<Interval>& support, double R, double delta_min);

/// Norm bound of P(a, b) with ||a|| replaced by max(radius(mu), |theta_j|), times 1.2.
double outlier_search_radius(const NCPolynomial& p, const SpectralMeasure& mu, const SpectralMeasure& nu,
                             const SpikeSet& spikes);

/// Zeros of the spike determinants on the search intervals. `support` is the estimated support of
/// the law of P(a, b); candidates within delta_min plus one scan step of it are undecidable.
OutlierReport detect(const FreeModel& model, const SpikeSet& spikes, const std::vector<Interval>& intervals,
                     const std::vector<Interval>& support, const DetectOptions& options = {});

/// Contour values of u on the circle |z - t| = r with M nodes, by Newton continuation from the
/// real point t + r through the upper half-plane and reflection for the lower half.
/// Throws ConvergenceError if any node fails.
std::vector<CMatrix> contour_u(const FreeModel& model, double t, double r, int M, const ContinuationOptions& options = {});

/// Winding number of the values f_k sampled counterclockwise on a closed contour.
int winding_number(const std::vector<cplx>& f);

/// (1 / 2 pi i) closed integral of [(u(z) - theta gamma_1)^{-1}]_{11} dz by the trapezoid rule.
cplx residue(const std::vector<CMatrix>& u_nodes, const CMatrix& gamma1, double theta, double t, double r);

/// Fills residues for every zero (requires distinct spikes).
void residues(const FreeModel& model, const SpikeSet& spikes, OutlierReport& report, const DetectOptions& options = {});

/// det(I_np - (gamma_1 (x) T)(I_n (x) P_N) R_N (I_n (x) P_N^*)) with R_N = (beta (x) I_N - gamma_1 (x) C_N -
/// gamma_2 (x) Y_N)^{-1}, beta = z e11 - gamma_0, T = diag(theta_j - s), P_N the coordinate projection
/// onto the spike positions `spike_index` of the diagonal matrix diag(a_diag), and C_N the same
/// diagonal with the spikes replaced by s.
cplx finite_n_determinant(const LinearizationPencil& pencil, const std::vector<double>& a_diag,
                          const std::vector<int>& spike_index, const CMatrix& Y, cplx z, double s);

}  // namespace freespike
