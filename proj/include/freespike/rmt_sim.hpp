#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "freespike/common.hpp"
#include "freespike/measures.hpp"
#include "freespike/ncpoly.hpp"
#include "freespike/outliers.hpp"
#include "freespike/parallel.hpp"
#include "freespike/spectrum.hpp"

namespace freespike {

/// unitary_invariant: B_N = U D_N U^* with U Haar and D_N from nu.
/// wigner_gue / wigner_rademacher: Y_N = X_N / sqrt(N), nu forced to semicircle(0, 1).
enum class Ensemble { unitary_invariant, wigner_gue, wigner_rademacher };
enum class BulkPlacement { quantiles, iid };
enum class WignerLaw { gue, rademacher };

std::string to_string(Ensemble e);
Ensemble ensemble_from_string(const std::string& s);

struct ModelSpec {
    NCPolynomial P{2};
    SpectralMeasure mu = SpectralMeasure::dirac(0.0);
    SpectralMeasure nu = SpectralMeasure::semicircle(0.0, 1.0);
    SpikeSet spikes;
    Ensemble ensemble = Ensemble::unitary_invariant;
    int N = 1000;
    std::uint64_t seed = 1;
    BulkPlacement placement = BulkPlacement::quantiles;
};

/// Independent stream seed for component `stream` of a run with seed `seed` (splitmix64).
std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t stream);

/// Haar unitary from the QR decomposition of a complex Ginibre matrix with the phases of diag(R)
/// moved into Q.
CMatrix haar_unitary(int N, std::uint64_t seed);

/// Hermitian X with independent entries: real diagonal with variance 1, off-diagonal entries with
/// independent real and imaginary parts of variance 1/2. Not normalized by sqrt(N).
CMatrix wigner(int N, WignerLaw law, std::uint64_t seed);

/// Diagonal of A_N: the spikes followed by N - p bulk values from mu.
std::vector<double> build_A(const ModelSpec& spec);

/// Y_N for the configured ensemble.
CMatrix build_Y(const ModelSpec& spec);

struct SimResult {
    int N = 0;
    std::uint64_t seed = 0;
    std::vector<double> eigenvalues;         // ascending
    std::vector<double> empirical_outliers;  // outside support +- margin
    std::vector<double> margins;             // margin used at each support interval (lo, hi pairs)
    std::vector<double> predicted;           // predicted zero locations used for overlaps
    std::vector<double> windows;             // overlap half-widths per predicted zero
    Eigen::MatrixXd overlaps;                // spikes x predicted zeros
    double ks_distance = 0.0;                // bulk vs predicted profile
    double hermiticity_error = 0.0;
    double seconds = 0.0;
};

struct RunOptions {
    bool overlaps = true;           // eigenvectors for the unitary ensemble when zeros are predicted
    double min_outlier_margin = 0.05;
    double max_window = 0.25;
};

/// One Monte Carlo sample of P(A_N, Y_N) analysed against the predictions.
SimResult run(const ModelSpec& spec, const DensityProfile& profile, const OutlierReport* predictions,
              const RunOptions& options = {});

/// run() for each seed; seeds are processed in parallel and returned in input order.
std::vector<SimResult> run_batch(const ModelSpec& spec, const std::vector<std::uint64_t>& seeds,
                                 const DensityProfile& profile, const OutlierReport* predictions,
                                 const RunOptions& options = {}, Exec exec = Exec::parallel);

/// (1/N) sum_i 1 / (z - lambda_i).
cplx empirical_stieltjes(const std::vector<double>& eigenvalues, cplx z);

/// sup_x |F_emp(x) - F(x)| with F the normalized cdf of the profile.
double kolmogorov_distance(std::vector<double> samples, const DensityProfile& profile);

/// sup_x |F_emp(x) - F(x)| with F the cdf of a measure.
double kolmogorov_distance(std::vector<double> samples, const SpectralMeasure& m);

/// Eigenvalues outside the support by more than the edge margin max(min_margin, 3 x mean gap of
/// the ten bulk eigenvalues nearest the edge).
std::vector<double> empirical_outliers(const std::vector<double>& eigenvalues, const std::vector<Interval>& support,
                                       double min_margin, std::vector<double>* margins = nullptr);

}  // namespace freespike
