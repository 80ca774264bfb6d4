#pragma once

#include <memory>
#include <string>
#include <vector>

#include "freespike/common.hpp"
#include "freespike/linearize.hpp"
#include "freespike/measures.hpp"

namespace freespike {

/// Free pair (a, b) with laws mu, nu, and a selfadjoint pencil in two indeterminates. The
/// operators c = gamma_1 (x) a and d = gamma_2 (x) b are free with amalgamation over M_n(C).
class FreeModel {
public:
    FreeModel(LinearizationPencil pencil, SpectralMeasure mu, SpectralMeasure nu);

    const LinearizationPencil& pencil() const { return pencil_; }
    const SpectralMeasure& mu() const { return eval_mu_->measure(); }
    const SpectralMeasure& nu() const { return eval_nu_->measure(); }
    int size() const { return pencil_.size(); }
    const CMatrix& gamma(int j) const { return pencil_.gamma[static_cast<std::size_t>(j)]; }

    /// nu is a single semicircle piece; nu_mean / nu_variance are then meaningful.
    bool nu_semicircular() const { return nu_semicircular_; }
    double nu_mean() const { return nu_mean_; }
    double nu_variance() const { return nu_variance_; }

    /// z e11 - gamma_0 + i eta I_n.
    CMatrix beta(cplx z, double eta = 0.0) const;

    /// E[(w - gamma_1 (x) a)^{-1}] and E[(w - gamma_2 (x) b)^{-1}].
    CMatrix cauchy_c(const CMatrix& w) const { return eval_mu_->matrix(gamma(1), w); }
    CMatrix cauchy_d(const CMatrix& w) const { return eval_nu_->matrix(gamma(2), w); }

private:
    LinearizationPencil pencil_;
    std::shared_ptr<const CauchyEvaluator> eval_mu_;
    std::shared_ptr<const CauchyEvaluator> eval_nu_;
    bool nu_semicircular_ = false;
    double nu_mean_ = 0.0;
    double nu_variance_ = 0.0;
};

/// Fixed-point map used for omega.
///   semicircular: w -> beta - m gamma_2 - s^2 gamma_2 G_c(w) gamma_2
///   general:      w -> h_d(h_c(w) + beta) + beta,   h(w) = G(w)^{-1} - w
/// `automatic` picks semicircular whenever nu is a semicircle.
enum class Route { automatic, semicircular, general };

struct SolverOptions {
    double tolerance = 1e-11;  // on ||w - T(w)||_F / max(1, ||w||_F)
    int max_iterations = 20000;
    Route route = Route::automatic;
    bool newton = true;  // Newton polish once the Picard residual is below 1e-4
};

struct SubordinationSolution {
    CMatrix beta;
    CMatrix omega;
    CMatrix F;  // G_c(omega) = E[(beta - c - d)^{-1}]
    int iterations = 0;
    double residual = 0.0;
    std::string method;  // "picard", "picard+newton", "newton"
};

Route resolve_route(const FreeModel& model, Route route);

/// T(w) for the chosen route.
CMatrix fixed_point_map(const FreeModel& model, const CMatrix& beta, const CMatrix& w, Route route);

/// ||w - T(w)||_F / max(1, ||w||_F).
double fixed_point_residual(const FreeModel& model, const CMatrix& beta, const CMatrix& w, Route route);

/// Omega at beta with Im(beta) positive definite (DomainError otherwise). Starts from w = beta,
/// damps the Picard step by 1/2 when the residual oscillates, and validates
/// lambda_min(Im omega) >= lambda_min(Im beta) - 10 tol. Throws ConvergenceError.
SubordinationSolution solve_omega(const FreeModel& model, const CMatrix& beta, const SolverOptions& options = {});

/// Newton iteration from a warm start, for arbitrary beta (real-axis and contour points).
/// Throws ConvergenceError if the residual does not reach the tolerance.
SubordinationSolution solve_omega_from(const FreeModel& model, const CMatrix& beta, const CMatrix& start,
                                       const SolverOptions& options = {});

/// F(beta) = E[(beta - c - d)^{-1}] via omega.
CMatrix pencil_resolvent_expectation(const FreeModel& model, const CMatrix& beta, const SolverOptions& options = {});

/// lambda_min of the Hermitian matrix Im(m) = (m - m^*) / 2i.
double lambda_min_imag(const CMatrix& m);

struct ContinuationOptions {
    std::vector<double> eta_schedule{1e-1, 1e-2, 1e-3, 1e-4, 1e-5};
    double extrapolation_disagreement = 1e-4;
    /// Newton solve exactly at eta = 0 from the extrapolated value (real points outside the
    /// support only).
    bool axis_polish = true;
    SolverOptions solver;
};

/// Solutions along beta(z, eta) for the schedule, warm-started in sequence.
struct EtaPath {
    std::vector<double> etas;
    std::vector<CMatrix> omegas;
    std::vector<CMatrix> Fs;
    int iterations = 0;
};

EtaPath solve_eta_path(const FreeModel& model, cplx z, const ContinuationOptions& options = {});

/// Linear extrapolation to eta = 0 on the last two path points, or the last point when the two
/// disagree by more than `disagreement` (relative).
CMatrix extrapolate_to_axis(const std::vector<double>& etas, const std::vector<CMatrix>& values, double disagreement,
                            bool* used_fallback = nullptr);

struct AxisSolution {
    cplx z = 0.0;
    CMatrix omega;  // u(z) = omega(z e11 - gamma_0)
    CMatrix F;
    CMatrix u0;         // (u + i I)^{-1} from the final omega
    CMatrix u0_eta;     // (omega(x + i eta_min) + i I)^{-1}, before extrapolation
    bool pole_proximity = false;
    bool polished = false;       // exact eta = 0 Newton solve accepted
    bool extrapolated = false;   // linear extrapolation accepted (otherwise smallest-eta value)
    double polish_gap = 0.0;     // ||omega_polished - omega_extrapolated|| / scale
    int iterations = 0;
};

/// omega(z e11 - gamma_0) for z in the closed upper half-plane via the eta schedule, followed by
/// an exact Newton solve at eta = 0 that is kept only if it stays close to the extrapolated value
/// and is selfadjoint (real z) or in the half-space (complex z). Lower half-plane points use
/// omega(conj(beta)) = omega(beta)^*.
AxisSolution continue_to_axis(const FreeModel& model, cplx z, const ContinuationOptions& options = {});

/// continue_to_axis on the real axis. If `support` is nonempty, x must lie at
/// distance >= delta_min from it (DomainError).
AxisSolution continue_to_real(const FreeModel& model, double x, const ContinuationOptions& options = {},
                              const std::vector<Interval>& support = {}, double delta_min = 0.0);

}  // namespace freespike
