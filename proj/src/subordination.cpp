#include "freespike/subordination.hpp"

#include <Eigen/Eigenvalues>

#include <deque>

namespace freespike {

FreeModel::FreeModel(LinearizationPencil pencil, SpectralMeasure mu, SpectralMeasure nu) : pencil_(std::move(pencil)) {
    if (pencil_.arity() != 2) throw SizeError("FreeModel needs a pencil in two indeterminates");
    eval_mu_ = std::make_shared<const CauchyEvaluator>(std::move(mu));
    eval_nu_ = std::make_shared<const CauchyEvaluator>(std::move(nu));
    nu_semicircular_ = eval_nu_->measure().is_semicircle(&nu_mean_, &nu_variance_);
}

CMatrix FreeModel::beta(cplx z, double eta) const {
    const int n = size();
    CMatrix b = -gamma(0);
    b(0, 0) += z;
    if (eta != 0.0) b += cplx(0.0, eta) * CMatrix::Identity(n, n);
    return b;
}

Route resolve_route(const FreeModel& model, Route route) {
    if (route == Route::automatic) return model.nu_semicircular() ? Route::semicircular : Route::general;
    if (route == Route::semicircular && !model.nu_semicircular()) {
        throw DomainError("semicircular route requested for a non-semicircular nu");
    }
    return route;
}

namespace {

double scale_of(const CMatrix& w) { return std::max(1.0, w.norm()); }

CMatrix checked_inverse(const CMatrix& m) {
    Eigen::PartialPivLU<CMatrix> lu(m);
    if (!(lu.rcond() > 1e-14)) throw DomainError("singular matrix in subordination map");
    return lu.inverse();
}

}  // namespace

CMatrix fixed_point_map(const FreeModel& model, const CMatrix& beta, const CMatrix& w, Route route) {
    route = resolve_route(model, route);
    const CMatrix& g2 = model.gamma(2);
    if (route == Route::semicircular) {
        return beta - model.nu_mean() * g2 - model.nu_variance() * (g2 * model.cauchy_c(w) * g2);
    }
    const CMatrix hc = checked_inverse(model.cauchy_c(w)) - w;
    const CMatrix v = hc + beta;
    const CMatrix hd = checked_inverse(model.cauchy_d(v)) - v;
    return hd + beta;
}

double fixed_point_residual(const FreeModel& model, const CMatrix& beta, const CMatrix& w, Route route) {
    return (w - fixed_point_map(model, beta, w, route)).norm() / scale_of(w);
}

double lambda_min_imag(const CMatrix& m) {
    const CMatrix im = (m - m.adjoint()) / cplx(0.0, 2.0);
    Eigen::SelfAdjointEigenSolver<CMatrix> es(im, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

namespace {

struct NewtonOutcome {
    bool converged = false;
    CMatrix w;
    double residual = 0.0;
    int steps = 0;
};

// Newton on Phi(w) = w - T(w) with a forward-difference Jacobian (Phi is holomorphic in w)
// and a backtracking line search.
NewtonOutcome newton(const FreeModel& model, const CMatrix& beta, CMatrix w, Route route, double tol, int max_steps) {
    const Eigen::Index n = w.rows();
    const Eigen::Index n2 = n * n;
    NewtonOutcome out;
    auto phi = [&](const CMatrix& x) { return CMatrix(x - fixed_point_map(model, beta, x, route)); };
    CMatrix f;
    try {
        f = phi(w);
    } catch (const DomainError&) {
        out.w = w;
        out.residual = std::numeric_limits<double>::infinity();
        return out;
    }
    double r = f.norm() / scale_of(w);
    for (int step = 0; step < max_steps; ++step) {
        if (r <= tol) {
            out.converged = true;
            break;
        }
        CMatrix J(n2, n2);
        const double h = 1e-7 * scale_of(w) / std::sqrt(static_cast<double>(n2));
        try {
            for (Eigen::Index k = 0; k < n2; ++k) {
                CMatrix wp = w;
                wp(k % n, k / n) += h;
                const CMatrix diff = phi(wp) - f;
                J.col(k) = Eigen::Map<const CVector>(diff.data(), n2) / h;
            }
        } catch (const DomainError&) {
            break;
        }
        Eigen::PartialPivLU<CMatrix> lu(J);
        const CVector delta = -lu.solve(Eigen::Map<const CVector>(f.data(), n2));
        if (!delta.allFinite()) break;
        const CMatrix dW = Eigen::Map<const CMatrix>(delta.data(), n, n);
        double lambda = 1.0;
        bool improved = false;
        for (int ls = 0; ls < 20; ++ls, lambda *= 0.5) {
            const CMatrix trial = w + lambda * dW;
            try {
                const CMatrix ft = phi(trial);
                const double rt = ft.norm() / scale_of(trial);
                if (std::isfinite(rt) && rt < r) {
                    w = trial;
                    f = ft;
                    r = rt;
                    improved = true;
                    break;
                }
            } catch (const DomainError&) {
            }
        }
        ++out.steps;
        if (!improved) break;
    }
    if (r <= tol) out.converged = true;
    out.w = w;
    out.residual = r;
    return out;
}

SubordinationSolution finish(const FreeModel& model, const CMatrix& beta, CMatrix omega, int iterations, double residual,
                             std::string method) {
    SubordinationSolution s;
    s.beta = beta;
    s.F = model.cauchy_c(omega);
    s.omega = std::move(omega);
    s.iterations = iterations;
    s.residual = residual;
    s.method = std::move(method);
    return s;
}

// Picard iteration from `start` with optional Newton acceleration. Returns false on failure.
bool picard(const FreeModel& model, const CMatrix& beta, CMatrix w, Route route, const SolverOptions& opt, bool allow_newton,
            SubordinationSolution& result) {
    std::deque<double> window;
    double damping = 1.0;
    int last_newton = -1000;
    for (int it = 0; it < opt.max_iterations; ++it) {
        const CMatrix Tw = fixed_point_map(model, beta, w, route);
        const double res = (w - Tw).norm() / scale_of(w);
        if (!std::isfinite(res)) return false;
        if (res <= opt.tolerance) {
            result = finish(model, beta, w, it, res, "picard");
            return true;
        }
        window.push_back(res);
        if (window.size() > 10) window.pop_front();
        if (window.size() == 10) {
            int increases = 0;
            for (std::size_t k = 1; k < window.size(); ++k) increases += window[k] > window[k - 1];
            if (increases >= 5 && damping > 0.1) {
                damping *= 0.5;
                window.clear();
            }
        }
        if (allow_newton && it >= 50 && res < 1e-4 && it - last_newton >= 50) {
            last_newton = it;
            NewtonOutcome nw = newton(model, beta, w, route, opt.tolerance, 40);
            if (nw.converged) {
                result = finish(model, beta, nw.w, it + nw.steps, nw.residual, "picard+newton");
                return true;
            }
        }
        w = (1.0 - damping) * w + damping * Tw;
    }
    return false;
}

bool in_half_space(const CMatrix& beta, const CMatrix& omega, double tol) {
    return lambda_min_imag(omega) >= lambda_min_imag(beta) - 10.0 * tol * scale_of(omega);
}

}  // namespace

SubordinationSolution solve_omega(const FreeModel& model, const CMatrix& beta, const SolverOptions& options) {
    if (beta.rows() != model.size() || beta.cols() != model.size()) throw SizeError("solve_omega: beta has wrong size");
    if (!(lambda_min_imag(beta) > 0.0)) throw DomainError("solve_omega: Im(beta) must be positive definite");
    const Route route = resolve_route(model, options.route);
    SubordinationSolution sol;
    if (picard(model, beta, beta, route, options, options.newton, sol) && in_half_space(beta, sol.omega, options.tolerance)) {
        return sol;
    }
    // Newton may have jumped to a non-Herglotz branch; the plain iteration stays in the half-space.
    if (options.newton && picard(model, beta, beta, route, options, false, sol) &&
        in_half_space(beta, sol.omega, options.tolerance)) {
        return sol;
    }
    throw ConvergenceError("subordination fixed point did not converge");
}

SubordinationSolution solve_omega_from(const FreeModel& model, const CMatrix& beta, const CMatrix& start,
                                       const SolverOptions& options) {
    const Route route = resolve_route(model, options.route);
    NewtonOutcome nw = newton(model, beta, start, route, options.tolerance, 60);
    if (!nw.converged) throw ConvergenceError("Newton continuation did not converge");
    return finish(model, beta, nw.w, nw.steps, nw.residual, "newton");
}

CMatrix pencil_resolvent_expectation(const FreeModel& model, const CMatrix& beta, const SolverOptions& options) {
    return solve_omega(model, beta, options).F;
}

// ---------------------------------------------------------------------------------------------
// Continuation towards the real axis

namespace {

bool try_step(const FreeModel& model, cplx z, double eta, const CMatrix& start, const SolverOptions& opt,
              SubordinationSolution& out) {
    const CMatrix b = model.beta(z, eta);
    try {
        out = solve_omega_from(model, b, start, opt);
    } catch (const ConvergenceError&) {
        return false;
    }
    return in_half_space(b, out.omega, opt.tolerance);
}

// Reaches eta_to from a solution at eta_from, inserting geometric midpoints on failure.
bool advance(const FreeModel& model, cplx z, double eta_from, double eta_to, const CMatrix& start, const SolverOptions& opt,
             int depth, SubordinationSolution& out) {
    if (try_step(model, z, eta_to, start, opt, out)) return true;
    if (depth == 0) return false;
    const double mid = std::sqrt(eta_from * eta_to);
    SubordinationSolution half;
    if (!advance(model, z, eta_from, mid, start, opt, depth - 1, half)) return false;
    return advance(model, z, mid, eta_to, half.omega, opt, depth - 1, out);
}

}  // namespace

EtaPath solve_eta_path(const FreeModel& model, cplx z, const ContinuationOptions& options) {
    if (options.eta_schedule.empty()) throw DomainError("empty eta schedule");
    EtaPath path;
    CMatrix prev;
    double prev_eta = 0.0;
    for (double eta : options.eta_schedule) {
        if (!(eta > 0.0)) throw DomainError("eta schedule entries must be positive");
        SubordinationSolution sol;
        const CMatrix b = model.beta(z, eta);
        if (path.omegas.empty()) {
            sol = solve_omega(model, b, options.solver);
        } else if (!advance(model, z, prev_eta, eta, prev, options.solver, 2, sol)) {
            sol = solve_omega(model, b, options.solver);
        }
        path.iterations += sol.iterations;
        prev = sol.omega;
        prev_eta = eta;
        path.etas.push_back(eta);
        path.omegas.push_back(sol.omega);
        path.Fs.push_back(sol.F);
    }
    return path;
}

CMatrix extrapolate_to_axis(const std::vector<double>& etas, const std::vector<CMatrix>& values, double disagreement,
                            bool* used_fallback) {
    const std::size_t k = values.size();
    if (k == 0) throw DomainError("extrapolate_to_axis: no values");
    if (used_fallback) *used_fallback = true;
    if (k == 1) return values.back();
    const double e1 = etas[k - 2], e2 = etas[k - 1];
    const CMatrix& v1 = values[k - 2];
    const CMatrix& v2 = values[k - 1];
    const CMatrix ex = v2 - (v1 - v2) * (e2 / (e1 - e2));
    if ((ex - v2).norm() > disagreement * scale_of(v2) || !ex.allFinite()) return v2;
    if (used_fallback) *used_fallback = false;
    return ex;
}

AxisSolution continue_to_axis(const FreeModel& model, cplx z, const ContinuationOptions& options) {
    if (z.imag() < 0.0) {
        AxisSolution mirrored = continue_to_axis(model, std::conj(z), options);
        mirrored.z = z;
        mirrored.omega = mirrored.omega.adjoint().eval();
        mirrored.F = mirrored.F.adjoint().eval();
        const int n = model.size();
        mirrored.u0 = (mirrored.omega + kI * CMatrix::Identity(n, n)).inverse();
        mirrored.u0_eta = mirrored.u0;
        return mirrored;
    }
    const EtaPath path = solve_eta_path(model, z, options);
    const int n = model.size();
    const CMatrix I = CMatrix::Identity(n, n);
    const bool real_axis = z.imag() == 0.0;

    AxisSolution out;
    out.z = z;
    out.iterations = path.iterations;
    out.u0_eta = (path.omegas.back() + kI * I).inverse();

    const std::size_t k = path.omegas.size();
    if (k >= 3) {
        const double n0 = path.omegas[k - 3].norm(), n1 = path.omegas[k - 2].norm(), n2 = path.omegas[k - 1].norm();
        out.pole_proximity = n1 > 2.0 * n0 && n2 > 2.0 * n1;
    }

    bool fallback = false;
    CMatrix omega = extrapolate_to_axis(path.etas, path.omegas, options.extrapolation_disagreement, &fallback);
    out.extrapolated = !fallback;

    if (options.axis_polish && !out.pole_proximity) {
        const CMatrix b = model.beta(z);
        try {
            SubordinationSolution s = solve_omega_from(model, b, omega, options.solver);
            out.polish_gap = (s.omega - omega).norm() / scale_of(omega);
            bool ok = out.polish_gap <= 1e-3;
            if (real_axis) {
                // the boundary value on the real axis outside the spectrum is selfadjoint
                ok = ok && (s.omega - s.omega.adjoint()).norm() <= 1e-8 * scale_of(s.omega);
            } else {
                ok = ok && in_half_space(b, s.omega, options.solver.tolerance);
            }
            if (ok) {
                omega = real_axis ? CMatrix(hermitian_part(s.omega)) : s.omega;
                out.polished = true;
                out.iterations += s.iterations;
            }
        } catch (const ConvergenceError&) {
        } catch (const DomainError&) {
        }
    }
    out.omega = omega;
    try {
        out.F = model.cauchy_c(omega);
    } catch (const DomainError&) {
        out.F = extrapolate_to_axis(path.etas, path.Fs, options.extrapolation_disagreement);
    }
    out.u0 = (omega + kI * I).inverse();
    return out;
}

AxisSolution continue_to_real(const FreeModel& model, double x, const ContinuationOptions& options,
                              const std::vector<Interval>& support, double delta_min) {
    if (!support.empty() && distance_to(support, x) < delta_min) {
        throw DomainError("continue_to_real: x = " + std::to_string(x) + " is within delta_min of the support");
    }
    return continue_to_axis(model, cplx(x, 0.0), options);
}

}  // namespace freespike
