#include "freespike/outliers.hpp"

#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include <numbers>

namespace freespike {

using std::numbers::pi;

SpikeSet SpikeSet::make(std::vector<double> thetas, const SpectralMeasure& mu) {
    for (double t : thetas) {
        if (!std::isfinite(t)) throw DomainError("spike values must be finite");
        if (mu.distance_to_support(t) <= 0.0) {
            throw DomainError("spike " + std::to_string(t) + " lies in the support of mu");
        }
    }
    std::sort(thetas.begin(), thetas.end(), std::greater<>());
    SpikeSet s;
    s.distinct = std::adjacent_find(thetas.begin(), thetas.end()) == thetas.end();
    s.thetas = std::move(thetas);
    return s;
}

std::string to_string(Criterion c) { return c == Criterion::regularized ? "regularized" : "plain"; }

UValues u_and_u0(const FreeModel& model, double t, const std::vector<Interval>& support, double delta_min,
                 const ContinuationOptions& options) {
    const AxisSolution a = continue_to_real(model, t, options, support, delta_min);
    UValues v;
    v.t = t;
    v.u = a.omega;
    v.u0 = a.pole_proximity ? a.u0_eta : a.u0;
    v.pole = a.pole_proximity;
    return v;
}

cplx regularized_criterion(const CMatrix& gamma1, double theta, const CMatrix& u0) {
    const Eigen::Index n = u0.rows();
    const CMatrix m = (theta * gamma1 + kI * CMatrix::Identity(n, n)) * u0 - CMatrix::Identity(n, n);
    return m.determinant();
}

cplx plain_criterion(const CMatrix& gamma1, double theta, const CMatrix& u) {
    return CMatrix(theta * gamma1 - u).determinant();
}

std::vector<Interval> search_intervals(const std::vector<Interval>& support, double R, double delta_min) {
    std::vector<Interval> out;
    double lo = -R;
    bool lo_touches = false;
    for (const auto& s : support) {
        const double hi = s.lo - delta_min;
        const double start = lo_touches ? lo + delta_min : lo;
        if (hi > start && s.lo > -R) out.push_back({start, std::min(hi, R), false});
        lo = std::max(lo, s.hi);
        lo_touches = true;
    }
    const double start = lo_touches ? lo + delta_min : lo;
    if (R > start) out.push_back({start, R, false});
    std::vector<Interval> kept;
    for (const auto& iv : out) {
        if (iv.hi > iv.lo) kept.push_back(iv);
    }
    return kept;
}

double outlier_search_radius(const NCPolynomial& p, const SpectralMeasure& mu, const SpectralMeasure& nu,
                             const SpikeSet& spikes) {
    double ra = mu.support_radius();
    for (double t : spikes.thetas) ra = std::max(ra, std::abs(t));
    const double radii[2] = {ra, nu.support_radius()};
    return 1.2 * std::max(norm_bound(p, radii), 1.0);
}

int winding_number(const std::vector<cplx>& f) {
    double total = 0.0;
    const std::size_t M = f.size();
    for (std::size_t k = 0; k < M; ++k) total += std::arg(f[(k + 1) % M] / f[k]);
    return static_cast<int>(std::lround(total / (2.0 * pi)));
}

cplx residue(const std::vector<CMatrix>& u_nodes, const CMatrix& gamma1, double theta, double t, double r) {
    const std::size_t M = u_nodes.size();
    cplx acc = 0.0;
    for (std::size_t k = 0; k < M; ++k) {
        const cplx z = t + r * std::polar(1.0, 2.0 * pi * k / M);
        const CMatrix g = (u_nodes[k] - theta * gamma1).inverse();
        acc += g(0, 0) * (z - t);
    }
    return acc / static_cast<double>(M);
}

namespace {

double scale_of(const CMatrix& w) { return std::max(1.0, w.norm()); }

bool contour_step(const FreeModel& model, cplx z, const CMatrix& start, const SolverOptions& opt, CMatrix& out) {
    const CMatrix b = model.beta(z);
    try {
        SubordinationSolution s = solve_omega_from(model, b, start, opt);
        if (lambda_min_imag(s.omega) < lambda_min_imag(b) - 10.0 * opt.tolerance * scale_of(s.omega)) return false;
        out = std::move(s.omega);
        return true;
    } catch (const Error&) {
        return false;
    }
}

bool contour_advance(const FreeModel& model, double t, double r, double phi0, double phi1, const CMatrix& start,
                     const SolverOptions& opt, int depth, CMatrix& out) {
    if (contour_step(model, t + r * std::polar(1.0, phi1), start, opt, out)) return true;
    if (depth == 0) return false;
    const double mid = 0.5 * (phi0 + phi1);
    CMatrix half;
    if (!contour_advance(model, t, r, phi0, mid, start, opt, depth - 1, half)) return false;
    return contour_advance(model, t, r, mid, phi1, half, opt, depth - 1, out);
}

}  // namespace

std::vector<CMatrix> contour_u(const FreeModel& model, double t, double r, int M, const ContinuationOptions& options) {
    if (M < 4 || M % 2 != 0) throw DomainError("contour node count must be even and >= 4");
    std::vector<CMatrix> nodes(static_cast<std::size_t>(M));
    const AxisSolution right = continue_to_real(model, t + r, options);
    if (!right.polished) throw ConvergenceError("contour start point not resolved on the real axis");
    nodes[0] = right.omega;
    for (int k = 1; k <= M / 2; ++k) {
        const double phi0 = 2.0 * pi * (k - 1) / M, phi1 = 2.0 * pi * k / M;
        if (!contour_advance(model, t, r, phi0, phi1, nodes[k - 1], options.solver, 6, nodes[k])) {
            throw ConvergenceError("contour continuation failed at node " + std::to_string(k));
        }
    }
    // the march must arrive on the same branch as direct continuation at t - r
    const AxisSolution left = continue_to_real(model, t - r, options);
    CMatrix& end = nodes[static_cast<std::size_t>(M / 2)];
    if ((end - left.omega).norm() > 1e-6 * scale_of(left.omega)) {
        throw ConvergenceError("contour continuation arrived on a different branch");
    }
    end = hermitian_part(end);
    for (int k = M / 2 + 1; k < M; ++k) nodes[k] = nodes[M - k].adjoint();
    return nodes;
}

namespace {

ScanPoint scan_point(const FreeModel& model, const SpikeSet& spikes, double t, const ContinuationOptions& cont) {
    ScanPoint sp;
    sp.t = t;
    try {
        const AxisSolution a = continue_to_real(model, t, cont);
        sp.pole = a.pole_proximity;
        sp.ok = a.polished || a.pole_proximity;
        const CMatrix u0 = a.pole_proximity ? a.u0_eta : a.u0;
        for (double th : spikes.thetas) {
            sp.H.push_back(regularized_criterion(model.gamma(1), th, u0));
            sp.D.push_back(plain_criterion(model.gamma(1), th, a.omega).real());
        }
    } catch (const Error&) {
        sp.ok = false;
        sp.H.assign(spikes.size(), cplx(std::nan(""), 0.0));
        sp.D.assign(spikes.size(), std::nan(""));
    }
    return sp;
}

struct Candidate {
    double t;
    int spike;
};

// value of D_j or |H_j| at a real point; throws on solver failure
struct PointEval {
    const FreeModel& model;
    const ContinuationOptions& cont;
    const CMatrix& gamma1;
    double theta;

    AxisSolution solve(double t) const {
        AxisSolution a = continue_to_real(model, t, cont);
        if (!a.polished) throw ConvergenceError("real-axis value not resolved");
        return a;
    }
    double D(double t) const { return plain_criterion(gamma1, theta, solve(t).omega).real(); }
    double absH(double t) const { return std::abs(regularized_criterion(gamma1, theta, solve(t).u0)); }
};

}  // namespace

OutlierReport detect(const FreeModel& model, const SpikeSet& spikes, const std::vector<Interval>& intervals,
                     const std::vector<Interval>& support, const DetectOptions& options) {
    OutlierReport rep;
    rep.criterion = options.criterion;
    rep.thetas = spikes.thetas;
    rep.search_intervals = intervals;
    rep.delta_min = options.delta_min;
    for (const auto& iv : intervals) {
        if (!support.empty() && (distance_to(support, iv.lo) < options.delta_min * (1.0 - 1e-12) ||
                                 distance_to(support, iv.hi) < options.delta_min * (1.0 - 1e-12))) {
            throw DomainError("search interval [" + std::to_string(iv.lo) + ", " + std::to_string(iv.hi) +
                              "] is closer than delta_min to the support");
        }
    }
    if (spikes.size() == 0) return rep;
    const CMatrix& g1 = model.gamma(1);
    const ContinuationOptions& cont = options.continuation;

    // 1. scan
    std::vector<std::size_t> offsets{0};
    std::vector<double> ts;
    std::vector<double> steps;
    for (const auto& iv : intervals) {
        int npts = static_cast<int>(std::ceil(iv.length() / options.max_scan_step)) + 1;
        npts = std::clamp(npts, 16, options.max_scan_points);
        for (int i = 0; i < npts; ++i) ts.push_back(iv.lo + iv.length() * i / (npts - 1));
        steps.push_back(iv.length() / (npts - 1));
        offsets.push_back(ts.size());
    }
    rep.scan.resize(ts.size());
    for_each_index(ts.size(), options.exec, [&](std::size_t i) { rep.scan[i] = scan_point(model, spikes, ts[i], cont); });

    // 2. candidates: sign changes of D_j and local minima of |H_j| (or |D_j|)
    std::vector<Candidate> candidates;
    auto add_rejected = [&](double t, int j, const std::string& why) { rep.rejected.push_back({t, j, why}); };
    for (std::size_t k = 0; k < intervals.size(); ++k) {
        const double step = steps[k];
        for (std::size_t j = 0; j < spikes.size(); ++j) {
            const PointEval ev{model, cont, g1, spikes.thetas[j]};
            auto edge_close = [&](double t) { return !support.empty() && distance_to(support, t) < options.delta_min + step; };
            for (std::size_t i = offsets[k]; i + 1 < offsets[k + 1]; ++i) {
                const ScanPoint& a = rep.scan[i];
                const ScanPoint& b = rep.scan[i + 1];
                if (!a.ok || !b.ok) continue;
                const double da = a.D[j], db = b.D[j];
                if (da == 0.0) {
                    candidates.push_back({a.t, static_cast<int>(j)});
                    continue;
                }
                if (da * db < 0.0) {
                    double root = 0.5 * (a.t + b.t);
                    try {
                        boost::uintmax_t iters = 200;
                        const double tol = options.root_tolerance;
                        auto r = boost::math::tools::toms748_solve([&](double t) { return ev.D(t); }, a.t, b.t, da, db,
                                                                   [tol](double l, double h) { return h - l <= tol; }, iters);
                        root = 0.5 * (r.first + r.second);
                    } catch (const std::exception&) {
                        add_rejected(root, static_cast<int>(j), "pole");
                        continue;
                    }
                    if (edge_close(root)) {
                        add_rejected(root, static_cast<int>(j), "undecidable: edge proximity");
                    } else {
                        candidates.push_back({root, static_cast<int>(j)});
                    }
                }
            }
            // even-order zeros
            for (std::size_t i = offsets[k] + 1; i + 1 < offsets[k + 1]; ++i) {
                const ScanPoint& a = rep.scan[i - 1];
                const ScanPoint& m = rep.scan[i];
                const ScanPoint& b = rep.scan[i + 1];
                if (!a.ok || !m.ok || !b.ok) continue;
                if (a.D[j] * m.D[j] < 0.0 || m.D[j] * b.D[j] < 0.0) continue;
                auto mag = [&](const ScanPoint& p) {
                    return options.criterion == Criterion::regularized ? std::abs(p.H[j]) : std::abs(p.D[j]);
                };
                if (!(mag(m) < mag(a) && mag(m) < mag(b))) continue;
                try {
                    auto f = [&](double t) {
                        return options.criterion == Criterion::regularized ? ev.absH(t) : std::abs(ev.D(t));
                    };
                    boost::uintmax_t iters = 200;
                    auto r = boost::math::tools::brent_find_minima(f, a.t, b.t, 40, iters);
                    if (ev.absH(r.first) < options.zero_threshold) {
                        if (edge_close(r.first)) {
                            add_rejected(r.first, static_cast<int>(j), "undecidable: edge proximity");
                        } else {
                            candidates.push_back({r.first, static_cast<int>(j)});
                        }
                    }
                } catch (const std::exception&) {
                }
            }
        }
    }

    // 3. validate candidates: |H_j(t)| small
    std::vector<Candidate> valid;
    for (const auto& c : candidates) {
        const PointEval ev{model, cont, g1, spikes.thetas[static_cast<std::size_t>(c.spike)]};
        try {
            if (ev.absH(c.t) < options.zero_threshold) {
                valid.push_back(c);
            } else {
                add_rejected(c.t, c.spike, "pole");
            }
        } catch (const Error&) {
            add_rejected(c.t, c.spike, "pole");
        }
    }
    std::sort(valid.begin(), valid.end(), [](const Candidate& a, const Candidate& b) { return a.t < b.t; });
    std::vector<double> zs;
    for (const auto& c : valid) {
        if (zs.empty() || c.t - zs.back() > 1e-7 * std::max(1.0, std::abs(c.t))) zs.push_back(c.t);
    }

    // 4. multiplicities by winding numbers
    std::vector<OutlierZero> zeros(zs.size());
    std::vector<std::string> failure(zs.size());
    for_each_index(zs.size(), options.exec, [&](std::size_t q) {
        OutlierZero z;
        z.t = zs[q];
        double r = options.delta_min / 2.0;
        if (q > 0) r = std::min(r, 0.5 * (zs[q] - zs[q - 1]));
        if (q + 1 < zs.size()) r = std::min(r, 0.5 * (zs[q + 1] - zs[q]));
        if (!support.empty()) r = std::min(r, 0.5 * distance_to(support, zs[q]));
        z.radius = r;
        std::vector<CMatrix> nodes;
        try {
            nodes = contour_u(model, z.t, r, options.contour_nodes, cont);
        } catch (const Error& e) {
            failure[q] = std::string("contour failure: ") + e.what();
            zeros[q] = z;
            return;
        }
        const Eigen::Index n = model.size();
        const CMatrix I = CMatrix::Identity(n, n);
        for (std::size_t j = 0; j < spikes.size(); ++j) {
            const double th = spikes.thetas[j];
            std::vector<cplx> hv, dv;
            for (const auto& u : nodes) {
                hv.push_back(regularized_criterion(g1, th, (u + kI * I).inverse()));
                dv.push_back(plain_criterion(g1, th, u));
            }
            z.m_regularized.push_back(winding_number(hv));
            z.m_plain.push_back(winding_number(dv));
            try {
                z.h_abs.push_back(PointEval{model, cont, g1, th}.absH(z.t));
            } catch (const Error&) {
                z.h_abs.push_back(std::nan(""));
            }
        }
        z.m_per_spike = options.criterion == Criterion::regularized ? z.m_regularized : z.m_plain;
        z.m = 0;
        for (int mj : z.m_per_spike) z.m += mj;
        if (spikes.distinct) {
            for (std::size_t i = 0; i < spikes.size(); ++i) {
                const cplx c = residue(nodes, g1, spikes.thetas[i], z.t, r);
                z.residues.push_back(c.real());
                z.residue_imag_max = std::max(z.residue_imag_max, std::abs(c.imag()));
            }
        }
        zeros[q] = std::move(z);
    });
    for (std::size_t q = 0; q < zs.size(); ++q) {
        if (!failure[q].empty()) {
            add_rejected(zs[q], -1, failure[q]);
        } else if (zeros[q].m < 1) {
            add_rejected(zs[q], -1, "zero winding number");
        } else {
            rep.zeros.push_back(std::move(zeros[q]));
        }
    }
    std::sort(rep.rejected.begin(), rep.rejected.end(), [](const auto& a, const auto& b) { return a.t < b.t; });
    return rep;
}

void residues(const FreeModel& model, const SpikeSet& spikes, OutlierReport& report, const DetectOptions& options) {
    if (!spikes.distinct) throw DomainError("residues need distinct spikes");
    for (auto& z : report.zeros) {
        const std::vector<CMatrix> nodes = contour_u(model, z.t, z.radius, options.contour_nodes, options.continuation);
        z.residues.clear();
        z.residue_imag_max = 0.0;
        for (double th : spikes.thetas) {
            const cplx c = residue(nodes, model.gamma(1), th, z.t, z.radius);
            z.residues.push_back(c.real());
            z.residue_imag_max = std::max(z.residue_imag_max, std::abs(c.imag()));
        }
    }
}

cplx finite_n_determinant(const LinearizationPencil& pencil, const std::vector<double>& a_diag,
                          const std::vector<int>& spike_index, const CMatrix& Y, cplx z, double s) {
    const Eigen::Index p = static_cast<Eigen::Index>(spike_index.size());
    if (p == 0) return 1.0;
    const Eigen::Index n = pencil.size();
    const Eigen::Index N = static_cast<Eigen::Index>(a_diag.size());
    if (Y.rows() != N || Y.cols() != N) throw SizeError("finite_n_determinant: Y has the wrong size");
    std::vector<double> c = a_diag;
    std::vector<double> T(static_cast<std::size_t>(p));
    for (Eigen::Index j = 0; j < p; ++j) {
        const int idx = spike_index[static_cast<std::size_t>(j)];
        if (idx < 0 || idx >= N) throw SizeError("finite_n_determinant: spike index out of range");
        T[static_cast<std::size_t>(j)] = a_diag[static_cast<std::size_t>(idx)] - s;
        c[static_cast<std::size_t>(idx)] = s;
    }
    const CMatrix& g0 = pencil.gamma[0];
    const CMatrix& g1 = pencil.gamma[1];
    const CMatrix& g2 = pencil.gamma[2];
    CMatrix beta = -g0;
    beta(0, 0) += z;
    CMatrix M = CMatrix::Zero(n * N, n * N);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index k = 0; k < n; ++k) {
            auto blk = M.block(i * N, k * N, N, N);
            if (g2(i, k) != 0.0) blk -= g2(i, k) * Y;
            for (Eigen::Index r = 0; r < N; ++r) blk(r, r) += beta(i, k) - g1(i, k) * c[static_cast<std::size_t>(r)];
        }
    }
    Eigen::PartialPivLU<CMatrix> lu(M);
    CMatrix E = CMatrix::Zero(n * N, n * p);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < p; ++j) E(i * N + spike_index[static_cast<std::size_t>(j)], i * p + j) = 1.0;
    }
    const CMatrix X = lu.solve(E);
    CMatrix K(n * p, n * p);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < p; ++j) K.row(i * p + j) = X.row(i * N + spike_index[static_cast<std::size_t>(j)]);
    }
    CMatrix GT = CMatrix::Zero(n * p, n * p);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index k = 0; k < n; ++k) {
            for (Eigen::Index j = 0; j < p; ++j) GT(i * p + j, k * p + j) = g1(i, k) * T[static_cast<std::size_t>(j)];
        }
    }
    return CMatrix(CMatrix::Identity(n * p, n * p) - GT * K).determinant();
}

}  // namespace freespike
