#include "freespike/rmt_sim.hpp"

#include <chrono>
#include <iterator>
#include <random>

#include "freespike/hermitian_eig.hpp"

namespace freespike {

std::string to_string(Ensemble e) {
    switch (e) {
        case Ensemble::unitary_invariant: return "unitary_invariant";
        case Ensemble::wigner_gue: return "wigner_gue";
        case Ensemble::wigner_rademacher: return "wigner_rademacher";
    }
    return "unknown";
}

Ensemble ensemble_from_string(const std::string& s) {
    if (s == "unitary_invariant" || s == "unitary") return Ensemble::unitary_invariant;
    if (s == "wigner_gue" || s == "gue") return Ensemble::wigner_gue;
    if (s == "wigner_rademacher" || s == "rademacher") return Ensemble::wigner_rademacher;
    throw DomainError("unsupported ensemble '" + s + "'");
}

std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

CMatrix haar_unitary(int N, std::uint64_t seed) {
    if (N < 1) throw SizeError("haar_unitary: N must be positive");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
    CMatrix g(N, N);
    for (int j = 0; j < N; ++j)
        for (int i = 0; i < N; ++i) {
            const double re = normal(rng);
            const double im = normal(rng);
            g(i, j) = cplx(re, im);
        }
    CMatrix q;
    CVector r;
    householder_qr(std::move(g), q, r);
    for (int j = 0; j < N; ++j) {
        const double a = std::abs(r(j));
        if (a > 0.0) q.col(j) *= r(j) / a;
    }
    return q;
}

CMatrix wigner(int N, WignerLaw law, std::uint64_t seed) {
    if (N < 1) throw SizeError("wigner: N must be positive");
    std::mt19937_64 rng(seed);
    CMatrix x(N, N);
    if (law == WignerLaw::gue) {
        std::normal_distribution<double> diag(0.0, 1.0);
        std::normal_distribution<double> off(0.0, std::sqrt(0.5));
        for (int j = 0; j < N; ++j) {
            x(j, j) = diag(rng);
            for (int i = j + 1; i < N; ++i) {
                const double re = off(rng);
                const double im = off(rng);
                x(i, j) = cplx(re, im);
                x(j, i) = std::conj(x(i, j));
            }
        }
    } else {
        std::bernoulli_distribution coin(0.5);
        const double s = 1.0 / std::sqrt(2.0);
        auto sign = [&] { return coin(rng) ? 1.0 : -1.0; };
        for (int j = 0; j < N; ++j) {
            x(j, j) = sign();
            for (int i = j + 1; i < N; ++i) {
                const double re = sign();
                const double im = sign();
                x(i, j) = cplx(s * re, s * im);
                x(j, i) = std::conj(x(i, j));
            }
        }
    }
    return x;
}

std::vector<double> build_A(const ModelSpec& spec) {
    const auto& thetas = spec.spikes.thetas;
    const int p = static_cast<int>(thetas.size());
    if (spec.N <= p) throw SizeError("build_A: N must exceed the number of spikes");
    for (double t : thetas)
        if (spec.mu.distance_to_support(t) <= 0.0)
            throw DomainError("build_A: spike " + std::to_string(t) + " lies in supp(mu)");
    std::vector<double> a(thetas.begin(), thetas.end());
    const auto bulk = spec.placement == BulkPlacement::quantiles ? quantiles(spec.mu, spec.N - p)
                                                                 : sample(spec.mu, spec.N - p, substream_seed(spec.seed, 0));
    a.insert(a.end(), bulk.begin(), bulk.end());
    return a;
}

CMatrix build_Y(const ModelSpec& spec) {
    const int N = spec.N;
    switch (spec.ensemble) {
        case Ensemble::unitary_invariant: {
            const auto d = spec.placement == BulkPlacement::quantiles ? quantiles(spec.nu, N)
                                                                      : sample(spec.nu, N, substream_seed(spec.seed, 1));
            const CMatrix u = haar_unitary(N, substream_seed(spec.seed, 2));
            Eigen::VectorXd dv = Eigen::Map<const Eigen::VectorXd>(d.data(), N);
            CMatrix y = u * dv.asDiagonal() * u.adjoint();
            return hermitian_part(y);
        }
        case Ensemble::wigner_gue:
        case Ensemble::wigner_rademacher: {
            const auto law = spec.ensemble == Ensemble::wigner_gue ? WignerLaw::gue : WignerLaw::rademacher;
            return wigner(N, law, substream_seed(spec.seed, 3)) / std::sqrt(static_cast<double>(N));
        }
    }
    throw DomainError("build_Y: unsupported ensemble");
}

cplx empirical_stieltjes(const std::vector<double>& eigenvalues, cplx z) {
    cplx s = 0.0;
    for (double l : eigenvalues) s += 1.0 / (z - l);
    return eigenvalues.empty() ? s : s / static_cast<double>(eigenvalues.size());
}

namespace {

template <class Cdf>
double ks(std::vector<double> x, Cdf F) {
    if (x.empty()) return 0.0;
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double f = F(x[i]);
        d = std::max({d, (i + 1) / n - f, f - i / n});
    }
    return d;
}

// Mean spacing of the (up to) ten eigenvalues inside [lo, hi] nearest to `edge`.
double edge_spacing(const std::vector<double>& ev, double lo, double hi, bool lower_edge) {
    auto first = std::lower_bound(ev.begin(), ev.end(), lo);
    auto last = std::upper_bound(ev.begin(), ev.end(), hi);
    const auto count = std::distance(first, last);
    if (count < 2) return 0.0;
    const auto k = std::min<std::ptrdiff_t>(10, count);
    if (lower_edge) return (*(first + k - 1) - *first) / static_cast<double>(k - 1);
    return (*(last - 1) - *(last - k)) / static_cast<double>(k - 1);
}

}  // namespace

double kolmogorov_distance(std::vector<double> samples, const DensityProfile& profile) {
    const double mass = profile.mass();
    if (!(mass > 0.0)) throw DomainError("kolmogorov_distance: profile has no mass");
    return ks(std::move(samples), [&](double x) { return std::clamp(profile.cdf(x) / mass, 0.0, 1.0); });
}

double kolmogorov_distance(std::vector<double> samples, const SpectralMeasure& m) {
    return ks(std::move(samples), [&](double x) { return m.cdf(x); });
}

std::vector<double> empirical_outliers(const std::vector<double>& eigenvalues, const std::vector<Interval>& support,
                                       double min_margin, std::vector<double>* margins) {
    std::vector<double> ev = eigenvalues;
    std::sort(ev.begin(), ev.end());
    std::vector<Interval> padded;
    if (margins) margins->clear();
    for (const auto& iv : support) {
        const double mlo = std::max(min_margin, 3.0 * edge_spacing(ev, iv.lo, iv.hi, true));
        const double mhi = std::max(min_margin, 3.0 * edge_spacing(ev, iv.lo, iv.hi, false));
        padded.push_back({iv.lo - mlo, iv.hi + mhi, iv.atomic});
        if (margins) {
            margins->push_back(mlo);
            margins->push_back(mhi);
        }
    }
    std::vector<double> out;
    for (double l : ev)
        if (distance_to(padded, l) > 0.0) out.push_back(l);
    return out;
}

SimResult run(const ModelSpec& spec, const DensityProfile& profile, const OutlierReport* predictions,
              const RunOptions& options) {
    const auto start = std::chrono::steady_clock::now();
    if (spec.P.arity() != 2) throw SizeError("run: polynomial must have arity 2");
    if (!is_selfadjoint(spec.P)) throw DomainError("run: polynomial is not selfadjoint");
    if (predictions && predictions->thetas != spec.spikes.thetas)
        throw DomainError("run: predictions were computed for different spikes");

    SimResult res;
    res.N = spec.N;
    res.seed = spec.seed;

    const auto a = build_A(spec);
    CMatrix A = CMatrix::Zero(spec.N, spec.N);
    for (int i = 0; i < spec.N; ++i) A(i, i) = a[i];
    const CMatrix Y = build_Y(spec);
    const CMatrix args[2] = {A, Y};
    CMatrix M = evaluate(spec.P, args);
    res.hermiticity_error = max_abs(M - M.adjoint());
    if (res.hermiticity_error > 1e-10) throw DomainError("run: assembled matrix is not Hermitian");
    M = hermitian_part(M);

    const bool want_vectors = options.overlaps && spec.ensemble == Ensemble::unitary_invariant && predictions && !predictions->zeros.empty() && !spec.spikes.thetas.empty();
    const auto eig = hermitian_eig(std::move(M), want_vectors);
    res.eigenvalues.assign(eig.values.data(), eig.values.data() + eig.values.size());

    res.empirical_outliers =
        empirical_outliers(res.eigenvalues, profile.support_intervals, options.min_outlier_margin, &res.margins);
    std::vector<double> bulk;
    bulk.reserve(res.eigenvalues.size());
    std::set_difference(res.eigenvalues.begin(), res.eigenvalues.end(), res.empirical_outliers.begin(),
                        res.empirical_outliers.end(), std::back_inserter(bulk));
    res.ks_distance = kolmogorov_distance(bulk, profile);

    if (want_vectors) {
        const auto& zeros = predictions->zeros;
        const auto& thetas = spec.spikes.thetas;
        const int p = static_cast<int>(thetas.size());
        const int nz = static_cast<int>(zeros.size());
        for (const auto& z : zeros) res.predicted.push_back(z.t);
        for (int k = 0; k < nz; ++k) {
            double eps = std::min(options.max_window, 0.5 * distance_to(profile.support_intervals, zeros[k].t));
            for (int l = 0; l < nz; ++l)
                if (l != k) eps = std::min(eps, 0.5 * std::abs(zeros[l].t - zeros[k].t));
            res.windows.push_back(eps);
        }
        res.overlaps = Eigen::MatrixXd::Zero(p, nz);
        for (int k = 0; k < nz; ++k) {
            const double t = zeros[k].t, eps = res.windows[k];
            for (int l = 0; l < static_cast<int>(res.eigenvalues.size()); ++l) {
                const double lam = res.eigenvalues[l];
                if (lam <= t - eps || lam >= t + eps) continue;
                for (int i = 0; i < p; ++i)
                    for (int j = 0; j < p; ++j)
                        if (thetas[j] == thetas[i]) res.overlaps(i, k) += std::norm(eig.vectors(j, l));
            }
        }
    }
    res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return res;
}

std::vector<SimResult> run_batch(const ModelSpec& spec, const std::vector<std::uint64_t>& seeds,
                                 const DensityProfile& profile, const OutlierReport* predictions,
                                 const RunOptions& options, Exec exec) {
    std::vector<SimResult> out(seeds.size());
    for_each_index(seeds.size(), exec, [&](std::size_t i) {
        ModelSpec s = spec;
        s.seed = seeds[i];
        out[i] = run(s, profile, predictions, options);
    });
    return out;
}

}  // namespace freespike
