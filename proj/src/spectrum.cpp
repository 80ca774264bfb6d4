#include "freespike/spectrum.hpp"

#include <charconv>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

namespace freespike {

using std::numbers::pi;

cplx scalar_cauchy_of_P(const FreeModel& model, cplx z, const ContinuationOptions& options) {
    if (!(z.imag() > 0.0)) throw DomainError("scalar_cauchy_of_P needs Im z > 0");
    const CMatrix b = model.beta(z);
    if (lambda_min_imag(b) > 0.0) return solve_omega(model, b, options.solver).F(0, 0);
    ContinuationOptions opt = options;
    opt.axis_polish = true;
    return continue_to_axis(model, z, opt).F(0, 0);
}

double spectral_radius_bound(const NCPolynomial& p, const SpectralMeasure& mu, const SpectralMeasure& nu) {
    if (p.arity() != 2) throw SizeError("spectral_radius_bound expects two indeterminates");
    const double radii[2] = {mu.support_radius(), nu.support_radius()};
    return norm_bound(p, radii);
}

std::vector<double> default_grid(double R, int points, double extent) {
    if (!(R > 0.0)) R = 1.0;
    if (points < 2) throw DomainError("default_grid needs at least two points");
    std::vector<double> g(static_cast<std::size_t>(points));
    const double lo = -extent * R, hi = extent * R;
    for (int i = 0; i < points; ++i) g[i] = lo + (hi - lo) * i / (points - 1);
    // exact symmetry, so 0 is a grid point for odd counts
    for (int i = 0; i < points / 2; ++i) g[points - 1 - i] = -g[i];
    if (points % 2 == 1) g[points / 2] = 0.0;
    return g;
}

// ---------------------------------------------------------------------------------------------

double DensityProfile::mass() const {
    double m = 0.0;
    for (std::size_t i = 1; i < grid.size(); ++i) m += 0.5 * (density[i] + density[i - 1]) * (grid[i] - grid[i - 1]);
    for (const auto& a : atoms) m += a.mass;
    return m;
}

double DensityProfile::cdf(double x) const {
    double m = 0.0;
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (grid[i] <= x) {
            m += 0.5 * (density[i] + density[i - 1]) * (grid[i] - grid[i - 1]);
        } else {
            if (grid[i - 1] < x) {
                const double s = (x - grid[i - 1]) / (grid[i] - grid[i - 1]);
                const double dx = (1.0 - s) * density[i - 1] + s * density[i];
                m += 0.5 * (density[i - 1] + dx) * (x - grid[i - 1]);
            }
            break;
        }
    }
    for (const auto& a : atoms) {
        if (a.location <= x) m += a.mass;
    }
    return m;
}

double DensityProfile::at(double x) const {
    if (grid.empty() || x < grid.front() || x > grid.back()) return 0.0;
    auto it = std::upper_bound(grid.begin(), grid.end(), x);
    if (it == grid.end()) return density.back();
    const std::size_t k = static_cast<std::size_t>(it - grid.begin());
    if (k == 0) return density.front();
    const double s = (x - grid[k - 1]) / (grid[k] - grid[k - 1]);
    return (1.0 - s) * density[k - 1] + s * density[k];
}

namespace {

struct PointValue {
    double rho = 0.0;
    bool fallback = false;
};

PointValue density_at(const FreeModel& model, double x, const ContinuationOptions& cont) {
    const EtaPath path = solve_eta_path(model, cplx(x, 0.0), cont);
    std::vector<CMatrix> g;
    g.reserve(path.Fs.size());
    for (const auto& F : path.Fs) g.push_back(F.block(0, 0, 1, 1));
    PointValue v;
    const CMatrix ex = extrapolate_to_axis(path.etas, g, cont.extrapolation_disagreement, &v.fallback);
    v.rho = -ex(0, 0).imag() / pi;
    const std::size_t k = g.size();
    if (v.fallback && k >= 2) {
        // Outside the support the smoothed density is proportional to eta; there the linear
        // model is exact to first order even when it moves the value by more than the tolerance.
        const double e1 = path.etas[k - 2], e2 = path.etas[k - 1];
        const double r1 = -g[k - 2](0, 0).imag(), r2 = -g[k - 1](0, 0).imag();
        if (r2 > 0.0 && r1 >= 0.5 * (e1 / e2) * r2) {
            const double lin = r2 - (r1 - r2) * (e2 / (e1 - e2));
            v.rho = std::max(0.0, lin) / pi;
            v.fallback = false;
        }
    }
    return v;
}

std::vector<PointValue> evaluate_grid(const FreeModel& model, const std::vector<double>& xs, const DensityOptions& opt) {
    std::vector<PointValue> out(xs.size());
    for_each_index(xs.size(), opt.exec, [&](std::size_t i) { out[i] = density_at(model, xs[i], opt.continuation); });
    return out;
}

struct Assembled {
    std::vector<double> grid;
    std::vector<double> density;
    std::vector<Atom> atoms;
};

// Atom detection and removal of the eta-smoothing tails of detected atoms.
Assembled assemble(const std::vector<double>& xs, const std::vector<PointValue>& vals, double eta_min) {
    Assembled a;
    a.grid = xs;
    a.density.resize(xs.size());
    const double atom_level = 0.5 / (pi * eta_min);
    std::vector<bool> atomic(xs.size(), false);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (vals[i].rho > atom_level) {
            const bool peak = (i == 0 || vals[i].rho >= vals[i - 1].rho) && (i + 1 == xs.size() || vals[i].rho >= vals[i + 1].rho);
            if (peak) a.atoms.push_back({xs[i], pi * eta_min * vals[i].rho});
            atomic[i] = true;
        }
    }
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double rho = std::max(0.0, vals[i].rho);
        if (atomic[i]) {
            rho = 0.0;
        }
        a.density[i] = rho;
    }
    return a;
}

}  // namespace

std::vector<Interval> support(const DensityProfile& profile, double threshold) {
    const auto& x = profile.grid;
    const auto& d = profile.density;
    std::vector<Interval> out;
    std::size_t i = 0;
    while (i < x.size()) {
        if (d[i] > threshold) {
            std::size_t j = i;
            while (j + 1 < x.size() && d[j + 1] > threshold) ++j;
            const double lo = i > 0 ? x[i - 1] : x[i];
            const double hi = j + 1 < x.size() ? x[j + 1] : x[j];
            out.push_back({lo, hi, false});
            i = j + 1;
        } else {
            ++i;
        }
    }
    for (const auto& at : profile.atoms) {
        auto it = std::lower_bound(x.begin(), x.end(), at.location);
        const std::size_t k = static_cast<std::size_t>(it - x.begin());
        const double lo = k > 0 ? x[k - 1] : at.location;
        const double hi = k + 1 < x.size() ? x[k + 1] : at.location;
        out.push_back({lo, hi, true});
    }
    std::sort(out.begin(), out.end(), [](const Interval& a, const Interval& b) { return a.lo < b.lo; });
    std::vector<Interval> merged;
    for (const auto& iv : out) {
        if (!merged.empty() && iv.lo <= merged.back().hi) {
            merged.back().hi = std::max(merged.back().hi, iv.hi);
            merged.back().atomic = merged.back().atomic && iv.atomic;
        } else {
            merged.push_back(iv);
        }
    }
    return merged;
}

DensityProfile density(const FreeModel& model, std::vector<double> grid, const DensityOptions& options) {
    if (grid.size() < 2) throw DomainError("density needs a grid of at least two points");
    std::sort(grid.begin(), grid.end());
    const ContinuationOptions& cont = options.continuation;
    const double eta_min = cont.eta_schedule.back();

    std::vector<PointValue> vals = evaluate_grid(model, grid, options);
    Assembled a = assemble(grid, vals, eta_min);

    if (options.refine_edges && options.edge_points > 0) {
        // Locate each threshold crossing by bisection, then add points graded quadratically
        // towards it; square-root and inverse-square-root edges need this for the mass.
        const double thr = options.support_threshold;
        std::vector<std::pair<double, double>> cells;  // (outside, inside)
        for (std::size_t i = 0; i + 1 < grid.size(); ++i) {
            const bool in0 = a.density[i] > thr, in1 = a.density[i + 1] > thr;
            bool near_atom = false;
            for (const auto& at : a.atoms) {
                near_atom = near_atom || std::abs(at.location - grid[i]) <= 2.0 * (grid[i + 1] - grid[i]) ||
                            std::abs(at.location - grid[i + 1]) <= 2.0 * (grid[i + 1] - grid[i]);
            }
            if (in0 != in1 && !near_atom) cells.emplace_back(in0 ? grid[i + 1] : grid[i], in0 ? grid[i] : grid[i + 1]);
        }
        std::vector<double> extra;
        // integrable singularities (inverse square-root edges) show up as isolated peaks
        for (std::size_t i = 1; i + 1 < grid.size(); ++i) {
            const double rho = a.density[i];
            if (rho > thr && rho > 3.0 * std::max(a.density[i - 1], a.density[i + 1])) {
                const double h = 4.0 * std::max(grid[i] - grid[i - 1], grid[i + 1] - grid[i]);
                const int J = options.edge_points;
                for (int j = 1; j <= J; ++j) {
                    const double s = static_cast<double>(j) / J;
                    extra.push_back(grid[i] + h * s * s);
                    extra.push_back(grid[i] - h * s * s);
                }
            }
        }
        for (const auto& [out_x, in_x] : cells) {
            double o = out_x, in = in_x;
            for (int it = 0; it < 30; ++it) {
                const double mid = 0.5 * (o + in);
                if (density_at(model, mid, cont).rho > thr) {
                    in = mid;
                } else {
                    o = mid;
                }
            }
            const double h = 4.0 * std::abs(in_x - out_x);
            const double dir = in_x > out_x ? 1.0 : -1.0;
            extra.push_back(o);
            const int J = options.edge_points;
            for (int j = 1; j <= J; ++j) {
                const double s = static_cast<double>(j) / J;
                extra.push_back(o + dir * h * s * s);
                extra.push_back(o - dir * h * s * s);
            }
        }
        if (!extra.empty()) {
            std::sort(extra.begin(), extra.end());
            std::vector<PointValue> extra_vals = evaluate_grid(model, extra, options);
            std::vector<std::pair<double, PointValue>> all;
            all.reserve(grid.size() + extra.size());
            for (std::size_t i = 0; i < grid.size(); ++i) all.emplace_back(grid[i], vals[i]);
            for (std::size_t i = 0; i < extra.size(); ++i) all.emplace_back(extra[i], extra_vals[i]);
            std::stable_sort(all.begin(), all.end(), [](const auto& l, const auto& r) { return l.first < r.first; });
            grid.clear();
            vals.clear();
            for (const auto& [x, v] : all) {
                if (!grid.empty() && x - grid.back() <= 1e-14 * std::max(1.0, std::abs(x))) continue;
                grid.push_back(x);
                vals.push_back(v);
            }
            a = assemble(grid, vals, eta_min);
        }
    }

    DensityProfile p;
    p.grid = std::move(a.grid);
    p.density = std::move(a.density);
    p.atoms = std::move(a.atoms);
    p.eta_used = cont.eta_schedule;
    p.threshold = options.support_threshold;
    p.support_intervals = support(p, options.support_threshold);
    return p;
}

// ---------------------------------------------------------------------------------------------
// CSV

namespace {

std::string fmt(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
    double v = 0.0;
    const char* b = s.data();
    const char* e = s.data() + s.size();
    while (b < e && *b == ' ') ++b;
    auto res = std::from_chars(b, e, v);
    if (res.ec != std::errc()) throw DomainError("profile: malformed number '" + s + "'");
    return v;
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> parts;
    std::stringstream ss(line);
    std::string item;
    while (std::getline(ss, item, ',')) parts.push_back(item);
    return parts;
}

}  // namespace

void write_profile(std::ostream& out, const DensityProfile& profile, const std::string& metadata) {
    out << "#" << metadata << "\n";
    out << "x,density\n";
    for (std::size_t i = 0; i < profile.grid.size(); ++i) out << fmt(profile.grid[i]) << "," << fmt(profile.density[i]) << "\n";
    for (const auto& iv : profile.support_intervals) {
        out << "#support," << fmt(iv.lo) << "," << fmt(iv.hi) << "," << (iv.atomic ? 1 : 0) << "\n";
    }
    for (const auto& a : profile.atoms) out << "#atom," << fmt(a.location) << "," << fmt(a.mass) << "\n";
    out << "#eta";
    for (double e : profile.eta_used) out << "," << fmt(e);
    out << "\n#threshold," << fmt(profile.threshold) << "\n";
}

DensityProfile read_profile(std::istream& in) {
    DensityProfile p;
    std::string line;
    bool header = false;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto parts = split(line);
            if (parts[0] == "#support" && parts.size() == 4) {
                p.support_intervals.push_back({parse_double(parts[1]), parse_double(parts[2]), parts[3] == "1"});
            } else if (parts[0] == "#atom" && parts.size() == 3) {
                p.atoms.push_back({parse_double(parts[1]), parse_double(parts[2])});
            } else if (parts[0] == "#eta") {
                for (std::size_t k = 1; k < parts.size(); ++k) p.eta_used.push_back(parse_double(parts[k]));
            } else if (parts[0] == "#threshold" && parts.size() == 2) {
                p.threshold = parse_double(parts[1]);
            }
            continue;
        }
        if (!header) {
            header = true;
            if (line.rfind("x,", 0) == 0) continue;
        }
        const auto parts = split(line);
        if (parts.size() != 2) throw DomainError("profile: expected two columns in '" + line + "'");
        p.grid.push_back(parse_double(parts[0]));
        p.density.push_back(parse_double(parts[1]));
    }
    return p;
}

}  // namespace freespike
