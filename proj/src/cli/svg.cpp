#include "freespike/cli/svg.hpp"

#include <cstdio>
#include <sstream>

#include "freespike/cli/report_io.hpp"

namespace freespike::cli {

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string tick_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%g", std::abs(v) < 1e-12 ? 0.0 : v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        if (c == '<') out += "&lt;";
        else if (c == '>') out += "&gt;";
        else if (c == '&') out += "&amp;";
        else out += c;
    }
    return out;
}

}  // namespace

std::vector<double> ticks(double lo, double hi, int target) {
    if (!(hi > lo)) return {lo};
    const double raw = (hi - lo) / std::max(1, target);
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double f : {1.0, 2.0, 5.0, 10.0})
        if (f * mag >= raw) {
            step = f * mag;
            break;
        }
    std::vector<double> out;
    for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * step; t += step) out.push_back(t);
    return out;
}

SvgPlot::SvgPlot(double x_lo, double x_hi, double y_lo, double y_hi, std::string title)
    : x_lo_(x_lo), x_hi_(x_hi > x_lo ? x_hi : x_lo + 1), y_lo_(y_lo), y_hi_(y_hi > y_lo ? y_hi : y_lo + 1),
      title_(std::move(title)) {}

double SvgPlot::px(double x) const { return kLeft + (x - x_lo_) / (x_hi_ - x_lo_) * (kWidth - kLeft - kRight); }
double SvgPlot::py(double y) const {
    const double c = std::clamp(y, y_lo_, y_hi_);
    return kHeight - kBottom - (c - y_lo_) / (y_hi_ - y_lo_) * (kHeight - kTop - kBottom);
}

void SvgPlot::curve(const std::vector<double>& x, const std::vector<double>& y, const std::string& color) {
    std::ostringstream s;
    s << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < x.size() && i < y.size(); ++i) {
        if (x[i] < x_lo_ || x[i] > x_hi_) continue;
        s << num(px(x[i])) << "," << num(py(y[i])) << " ";
    }
    s << "\"/>";
    body_.push_back(s.str());
}

void SvgPlot::bars(const std::vector<double>& edges, const std::vector<double>& heights, const std::string& color) {
    for (std::size_t i = 0; i + 1 < edges.size() && i < heights.size(); ++i) {
        if (heights[i] <= 0.0) continue;
        const double x0 = px(edges[i]), x1 = px(edges[i + 1]), y = py(heights[i]);
        std::ostringstream s;
        s << "<rect x=\"" << num(x0) << "\" y=\"" << num(y) << "\" width=\"" << num(std::max(0.0, x1 - x0))
          << "\" height=\"" << num(py(y_lo_) - y) << "\" fill=\"" << color << "\" stroke=\"white\" stroke-width=\"0.3\"/>";
        body_.push_back(s.str());
    }
}

void SvgPlot::band(double lo, double hi, const std::string& color, double opacity) {
    const double x0 = px(std::max(lo, x_lo_)), x1 = px(std::min(hi, x_hi_));
    if (x1 <= x0) return;
    std::ostringstream s;
    s << "<rect x=\"" << num(x0) << "\" y=\"" << num(kTop) << "\" width=\"" << num(x1 - x0) << "\" height=\""
      << num(kHeight - kTop - kBottom) << "\" fill=\"" << color << "\" fill-opacity=\"" << opacity << "\"/>";
    body_.push_back(s.str());
}

void SvgPlot::marker(double x, const std::string& color, const std::string& label) {
    if (x < x_lo_ || x > x_hi_) return;
    const double X = px(x), base = kHeight - kBottom;
    std::ostringstream s;
    s << "<line x1=\"" << num(X) << "\" y1=\"" << num(kTop) << "\" x2=\"" << num(X) << "\" y2=\"" << num(base)
      << "\" stroke=\"" << color << "\" stroke-dasharray=\"4,3\"/>";
    s << "<polygon points=\"" << num(X) << "," << num(base - 10) << " " << num(X - 5) << "," << num(base) << " "
      << num(X + 5) << "," << num(base) << "\" fill=\"" << color << "\"/>";
    if (!label.empty())
        s << "<text x=\"" << num(X + 4) << "\" y=\"" << num(kTop + 12) << "\" font-size=\"11\" fill=\"" << color << "\">"
          << escape(label) << "</text>";
    body_.push_back(s.str());
}

void SvgPlot::labels(std::string x_label, std::string y_label) {
    x_label_ = std::move(x_label);
    y_label_ = std::move(y_label);
}

void SvgPlot::comment(std::string text) { comment_ = std::move(text); }

std::string SvgPlot::render() const {
    std::ostringstream s;
    s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight << "\" viewBox=\"0 0 "
      << kWidth << " " << kHeight << "\" font-family=\"sans-serif\">\n";
    if (!comment_.empty()) s << "<!-- " << comment_ << " -->\n";
    s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    for (const auto& b : body_) s << b << "\n";
    const double bottom = kHeight - kBottom, right = kWidth - kRight;
    s << "<line x1=\"" << kLeft << "\" y1=\"" << bottom << "\" x2=\"" << right << "\" y2=\"" << bottom << "\" stroke=\"black\"/>\n";
    s << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << bottom << "\" stroke=\"black\"/>\n";
    for (double t : ticks(x_lo_, x_hi_)) {
        const double X = px(t);
        s << "<line x1=\"" << num(X) << "\" y1=\"" << bottom << "\" x2=\"" << num(X) << "\" y2=\"" << bottom + 5
          << "\" stroke=\"black\"/><text x=\"" << num(X) << "\" y=\"" << bottom + 18
          << "\" font-size=\"11\" text-anchor=\"middle\">" << tick_label(t) << "</text>\n";
    }
    for (double t : ticks(y_lo_, y_hi_, 5)) {
        const double Y = py(t);
        s << "<line x1=\"" << kLeft - 5 << "\" y1=\"" << num(Y) << "\" x2=\"" << kLeft << "\" y2=\"" << num(Y)
          << "\" stroke=\"black\"/><text x=\"" << kLeft - 8 << "\" y=\"" << num(Y + 4)
          << "\" font-size=\"11\" text-anchor=\"end\">" << tick_label(t) << "</text>\n";
    }
    if (!title_.empty())
        s << "<text x=\"" << kWidth / 2 << "\" y=\"24\" font-size=\"14\" text-anchor=\"middle\">" << escape(title_) << "</text>\n";
    if (!x_label_.empty())
        s << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 15 << "\" font-size=\"12\" text-anchor=\"middle\">"
          << escape(x_label_) << "</text>\n";
    if (!y_label_.empty())
        s << "<text x=\"16\" y=\"" << kHeight / 2 << "\" font-size=\"12\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
          << kHeight / 2 << ")\">" << escape(y_label_) << "</text>\n";
    s << "</svg>\n";
    return s.str();
}

namespace {

void x_range(const DensityProfile& profile, const std::vector<double>& extra, double& lo, double& hi) {
    lo = std::numeric_limits<double>::infinity();
    hi = -lo;
    for (const auto& iv : profile.support_intervals) {
        lo = std::min(lo, iv.lo);
        hi = std::max(hi, iv.hi);
    }
    for (double x : extra) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
    }
    if (!std::isfinite(lo)) {
        lo = profile.grid.empty() ? -1.0 : profile.grid.front();
        hi = profile.grid.empty() ? 1.0 : profile.grid.back();
    }
    const double pad = 0.06 * std::max(1.0, hi - lo);
    lo -= pad;
    hi += pad;
}

// Upper y limit ignoring the integrable edge spikes: 1.15 x the 99th percentile of the density.
double density_cap(const DensityProfile& profile) {
    std::vector<double> d;
    for (double v : profile.density)
        if (v > profile.threshold) d.push_back(v);
    if (d.empty()) return 1.0;
    std::sort(d.begin(), d.end());
    return 1.15 * d[static_cast<std::size_t>(0.99 * (d.size() - 1))];
}

}  // namespace

std::string prediction_plot(const DensityProfile& profile, const OutlierReport& report, const std::string& comment) {
    std::vector<double> zs;
    for (const auto& z : report.zeros) zs.push_back(z.t);
    double lo, hi;
    x_range(profile, zs, lo, hi);
    SvgPlot plot(lo, hi, 0.0, density_cap(profile), "predicted density and outliers");
    for (const auto& iv : profile.support_intervals) plot.band(iv.lo, iv.hi, "#7fa7d9", 0.2);
    plot.curve(profile.grid, profile.density, "#1f4e9a");
    for (const auto& z : report.zeros) plot.marker(z.t, "#c0392b", fmt(z.t) + " (m=" + std::to_string(z.m) + ")");
    plot.labels("x", "density");
    plot.comment(comment);
    return plot.render();
}

std::string histogram_plot(const std::vector<double>& eigenvalues, const std::vector<double>& empirical_outliers,
                           const DensityProfile& profile, const OutlierReport* report, const std::string& title,
                           const std::string& comment) {
    std::vector<double> extra = empirical_outliers;
    if (report)
        for (const auto& z : report->zeros) extra.push_back(z.t);
    double lo, hi;
    x_range(profile, extra, lo, hi);
    const int bins = 120;
    std::vector<double> edges(bins + 1), h(bins, 0.0);
    for (int i = 0; i <= bins; ++i) edges[i] = lo + (hi - lo) * i / bins;
    const double w = (hi - lo) / bins;
    for (double l : eigenvalues) {
        const int b = static_cast<int>((l - lo) / w);
        if (b >= 0 && b < bins) h[b] += 1.0;
    }
    const double n = static_cast<double>(std::max<std::size_t>(1, eigenvalues.size()));
    for (auto& v : h) v /= n * w;
    SvgPlot plot(lo, hi, 0.0, density_cap(profile), title);
    plot.bars(edges, h, "#9db4d3");
    plot.curve(profile.grid, profile.density, "#1f4e9a");
    if (report)
        for (const auto& z : report->zeros) plot.marker(z.t, "#1f4e9a", "predicted " + fmt(z.t));
    for (double o : empirical_outliers) plot.marker(o, "#c0392b");
    plot.labels("eigenvalue", "density");
    plot.comment(comment);
    return plot.render();
}

}  // namespace freespike::cli
