#pragma once

#include <string>
#include <vector>

#include "freespike/outliers.hpp"
#include "freespike/spectrum.hpp"

namespace freespike::cli {

/// Minimal static SVG line/bar chart with linear axes.
class SvgPlot {
public:
    SvgPlot(double x_lo, double x_hi, double y_lo, double y_hi, std::string title = {});

    void curve(const std::vector<double>& x, const std::vector<double>& y, const std::string& color);
    /// Bars over [edges[i], edges[i+1]] with the given heights.
    void bars(const std::vector<double>& edges, const std::vector<double>& heights, const std::string& color);
    /// Vertical band across the full plot height.
    void band(double lo, double hi, const std::string& color, double opacity);
    /// Vertical marker line with a triangle at the axis.
    void marker(double x, const std::string& color, const std::string& label = {});
    void labels(std::string x_label, std::string y_label);
    void comment(std::string text);

    std::string render() const;

private:
    double px(double x) const;
    double py(double y) const;

    double x_lo_, x_hi_, y_lo_, y_hi_;
    std::string title_, x_label_, y_label_, comment_;
    std::vector<std::string> body_;
    static constexpr double kWidth = 800, kHeight = 480, kLeft = 70, kRight = 20, kTop = 40, kBottom = 60;
};

/// "Nice" tick positions covering [lo, hi].
std::vector<double> ticks(double lo, double hi, int target = 8);

/// Predicted density with support shading and outlier markers.
std::string prediction_plot(const DensityProfile& profile, const OutlierReport& report, const std::string& comment);

/// Eigenvalue histogram (density-normalized) with the predicted density overlaid, empirical
/// outliers in red and predicted zeros in blue.
std::string histogram_plot(const std::vector<double>& eigenvalues, const std::vector<double>& empirical_outliers,
                           const DensityProfile& profile, const OutlierReport* report, const std::string& title,
                           const std::string& comment);

}  // namespace freespike::cli
