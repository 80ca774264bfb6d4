#pragma once

#include "freespike/linearize.hpp"
#include "freespike/outliers.hpp"
#include "freespike/spectrum.hpp"

namespace freespike::testing {

inline const char* kMpPolynomial = "x*y + y*x + y^2";

inline FreeModel mp_model() {
    return FreeModel(economical_mp_pencil(), SpectralMeasure::dirac(0.0), SpectralMeasure::semicircle(0.0, 1.0));
}

inline FreeModel additive_model(const SpectralMeasure& mu = SpectralMeasure::dirac(0.0)) {
    return FreeModel(linearize_selfadjoint(parse("x + y", 2)), mu, SpectralMeasure::semicircle(0.0, 1.0));
}

struct Predicted {
    DensityProfile profile;
    OutlierReport report;
};

inline DensityProfile model_density(const FreeModel& model, const NCPolynomial& p, int points = 4001,
                                    Exec exec = Exec::parallel) {
    DensityOptions o;
    o.exec = exec;
    return density(model, default_grid(spectral_radius_bound(p, model.mu(), model.nu()), points), o);
}

inline OutlierReport model_outliers(const FreeModel& model, const NCPolynomial& p, const DensityProfile& profile,
                                    const std::vector<double>& thetas, Criterion criterion = Criterion::regularized,
                                    Exec exec = Exec::parallel) {
    const auto spikes = SpikeSet::make(thetas, model.mu());
    DetectOptions o;
    o.criterion = criterion;
    o.exec = exec;
    const auto intervals = search_intervals(profile.support_intervals,
                                            outlier_search_radius(p, model.mu(), model.nu(), spikes), o.delta_min);
    return detect(model, spikes, intervals, profile.support_intervals, o);
}

inline Predicted predict(const FreeModel& model, const NCPolynomial& p, const std::vector<double>& thetas,
                         int points = 4001) {
    Predicted out;
    out.profile = model_density(model, p, points);
    out.report = model_outliers(model, p, out.profile, thetas);
    return out;
}

}  // namespace freespike::testing
