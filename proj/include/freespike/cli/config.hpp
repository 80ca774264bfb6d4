#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "freespike/linearize.hpp"
#include "freespike/measures.hpp"
#include "freespike/ncpoly.hpp"
#include "freespike/outliers.hpp"
#include "freespike/rmt_sim.hpp"

namespace freespike::cli {

/// Invalid or unresolvable configuration (exit code 2).
class ConfigError : public Error {
public:
    using Error::Error;
};

struct Tolerance {
    double value = 0.0;
    double default_value = 0.0;
    bool overridden() const { return value != default_value; }
};

struct RunConfig {
    nlohmann::json document;  // after overrides
    std::string hash;         // SHA-256 of the canonical model sections

    std::string polynomial;
    NCPolynomial P{2};
    bool inline_pencil = false;
    std::vector<CMatrix> pencil_gamma;

    SpectralMeasure mu = SpectralMeasure::dirac(0.0);
    SpectralMeasure nu = SpectralMeasure::semicircle(0.0, 1.0);
    std::vector<double> spikes;
    Ensemble ensemble = Ensemble::unitary_invariant;
    BulkPlacement placement = BulkPlacement::quantiles;
    std::vector<int> sizes{1000};
    std::vector<std::uint64_t> seeds{1};

    int grid_points = 4001;
    double grid_extent = 1.2;
    std::vector<double> eta_schedule;  // empty = library default
    Criterion criterion = Criterion::regularized;
    double delta_min = 1e-2;

    std::string output = "out";
    bool plot_timestamp = false;

    // verify
    std::map<std::string, Tolerance> tolerances;
    std::vector<double> expected_outliers;  // optional analytic locations
    std::vector<double> expected_residues;  // optional, same order as expected_outliers
};

/// Default verification tolerances, keyed by check name.
std::map<std::string, double> default_tolerances();

/// Parses a JSON document, applies "a.b.c=value" overrides (value parsed as JSON, else taken as
/// a string) and validates it. Throws ConfigError.
RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {});
RunConfig config_from_json(nlohmann::json doc, const std::vector<std::string>& overrides = {});

SpectralMeasure measure_from_json(const nlohmann::json& j);

/// Hex SHA-256 of the bytes.
std::string sha256_hex(const std::string& bytes);

/// Hash of every section except output, plot and verification settings, so that changing a
/// tolerance does not invalidate predictions.
std::string config_hash(const nlohmann::json& doc);

}  // namespace freespike::cli
