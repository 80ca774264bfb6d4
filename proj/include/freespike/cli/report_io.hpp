#pragma once

#include <iosfwd>
#include <string>

#include <json.hpp>

#include "freespike/linearize.hpp"
#include "freespike/outliers.hpp"
#include "freespike/rmt_sim.hpp"
#include "freespike/spectrum.hpp"

namespace freespike::cli {

/// Shortest round-trip decimal form.
std::string fmt(double x);

nlohmann::json to_json(const OutlierReport& report, const std::string& config_hash);
OutlierReport outlier_report_from_json(const nlohmann::json& j);

nlohmann::json to_json(const CertificationReport& report, const std::string& config_hash);

/// Per-run summary (no eigenvalues; those go to the one-column table).
nlohmann::json to_json(const SimResult& result, const std::string& config_hash, bool timing);
SimResult sim_summary_from_json(const nlohmann::json& j);

/// "#config_hash,<hash>" line, header "t,m,residue_1,...".
void write_outliers_csv(std::ostream& out, const OutlierReport& report, const std::string& config_hash);
/// Scan values with complex H_j as two columns "H1_re,H1_im".
void write_scan_csv(std::ostream& out, const OutlierReport& report, const std::string& config_hash);
/// One-column table "eigenvalue".
void write_eigenvalues(std::ostream& out, const SimResult& result, const std::string& config_hash);
std::vector<double> read_eigenvalues(std::istream& in);

/// Value of the first "#config_hash,<hash>" line of a table, or the "config_hash" field of a
/// JSON document; empty if absent.
std::string table_config_hash(const std::string& path);
std::string json_config_hash(const std::string& path);

nlohmann::json read_json(const std::string& path);
void write_text(const std::string& path, const std::string& text);

}  // namespace freespike::cli
