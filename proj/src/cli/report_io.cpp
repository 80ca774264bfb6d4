#include "freespike/cli/report_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "freespike/cli/config.hpp"

namespace freespike::cli {

using nlohmann::json;

std::string fmt(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}

json to_json(const OutlierReport& report, const std::string& config_hash) {
    json j;
    j["config_hash"] = config_hash;
    j["criterion"] = to_string(report.criterion);
    j["thetas"] = report.thetas;
    j["delta_min"] = report.delta_min;
    j["search_intervals"] = json::array();
    for (const auto& iv : report.search_intervals) j["search_intervals"].push_back({iv.lo, iv.hi});
    j["zeros"] = json::array();
    for (const auto& z : report.zeros) {
        j["zeros"].push_back({{"t", z.t},
                              {"m", z.m},
                              {"m_per_spike", z.m_per_spike},
                              {"m_regularized", z.m_regularized},
                              {"m_plain", z.m_plain},
                              {"residues", z.residues},
                              {"residue_imag_max", z.residue_imag_max},
                              {"radius", z.radius},
                              {"h_abs", z.h_abs}});
    }
    j["rejected"] = json::array();
    for (const auto& r : report.rejected) j["rejected"].push_back({{"t", r.t}, {"spike", r.spike}, {"reason", r.reason}});
    return j;
}

OutlierReport outlier_report_from_json(const json& j) {
    OutlierReport r;
    try {
        r.criterion = j.at("criterion").get<std::string>() == "plain" ? Criterion::plain : Criterion::regularized;
        r.thetas = j.at("thetas").get<std::vector<double>>();
        r.delta_min = j.at("delta_min").get<double>();
        for (const auto& iv : j.at("search_intervals")) r.search_intervals.push_back({iv[0].get<double>(), iv[1].get<double>()});
        for (const auto& z : j.at("zeros")) {
            OutlierZero o;
            o.t = z.at("t").get<double>();
            o.m = z.at("m").get<int>();
            o.m_per_spike = z.at("m_per_spike").get<std::vector<int>>();
            o.m_regularized = z.at("m_regularized").get<std::vector<int>>();
            o.m_plain = z.at("m_plain").get<std::vector<int>>();
            o.residues = z.at("residues").get<std::vector<double>>();
            o.residue_imag_max = z.at("residue_imag_max").get<double>();
            o.radius = z.at("radius").get<double>();
            o.h_abs = z.at("h_abs").get<std::vector<double>>();
            r.zeros.push_back(std::move(o));
        }
        for (const auto& x : j.at("rejected"))
            r.rejected.push_back({x.at("t").get<double>(), x.at("spike").get<int>(), x.at("reason").get<std::string>()});
    } catch (const json::exception& e) {
        throw ConfigError(std::string("outlier report: ") + e.what());
    }
    return r;
}

json to_json(const CertificationReport& report, const std::string& config_hash) {
    json j;
    j["config_hash"] = config_hash;
    j["passed"] = report.passed;
    j["trials"] = report.trials;
    j["size"] = report.size;
    j["pencil_size"] = report.pencil_size;
    j["provenance"] = report.provenance == Provenance::constructed ? "constructed" : "user_supplied";
    j["max_det_relative_error"] = report.max_det_relative_error;
    j["sign_checked"] = report.sign_checked;
    j["q_structure_checked"] = report.q_structure_checked;
    j["failures"] = json::array();
    for (const auto& f : report.failures)
        j["failures"].push_back({{"identity", f.identity}, {"trial", f.trial}, {"detail", f.detail}});
    return j;
}

json to_json(const SimResult& r, const std::string& config_hash, bool timing) {
    json j;
    j["config_hash"] = config_hash;
    j["N"] = r.N;
    j["seed"] = r.seed;
    j["empirical_outliers"] = r.empirical_outliers;
    j["margins"] = r.margins;
    j["predicted"] = r.predicted;
    j["windows"] = r.windows;
    j["overlaps"] = json::array();
    for (Eigen::Index i = 0; i < r.overlaps.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index k = 0; k < r.overlaps.cols(); ++k) row.push_back(r.overlaps(i, k));
        j["overlaps"].push_back(row);
    }
    j["ks_distance"] = r.ks_distance;
    j["hermiticity_error"] = r.hermiticity_error;
    if (timing) j["seconds"] = r.seconds;
    return j;
}

SimResult sim_summary_from_json(const json& j) {
    SimResult r;
    try {
        r.N = j.at("N").get<int>();
        r.seed = j.at("seed").get<std::uint64_t>();
        r.empirical_outliers = j.at("empirical_outliers").get<std::vector<double>>();
        r.margins = j.at("margins").get<std::vector<double>>();
        r.predicted = j.at("predicted").get<std::vector<double>>();
        r.windows = j.at("windows").get<std::vector<double>>();
        const auto& ov = j.at("overlaps");
        const auto rows = static_cast<Eigen::Index>(ov.size());
        const auto cols = rows ? static_cast<Eigen::Index>(ov[0].size()) : 0;
        r.overlaps = Eigen::MatrixXd::Zero(rows, cols);
        for (Eigen::Index i = 0; i < rows; ++i)
            for (Eigen::Index k = 0; k < cols; ++k) r.overlaps(i, k) = ov[i][k].get<double>();
        r.ks_distance = j.at("ks_distance").get<double>();
        r.hermiticity_error = j.at("hermiticity_error").get<double>();
        r.seconds = j.value("seconds", 0.0);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("simulation summary: ") + e.what());
    }
    return r;
}

void write_outliers_csv(std::ostream& out, const OutlierReport& report, const std::string& config_hash) {
    out << "#config_hash," << config_hash << "\n#criterion," << to_string(report.criterion) << "\n";
    out << "t,m";
    for (std::size_t i = 0; i < report.thetas.size(); ++i) out << ",residue_" << i + 1;
    out << "\n";
    for (const auto& z : report.zeros) {
        out << fmt(z.t) << "," << z.m;
        for (std::size_t i = 0; i < report.thetas.size(); ++i)
            out << "," << (i < z.residues.size() ? fmt(z.residues[i]) : std::string("nan"));
        out << "\n";
    }
}

void write_scan_csv(std::ostream& out, const OutlierReport& report, const std::string& config_hash) {
    out << "#config_hash," << config_hash << "\n";
    out << "t,ok,pole";
    for (std::size_t i = 0; i < report.thetas.size(); ++i) out << ",H" << i + 1 << "_re,H" << i + 1 << "_im,D" << i + 1;
    out << "\n";
    for (const auto& s : report.scan) {
        out << fmt(s.t) << "," << (s.ok ? 1 : 0) << "," << (s.pole ? 1 : 0);
        for (std::size_t i = 0; i < report.thetas.size(); ++i) {
            const cplx h = i < s.H.size() ? s.H[i] : cplx(NAN, NAN);
            const double d = i < s.D.size() ? s.D[i] : NAN;
            out << "," << fmt(h.real()) << "," << fmt(h.imag()) << "," << fmt(d);
        }
        out << "\n";
    }
}

void write_eigenvalues(std::ostream& out, const SimResult& result, const std::string& config_hash) {
    out << "#config_hash," << config_hash << "\n#N," << result.N << "\n#seed," << result.seed << "\neigenvalue\n";
    for (double l : result.eigenvalues) out << fmt(l) << "\n";
}

std::vector<double> read_eigenvalues(std::istream& in) {
    std::vector<double> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#' || line == "eigenvalue") continue;
        double v = 0.0;
        const auto r = std::from_chars(line.data(), line.data() + line.size(), v);
        if (r.ec != std::errc()) throw ConfigError("eigenvalue table: bad value '" + line + "'");
        out.push_back(v);
    }
    return out;
}

std::string table_config_hash(const std::string& path) {
    std::ifstream in(path);
    std::string line;
    while (std::getline(in, line))
        if (line.rfind("#config_hash,", 0) == 0) return line.substr(13);
    return {};
}

json read_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("missing input '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("'" + path + "': " + e.what());
    }
}

std::string json_config_hash(const std::string& path) {
    const auto j = read_json(path);
    return j.value("config_hash", std::string());
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path + "'");
    out << text;
}

}  // namespace freespike::cli
