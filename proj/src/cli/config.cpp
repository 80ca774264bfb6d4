#include "freespike/cli/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <openssl/evp.h>

namespace freespike::cli {

using nlohmann::json;

std::map<std::string, double> default_tolerances() {
    return {
        {"outlier_count", 0.0},              // fraction of runs allowed a count mismatch
        {"outlier_position", 0.15},          // |empirical - predicted|
        {"outlier_position_fraction", 0.9},  // required fraction of runs within outlier_position
        {"bulk_ks", 0.06},
        {"expected_outlier", 1e-6},
        {"expected_residue", 1e-6},
        {"overlap", 0.05},  // |mean overlap - residue|
    };
}

std::string sha256_hex(const std::string& bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw Error("sha256: digest failed");
    static const char* hex = "0123456789abcdef";
    std::string out;
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 15];
    }
    return out;
}

std::string config_hash(const json& doc) {
    json model = doc;
    for (const char* k : {"output", "plot", "verify"}) model.erase(k);
    return sha256_hex(model.dump());
}

namespace {

double num(const json& j, const char* key) {
    if (!j.contains(key) || !j[key].is_number()) throw ConfigError(std::string("missing numeric field '") + key + "'");
    return j[key].get<double>();
}

cplx entry(const json& e) {
    if (e.is_number()) return {e.get<double>(), 0.0};
    if (e.is_array() && e.size() == 2 && e[0].is_number() && e[1].is_number())
        return {e[0].get<double>(), e[1].get<double>()};
    throw ConfigError("pencil entries must be numbers or [re, im] pairs");
}

CMatrix matrix_from_json(const json& m) {
    if (!m.is_array() || m.empty()) throw ConfigError("pencil matrix must be a nonempty array of rows");
    const auto n = static_cast<Eigen::Index>(m.size());
    CMatrix out(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (!m[i].is_array() || static_cast<Eigen::Index>(m[i].size()) != n) throw ConfigError("pencil matrix must be square");
        for (Eigen::Index j = 0; j < n; ++j) out(i, j) = entry(m[i][j]);
    }
    return out;
}

void apply_override(json& doc, const std::string& kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + kv + "' is not KEY=VALUE");
    std::string path = "/" + kv.substr(0, eq);
    for (auto& c : path)
        if (c == '.') c = '/';
    const std::string text = kv.substr(eq + 1);
    json value;
    try {
        value = json::parse(text);
    } catch (const json::parse_error&) {
        value = text;
    }
    try {
        doc[json::json_pointer(path)] = value;
    } catch (const json::exception& e) {
        throw ConfigError("override '" + kv + "': " + e.what());
    }
}

template <class T>
std::vector<T> list(const json& j, const char* key) {
    const json& v = j.at(key);
    if (v.is_number()) return {v.get<T>()};
    if (!v.is_array()) throw ConfigError(std::string("'") + key + "' must be a number or a list");
    return v.get<std::vector<T>>();
}

}  // namespace

SpectralMeasure measure_from_json(const json& j) {
    if (j.is_string()) return measure_from_json(json{{"type", j}});
    if (!j.is_object() || !j.contains("type")) throw ConfigError("measure must be an object with a 'type'");
    const std::string type = j["type"].get<std::string>();
    try {
        if (type == "dirac") return SpectralMeasure::dirac(num(j, "at"));
        if (type == "semicircle") return SpectralMeasure::semicircle(j.value("mean", 0.0), j.value("variance", 1.0));
        if (type == "marchenko_pastur") return SpectralMeasure::marchenko_pastur();
        if (type == "arcsine") return SpectralMeasure::arcsine(num(j, "lo"), num(j, "hi"));
        if (type == "uniform") return SpectralMeasure::uniform(num(j, "lo"), num(j, "hi"));
        if (type == "table")
            return SpectralMeasure::table(j.at("xs").get<std::vector<double>>(), j.at("ys").get<std::vector<double>>());
        if (type == "mixture") {
            std::vector<Atom> atoms;
            const json atoms_json = j.value("atoms", json::array()), pieces_json = j.value("pieces", json::array());
            for (const auto& a : atoms_json) atoms.push_back({num(a, "location"), num(a, "mass")});
            std::vector<DensityPiece> pieces;
            for (const auto& p : pieces_json) {
                const auto m = measure_from_json(p);
                if (m.pieces().size() != 1 || !m.atoms().empty())
                    throw ConfigError("mixture pieces must be single absolutely continuous families");
                auto piece = m.pieces()[0];
                piece.weight = num(p, "weight");
                pieces.push_back(piece);
            }
            return SpectralMeasure::mixture(std::move(atoms), std::move(pieces));
        }
    } catch (const json::exception& e) {
        throw ConfigError("measure '" + type + "': " + e.what());
    } catch (const DomainError& e) {
        throw ConfigError("measure '" + type + "': " + e.what());
    }
    throw ConfigError("unknown measure type '" + type + "'");
}

RunConfig config_from_json(json doc, const std::vector<std::string>& overrides) {
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");
    for (const auto& kv : overrides) apply_override(doc, kv);

    static const std::set<std::string> known = {"polynomial", "pencil",   "mu",    "nu",   "spikes",
                                                "ensemble",   "N",        "seeds", "placement",
                                                "grid",       "eta_schedule", "criterion", "delta_min",
                                                "output",     "plot",     "verify"};
    for (const auto& [k, v] : doc.items())
        if (!known.count(k)) throw ConfigError("unknown config key '" + k + "'");

    RunConfig c;
    try {
        if (!doc.contains("polynomial") || !doc["polynomial"].is_string()) throw ConfigError("missing 'polynomial'");
        c.polynomial = doc["polynomial"].get<std::string>();
        c.P = parse(c.polynomial, 2);  // ParseError propagates with its position
        if (!is_selfadjoint(c.P)) throw ConfigError("polynomial '" + c.polynomial + "' is not selfadjoint");

        if (doc.contains("pencil")) {
            const auto& pj = doc["pencil"];
            const std::string mode = pj.value("mode", "constructed");
            if (mode == "inline") {
                c.inline_pencil = true;
                for (const auto& m : pj.at("gamma")) c.pencil_gamma.push_back(matrix_from_json(m));
                if (c.pencil_gamma.size() != 3) throw ConfigError("inline pencil needs gamma_0, gamma_1, gamma_2");
            } else if (mode != "constructed") {
                throw ConfigError("pencil.mode must be 'constructed' or 'inline'");
            }
        }

        if (doc.contains("mu")) c.mu = measure_from_json(doc["mu"]);
        if (doc.contains("nu")) c.nu = measure_from_json(doc["nu"]);
        if (doc.contains("spikes")) c.spikes = list<double>(doc, "spikes");
        if (doc.contains("ensemble")) c.ensemble = ensemble_from_string(doc["ensemble"].get<std::string>());
        if (c.ensemble != Ensemble::unitary_invariant) c.nu = SpectralMeasure::semicircle(0.0, 1.0);
        if (doc.contains("placement")) {
            const auto p = doc["placement"].get<std::string>();
            if (p == "quantiles") c.placement = BulkPlacement::quantiles;
            else if (p == "iid") c.placement = BulkPlacement::iid;
            else throw ConfigError("placement must be 'quantiles' or 'iid'");
        }
        if (doc.contains("N")) c.sizes = list<int>(doc, "N");
        if (doc.contains("seeds")) c.seeds = list<std::uint64_t>(doc, "seeds");
        if (c.sizes.empty() || c.seeds.empty()) throw ConfigError("'N' and 'seeds' must be nonempty");
        for (int n : c.sizes)
            if (n <= static_cast<int>(c.spikes.size())) throw ConfigError("every N must exceed the number of spikes");

        if (doc.contains("grid")) {
            c.grid_points = doc["grid"].value("points", c.grid_points);
            c.grid_extent = doc["grid"].value("extent", c.grid_extent);
            if (c.grid_points < 16 || !(c.grid_extent >= 1.0)) throw ConfigError("grid needs points >= 16 and extent >= 1");
        }
        if (doc.contains("eta_schedule")) c.eta_schedule = list<double>(doc, "eta_schedule");
        for (double e : c.eta_schedule)
            if (!(e > 0.0)) throw ConfigError("eta_schedule entries must be positive");
        if (doc.contains("criterion")) {
            const auto s = doc["criterion"].get<std::string>();
            if (s == "regularized") c.criterion = Criterion::regularized;
            else if (s == "plain") c.criterion = Criterion::plain;
            else throw ConfigError("criterion must be 'regularized' or 'plain'");
        }
        c.delta_min = doc.value("delta_min", c.delta_min);
        if (!(c.delta_min > 0.0)) throw ConfigError("delta_min must be positive");

        c.output = doc.value("output", c.output);
        if (doc.contains("plot")) c.plot_timestamp = doc["plot"].value("timestamp", false);

        for (const auto& [k, v] : default_tolerances()) c.tolerances[k] = {v, v};
        if (doc.contains("verify")) {
            const auto& vj = doc["verify"];
            const json tols = vj.value("tolerances", json::object());
            for (const auto& [k, v] : tols.items()) {
                if (!c.tolerances.count(k)) throw ConfigError("unknown tolerance '" + k + "'");
                c.tolerances[k].value = v.get<double>();
            }
            if (vj.contains("expected_outliers")) c.expected_outliers = vj["expected_outliers"].get<std::vector<double>>();
            if (vj.contains("expected_residues")) c.expected_residues = vj["expected_residues"].get<std::vector<double>>();
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    } catch (const DomainError& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    c.hash = config_hash(doc);
    c.document = std::move(doc);
    return c;
}

RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config '" + path + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config '" + path + "': " + e.what());
    }
    return config_from_json(std::move(doc), overrides);
}

}  // namespace freespike::cli
