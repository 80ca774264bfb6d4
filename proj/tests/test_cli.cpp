#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "freespike/cli/commands.hpp"
#include "freespike/cli/report_io.hpp"

using namespace freespike;
using namespace freespike::cli;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string kExamples = std::string(FREESPIKE_SOURCE_DIR) + "/docs/examples/";

fs::path scratch(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("freespike_cli_test_" + name);
    fs::remove_all(p);
    return p;
}

struct Outcome {
    int code;
    std::string out, err;
};

Outcome call(const std::string& command, const std::string& config, const fs::path& out_dir,
             std::vector<std::string> overrides = {}) {
    Invocation inv;
    inv.command = command;
    inv.config = config;
    inv.out_dir = out_dir.string();
    inv.overrides = std::move(overrides);
    std::ostringstream o, e;
    const int code = dispatch(inv, o, e);
    return {code, o.str(), e.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string write_config(const fs::path& dir, const std::string& name, const json& doc) {
    fs::create_directories(dir);
    const auto path = (dir / name).string();
    std::ofstream(path) << doc.dump(2);
    return path;
}

json read_doc(const std::string& path) {
    std::ifstream in(path);
    return json::parse(in);
}

const std::vector<std::string> kTabular = {"density.csv", "outliers.json", "outliers.csv", "scan.csv"};

}  // namespace

TEST_CASE("additive pipeline: predict, simulate, verify pass; outputs are idempotent and hashed") {
    const auto dir = scratch("additive");
    const auto cfg = kExamples + "additive.json";
    REQUIRE(call("predict", cfg, dir).code == kOk);
    std::map<std::string, std::string> first;
    for (const auto& f : kTabular) first[f] = slurp(dir / f);
    REQUIRE(call("simulate", cfg, dir).code == kOk);
    const auto eig = slurp(dir / "eigenvalues_N500_seed1.csv");
    const auto v = call("verify", cfg, dir);
    CHECK(v.code == kOk);
    CHECK(v.out.find("FAIL") == std::string::npos);
    CHECK(v.out.find("PASS expected_outlier") != std::string::npos);
    CHECK(v.out.find("PASS overlap") != std::string::npos);

    REQUIRE(call("predict", cfg, dir).code == kOk);
    REQUIRE(call("simulate", cfg, dir).code == kOk);
    for (const auto& f : kTabular) CHECK(slurp(dir / f) == first[f]);
    CHECK(slurp(dir / "eigenvalues_N500_seed1.csv") == eig);

    const auto hash = load_config(cfg, {"output=\"" + dir.string() + "\""}).hash;
    for (const auto& f : {"density.csv", "outliers.csv", "scan.csv", "eigenvalues_N500_seed2.csv"})
        CHECK(slurp(dir / f).find(hash) != std::string::npos);
    CHECK(json_config_hash((dir / "outliers.json").string()) == hash);
    CHECK(read_json((dir / "simulate.json").string())["config_hash"] == hash);
    CHECK(slurp(dir / "predict.svg").find("<svg") != std::string::npos);
    CHECK(fs::exists(dir / "histogram_N500.svg"));

    SUBCASE("tampered outlier file fails with named criteria") {
        auto doc = read_json((dir / "outliers.json").string());
        doc["zeros"][0]["t"] = 2.7;
        std::ofstream((dir / "outliers.json").string()) << doc.dump(2);
        const auto t = call("verify", cfg, dir);
        CHECK(t.code == kVerificationFailure);
        CHECK(t.out.find("FAIL expected_outlier") != std::string::npos);
    }
    SUBCASE("changing the model makes verify refuse the outputs") {
        const auto t = call("verify", cfg, dir, {"spikes=[3]"});
        CHECK(t.code == kConfigError);
        CHECK(t.err.find("hash mismatch") != std::string::npos);
    }
    SUBCASE("tolerance overrides: tightening fails, widening passes and is flagged") {
        const auto tight = call("verify", cfg, dir, {"verify.tolerances.bulk_ks=1e-6"});
        CHECK(tight.code == kVerificationFailure);
        CHECK(tight.out.find("FAIL bulk_ks") != std::string::npos);
        const auto wide = call("verify", cfg, dir, {"verify.tolerances.bulk_ks=0.5"});
        CHECK(wide.code == kOk);
        CHECK(wide.out.find("tolerance 0.5 [overridden]") != std::string::npos);
    }
}

TEST_CASE("linearize: MP polynomial, constructed and inline pencils") {
    const auto dir = scratch("linearize");
    const auto cfg = kExamples + "mp_theta10.json";
    const auto inl = call("linearize", cfg, dir);
    CHECK(inl.code == kOk);
    CHECK(inl.out.find("user_supplied") != std::string::npos);
    const auto pencil = read_json((dir / "pencil.json").string());
    CHECK(pencil.dump().find("user_supplied") != std::string::npos);

    auto doc = read_doc(cfg);
    doc.erase("pencil");
    const auto constructed = call("linearize", write_config(dir, "c.json", doc), dir);
    CHECK(constructed.code == kOk);
    CHECK(constructed.out.find("constructed") != std::string::npos);
    CHECK(read_json((dir / "certification.json").string())["passed"] == true);
}

TEST_CASE("config errors exit 2") {
    const auto dir = scratch("errors");
    auto base = read_doc(kExamples + "additive.json");

    auto bad_poly = base;
    bad_poly["polynomial"] = "x*(y+";
    const auto p = call("predict", write_config(dir, "p.json", bad_poly), dir);
    CHECK(p.code == kConfigError);
    CHECK(p.err.find("position 5") != std::string::npos);

    auto unknown = base;
    unknown["colour"] = "blue";
    CHECK(call("predict", write_config(dir, "u.json", unknown), dir).code == kConfigError);

    auto in_support = base;
    in_support["spikes"] = json::array({0.0});
    CHECK(call("predict", write_config(dir, "s.json", in_support), dir).code == kConfigError);

    auto non_sa = base;
    non_sa["polynomial"] = "x*y";
    CHECK(call("linearize", write_config(dir, "n.json", non_sa), dir).code == kConfigError);

    CHECK(call("predict", (dir / "missing.json").string(), dir).code == kConfigError);
    CHECK(call("verify", kExamples + "additive.json", scratch("empty")).code == kConfigError);
    CHECK(call("predict", kExamples + "additive.json", dir, {"grid.points=3"}).code == kConfigError);
}

TEST_CASE("predict: MP theta = 1 reports only the negative outlier") {
    const auto dir = scratch("mp1");
    const auto r = call("predict", kExamples + "mp_theta10.json", dir, {"spikes=[1]", "grid.points=1001"});
    REQUIRE(r.code == kOk);
    const auto rep = outlier_report_from_json(read_json((dir / "outliers.json").string()));
    REQUIRE(rep.zeros.size() == 1);
    CHECK(std::abs(rep.zeros[0].t + 0.2360679774997897) < 1e-6);
}

TEST_CASE("simulate: N list gives one result set and plot per size; p = 0 semicircle model has no outliers") {
    const auto dir = scratch("nlist");
    auto doc = read_doc(kExamples + "additive.json");
    doc["mu"] = {{"type", "semicircle"}, {"mean", 0.0}, {"variance", 1.0}};
    doc["spikes"] = json::array();
    doc["N"] = json::array({250, 500, 1000});
    doc["seeds"] = json::array({1});
    doc.erase("verify");
    const auto cfg = write_config(dir, "sc.json", doc);
    REQUIRE(call("simulate", cfg, dir).code == kOk);
    for (int N : {250, 500, 1000}) {
        CHECK(fs::exists(dir / ("histogram_N" + std::to_string(N) + ".svg")));
        CHECK(fs::exists(dir / ("eigenvalues_N" + std::to_string(N) + "_seed1.csv")));
    }
    const auto s = read_json((dir / "sim_N1000_seed1.json").string());
    CHECK(s["empirical_outliers"].empty());
    std::ifstream ef(dir / "eigenvalues_N1000_seed1.csv");
    const auto eig = read_eigenvalues(ef);
    CHECK(eig.size() == 1000);
}

TEST_CASE("command-line tool: exit codes") {
    const std::string tool = FREESPIKE_TOOL;
    auto status = [](const std::string& cmd) {
        const int s = std::system((cmd + " >/dev/null 2>&1").c_str());
        return WEXITSTATUS(s);
    };
    CHECK(status(tool + " predict") == 2);  // --config is required
    CHECK(status(tool + " frobnicate --config x") == 2);
    const auto dir = scratch("tool");
    CHECK(status(tool + " linearize --config " + kExamples + "additive.json --out " + dir.string()) == 0);
    CHECK(status(tool + " predict --config " + kExamples + "additive.json --out " + dir.string() +
                 " --override polynomial='\"x*(y+\"'") == 2);
}
