#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "freespike/cli/config.hpp"
#include "freespike/linearize.hpp"
#include "freespike/outliers.hpp"
#include "freespike/spectrum.hpp"

namespace freespike::cli {

enum ExitCode { kOk = 0, kComputationFailure = 1, kConfigError = 2, kVerificationFailure = 3 };

/// Solver failure tagged with the module that raised it.
class StageError : public Error {
public:
    StageError(const std::string& stage, const std::string& what) : Error(stage + ": " + what) {}
};

struct Prediction {
    LinearizationPencil pencil;
    DensityProfile profile;
    OutlierReport report;
};

/// Pencil from the config: the inline matrices (user_supplied) or the constructed linearization.
LinearizationPencil config_pencil(const RunConfig& cfg);

Prediction compute_prediction(const RunConfig& cfg);

/// Writes density.csv, outliers.json, outliers.csv, scan.csv and predict.svg into cfg.output.
void write_prediction(const RunConfig& cfg, const Prediction& p);

/// Reads the prediction files of cfg.output if present and carrying cfg.hash.
std::optional<Prediction> load_prediction(const RunConfig& cfg);

int cmd_linearize(const RunConfig& cfg, std::ostream& out);
int cmd_predict(const RunConfig& cfg, std::ostream& out);
int cmd_simulate(const RunConfig& cfg, std::ostream& out);
int cmd_verify(const RunConfig& cfg, std::ostream& out);

struct Invocation {
    std::string command;
    std::string config;
    std::optional<std::string> out_dir;
    std::optional<std::uint64_t> seed;
    int threads = 0;
    std::vector<std::string> overrides;
};

/// Loads the config, dispatches, and maps exceptions to exit codes with a message on `err`.
int dispatch(const Invocation& inv, std::ostream& out, std::ostream& err);

}  // namespace freespike::cli
