#include <iostream>

#include <CLI11.hpp>

#include "freespike/cli/commands.hpp"

int main(int argc, char** argv) {
    using freespike::cli::Invocation;
    CLI::App app{"freespike: outliers of polynomials in spiked random matrices"};
    app.require_subcommand(1);

    Invocation inv;
    std::string out_dir;
    std::uint64_t seed = 0;
    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", inv.config, "JSON run configuration")->required();
        sub->add_option("--out", out_dir, "output directory (overrides config.output)");
        sub->add_option("--seed", seed, "single seed (overrides config.seeds)");
        sub->add_option("--threads", inv.threads, "OpenMP threads (0 = runtime default)");
        sub->add_option("--override", inv.overrides, "KEY=VALUE with dotted keys, VALUE as JSON")->take_all();
    };
    for (const char* name : {"linearize", "predict", "simulate", "verify"}) {
        static const std::map<std::string, std::string> help = {
            {"linearize", "build and certify the linearization pencil"},
            {"predict", "limiting density, support and outlier report"},
            {"simulate", "finite-N Monte Carlo samples"},
            {"verify", "compare simulations with predictions"}};
        add_common(app.add_subcommand(name, help.at(name)));
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : freespike::cli::kConfigError;
    }
    inv.command = app.get_subcommands().front()->get_name();
    const auto* sub = app.get_subcommands().front();
    if (sub->count("--out")) inv.out_dir = out_dir;
    if (sub->count("--seed")) inv.seed = seed;
    return freespike::cli::dispatch(inv, std::cout, std::cerr);
}
