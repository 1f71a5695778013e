// flsim: run federated-learning fleet experiments from a JSON config.
//
//   flsim run --config exp.json [--out dir] [--seed N] [--policy autofl ...] [-v]
//   flsim show-config --config exp.json
//
// Exit codes: 0 success, 2 configuration error, 3 runtime error.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "flsim/config.hpp"
#include "flsim/error.hpp"
#include "flsim/sweep.hpp"

namespace {

int run_main(int argc, char** argv) {
    CLI::App app{"Federated-learning fleet simulator"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> policy_names;
    int verbosity = 0;

    auto* run = app.add_subcommand("run", "Run every (policy, seed) pair and write CSV reports");
    run->add_option("-c,--config", config_path, "Experiment config (JSON)")->required();
    run->add_option("-o,--out", out_dir, "Output directory (overrides the config)");
    run->add_option("-s,--seed", seed, "Run a single seed instead of the config's list");
    run->add_option("-p,--policy", policy_names, "Only run these policies");
    run->add_flag("-v,--verbose", verbosity, "Report progress on stderr");

    auto* show = app.add_subcommand("show-config", "Print the config with all defaults filled in");
    show->add_option("-c,--config", config_path, "Experiment config (JSON)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : flsim::ConfigError::kExitCode;
    }

    const auto config = flsim::parse_config(config_path);
    if (*show) {
        std::cout << flsim::serialize_config(config);
        return 0;
    }

    flsim::SweepOptions opts;
    if (!out_dir.empty()) opts.out_dir = out_dir;
    opts.seed = seed;
    for (const auto& name : policy_names) opts.policies.push_back(flsim::parse_policy(name));
    opts.verbosity = verbosity;
    const auto result = flsim::run_sweep(config, opts);
    if (verbosity > 0) {
        std::cerr << "wrote " << result.run_files.size() << " run files and "
                  << result.summary_file.string() << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run_main(argc, argv);
    } catch (const flsim::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return flsim::ConfigError::kExitCode;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return flsim::SimError::kExitCode;
    }
}
