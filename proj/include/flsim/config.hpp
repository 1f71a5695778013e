#pragma once

/// @file config.hpp
/// @brief Experiment configuration: a JSON tree with named presets for the
/// cluster fleet, global parameters and workloads.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "flsim/sim_engine.hpp"

namespace flsim {

struct ExperimentConfig {
    FleetSpec fleet;
    WorkloadSpec workload = WorkloadSpec::preset("cnn-mnist");
    /// Name of the S1..S4 preset the params came from, if any.
    std::optional<std::string> params_preset;
    GlobalParams params;
    DatasetSource dataset;
    DataRegime regime;
    VarianceConfig variance;
    std::vector<PolicyKind> policies{PolicyKind::Random, PolicyKind::AutoFL};
    LearnerConfig learner;
    std::vector<std::uint64_t> seeds{1};
    double straggler_multiplier = 3.0;
    bool record_oracle = false;
    bool restart_on_target = false;
    /// Jobs starting before this round are left out of the summary PPW.
    std::size_t warmup_rounds = 0;
    std::string output = "out";

    RunConfig run_config(PolicyKind policy, std::uint64_t seed) const;
    /// Throws ConfigError naming the offending field.
    void validate() const;
};

/// Throws ConfigError with a field path ("config.learner.epsilon: ...").
ExperimentConfig parse_config_text(std::string_view text);
ExperimentConfig parse_config(const std::filesystem::path& path);

/// Canonical JSON with every field spelled out.
std::string serialize_config(const ExperimentConfig& config);

}  // namespace flsim
