#pragma once

/// @file sweep.hpp
/// @brief Runs every (policy, seed) pair of an experiment, in parallel, and
/// writes one CSV per run plus a summary.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "flsim/config.hpp"
#include "flsim/report.hpp"

namespace flsim {

struct SweepOptions {
    /// Overrides config.output when set.
    std::optional<std::filesystem::path> out_dir;
    /// Replaces the config's seed list with a single seed.
    std::optional<std::uint64_t> seed;
    /// Restricts the config's policies; empty keeps them all.
    std::vector<PolicyKind> policies;
    /// Zero: FLSIM_WORKERS, else the hardware concurrency.
    std::size_t workers = 0;
    int verbosity = 0;
};

struct SweepResult {
    std::vector<std::filesystem::path> run_files;
    std::filesystem::path summary_file;
    std::vector<RunReport> reports;
    std::vector<SummaryRow> summary;
};

/// Worker count from the FLSIM_WORKERS environment variable (at least 1).
std::size_t workers_from_env();

std::string run_file_name(PolicyKind policy, std::uint64_t seed);

/// Writes to a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

SweepResult run_sweep(const ExperimentConfig& config, const SweepOptions& options = {});

}  // namespace flsim
