#pragma once

/// @file report.hpp
/// @brief CSV output for runs and sweep summaries.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "flsim/sim_engine.hpp"

namespace flsim {

inline constexpr const char* kRoundsCsvHeader = "# flsim-rounds v1";
inline constexpr const char* kSummaryCsvHeader = "# flsim-summary v1";

/// One row per round: round, policy, t_round, energy_total, accuracy,
/// excluded, sel_h, sel_m, sel_l, act_cpu, act_gpu.
void write_rounds_csv(const RunReport& report, const Fleet& fleet, std::ostream& out);

/// FNV-1a over every round's per-device interference and network state.
std::uint64_t variance_hash(const RunReport& report);

/// Performance per watt of a run. Single-job runs: 1 / energy-to-target.
/// Restarting runs: 1 / mean energy of the jobs that started at or after
/// `warmup_rounds`. Nullopt when nothing converged.
std::optional<double> run_ppw(const RunReport& report, std::size_t warmup_rounds = 0);

/// Mean reward of each round's participants, for rounds where the policy
/// did not explore. Pairs of (round, reward); rounds without rewards skipped.
std::vector<std::pair<std::size_t, double>> greedy_reward_trace(const RunReport& report);

/// First round at which the sample variance of the trailing `window`
/// greedy-round rewards drops below `threshold`; nullopt if never.
std::optional<std::size_t> reward_stabilization_round(const RunReport& report,
                                                      std::size_t window = 20,
                                                      double threshold = 0.01);

struct SummaryRow {
    std::string policy;
    /// Empty for the per-policy mean rows.
    std::optional<std::uint64_t> seed;
    std::optional<double> ppw;
    /// PPW over the random policy's PPW on the same seed (mean rows: mean of
    /// the per-seed ratios).
    std::optional<double> normalized_ppw;
    std::optional<double> convergence_round;
    double final_accuracy = 0.0;
    double total_energy = 0.0;
    std::size_t jobs = 0;
    std::optional<double> oracle_match_rate;
};

/// Per-run rows followed by one mean row per policy, in input order.
std::vector<SummaryRow> summarize(const std::vector<RunReport>& reports,
                                  std::size_t warmup_rounds = 0);
void write_summary_csv(const std::vector<SummaryRow>& rows, std::ostream& out);

}  // namespace flsim
