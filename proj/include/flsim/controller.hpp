#pragma once

/// @file controller.hpp
/// @brief The Q-learning participant/target controller, its reward model,
/// and the fixed baseline policies it is compared against.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>

#include "flsim/qtable.hpp"
#include "flsim/round_model.hpp"

namespace flsim {

struct LearnerConfig {
    double learning_rate = 0.9;  ///< gamma in the update rule
    double discount = 0.1;       ///< mu in the update rule
    double epsilon = 0.1;
    double alpha = 1.0;          ///< weight on absolute accuracy
    double beta = 1.0;           ///< weight on accuracy improvement
    bool shared_tables = false;
    /// Joules that map to one reward unit. Zero means: derive from the
    /// random-baseline fleet energy of the first round.
    double energy_normalizer = 0.0;
    double init_low = 0.0;
    double init_high = 0.01;

    void validate() const;
};

struct RewardInputs {
    double energy_local = 0.0;   ///< joules, this device
    double energy_global = 0.0;  ///< joules, whole fleet
    double accuracy = 0.0;       ///< percent, after this round
    double accuracy_prev = 0.0;  ///< percent, before this round
};

/// Epsilon-greedy round plan. With probability epsilon (one draw per round)
/// K random devices get random actions; otherwise devices are ranked by their
/// best Q-value (random tie-break) and the top K take their argmax action.
RoundPlan select_round(const QTables& tables, const Fleet& fleet, const GlobalState& global,
                       std::span<const LocalState> locals, std::size_t k, double epsilon,
                       std::uint64_t seed, std::uint64_t round);

/// Whether select_round explores in this round.
bool exploration_round(double epsilon, std::uint64_t seed, std::uint64_t round);

/// Highest-valued action for a device in a state; first in action order on ties.
Action greedy_action(const QTable& table, const DeviceProfile& device, const StateKey& state);

/// Participants: compute + comm. Everyone else: idle.
double compute_local_reward_energy(const RoundPlan& plan, DeviceId device,
                                   const EnergyBreakdown& energy);
double compute_global_reward_energy(std::span<const double> locals);

/// Non-improving rounds score accuracy - 100. Improving rounds score
/// -(E_global + E_local) / normalizer + alpha * acc + beta * (acc - prev).
double compute_reward(const RewardInputs& in, double alpha, double beta, double normalizer);

/// q + lr * (reward + discount * q_next - q)
inline double q_update(double q, double reward, double q_next, double learning_rate,
                       double discount) {
    return q + learning_rate * (reward + discount * q_next - q);
}

/// Applies one update to the device's table (the tier table when shared).
void update_q(QTables& tables, DeviceId device, const StateKey& state, const Action& action,
              double reward, const StateKey& next_state, const Action& next_action,
              double learning_rate, double discount);

enum class BaselineKind { Random, Power, Performance, OParticipant, OFL };

std::string_view to_string(BaselineKind kind);

/// Random: uniform K devices. Power / Performance: C7 / C1 clusters.
/// All three run on the top CPU step. The two oracles search the cluster
/// templates against the ground-truth round model; OFL also searches
/// processors and DVFS steps.
RoundPlan baseline_policy(BaselineKind kind, const RoundEnvironment& env, std::size_t k,
                          std::uint64_t seed, std::uint64_t round);

/// Collapses per-device tables into per-tier tables.
QTables share_tables(const QTables& tables);

}  // namespace flsim
