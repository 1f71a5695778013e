#include "flsim/controller.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <string>

#include "flsim/error.hpp"
#include "flsim/oracle.hpp"
#include "flsim/rng.hpp"

namespace flsim {

void LearnerConfig::validate() const {
    const auto unit = [](double v) { return v > 0.0 && v <= 1.0; };
    if (!unit(learning_rate) || !unit(discount) || !unit(epsilon)) {
        throw ConfigError("learning_rate, discount and epsilon must be in (0, 1]");
    }
    if (alpha < 0.0 || beta < 0.0) throw ConfigError("alpha and beta must be non-negative");
    if (energy_normalizer < 0.0) throw ConfigError("energy_normalizer must be non-negative");
    if (!(init_low <= init_high)) throw ConfigError("init_low must not exceed init_high");
}

Action greedy_action(const QTable& table, const DeviceProfile& device, const StateKey& state) {
    Action best{};
    double best_value = 0.0;
    bool first = true;
    for (Processor p : {Processor::CPU, Processor::GPU}) {
        for (std::size_t s = 0; s < device.steps(p).size(); ++s) {
            const Action a{p, s};
            const double v = table.value(state, a);
            if (first || v > best_value) {
                best = a;
                best_value = v;
                first = false;
            }
        }
    }
    return best;
}

bool exploration_round(double epsilon, std::uint64_t seed, std::uint64_t round) {
    auto eng = keyed_engine(Stream::Selection, seed, round);
    return unit_double(eng) < epsilon;
}

RoundPlan select_round(const QTables& tables, const Fleet& fleet, const GlobalState& global,
                       std::span<const LocalState> locals, std::size_t k, double epsilon,
                       std::uint64_t seed, std::uint64_t round) {
    if (k > fleet.size()) throw SimError("K exceeds fleet size");
    if (locals.size() != fleet.size()) throw SimError("need one local state per device");
    auto eng = keyed_engine(Stream::Selection, seed, round);
    RoundPlan plan;

    if (unit_double(eng) < epsilon) {
        std::vector<DeviceId> ids(fleet.size());
        std::iota(ids.begin(), ids.end(), 0);
        for (std::size_t i = 0; i < k; ++i) {
            std::uniform_int_distribution<std::size_t> pick(i, ids.size() - 1);
            std::swap(ids[i], ids[pick(eng)]);
            const auto& d = fleet.device(ids[i]);
            const auto actions = actions_for(d);
            std::uniform_int_distribution<std::size_t> act(0, actions.size() - 1);
            plan.actions[d.id] = actions[act(eng)];
        }
        return plan;
    }

    struct Scored {
        double score;
        std::uint64_t tie;
        DeviceId id;
        Action action;
    };
    std::vector<Scored> scored;
    scored.reserve(fleet.size());
    for (const auto& d : fleet.devices()) {
        const StateKey s{global, locals[static_cast<std::size_t>(d.id)]};
        const auto& table = tables.table_for(d.id);
        const Action a = greedy_action(table, d, s);
        scored.push_back({table.value(s, a), eng(), d.id, a});
    }
    std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.tie < b.tie;
    });
    for (std::size_t i = 0; i < k; ++i) plan.actions[scored[i].id] = scored[i].action;
    return plan;
}

double compute_local_reward_energy(const RoundPlan& plan, DeviceId device,
                                   const EnergyBreakdown& energy) {
    return plan.contains(device) ? energy.compute + energy.comm : energy.idle;
}

double compute_global_reward_energy(std::span<const double> locals) {
    return std::accumulate(locals.begin(), locals.end(), 0.0);
}

double compute_reward(const RewardInputs& in, double alpha, double beta, double normalizer) {
    if (!(normalizer > 0.0)) throw SimError("reward normalizer must be positive");
    const double gain = in.accuracy - in.accuracy_prev;
    if (gain <= 0.0) return in.accuracy - 100.0;
    return -(in.energy_global / normalizer) - (in.energy_local / normalizer) +
           alpha * in.accuracy + beta * gain;
}

void update_q(QTables& tables, DeviceId device, const StateKey& state, const Action& action,
              double reward, const StateKey& next_state, const Action& next_action,
              double learning_rate, double discount) {
    auto& table = tables.table_for(device);
    const double q_next = table.value(next_state, next_action);
    auto& entry = table.touch(q_key(state, action));
    entry.value = q_update(entry.value, reward, q_next, learning_rate, discount);
    entry.count += 1;
}

std::string_view to_string(BaselineKind kind) {
    switch (kind) {
        case BaselineKind::Random: return "random";
        case BaselineKind::Power: return "power";
        case BaselineKind::Performance: return "performance";
        case BaselineKind::OParticipant: return "o-participant";
        case BaselineKind::OFL: return "o-fl";
    }
    return "?";
}

RoundPlan baseline_policy(BaselineKind kind, const RoundEnvironment& env, std::size_t k,
                          std::uint64_t seed, std::uint64_t round) {
    const auto& fleet = env.fleet();
    const auto cluster_seed =
        stream_key({static_cast<std::uint64_t>(Stream::Baseline), seed, round});
    const auto fixed_cluster = [&](ClusterTemplate c) {
        RoundPlan plan;
        for (auto id : instantiate_cluster(fleet, c, static_cast<int>(k), cluster_seed)) {
            plan.actions[id] = default_action(fleet.device(id));
        }
        return plan;
    };
    switch (kind) {
        case BaselineKind::Random: return fixed_cluster(ClusterTemplate::C0);
        case BaselineKind::Power: return fixed_cluster(ClusterTemplate::C7);
        case BaselineKind::Performance: return fixed_cluster(ClusterTemplate::C1);
        case BaselineKind::OParticipant: return oracle_plan(env, k, false).plan;
        case BaselineKind::OFL: return oracle_plan(env, k, true).plan;
    }
    throw SimError("unknown baseline");
}

QTables share_tables(const QTables& tables) { return tables.shared_copy(); }

}  // namespace flsim
