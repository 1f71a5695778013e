#include "flsim/oracle.hpp"

#include <algorithm>
#include <limits>
#include <vector>

#include "flsim/error.hpp"

namespace flsim {

namespace {

/// Energy of a participant finishing by deadline T is fixed + idle_coef * T.
struct Option {
    Action action;
    double latency = 0.0;
    double fixed = 0.0;
    double idle_coef = 0.0;
};

struct Candidate {
    double marginal = 0.0;
    DeviceId id = 0;
    Action action;
};

}  // namespace

OracleResult oracle_plan(const RoundEnvironment& env, std::size_t k, bool search_targets) {
    const auto& fleet = env.fleet();
    const int kk = static_cast<int>(k);
    if (k == 0 || k > fleet.size()) throw SimError("oracle needs 1 <= K <= fleet size");

    std::vector<std::vector<Option>> options(fleet.size());
    std::vector<double> deadlines;
    double idle_coef_total = 0.0;
    for (const auto& d : fleet.devices()) {
        idle_coef_total += d.cpu_idle_power_w;
        if (env.conditions(d.id).samples == 0) continue;
        const double tx = 2.0 * env.transfer_seconds(d.id);
        const double p_tx = d.tx_power(env.conditions(d.id).network.signal);
        const auto actions = search_targets ? actions_for(d) : std::vector<Action>{default_action(d)};
        for (const auto& a : actions) {
            const double busy = env.compute_seconds(d.id, a);
            const double p_busy = d.steps(a.processor)[a.step].busy_power_w;
            const double p_wait = d.idle_power(a.processor);
            Option o{a, busy + tx, (p_busy - p_wait) * busy + (p_tx - p_wait) * tx, p_wait};
            options[static_cast<std::size_t>(d.id)].push_back(o);
            deadlines.push_back(o.latency);
        }
    }
    std::sort(deadlines.begin(), deadlines.end());
    deadlines.erase(std::unique(deadlines.begin(), deadlines.end()), deadlines.end());

    std::vector<std::pair<ClusterTemplate, TierCounts>> templates;
    for (int c = 1; c <= 7; ++c) {
        const auto t = static_cast<ClusterTemplate>(c);
        templates.emplace_back(t, scale_counts(template_counts(t), kk));
    }

    double best_total = std::numeric_limits<double>::infinity();
    OracleResult best;
    bool found = false;
    std::array<std::vector<Candidate>, 3> per_tier;
    for (double deadline : deadlines) {
        for (auto& v : per_tier) v.clear();
        for (const auto& d : fleet.devices()) {
            const auto& opts = options[static_cast<std::size_t>(d.id)];
            const Option* pick = nullptr;
            double pick_cost = std::numeric_limits<double>::infinity();
            for (const auto& o : opts) {
                if (o.latency > deadline) continue;
                const double cost = o.fixed + o.idle_coef * deadline;
                if (cost < pick_cost) {
                    pick_cost = cost;
                    pick = &o;
                }
            }
            if (pick == nullptr) continue;
            per_tier[static_cast<std::size_t>(d.tier)].push_back(
                {pick_cost - d.cpu_idle_power_w * deadline, d.id, pick->action});
        }
        for (auto& v : per_tier) {
            std::stable_sort(v.begin(), v.end(), [](const Candidate& a, const Candidate& b) {
                return a.marginal < b.marginal;
            });
        }
        for (const auto& [tmpl, want] : templates) {
            double total = idle_coef_total * deadline;
            bool feasible = true;
            for (Tier t : kTiers) {
                const auto& v = per_tier[static_cast<std::size_t>(t)];
                if (static_cast<int>(v.size()) < want[t]) {
                    feasible = false;
                    break;
                }
                for (int i = 0; i < want[t]; ++i) total += v[static_cast<std::size_t>(i)].marginal;
            }
            if (!feasible || !(total < best_total)) continue;
            best_total = total;
            found = true;
            best.cluster = tmpl;
            best.plan.actions.clear();
            for (Tier t : kTiers) {
                const auto& v = per_tier[static_cast<std::size_t>(t)];
                for (int i = 0; i < want[t]; ++i) {
                    best.plan.actions[v[static_cast<std::size_t>(i)].id] =
                        v[static_cast<std::size_t>(i)].action;
                }
            }
        }
    }
    if (!found) throw SimError("no cluster template is feasible for this fleet and K");
    best.cost = evaluate_plan(env, best.plan);
    return best;
}

}  // namespace flsim
