#include "flsim/sim_engine.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <string>
#include <utility>

#include "flsim/error.hpp"
#include "flsim/oracle.hpp"
#include "flsim/rng.hpp"

namespace flsim {

std::string_view to_string(PolicyKind kind) {
    switch (kind) {
        case PolicyKind::AutoFL: return "autofl";
        case PolicyKind::Random: return "random";
        case PolicyKind::Power: return "power";
        case PolicyKind::Performance: return "performance";
        case PolicyKind::OParticipant: return "o-participant";
        case PolicyKind::OFL: return "o-fl";
    }
    return "?";
}

PolicyKind parse_policy(std::string_view name) {
    for (auto k : {PolicyKind::AutoFL, PolicyKind::Random, PolicyKind::Power,
                   PolicyKind::Performance, PolicyKind::OParticipant, PolicyKind::OFL}) {
        if (to_string(k) == name) return k;
    }
    throw ConfigError("unknown policy '" + std::string(name) +
                      "' (expected autofl, random, power, performance, o-participant, o-fl)");
}

std::optional<double> RunReport::ppw() const {
    if (!converged() || !(energy_to_convergence > 0.0)) return std::nullopt;
    return convergence_ppw(energy_to_convergence);
}

std::uint64_t training_seed(std::uint64_t run_seed, std::size_t round, DeviceId device) {
    return stream_key({static_cast<std::uint64_t>(Stream::Shuffle), run_seed, round,
                       static_cast<std::uint64_t>(device)});
}

std::uint64_t model_seed(std::uint64_t run_seed, std::size_t job) {
    return stream_key({static_cast<std::uint64_t>(Stream::ModelInit), run_seed, job});
}

std::vector<DeviceConditions> sample_conditions(const RunConfig& config, const DataPartition& part,
                                                std::size_t num_devices, std::size_t round) {
    std::vector<DeviceConditions> out(num_devices);
    for (std::size_t i = 0; i < num_devices; ++i) {
        const auto id = static_cast<DeviceId>(i);
        out[i].interference = sample_interference(config.variance.scenario,
                                                  config.variance.affected_fraction, config.seed,
                                                  round, id);
        out[i].network = sample_network(config.variance.bandwidth_mean_mbps,
                                        config.variance.bandwidth_stddev_mbps, config.seed, round,
                                        id);
        out[i].samples = i < part.devices() ? part.assignment[i].size() : 0;
    }
    return out;
}

double random_round_zero_energy(const RunConfig& config, const Fleet& fleet,
                                const WorkloadSpec& workload, const DataPartition& part) {
    RoundEnvironment env(fleet, workload, config.params,
                         sample_conditions(config, part, fleet.size(), 0));
    const auto plan =
        baseline_policy(BaselineKind::Random, env, config.params.participants, config.seed, 0);
    return evaluate_plan(env, plan).energy;
}

bool plans_match(const Fleet& fleet, const RoundPlan& a, const RoundPlan& b) {
    const auto signature = [&](const RoundPlan& p) {
        std::vector<std::pair<Tier, Processor>> sig;
        for (const auto& [id, act] : p.actions) sig.emplace_back(fleet.device(id).tier, act.processor);
        std::sort(sig.begin(), sig.end());
        return sig;
    };
    return signature(a) == signature(b);
}

DatasetSplit load_dataset(const DatasetSource& source) {
    if (!source.idx) return generate_synthetic(source.synthetic);
    const auto& idx = *source.idx;
    DatasetSplit split;
    split.train = load_idx(idx.train_images, idx.train_labels, idx.num_classes);
    split.test = load_idx(idx.test_images, idx.test_labels, idx.num_classes);
    return split;
}

Simulation::Simulation(RunConfig config)
    : Simulation(config, std::make_shared<const DatasetSplit>(load_dataset(config.dataset))) {}

Simulation::Simulation(RunConfig config, std::shared_ptr<const DatasetSplit> data)
    : config_(std::move(config)), data_(std::move(data)) {
    if (!data_) throw ConfigError("dataset is missing");
    data_->train.validate();
    data_->test.validate();
    if (data_->train.feature_dim != data_->test.feature_dim ||
        data_->train.num_classes != data_->test.num_classes) {
        throw ConfigError("train and test sets disagree on shape");
    }
    config_.learner.validate();
    if (!(config_.straggler_multiplier > 0.0)) {
        throw ConfigError("straggler_multiplier must be positive");
    }
    fleet_ = build_fleet(config_.fleet, config_.seed);
    config_.params.validate(fleet_.size());
    workload_ = config_.workload;
    partition_ = flsim::partition(data_->train, fleet_.size(), config_.regime, config_.seed);
    global_state_ = encode_global(workload_, config_.params);
    const ModelShape shape{workload_.trainable_arch, data_->train.feature_dim,
                           static_cast<std::size_t>(data_->train.num_classes)};
    // Trainable workloads ship the surrogate's weights; descriptor-only ones keep their own size.
    if (workload_.trainable()) workload_.parameter_count = shape.parameter_count();
    model_ = init_model(shape, model_seed(config_.seed, 0));
    accuracy_prev_ = evaluate(model_, data_->test);
    tables_ = QTables(fleet_, config_.learner.shared_tables, config_.seed,
                      config_.learner.init_low, config_.learner.init_high);
    normalizer_ = config_.learner.energy_normalizer > 0.0
                      ? config_.learner.energy_normalizer
                      : random_round_zero_energy(config_, fleet_, workload_, partition_);
    if (!(normalizer_ > 0.0)) throw SimError("energy normalizer is not positive");
}

bool Simulation::finished() const {
    if (round_ >= config_.params.max_rounds) return true;
    return converged_ && !config_.restart_on_target;
}

std::vector<LocalState> Simulation::local_states(
    const std::vector<DeviceConditions>& conditions) const {
    std::vector<LocalState> out;
    out.reserve(conditions.size());
    for (std::size_t i = 0; i < conditions.size(); ++i) {
        out.push_back(encode_local(conditions[i].interference, conditions[i].network,
                                   partition_.classes_present[i].size(), partition_.num_classes));
    }
    return out;
}

RoundPlan Simulation::plan_for(const RoundEnvironment& env, const std::vector<LocalState>& locals,
                               bool& explored) {
    const auto k = config_.params.participants;
    const auto r = static_cast<std::uint64_t>(round_);
    explored = false;
    switch (config_.policy) {
        case PolicyKind::AutoFL:
            if (pending_plan_) {
                explored = pending_explored_;
                return *pending_plan_;
            }
            explored = exploration_round(config_.learner.epsilon, config_.seed, r);
            return select_round(tables_, fleet_, global_state_, locals, k,
                                config_.learner.epsilon, config_.seed, r);
        case PolicyKind::Random:
            return baseline_policy(BaselineKind::Random, env, k, config_.seed, r);
        case PolicyKind::Power:
            return baseline_policy(BaselineKind::Power, env, k, config_.seed, r);
        case PolicyKind::Performance:
            return baseline_policy(BaselineKind::Performance, env, k, config_.seed, r);
        case PolicyKind::OParticipant:
            return baseline_policy(BaselineKind::OParticipant, env, k, config_.seed, r);
        case PolicyKind::OFL:
            return baseline_policy(BaselineKind::OFL, env, k, config_.seed, r);
    }
    throw SimError("unknown policy");
}

RoundOutcome Simulation::run_round() {
    if (finished()) throw SimError("simulation already finished");
    const std::size_t r = round_;
    const std::size_t n = fleet_.size();
    auto conditions = sample_conditions(config_, partition_, n, r);
    RoundEnvironment env(fleet_, workload_, config_.params, conditions);
    const auto locals = local_states(conditions);

    RoundOutcome out;
    out.round = r;
    out.job = job_;
    out.conditions = conditions;
    out.plan = override_ ? override_(env, r) : plan_for(env, locals, out.explored);
    pending_plan_.reset();
    for (const auto& [id, act] : out.plan.actions) {
        const auto& d = fleet_.device(id);
        if (act.step >= d.steps(act.processor).size()) {
            throw SimError("plan uses an unknown DVFS step on device " + std::to_string(id));
        }
    }

    // Straggler rule: anyone slower than a multiple of the median latency is cut off.
    std::map<DeviceId, double> latency;
    for (const auto& [id, act] : out.plan.actions) latency[id] = env.latency(id, act);
    if (!latency.empty()) {
        std::vector<double> sorted;
        for (const auto& [id, t] : latency) sorted.push_back(t);
        std::sort(sorted.begin(), sorted.end());
        const std::size_t m = sorted.size();
        const double median =
            m % 2 == 1 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
        out.deadline = config_.straggler_multiplier * median;
        for (const auto& [id, t] : latency) {
            if (t > out.deadline) {
                out.excluded.push_back(id);
            } else {
                out.t_round = std::max(out.t_round, t);
            }
        }
    }

    out.devices.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto id = static_cast<DeviceId>(i);
        auto& dr = out.devices[i];
        const auto it = out.plan.actions.find(id);
        dr.selected = it != out.plan.actions.end();
        if (!dr.selected) {
            dr.record = env.idle_record(id, out.t_round);
        } else {
            dr.excluded = latency[id] > out.deadline;
            dr.record = dr.excluded ? env.straggler_record(id, it->second, out.t_round)
                                    : env.participant_record(id, it->second, out.t_round);
        }
        dr.energy = breakdown(fleet_.device(id), dr.record, dr.selected);
        out.energy_total += dr.energy.total();
    }

    const SgdConfig sgd{config_.params.batch_size, config_.params.local_epochs,
                        workload_.learning_rate_sgd};
    std::vector<LocalUpdate> updates;
    for (const auto& [id, act] : out.plan.actions) {
        auto& dr = out.devices[static_cast<std::size_t>(id)];
        const auto& shard = partition_.assignment[static_cast<std::size_t>(id)];
        if (dr.excluded || shard.empty()) continue;
        try {
            updates.push_back(
                local_train(model_, data_->train, shard, sgd, training_seed(config_.seed, r, id)));
            dr.trained = true;
        } catch (const SimError&) {
            // A diverged client is treated as a dropout.
        }
    }
    if (auto agg = fedavg_aggregate(updates)) {
        model_.parameters = std::move(*agg);
        ++model_.version;
    } else {
        out.no_update = true;
    }
    out.accuracy_prev = accuracy_prev_;
    out.accuracy = evaluate(model_, data_->test);
    out.reached_target = out.accuracy >= config_.params.target_accuracy;

    if (config_.record_oracle) {
        try {
            const auto oracle = oracle_plan(env, config_.params.participants, true);
            out.oracle_match = plans_match(fleet_, out.plan, oracle.plan);
        } catch (const SimError&) {
            out.oracle_match.reset();
        }
    }

    if (config_.policy == PolicyKind::AutoFL) learn(out, locals);

    accuracy_prev_ = out.accuracy;
    job_energy_ += out.energy_total;
    ++round_;
    if (out.reached_target) {
        if (!first_convergence_) first_convergence_ = r;
        converged_ = true;
        if (config_.restart_on_target) restart_job();
    }
    return out;
}

void Simulation::restart_job() {
    jobs_.push_back({job_start_, round_ - 1, job_energy_});
    ++job_;
    job_start_ = round_;
    job_energy_ = 0.0;
    model_ = init_model(model_.shape, model_seed(config_.seed, job_));
    accuracy_prev_ = evaluate(model_, data_->test);
}

void Simulation::learn(RoundOutcome& out, const std::vector<LocalState>& locals) {
    const std::size_t n = fleet_.size();
    std::vector<double> local_energy(n);
    for (std::size_t i = 0; i < n; ++i) {
        local_energy[i] = compute_local_reward_energy(out.plan, static_cast<DeviceId>(i),
                                                      out.devices[i].energy);
    }
    const double global_energy = compute_global_reward_energy(local_energy);

    // The next round's plan is chosen before this round's update lands, and
    // its actions are what each device bootstraps from.
    const auto next_r = static_cast<std::uint64_t>(out.round + 1);
    const auto next_locals =
        local_states(sample_conditions(config_, partition_, n, out.round + 1));
    RoundPlan next;
    if (!override_) {
        next = select_round(tables_, fleet_, global_state_, next_locals,
                            config_.params.participants, config_.learner.epsilon, config_.seed,
                            next_r);
        pending_explored_ = exploration_round(config_.learner.epsilon, config_.seed, next_r);
        pending_plan_ = next;
    }

    for (const auto& [id, act] : out.plan.actions) {
        const auto i = static_cast<std::size_t>(id);
        const RewardInputs in{local_energy[i], global_energy, out.accuracy, out.accuracy_prev};
        const double reward =
            compute_reward(in, config_.learner.alpha, config_.learner.beta, normalizer_);
        out.devices[i].reward = reward;
        const StateKey s{global_state_, locals[i]};
        const StateKey s_next{global_state_, next_locals[i]};
        const auto nit = next.actions.find(id);
        const Action a_next = nit != next.actions.end()
                                  ? nit->second
                                  : greedy_action(tables_.table_for(id), fleet_.device(id), s_next);
        update_q(tables_, id, s, act, reward, s_next, a_next, config_.learner.learning_rate,
                 config_.learner.discount);
    }
}

RunReport Simulation::run() {
    RunReport report;
    report.policy = std::string(to_string(config_.policy));
    report.seed = config_.seed;
    report.energy_normalizer = normalizer_;
    while (!finished()) report.rounds.push_back(run_round());

    std::size_t matched = 0;
    std::size_t scored = 0;
    for (const auto& o : report.rounds) {
        report.total_energy += o.energy_total;
        if (!first_convergence_ || o.round <= *first_convergence_) {
            report.energy_to_convergence += o.energy_total;
        }
        if (o.oracle_match) {
            ++scored;
            if (*o.oracle_match) ++matched;
        }
    }
    report.convergence_round = first_convergence_;
    if (scored > 0) report.oracle_match_rate = static_cast<double>(matched) / scored;
    report.jobs = jobs_;
    return report;
}

RunReport run_experiment(const RunConfig& config) { return Simulation(config).run(); }

}  // namespace flsim
