// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails. Criterion names on the command line
// (e.g. `flsim_acceptance AC4 AC9`) restrict the run.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <future>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "flsim/controller.hpp"
#include "flsim/energy.hpp"
#include "flsim/report.hpp"
#include "flsim/sim_engine.hpp"
#include "gd_oracle.hpp"
#include "toy_env.hpp"

using namespace flsim;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

bool rel_close(double a, double b, double tol) {
    return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

template <typename T>
std::vector<T> parallel(std::vector<std::function<T()>> jobs) {
    std::vector<std::future<T>> fut;
    for (auto& j : jobs) fut.push_back(std::async(std::launch::async, j));
    std::vector<T> out;
    for (auto& f : fut) out.push_back(f.get());
    return out;
}

DeviceProfile tier_device(Tier t) {
    return build_fleet(FleetSpec{TierCounts{t == Tier::H, t == Tier::M, t == Tier::L}}, 1).device(0);
}

// ---------------------------------------------------------------- AC1
Verdict energy_oracles() {
    const auto h = tier_device(Tier::H);
    const auto l = tier_device(Tier::L);
    int bad = 0;
    const auto expect = [&](double got, double want) { bad += !rel_close(got, want, 1e-9); };

    ExecutionRecord cpu;
    cpu.target = {Processor::CPU, h.max_step(Processor::CPU)};
    cpu.busy_seconds[cpu.target.step] = 1.2;
    expect(compute_energy_cpu(h, cpu), 1.2 * 5.5);
    ExecutionRecord idle_cpu;
    idle_cpu.t_idle = 10.0;
    expect(compute_energy_cpu(h, idle_cpu), 10.0 * 0.05 * 5.5);
    ExecutionRecord gpu;
    gpu.target = {Processor::GPU, h.max_step(Processor::GPU)};
    gpu.busy_seconds[gpu.target.step] = 1.0;
    expect(compute_energy_gpu(h, gpu), 2.8);
    ExecutionRecord radio;
    radio.t_tx = 2.0;
    expect(compute_energy_comm(h, radio), 2.0 * 0.8);
    radio.signal = Signal::Bad;
    expect(compute_energy_comm(h, radio), 2.0 * 1.6);
    expect(compute_energy_idle(h, 60.0), 60.0 * 0.275);
    expect(compute_energy_idle(l, 100.0), 100.0 * 0.05 * 3.6);
    const int hand_bad = bad;

    // Per-millisecond integration of the instantaneous draw.
    std::mt19937_64 eng(2024);
    std::uniform_int_distribution<int> ms(0, 4000);
    const DeviceProfile devs[3] = {h, tier_device(Tier::M), l};
    double worst = 0.0;
    for (int trial = 0; trial < 500; ++trial) {
        const auto& d = devs[trial % 3];
        const Processor p = (trial / 3) % 2 ? Processor::GPU : Processor::CPU;
        ExecutionRecord r;
        r.target = {p, 0};
        std::uniform_int_distribution<std::size_t> step(0, d.steps(p).size() - 1);
        for (int k = 0; k < 4; ++k) r.busy_seconds[step(eng)] = ms(eng) * 1e-3;
        r.t_idle = ms(eng) * 1e-3;
        double integral = 0.0;
        for (const auto& [s, sec] : r.busy_seconds) {
            for (long i = 0, n = std::lround(sec * 1000); i < n; ++i) integral += d.steps(p)[s].busy_power_w * 1e-3;
        }
        for (long i = 0, n = std::lround(r.t_idle * 1000); i < n; ++i) integral += d.idle_power(p) * 1e-3;
        const double model = p == Processor::CPU ? compute_energy_cpu(d, r) : compute_energy_gpu(d, r);
        worst = std::max(worst, std::abs(model - integral) / std::max(1.0, integral));
    }
    return {hand_bad == 0 && worst <= 1e-9,
            fmt("hand values off: %d/7, integration worst rel err %.2e over 500 records", hand_bad, worst)};
}

// ---------------------------------------------------------------- AC2
Verdict reward_exactness() {
    std::mt19937_64 eng(7);
    std::uniform_real_distribution<double> acc(0.0, 100.0), joule(0.0, 500.0), w(0.0, 3.0), norm(1.0, 1000.0);
    int penalty_bad = 0;
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        RewardInputs in{joule(eng), joule(eng) * 20, acc(eng), 0.0};
        in.accuracy_prev = i % 10 == 0 ? in.accuracy : std::min(100.0, in.accuracy + acc(eng) / 10);
        const double r = compute_reward(in, w(eng), w(eng), norm(eng));
        penalty_bad += r != in.accuracy - 100.0;
    }
    for (int i = 0; i < 1000; ++i) {
        const double prev = acc(eng) * 0.9;
        RewardInputs in{joule(eng), joule(eng) * 20, prev + 0.01 + acc(eng) * 0.1, prev};
        const double a = w(eng), b = w(eng), n = norm(eng);
        const double want = -(in.energy_global / n) - (in.energy_local / n) + a * in.accuracy +
                            b * (in.accuracy - in.accuracy_prev);
        const double got = compute_reward(in, a, b, n);
        worst = std::max(worst, std::abs(got - want) / std::max(1.0, std::abs(want)));
    }
    return {penalty_bad == 0 && worst <= 1e-12,
            fmt("penalty mismatches %d/1000, improving-branch worst rel err %.2e", penalty_bad, worst)};
}

// ---------------------------------------------------------------- AC3
Verdict q_update_rule() {
    std::mt19937_64 eng(3);
    std::uniform_real_distribution<double> u(-50.0, 50.0), rate(0.01, 1.0);
    double single_worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const double q = u(eng), r = u(eng), qn = u(eng), g = rate(eng), m = rate(eng);
        single_worst = std::max(single_worst, std::abs(q_update(q, r, qn, g, m) - (q + g * (r + m * qn - q))));
    }
    // Through the table path too.
    const auto fleet = build_fleet(FleetSpec{TierCounts{1, 0, 0}}, 1);
    QTables t(fleet, false, 1, 0.0, 0.0);
    const StateKey s{GlobalState{}, LocalState{}};
    const StateKey s2{GlobalState{}, LocalState{0, 0, 1, 2}};
    const Action a{Processor::CPU, 0};
    update_q(t, 0, s, a, 10.0, s2, a, 0.9, 0.1);
    const bool table_ok = std::abs(t.table_for(0).value(s, a) - 9.0) < 1e-12;

    bool rate_ok = true;
    double final_worst = 0.0;
    for (double g : {0.05, 0.3, 0.9}) {
        const double r = 3.0, qn = -7.0, mu = 0.1, fixed = r + mu * qn;
        double q = 40.0;
        const double e0 = std::abs(q - fixed);
        for (int i = 1; i <= 500; ++i) {
            const double before = q - fixed;
            q = q_update(q, r, qn, g, mu);
            const double after = q - fixed;
            if (std::abs(before) > 1e-250 && !rel_close(after, (1 - g) * before, 1e-9)) rate_ok = false;
            if (i == 500 && std::abs(after) > std::max(1e-9, 2 * e0 * std::pow(1 - g, 500))) rate_ok = false;
        }
        final_worst = std::max(final_worst, std::abs(q - fixed));
    }
    return {single_worst <= 1e-12 && table_ok && rate_ok && final_worst <= 1e-9,
            fmt("single-step worst %.2e, table update %s, geometric rate %s, |Q-(R+muQ')| after 500 = %.2e",
                single_worst, table_ok ? "ok" : "wrong", rate_ok ? "ok" : "wrong", final_worst)};
}

// ---------------------------------------------------------------- AC4
Verdict fedavg_equals_centralized() {
    RunConfig cfg;
    cfg.policy = PolicyKind::Random;
    cfg.fleet = FleetSpec{TierCounts{0, 0, 1}};
    cfg.dataset.synthetic.samples_per_class = 30;
    cfg.dataset.synthetic.separation = 1.5;
    cfg.params.participants = 1;
    cfg.params.local_epochs = 2;
    cfg.params.batch_size = 300;
    cfg.params.max_rounds = 50;
    cfg.params.target_accuracy = 100.0;
    cfg.variance.scenario = InterferenceScenario::None;
    cfg.workload.learning_rate_sgd = 0.3;
    Simulation sim(cfg);
    auto theta = sim.model().parameters;
    double worst = 0.0;
    int rounds = 0;
    while (!sim.finished()) {
        sim.run_round();
        theta = oracle::centralized_gd(theta, sim.data().train, 0.3, 2);
        for (std::size_t k = 0; k < theta.size(); ++k) {
            worst = std::max(worst, std::abs(theta[k] - sim.model().parameters[k]));
        }
        ++rounds;
    }
    return {rounds == 50 && worst <= 1e-9,
            fmt("%d rounds, max |theta_fl - theta_central| = %.2e", rounds, worst)};
}

// ---------------------------------------------------------------- AC5
Verdict dirichlet_statistics() {
    SyntheticSpec spec;
    const auto ds = generate_synthetic(spec).train;
    const auto median_classes = [&](double alpha) {
        std::vector<std::size_t> counts;
        for (std::uint64_t seed = 1; seed <= 50; ++seed) {
            const auto p = partition(ds, 20, DataRegime{100, alpha, 0.0}, seed);
            for (const auto& c : p.classes_present) counts.push_back(c.size());
        }
        std::sort(counts.begin(), counts.end());
        const auto n = counts.size();
        return 0.5 * static_cast<double>(counts[n / 2 - 1] + counts[n / 2]);
    };
    const double sharp = median_classes(0.1);
    const double flat = median_classes(1.0);
    return {sharp < 0.4 * 10 && flat > sharp,
            fmt("median classes/device over 50 seeds x 20 devices: %.1f (0.1) vs %.1f (1.0), limit 4.0",
                sharp, flat)};
}

// ---------------------------------------------------------------- AC6
RunConfig convergence_config(int noniid, std::uint64_t seed) {
    RunConfig c;
    c.policy = PolicyKind::Random;
    c.params = GlobalParams::preset("S4");
    c.params.participants = 4;
    c.params.max_rounds = 300;
    c.dataset.synthetic.separation = 3.0;
    c.regime = DataRegime{noniid, 0.1, 0.0};
    c.seed = seed;
    return c;
}

Verdict noniid_degradation() {
    std::vector<std::function<std::pair<int, std::optional<std::size_t>>()>> jobs;
    for (int m : {0, 100}) {
        for (std::uint64_t seed : {1, 2, 3}) {
            jobs.push_back([=] { return std::make_pair(m, run_experiment(convergence_config(m, seed)).convergence_round); });
        }
    }
    double iid = 0.0, non = 0.0;
    int non_failed = 0;
    std::string rounds;
    for (const auto& [m, conv] : parallel(std::move(jobs))) {
        const double r = conv ? static_cast<double>(*conv + 1) : 300.0;
        (m == 0 ? iid : non) += r / 3.0;
        if (m == 100 && !conv) ++non_failed;
        rounds += conv ? std::to_string(*conv + 1) + " " : std::string("none ");
    }
    const bool pass = non >= 1.3 * iid;
    return {pass, fmt("rounds to target (IID x3, NonIID x3): %s| mean IID %.1f, NonIID %.1f (non-converged as 300, %d/3), ratio %.2f",
                      rounds.c_str(), iid, non, non_failed, non / iid)};
}

// ---------------------------------------------------------------- AC7
// One (device, action) pair pays 1 in expectation, everything else 0, with
// Gaussian noise. Learner: the controller's select/update loop with K = 1.
Verdict bandit_convergence() {
    const double eps = 0.1, gamma = 0.9, mu = 0.1;
    std::vector<double> hit_rates;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        std::mt19937_64 eng(seed * 7919);
        std::vector<DeviceProfile> devs;
        for (int i = 0; i < 4; ++i) {
            DeviceProfile d;
            d.id = i;
            d.tier = static_cast<Tier>(i % 3);
            d.peak_gflops = 50;
            d.cpu_idle_power_w = 0.1;
            d.gpu_idle_power_w = 0.05;
            d.cpu_steps = {{1.0, 1.0}, {2.0, 2.0}};
            d.gpu_steps = {{0.5, 1.0}};
            devs.push_back(d);
        }
        std::sort(devs.begin(), devs.end(), [](auto& a, auto& b) { return a.tier < b.tier; });
        for (int i = 0; i < 4; ++i) devs[i].id = i;
        const Fleet fleet(devs);
        std::uniform_int_distribution<int> pick_dev(0, 3), pick_act(0, 2);
        const DeviceId best_dev = pick_dev(eng);
        const Action best_act = actions_for(fleet.device(best_dev))[static_cast<std::size_t>(pick_act(eng))];
        std::normal_distribution<double> noise(0.0, 0.1);

        QTables tables(fleet, false, seed);
        const GlobalState g{};
        const std::vector<LocalState> locals(4);
        const StateKey s{g, LocalState{}};
        auto plan = select_round(tables, fleet, g, locals, 1, eps, seed, 0);
        int hits = 0, counted = 0;
        for (std::size_t t = 0; t <= 400; ++t) {
            const auto [dev, act] = *plan.actions.begin();
            const double reward = (dev == best_dev && act == best_act ? 1.0 : 0.0) + noise(eng);
            const auto next = select_round(tables, fleet, g, locals, 1, eps, seed, t + 1);
            const Action a_next = next.contains(dev) ? next.actions.at(dev)
                                                     : greedy_action(tables.table_for(dev), fleet.device(dev), s);
            update_q(tables, dev, s, act, reward, s, a_next, gamma, mu);
            plan = next;
            if (t >= 200) {
                DeviceId gd = 0;
                Action ga{};
                double gv = -1e300;
                for (const auto& d : fleet.devices()) {
                    const auto a = greedy_action(tables.table_for(d.id), d, s);
                    const double v = tables.table_for(d.id).value(s, a);
                    if (v > gv) gv = v, gd = d.id, ga = a;
                }
                hits += gd == best_dev && ga == best_act;
                ++counted;
            }
        }
        hit_rates.push_back(static_cast<double>(hits) / counted);
    }
    const double mean = std::accumulate(hit_rates.begin(), hit_rates.end(), 0.0) / hit_rates.size();
    const double worst = *std::min_element(hit_rates.begin(), hit_rates.end());
    return {mean >= 0.95, fmt("greedy = optimal pair in rounds 200-400: mean %.3f, worst %.3f over 10 environments",
                              mean, worst)};
}

// ---------------------------------------------------------------- AC8
Verdict oracle_exactness() {
    int compared = 0, matched = 0;
    std::uint64_t seed = 1;
    while (compared < 100) {
        const auto inst = toy::make(seed++);
        const auto brute = toy::brute_force(*inst.env, inst.k, true);
        if (!brute.feasible) continue;
        const auto got = oracle_plan(*inst.env, inst.k, true);
        ++compared;
        matched += std::abs(got.cost.energy - brute.energy) <= 1e-9 * brute.energy;
    }
    return {matched == compared, fmt("%d/%d toy environments match brute force (%lu drawn)", matched, compared,
                                     static_cast<unsigned long>(seed - 1))};
}

// ---------------------------------------------------------------- AC9
RunConfig win_config(PolicyKind p, std::uint64_t seed) {
    RunConfig c;
    c.policy = p;
    c.params = GlobalParams::preset("S4");
    c.params.participants = 4;
    c.params.max_rounds = 300;
    c.variance.scenario = InterferenceScenario::WebBrowsing;
    c.variance.affected_fraction = 0.3;
    c.restart_on_target = true;
    c.learner.alpha = 0.0;
    c.learner.beta = 0.02;
    c.seed = seed;
    return c;
}

Verdict autofl_win() {
    const std::size_t warmup = 100;
    const PolicyKind policies[3] = {PolicyKind::Random, PolicyKind::AutoFL, PolicyKind::OFL};
    std::vector<std::function<double()>> jobs;
    for (std::uint64_t seed : {1, 2, 3}) {
        for (auto p : policies) {
            jobs.push_back([=] { return run_ppw(run_experiment(win_config(p, seed)), warmup).value_or(0.0); });
        }
    }
    const auto ppw = parallel(std::move(jobs));
    double vs_random = 0.0, vs_ofl = 0.0;
    std::string per_seed;
    for (int s = 0; s < 3; ++s) {
        const double r = ppw[s * 3], a = ppw[s * 3 + 1], o = ppw[s * 3 + 2];
        const double nr = r > 0 ? a / r : 0.0, no = o > 0 ? a / o : 0.0;
        vs_random += nr / 3;
        vs_ofl += no / 3;
        per_seed += fmt("seed %d: %.2fx random, %.2fx O_FL (O_FL %.2fx random); ", s + 1, nr, no, r > 0 ? o / r : 0.0);
    }
    return {vs_random >= 1.5 && vs_ofl >= 0.8,
            per_seed + fmt("mean %.2fx random (need 1.5), %.2fx O_FL (need 0.8)", vs_random, vs_ofl)};
}

// ---------------------------------------------------------------- AC10
Verdict shared_table_speedup() {
    const std::size_t horizon = 400;
    std::vector<std::function<double()>> jobs;
    for (std::uint64_t seed : {1, 2, 3}) {
        for (bool shared : {false, true}) {
            jobs.push_back([=] {
                auto c = win_config(PolicyKind::AutoFL, seed);
                c.params.max_rounds = horizon;
                c.learner.shared_tables = shared;
                const auto rep = run_experiment(c);
                return static_cast<double>(reward_stabilization_round(rep, 20, 0.01).value_or(horizon));
            });
        }
    }
    const auto r = parallel(std::move(jobs));
    const double per = (r[0] + r[2] + r[4]) / 3, sh = (r[1] + r[3] + r[5]) / 3;
    return {sh <= 0.85 * per,
            fmt("stabilization round per-device %.0f/%.0f/%.0f, shared %.0f/%.0f/%.0f; mean %.1f vs %.1f (%.0f%% lower, need 15%%)",
                r[0], r[2], r[4], r[1], r[3], r[5], per, sh, 100.0 * (1.0 - sh / per))};
}

// ---------------------------------------------------------------- AC11
Verdict determinism_and_fairness() {
    const auto csv = [](PolicyKind p) {
        auto c = win_config(p, 5);
        c.params.max_rounds = 25;
        c.record_oracle = true;
        Simulation sim(c);
        const auto rep = sim.run();
        std::ostringstream out;
        write_rounds_csv(rep, sim.fleet(), out);
        write_summary_csv(summarize({rep}), out);
        return std::make_pair(out.str(), variance_hash(rep));
    };
    bool identical = true;
    std::vector<std::uint64_t> hashes;
    for (auto p : {PolicyKind::AutoFL, PolicyKind::Random, PolicyKind::OFL, PolicyKind::Power}) {
        const auto a = csv(p), b = csv(p);
        identical = identical && a.first == b.first;
        hashes.push_back(a.second);
    }
    const bool fair = std::all_of(hashes.begin(), hashes.end(), [&](auto h) { return h == hashes[0]; });
    return {identical && fair, fmt("byte-identical reruns: %s; variance hash shared by 4 policies: %s (%016llx)",
                                   identical ? "yes" : "no", fair ? "yes" : "no",
                                   static_cast<unsigned long long>(hashes[0]))};
}

// ---------------------------------------------------------------- AC12
Verdict straggler_semantics() {
    RunConfig cfg;
    cfg.params = GlobalParams::preset("S4");
    cfg.params.participants = 3;
    cfg.variance.scenario = InterferenceScenario::None;
    cfg.variance.bandwidth_stddev_mbps = 0.0;
    Simulation sim(cfg);
    const auto& fleet = sim.fleet();
    const std::vector<std::pair<DeviceId, Action>> chosen = {
        {0, default_action(fleet.device(0))}, {4, default_action(fleet.device(4))}, {15, {Processor::CPU, 0}}};
    sim.set_plan_override([&](const RoundEnvironment&, std::size_t) {
        RoundPlan p;
        for (const auto& [id, a] : chosen) p.actions[id] = a;
        return p;
    });
    const auto model0 = sim.model();
    const auto out = sim.run_round();

    RoundEnvironment env(fleet, sim.workload(), cfg.params, out.conditions);
    std::vector<double> lat;
    for (const auto& [id, a] : chosen) lat.push_back(env.latency(id, a));
    std::vector<double> sorted = lat;
    std::sort(sorted.begin(), sorted.end());
    const double deadline = 3.0 * sorted[1];
    std::vector<DeviceId> want_excluded;
    double want_t = 0.0;
    std::vector<LocalUpdate> ups;
    const SgdConfig sgd{cfg.params.batch_size, cfg.params.local_epochs, sim.workload().learning_rate_sgd};
    for (std::size_t i = 0; i < chosen.size(); ++i) {
        const auto id = chosen[i].first;
        if (lat[i] > deadline) {
            want_excluded.push_back(id);
            continue;
        }
        want_t = std::max(want_t, lat[i]);
        ups.push_back(local_train(model0, sim.data().train, sim.partition().assignment[id], sgd,
                                  training_seed(cfg.seed, 0, id)));
    }
    const auto want_model = *fedavg_aggregate(ups);
    double worst = 0.0;
    for (std::size_t k = 0; k < want_model.size(); ++k) {
        worst = std::max(worst, std::abs(want_model[k] - sim.model().parameters[k]));
    }
    const bool ok = want_excluded == std::vector<DeviceId>{15} && out.excluded == want_excluded &&
                    std::abs(out.t_round - want_t) <= 1e-12 && !out.devices[15].trained && worst <= 1e-12;
    return {ok, fmt("slow device latency %.3fs vs deadline %.3fs; excluded %zu device(s); t_round %.4fs (want %.4fs); "
                    "model vs aggregation-without-it max diff %.2e",
                    lat[2], deadline, out.excluded.size(), out.t_round, want_t, worst)};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::string> only(argv + 1, argv + argc);
    const std::vector<std::pair<const char*, std::function<Verdict()>>> criteria = {
        {"AC1", energy_oracles},          {"AC2", reward_exactness},
        {"AC3", q_update_rule},           {"AC4", fedavg_equals_centralized},
        {"AC5", dirichlet_statistics},    {"AC6", noniid_degradation},
        {"AC7", bandit_convergence},      {"AC8", oracle_exactness},
        {"AC9", autofl_win},              {"AC10", shared_table_speedup},
        {"AC11", determinism_and_fairness}, {"AC12", straggler_semantics},
    };
    int failed = 0;
    int ran = 0;
    for (const auto& [name, fn] : criteria) {
        if (!only.empty() && std::find(only.begin(), only.end(), name) == only.end()) continue;
        ++ran;
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = fn();
        } catch (const std::exception& e) {
            v = {false, std::string("threw: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("%s %s (%.1fs) %s\n", name, v.pass ? "PASS" : "FAIL", secs, v.detail.c_str());
        std::fflush(stdout);
        failed += !v.pass;
    }
    if (ran == 0) {
        std::fprintf(stderr, "no criterion matches the arguments\n");
        return 2;
    }
    std::printf("%d/%d criteria passed\n", ran - failed, ran);
    return failed == 0 ? 0 : 1;
}
