#include <doctest.h>

#include <cmath>

#include "flsim/error.hpp"
#include "flsim/sim_engine.hpp"

using namespace flsim;

namespace {

RunConfig small_config(PolicyKind policy = PolicyKind::Random) {
    RunConfig c;
    c.policy = policy;
    c.params = GlobalParams::preset("S4");
    c.params.participants = 4;
    c.params.max_rounds = 30;
    c.variance.scenario = InterferenceScenario::WebBrowsing;
    c.seed = 4;
    return c;
}

// Overlapping blobs that never reach the target, so runs last max_rounds.
RunConfig endless_config(PolicyKind policy = PolicyKind::Random) {
    auto c = small_config(policy);
    c.dataset.synthetic.separation = 1.0;
    c.params.target_accuracy = 100.0;
    return c;
}

}  // namespace

TEST_CASE("a slow participant is cut off and left out of aggregation") {
    auto cfg = small_config();
    cfg.variance.scenario = InterferenceScenario::None;
    cfg.variance.bandwidth_stddev_mbps = 0.0;
    Simulation sim(cfg);
    const auto& fleet = sim.fleet();
    const DeviceId h0 = 0, h1 = 1, slow = 19;
    REQUIRE(fleet.device(slow).tier == Tier::L);
    sim.set_plan_override([&](const RoundEnvironment&, std::size_t) {
        RoundPlan p;
        p.actions[h0] = default_action(fleet.device(h0));
        p.actions[h1] = default_action(fleet.device(h1));
        p.actions[slow] = {Processor::CPU, 0};
        return p;
    });
    const auto model0 = sim.model();
    const auto out = sim.run_round();

    RoundEnvironment env(fleet, sim.workload(), sim.config().params, out.conditions);
    const double l0 = env.latency(h0, default_action(fleet.device(h0)));
    const double l1 = env.latency(h1, default_action(fleet.device(h1)));
    const double ls = env.latency(slow, {Processor::CPU, 0});
    REQUIRE(ls > 3.0 * std::max(l0, l1));
    CHECK(out.deadline == doctest::Approx(3.0 * std::max(l0, l1)));
    CHECK(out.excluded == std::vector<DeviceId>{slow});
    CHECK(out.t_round == std::max(l0, l1));
    CHECK(out.devices[slow].excluded);
    CHECK(!out.devices[slow].trained);
    CHECK(out.devices[slow].record.t_idle == 0.0);
    CHECK(out.devices[slow].record.t_busy() + out.devices[slow].record.t_tx <= out.t_round + 1e-12);

    const SgdConfig sgd{cfg.params.batch_size, cfg.params.local_epochs, sim.workload().learning_rate_sgd};
    std::vector<LocalUpdate> ups;
    for (DeviceId id : {h0, h1}) {
        ups.push_back(local_train(model0, sim.data().train, sim.partition().assignment[id], sgd,
                                  training_seed(cfg.seed, 0, id)));
    }
    const auto want = *fedavg_aggregate(ups);
    REQUIRE(want.size() == sim.model().parameters.size());
    for (std::size_t k = 0; k < want.size(); ++k) CHECK(std::abs(sim.model().parameters[k] - want[k]) <= 1e-12);
}

TEST_CASE("the median of an even participant count averages the middle pair") {
    auto cfg = small_config();
    cfg.variance.scenario = InterferenceScenario::None;
    cfg.variance.bandwidth_stddev_mbps = 0.0;
    Simulation sim(cfg);
    const auto& fleet = sim.fleet();
    sim.set_plan_override([&](const RoundEnvironment&, std::size_t) {
        RoundPlan p;
        for (DeviceId id : {0, 3, 10, 19}) p.actions[id] = default_action(fleet.device(id));
        return p;
    });
    const auto out = sim.run_round();
    RoundEnvironment env(fleet, sim.workload(), cfg.params, out.conditions);
    std::vector<double> lat;
    for (DeviceId id : {0, 3, 10, 19}) lat.push_back(env.latency(id, default_action(fleet.device(id))));
    std::sort(lat.begin(), lat.end());
    CHECK(out.deadline == doctest::Approx(3.0 * 0.5 * (lat[1] + lat[2])));
    CHECK(out.excluded.empty());
    CHECK(out.t_round == lat.back());
}

TEST_CASE("round energy is the sum of device records") {
    Simulation sim(endless_config());
    for (int r = 0; r < 5; ++r) {
        const auto out = sim.run_round();
        double sum = 0.0;
        for (std::size_t i = 0; i < out.devices.size(); ++i) {
            const auto& d = out.devices[i];
            const auto& prof = sim.fleet().device(static_cast<DeviceId>(i));
            sum += d.energy.total();
            CHECK(d.energy.total() >= 0.0);
            if (!d.selected) {
                CHECK(d.energy.idle == doctest::Approx(prof.cpu_idle_power_w * out.t_round));
                CHECK(d.energy.compute == 0.0);
            } else if (!d.excluded) {
                CHECK(d.record.t_busy() + d.record.t_tx + d.record.t_idle ==
                      doctest::Approx(out.t_round));
                CHECK(d.energy.total() == doctest::Approx(compute_energy(prof, d.record) +
                                                          compute_energy_comm(prof, d.record)));
            }
        }
        CHECK(sum == doctest::Approx(out.energy_total));
        CHECK(out.plan.size() == 4);
    }
}

TEST_CASE("zero rounds gives an empty report") {
    auto cfg = small_config();
    cfg.params.max_rounds = 0;
    const auto rep = run_experiment(cfg);
    CHECK(rep.rounds.empty());
    CHECK(rep.total_energy == 0.0);
    CHECK(!rep.converged());
    CHECK(!rep.ppw());
}

TEST_CASE("IID random selection converges on separable data") {
    auto cfg = small_config();
    cfg.params.max_rounds = 300;
    const auto rep = run_experiment(cfg);
    REQUIRE(rep.converged());
    CHECK(rep.rounds.size() == *rep.convergence_round + 1);
    CHECK(rep.ppw().value() == doctest::Approx(1.0 / rep.energy_to_convergence));
}

TEST_CASE("runs are deterministic") {
    for (auto policy : {PolicyKind::AutoFL, PolicyKind::Random, PolicyKind::OFL}) {
        auto cfg = endless_config(policy);
        cfg.params.max_rounds = 12;
        const auto a = run_experiment(cfg);
        const auto b = run_experiment(cfg);
        REQUIRE(a.rounds.size() == b.rounds.size());
        for (std::size_t r = 0; r < a.rounds.size(); ++r) {
            CHECK(a.rounds[r].plan == b.rounds[r].plan);
            CHECK(a.rounds[r].energy_total == b.rounds[r].energy_total);
            CHECK(a.rounds[r].accuracy == b.rounds[r].accuracy);
        }
    }
}

TEST_CASE("policies on one seed see the same variance") {
    auto a = endless_config(PolicyKind::AutoFL);
    auto b = endless_config(PolicyKind::Power);
    a.params.max_rounds = b.params.max_rounds = 8;
    const auto ra = run_experiment(a);
    const auto rb = run_experiment(b);
    for (std::size_t r = 0; r < 8; ++r) {
        for (std::size_t i = 0; i < 20; ++i) {
            CHECK(ra.rounds[r].conditions[i].interference == rb.rounds[r].conditions[i].interference);
            CHECK(ra.rounds[r].conditions[i].network == rb.rounds[r].conditions[i].network);
        }
    }
}

TEST_CASE("restart mode records jobs") {
    auto cfg = small_config();
    cfg.restart_on_target = true;
    cfg.params.max_rounds = 40;
    const auto rep = run_experiment(cfg);
    CHECK(rep.rounds.size() == 40);
    REQUIRE(!rep.jobs.empty());
    double job_energy = 0.0;
    for (std::size_t j = 0; j < rep.jobs.size(); ++j) {
        job_energy += rep.jobs[j].energy;
        if (j > 0) CHECK(rep.jobs[j].first_round == rep.jobs[j - 1].last_round + 1);
        CHECK(rep.rounds[rep.jobs[j].last_round].reached_target);
    }
    CHECK(job_energy <= rep.total_energy * (1 + 1e-12));
}

TEST_CASE("oracle matching and policy names") {
    auto cfg = endless_config(PolicyKind::OFL);
    cfg.record_oracle = true;
    cfg.params.max_rounds = 5;
    const auto rep = run_experiment(cfg);
    REQUIRE(rep.oracle_match_rate);
    CHECK(*rep.oracle_match_rate == 1.0);
    CHECK(parse_policy("o-fl") == PolicyKind::OFL);
    CHECK(to_string(PolicyKind::OParticipant) == "o-participant");
    CHECK_THROWS_AS(parse_policy("greedy"), ConfigError);
}

TEST_CASE("invalid run settings are configuration errors") {
    auto cfg = small_config();
    cfg.params.participants = 21;
    CHECK_THROWS_AS(Simulation{cfg}, ConfigError);
    cfg = small_config();
    cfg.learner.epsilon = 2.0;
    CHECK_THROWS_AS(Simulation{cfg}, ConfigError);
}
