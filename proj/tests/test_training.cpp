#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numeric>

#include "flsim/error.hpp"
#include "flsim/training.hpp"
#include "gd_oracle.hpp"

using namespace flsim;

namespace {

ModelShape logistic(std::size_t dim, std::size_t classes) {
    return ModelShape{ModelArch{ArchKind::Logistic, {}}, dim, classes};
}

std::vector<std::size_t> all_indices(const Dataset& ds) {
    std::vector<std::size_t> v(ds.size());
    std::iota(v.begin(), v.end(), 0);
    return v;
}

}  // namespace

TEST_CASE("parameter counts") {
    CHECK(logistic(16, 10).parameter_count() == 170);
    const ModelShape mlp{ModelArch{ArchKind::MLP, {8}}, 16, 10};
    CHECK(mlp.parameter_count() == 16 * 8 + 8 + 8 * 10 + 10);
}

TEST_CASE("FedAvg is the sample-weighted mean") {
    std::vector<LocalUpdate> u = {{{1.0, 0.0}, 100}, {{2.0, 4.0}, 300}};
    auto out = fedavg_aggregate(u);
    REQUIRE(out);
    CHECK((*out)[0] == doctest::Approx(1.75));
    CHECK((*out)[1] == doctest::Approx(3.0));

    std::vector<LocalUpdate> cancel = {{{0.3, -2.0}, 5}, {{-0.3, 2.0}, 5}};
    const auto z = *fedavg_aggregate(cancel);
    CHECK(std::abs(z[0]) < 1e-15);
    CHECK(std::abs(z[1]) < 1e-15);

    std::vector<LocalUpdate> perm = {u[1], u[0]};
    CHECK(*fedavg_aggregate(perm) == *fedavg_aggregate(u));
    CHECK(!fedavg_aggregate(std::span<const LocalUpdate>{}));
    std::vector<LocalUpdate> mismatch = {{{1.0}, 1}, {{1.0, 2.0}, 1}};
    CHECK_THROWS_AS(fedavg_aggregate(mismatch), SimError);
}

TEST_CASE("untrained models score near chance") {
    SyntheticSpec spec;
    const auto split = generate_synthetic(spec);
    double sum = 0.0;
    const int n = 30;
    for (int s = 0; s < n; ++s) sum += evaluate(init_model(logistic(16, 10), s), split.test);
    CHECK(std::abs(sum / n - 10.0) <= 3.0);
}

TEST_CASE("local SGD learns separable data") {
    SyntheticSpec spec;
    spec.separation = 6.0;
    const auto split = generate_synthetic(spec);
    auto m = init_model(logistic(16, 10), 1);
    const auto idx = all_indices(split.train);
    SgdConfig cfg{32, 20, 0.1};
    m.parameters = local_train(m, split.train, idx, cfg, 7).parameters;
    CHECK(evaluate(m, split.test) >= 99.0);

    ModelState mlp = init_model(ModelShape{ModelArch{ArchKind::MLP, {16}}, 16, 10}, 2);
    mlp.parameters = local_train(mlp, split.train, idx, SgdConfig{16, 10, 0.1}, 7).parameters;
    CHECK(evaluate(mlp, split.test) >= 95.0);
}

TEST_CASE("full-batch local training equals centralized gradient descent") {
    SyntheticSpec spec;
    spec.samples_per_class = 20;
    spec.separation = 2.0;
    const auto split = generate_synthetic(spec);
    const auto m = init_model(logistic(16, 10), 3);
    const auto idx = all_indices(split.train);
    const auto got = local_train(m, split.train, idx, SgdConfig{idx.size(), 5, 0.2}, 11).parameters;
    const auto want = oracle::centralized_gd(m.parameters, split.train, 0.2, 5);
    REQUIRE(got.size() == want.size());
    for (std::size_t k = 0; k < got.size(); ++k) CHECK(std::abs(got[k] - want[k]) <= 1e-9);
}

TEST_CASE("MLP gradient matches finite differences") {
    SyntheticSpec spec;
    spec.samples_per_class = 3;
    spec.feature_dim = 4;
    spec.num_classes = 3;
    const auto ds = generate_synthetic(spec).train;
    auto m = init_model(ModelShape{ModelArch{ArchKind::MLP, {5}}, 4, 3}, 4);
    for (auto& p : m.parameters) p *= 30.0;
    const auto idx = all_indices(ds);
    std::vector<double> grad, scratch;
    loss_and_gradient(m, ds, idx, grad);
    const double h = 1e-6;
    for (std::size_t k = 0; k < m.parameters.size(); ++k) {
        auto plus = m, minus = m;
        plus.parameters[k] += h;
        minus.parameters[k] -= h;
        const double fd = (loss_and_gradient(plus, ds, idx, scratch) -
                           loss_and_gradient(minus, ds, idx, scratch)) / (2 * h);
        CHECK(grad[k] == doctest::Approx(fd).epsilon(1e-5).scale(1e-6));
    }
}

TEST_CASE("training is deterministic per seed") {
    SyntheticSpec spec;
    const auto split = generate_synthetic(spec);
    const auto m = init_model(logistic(16, 10), 1);
    const auto idx = all_indices(split.train);
    SgdConfig cfg{10, 1, 0.05};
    CHECK(local_train(m, split.train, idx, cfg, 5).parameters ==
          local_train(m, split.train, idx, cfg, 5).parameters);
    CHECK(local_train(m, split.train, idx, cfg, 5).parameters !=
          local_train(m, split.train, idx, cfg, 6).parameters);
    CHECK(init_model(logistic(16, 10), 9).parameters == init_model(logistic(16, 10), 9).parameters);
}

TEST_CASE("training errors") {
    SyntheticSpec spec;
    const auto split = generate_synthetic(spec);
    const auto m = init_model(logistic(8, 10), 1);
    const auto idx = all_indices(split.train);
    CHECK_THROWS_AS(local_train(m, split.train, idx, SgdConfig{}, 1), SimError);
    const auto ok = init_model(logistic(16, 10), 1);
    CHECK_THROWS_AS(local_train(ok, split.train, {}, SgdConfig{}, 1), SimError);
    auto blown = ok;
    blown.parameters[0] = 1e308;
    blown.parameters[1] = 1e308;
    CHECK_THROWS_AS(local_train(blown, split.train, idx, SgdConfig{32, 1, 1e10}, 1), SimError);
}

TEST_CASE("checkpoints round-trip bit for bit") {
    const auto path = std::filesystem::temp_directory_path() / "flsim_ckpt_test.bin";
    const std::vector<double> p = {0.0, -0.0, 1.5, -3.25e-300, 1e300, 0.1};
    save_checkpoint(path, p);
    const auto q = load_checkpoint(path);
    REQUIRE(q.size() == p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        CHECK(std::bit_cast<std::uint64_t>(q[i]) == std::bit_cast<std::uint64_t>(p[i]));
    }
    CHECK(std::filesystem::file_size(path) == 8 + 8 * p.size());
    std::filesystem::remove(path);
    CHECK_THROWS_AS(load_checkpoint(path), SimError);
}
