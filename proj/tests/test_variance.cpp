#include <doctest.h>

#include <cmath>

#include "flsim/variance.hpp"

using namespace flsim;

TEST_CASE("no-interference scenario is always idle") {
    for (int d = 0; d < 100; ++d) {
        CHECK(sample_interference(InterferenceScenario::None, 1.0, 1, 3, d) == InterferenceState{});
    }
}

TEST_CASE("web-browsing envelope") {
    int affected = 0;
    for (int r = 0; r < 50; ++r) {
        for (int d = 0; d < 20; ++d) {
            const auto s = sample_interference(InterferenceScenario::WebBrowsing, 1.0, 5, r, d);
            CHECK(s.co_cpu >= 0.2);
            CHECK(s.co_cpu <= 0.8);
            CHECK(s.co_mem >= 0.1);
            CHECK(s.co_mem <= 0.6);
            const auto p = sample_interference(InterferenceScenario::WebBrowsing, 0.3, 5, r, d);
            if (p.co_cpu > 0.0) ++affected;
        }
    }
    // 1000 Bernoulli(0.3) draws: 5 sigma is about 0.072.
    CHECK(std::abs(affected / 1000.0 - 0.3) < 0.072);
}

TEST_CASE("variance streams are pure functions of the key") {
    const auto a = sample_interference(InterferenceScenario::WebBrowsing, 0.5, 9, 4, 2);
    const auto b = sample_interference(InterferenceScenario::WebBrowsing, 0.5, 9, 4, 2);
    CHECK(a == b);
    CHECK(sample_network(60, 20, 9, 4, 2) == sample_network(60, 20, 9, 4, 2));
    CHECK(!(sample_network(60, 20, 9, 4, 2) == sample_network(60, 20, 9, 5, 2)));
}

TEST_CASE("network signal threshold") {
    for (int d = 0; d < 10; ++d) {
        const auto n = sample_network(100, 0, 1, 1, d);
        CHECK(n.bandwidth_mbps == 100.0);
        CHECK(n.signal == Signal::Regular);
    }
    CHECK(sample_network(40, 0, 1, 1, 0).signal == Signal::Bad);
    CHECK(classify_signal(40.0) == Signal::Bad);
    CHECK(classify_signal(40.000001) == Signal::Regular);
    CHECK(sample_network(5, 100, 1, 1, 0).bandwidth_mbps >= 1.0);
}

TEST_CASE("bad-signal frequency matches the Gaussian CDF") {
    const double phi = 0.5 * std::erfc(-((40.0 - 50.0) / 10.0) / std::sqrt(2.0));
    CHECK(phi == doctest::Approx(0.1587).epsilon(0.001));
    int bad = 0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
        if (sample_network(50, 10, 123, i / 100, i % 100).signal == Signal::Bad) ++bad;
    }
    CHECK(std::abs(static_cast<double>(bad) / n - phi) < 0.02);
}

TEST_CASE("bandwidth clamp keeps every draw at least 1 Mbps") {
    for (int i = 0; i < 2000; ++i) CHECK(sample_network(2, 10, 7, i, 0).bandwidth_mbps >= 1.0);
}
