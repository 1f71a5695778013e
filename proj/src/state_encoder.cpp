#include "flsim/state_encoder.hpp"

#include <string>

#include "flsim/error.hpp"

namespace flsim {

namespace {

std::uint8_t three_way(double v, double small_below, double medium_below) {
    if (v < small_below) return 0;
    if (v < medium_below) return 1;
    return 2;
}

}  // namespace

GlobalState encode_global(const WorkloadSpec& w, const GlobalParams& p) {
    GlobalState s;
    // The [30, 40) conv range has no published bucket; it folds into "large".
    if (w.conv_layers < 10) {
        s.conv = 0;
    } else if (w.conv_layers < 20) {
        s.conv = 1;
    } else if (w.conv_layers < 40) {
        s.conv = 2;
    } else {
        s.conv = 3;
    }
    s.fc = w.fc_layers < 10 ? 0 : 1;
    s.rc = three_way(w.rc_layers, 5, 10);
    s.batch = three_way(static_cast<double>(p.batch_size), 8, 32);
    s.epochs = three_way(static_cast<double>(p.local_epochs), 5, 10);
    s.clients = three_way(static_cast<double>(p.participants), 10, 50);
    return s;
}

std::uint8_t utilization_bucket(double fraction) {
    if (fraction <= 0.0) return 0;
    if (fraction < 0.25) return 1;
    if (fraction < 0.75) return 2;
    return 3;
}

LocalState encode_local(const InterferenceState& interference, const NetworkCondition& network,
                        std::size_t classes_present, std::size_t total_classes) {
    if (total_classes == 0 || classes_present > total_classes) {
        throw SimError("classes_present must be within [0, total_classes]");
    }
    LocalState s;
    s.co_cpu = utilization_bucket(interference.co_cpu);
    s.co_mem = utilization_bucket(interference.co_mem);
    s.network = network.bandwidth_mbps > kBadSignalThresholdMbps ? 0 : 1;
    // Integer comparisons keep the 25% boundary exact.
    if (classes_present * 4 < total_classes) {
        s.data = 0;
    } else if (classes_present < total_classes) {
        s.data = 1;
    } else {
        s.data = 2;
    }
    return s;
}

std::uint32_t pack(const GlobalState& s) {
    return ((((s.conv * 2u + s.fc) * 3u + s.rc) * 3u + s.batch) * 3u + s.epochs) * 3u + s.clients;
}

std::uint32_t pack(const LocalState& s) {
    return ((s.co_cpu * 4u + s.co_mem) * 2u + s.network) * 3u + s.data;
}

GlobalState unpack_global(std::uint32_t code) {
    GlobalState s;
    s.clients = static_cast<std::uint8_t>(code % 3), code /= 3;
    s.epochs = static_cast<std::uint8_t>(code % 3), code /= 3;
    s.batch = static_cast<std::uint8_t>(code % 3), code /= 3;
    s.rc = static_cast<std::uint8_t>(code % 3), code /= 3;
    s.fc = static_cast<std::uint8_t>(code % 2), code /= 2;
    s.conv = static_cast<std::uint8_t>(code);
    return s;
}

LocalState unpack_local(std::uint32_t code) {
    LocalState s;
    s.data = static_cast<std::uint8_t>(code % 3), code /= 3;
    s.network = static_cast<std::uint8_t>(code % 2), code /= 2;
    s.co_mem = static_cast<std::uint8_t>(code % 4), code /= 4;
    s.co_cpu = static_cast<std::uint8_t>(code);
    return s;
}

}  // namespace flsim
