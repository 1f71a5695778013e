#include "flsim/workload.hpp"

#include <string>

#include "flsim/error.hpp"

namespace flsim {

std::size_t ModelShape::parameter_count() const {
    std::size_t in = input_dim;
    std::size_t count = 0;
    if (arch.kind == ArchKind::MLP) {
        for (auto h : arch.hidden) {
            count += h * in + h;
            in = h;
        }
    }
    return count + num_classes * in + num_classes;
}

WorkloadSpec WorkloadSpec::preset(std::string_view name) {
    WorkloadSpec w;
    w.name = std::string(name);
    if (name == "cnn-mnist") {
        w.conv_layers = 2;
        w.fc_layers = 2;
        w.flops_per_sample = 7.4e7;
        w.parameter_count = 1'663'370;
    } else if (name == "lstm-shakespeare") {
        w.fc_layers = 1;
        w.rc_layers = 2;
        w.flops_per_sample = 6.0e7;
        w.parameter_count = 818'402;
    } else if (name == "mobilenet-imagenet") {
        w.conv_layers = 28;
        w.fc_layers = 1;
        w.flops_per_sample = 1.7e9;
        w.parameter_count = 4'231'976;
    } else {
        throw ConfigError("unknown workload '" + std::string(name) + "'");
    }
    return w;
}

GlobalParams GlobalParams::preset(std::string_view name) {
    GlobalParams p;
    if (name == "S1") {
        p.batch_size = 32, p.local_epochs = 10, p.participants = 20;
    } else if (name == "S2") {
        p.batch_size = 32, p.local_epochs = 5, p.participants = 20;
    } else if (name == "S3") {
        p.batch_size = 16, p.local_epochs = 5, p.participants = 20;
    } else if (name == "S4") {
        p.batch_size = 16, p.local_epochs = 5, p.participants = 10;
    } else {
        throw ConfigError("unknown global parameter preset '" + std::string(name) + "'");
    }
    return p;
}

void GlobalParams::validate(std::size_t fleet_size) const {
    if (batch_size < 1) throw ConfigError("batch size must be at least 1");
    if (local_epochs < 1) throw ConfigError("local epochs must be at least 1");
    if (participants < 1 || participants > fleet_size) {
        throw ConfigError("participants per round must be in [1, " + std::to_string(fleet_size) +
                          "]");
    }
    if (!(target_accuracy >= 0.0 && target_accuracy <= 100.0)) {
        throw ConfigError("target accuracy must be a percentage");
    }
}

}  // namespace flsim
