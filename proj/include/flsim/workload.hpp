#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace flsim {

enum class ArchKind { Logistic, MLP };

/// Trainable surrogate architecture. Hidden sizes are empty for Logistic.
struct ModelArch {
    ArchKind kind = ArchKind::Logistic;
    std::vector<std::size_t> hidden;

    bool operator==(const ModelArch&) const = default;
};

/// Concrete tensor shape of a trainable model once input/output widths are known.
struct ModelShape {
    ModelArch arch;
    std::size_t input_dim = 0;
    std::size_t num_classes = 0;

    std::size_t parameter_count() const;
    bool operator==(const ModelShape&) const = default;
};

/// Workload descriptor. Layer counts feed the state encoder; FLOPs and the
/// parameter count feed the timing and communication models.
struct WorkloadSpec {
    std::string name;
    int conv_layers = 0;
    int fc_layers = 0;
    int rc_layers = 0;
    /// Training FLOPs per sample per epoch (forward + backward).
    double flops_per_sample = 0.0;
    std::size_t parameter_count = 0;
    ModelArch trainable_arch;
    double learning_rate_sgd = 0.05;

    /// Recurrent workloads are descriptor-only at desk scale.
    bool trainable() const { return rc_layers == 0; }
    std::size_t payload_bytes() const { return parameter_count * 4; }

    /// Named descriptors: "cnn-mnist", "lstm-shakespeare", "mobilenet-imagenet".
    static WorkloadSpec preset(std::string_view name);
};

/// FedAvg global parameters (B, E, K) plus the run horizon.
struct GlobalParams {
    std::size_t batch_size = 32;
    std::size_t local_epochs = 10;
    std::size_t participants = 20;
    std::size_t max_rounds = 300;
    double target_accuracy = 90.0;

    /// S1..S4 presets. Horizon fields keep their defaults.
    static GlobalParams preset(std::string_view name);
    void validate(std::size_t fleet_size) const;
};

}  // namespace flsim
