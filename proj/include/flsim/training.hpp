#pragma once

/// @file training.hpp
/// @brief Desk-scale trainable surrogates (softmax regression, one-hidden-layer
/// tanh MLP), local minibatch SGD, FedAvg aggregation and evaluation.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "flsim/data.hpp"
#include "flsim/workload.hpp"

namespace flsim {

struct ModelState {
    ModelShape shape;
    std::vector<double> parameters;
    std::size_t version = 0;

    void validate() const;
};

/// Small Gaussian initialisation (sigma 0.01), deterministic per seed.
ModelState init_model(const ModelShape& shape, std::uint64_t seed);

/// Class scores for one input.
std::vector<double> forward(const ModelState& model, std::span<const double> x);

/// Mean cross-entropy over `indices` and its gradient w.r.t. the parameters.
double loss_and_gradient(const ModelState& model, const Dataset& data,
                         std::span<const std::size_t> indices, std::vector<double>& grad);

struct LocalUpdate {
    std::vector<double> parameters;
    std::size_t samples_used = 0;
};

struct SgdConfig {
    std::size_t batch_size = 32;
    std::size_t epochs = 1;
    double learning_rate = 0.05;
};

/// E passes of minibatch SGD over the shard, reshuffled each epoch from `seed`.
/// The trailing batch may be short. Throws SimError on a non-finite loss.
LocalUpdate local_train(const ModelState& model, const Dataset& data,
                        std::span<const std::size_t> shard, const SgdConfig& config,
                        std::uint64_t seed);

/// Sample-weighted mean of the parameter vectors; nullopt for no updates.
std::optional<std::vector<double>> fedavg_aggregate(std::span<const LocalUpdate> updates);

/// Percentage of argmax predictions that match the label.
double evaluate(const ModelState& model, const Dataset& test);

/// Flat little-endian float64 array preceded by a little-endian u64 length.
void save_checkpoint(const std::filesystem::path& path, std::span<const double> parameters);
std::vector<double> load_checkpoint(const std::filesystem::path& path);

}  // namespace flsim
