#pragma once

/// @file data.hpp
/// @brief Classification datasets and their IID / Dirichlet non-IID
/// partitioning across devices.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace flsim {

/// Row-major feature matrix plus labels.
struct Dataset {
    std::size_t feature_dim = 0;
    int num_classes = 0;
    std::vector<double> features;
    std::vector<int> labels;

    std::size_t size() const { return labels.size(); }
    std::span<const double> row(std::size_t i) const {
        return {features.data() + i * feature_dim, feature_dim};
    }
    void validate() const;
};

struct DatasetSplit {
    Dataset train;
    Dataset test;
};

struct SyntheticSpec {
    int num_classes = 10;
    std::size_t samples_per_class = 100;
    std::size_t feature_dim = 16;
    /// Held-out samples per class; zero means the same as samples_per_class.
    std::size_t test_samples_per_class = 0;
    /// Distance of each class mean from the origin, in units of the noise sigma.
    double separation = 4.0;
    double noise = 1.0;
    std::uint64_t seed = 1;
};

/// Isotropic Gaussian blobs. Class means sit on distinct coordinate axes
/// when feature_dim >= num_classes, otherwise on seeded random directions.
DatasetSplit generate_synthetic(const SyntheticSpec& spec);

/// Reads an IDX image file (magic 0x00000803) and label file (0x00000801).
/// Pixels are scaled to [0, 1].
Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                 int num_classes = 10);

struct DataRegime {
    /// Share of devices holding non-IID data: 0, 50, 75 or 100.
    int noniid_percent = 0;
    double concentration = 0.1;
    /// Log-normal spread of IID per-device share sizes; zero gives equal shares.
    double size_skew = 0.0;
};

struct DataPartition {
    std::size_t num_classes = 0;
    /// Sample indices per device, sorted ascending.
    std::vector<std::vector<std::size_t>> assignment;
    /// Classes with at least one sample, per device, sorted ascending.
    std::vector<std::vector<int>> classes_present;
    std::vector<bool> non_iid;

    std::size_t devices() const { return assignment.size(); }
};

/// IID devices receive stratified shares of every class; non-IID devices
/// split each class by a Dirichlet(concentration) draw across themselves.
DataPartition partition(const Dataset& dataset, std::size_t num_devices, const DataRegime& regime,
                        std::uint64_t seed);

/// Largest-remainder apportionment of `total` by non-negative weights.
/// Ties go to lower indices after rotating by `tie_offset`.
std::vector<std::size_t> apportion(std::size_t total, std::span<const double> weights,
                                   std::size_t tie_offset = 0);

}  // namespace flsim
