#pragma once

/// @file state_encoder.hpp
/// @brief Discretises workload, global parameters and per-device runtime
/// conditions into the bucketed state used to index Q-tables.

#include <array>
#include <cstddef>
#include <cstdint>

#include "flsim/variance.hpp"
#include "flsim/workload.hpp"

namespace flsim {

/// Bucket indices, each ordered from smallest to largest.
struct GlobalState {
    std::uint8_t conv = 0;     ///< small <10, medium <20, large <40, larger >=40
    std::uint8_t fc = 0;       ///< small <10, large >=10
    std::uint8_t rc = 0;       ///< small <5, medium <10, large >=10
    std::uint8_t batch = 0;    ///< small <8, medium <32, large >=32
    std::uint8_t epochs = 0;   ///< small <5, medium <10, large >=10
    std::uint8_t clients = 0;  ///< small <10, medium <50, large >=50

    static constexpr std::array<std::uint8_t, 6> kBuckets{4, 2, 3, 3, 3, 3};
    bool operator==(const GlobalState&) const = default;
};

struct LocalState {
    std::uint8_t co_cpu = 0;   ///< none 0%, small <25%, medium <75%, large <=100%
    std::uint8_t co_mem = 0;   ///< same buckets as co_cpu
    std::uint8_t network = 0;  ///< 0 regular (>40 Mbps), 1 bad
    std::uint8_t data = 0;     ///< small <25%, medium <100%, large =100% of classes

    static constexpr std::array<std::uint8_t, 4> kBuckets{4, 4, 2, 3};
    bool operator==(const LocalState&) const = default;
};

GlobalState encode_global(const WorkloadSpec& workload, const GlobalParams& params);

LocalState encode_local(const InterferenceState& interference, const NetworkCondition& network,
                        std::size_t classes_present, std::size_t total_classes);

/// Utilisation bucket shared by co_cpu and co_mem.
std::uint8_t utilization_bucket(double fraction);

/// Dense encodings; both fit in a byte.
std::uint32_t pack(const GlobalState& s);
std::uint32_t pack(const LocalState& s);
GlobalState unpack_global(std::uint32_t code);
LocalState unpack_local(std::uint32_t code);

}  // namespace flsim
