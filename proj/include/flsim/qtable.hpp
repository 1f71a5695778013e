#pragma once

/// @file qtable.hpp
/// @brief Sparse lookup tables Q(global state, local state, action).

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <vector>

#include "flsim/fleet.hpp"
#include "flsim/round_model.hpp"
#include "flsim/state_encoder.hpp"

namespace flsim {

struct StateKey {
    GlobalState global;
    LocalState local;

    bool operator==(const StateKey&) const = default;
};

std::uint64_t q_key(const StateKey& state, const Action& action);
StateKey q_key_state(std::uint64_t key);
Action q_key_action(std::uint64_t key);

struct QEntry {
    double value = 0.0;
    std::uint64_t count = 0;
};

/// Absent entries read as a deterministic Uniform[init_low, init_high) draw
/// keyed by the table's init seed, so lookups never mutate the table.
class QTable {
public:
    explicit QTable(std::uint64_t init_seed = 0, double init_low = 0.0, double init_high = 0.01);

    double value(const StateKey& s, const Action& a) const;
    double value(std::uint64_t key) const;
    double init_value(std::uint64_t key) const;
    /// Materialises the entry (at its init value) if absent.
    QEntry& touch(std::uint64_t key);
    void set(std::uint64_t key, QEntry entry) { entries_[key] = entry; }

    const std::map<std::uint64_t, QEntry>& entries() const { return entries_; }
    std::uint64_t init_seed() const { return init_seed_; }
    double init_low() const { return init_low_; }
    double init_high() const { return init_high_; }

private:
    std::uint64_t init_seed_;
    double init_low_;
    double init_high_;
    std::map<std::uint64_t, QEntry> entries_;
};

/// One table per device, or one per tier when shared.
class QTables {
public:
    QTables() = default;
    QTables(const Fleet& fleet, bool shared, std::uint64_t seed, double init_low = 0.0,
            double init_high = 0.01);

    bool shared() const { return shared_; }
    QTable& table_for(DeviceId id);
    const QTable& table_for(DeviceId id) const;
    std::size_t table_count() const { return tables_.size(); }
    const std::vector<QTable>& tables() const { return tables_; }
    std::size_t owner_of(DeviceId id) const { return owner_.at(static_cast<std::size_t>(id)); }
    const std::vector<Tier>& tiers() const { return tiers_; }

    /// Per-tier view: every device of a tier reads and writes one table.
    /// Existing per-device entries merge by visit-count-weighted mean. The
    /// tier table keeps the init seed of its lowest-id device.
    QTables shared_copy() const;

    /// Versioned CSV: "# flsim-qtable v1" then one row per materialised entry.
    void write_csv(std::ostream& out) const;
    static QTables read_csv(std::istream& in, const Fleet& fleet);

private:
    bool shared_ = false;
    std::vector<QTable> tables_;
    /// Table index per device.
    std::vector<std::size_t> owner_;
    std::vector<Tier> tiers_;
    std::vector<std::uint64_t> device_seeds_;
};

}  // namespace flsim
