#include "flsim/qtable.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "flsim/error.hpp"
#include "flsim/rng.hpp"

namespace flsim {

std::uint64_t q_key(const StateKey& state, const Action& action) {
    return (std::uint64_t{pack(state.global)} << 20) | (std::uint64_t{pack(state.local)} << 10) |
           (std::uint64_t{static_cast<std::uint8_t>(action.processor)} << 8) |
           static_cast<std::uint64_t>(action.step & 0xff);
}

StateKey q_key_state(std::uint64_t key) {
    return {unpack_global(static_cast<std::uint32_t>(key >> 20)),
            unpack_local(static_cast<std::uint32_t>((key >> 10) & 0x3ff))};
}

Action q_key_action(std::uint64_t key) {
    return {static_cast<Processor>((key >> 8) & 0x3), static_cast<std::size_t>(key & 0xff)};
}

QTable::QTable(std::uint64_t init_seed, double init_low, double init_high)
    : init_seed_(init_seed), init_low_(init_low), init_high_(init_high) {}

double QTable::init_value(std::uint64_t key) const {
    const auto h = stream_key({static_cast<std::uint64_t>(Stream::QInit), init_seed_, key});
    return init_low_ + (init_high_ - init_low_) * (static_cast<double>(h >> 11) * 0x1.0p-53);
}

double QTable::value(std::uint64_t key) const {
    auto it = entries_.find(key);
    return it == entries_.end() ? init_value(key) : it->second.value;
}

double QTable::value(const StateKey& s, const Action& a) const { return value(q_key(s, a)); }

QEntry& QTable::touch(std::uint64_t key) {
    auto [it, inserted] = entries_.try_emplace(key);
    if (inserted) it->second.value = init_value(key);
    return it->second;
}

QTables::QTables(const Fleet& fleet, bool shared, std::uint64_t seed, double init_low,
                 double init_high)
    : shared_(shared) {
    device_seeds_.reserve(fleet.size());
    for (const auto& d : fleet.devices()) {
        device_seeds_.push_back(stream_key(
            {static_cast<std::uint64_t>(Stream::QInit), seed, static_cast<std::uint64_t>(d.id)}));
    }
    owner_.assign(fleet.size(), 0);
    if (!shared) {
        for (const auto& d : fleet.devices()) {
            tables_.emplace_back(device_seeds_[static_cast<std::size_t>(d.id)], init_low, init_high);
            tiers_.push_back(d.tier);
            owner_[static_cast<std::size_t>(d.id)] = tables_.size() - 1;
        }
        return;
    }
    for (Tier t : kTiers) {
        const auto ids = fleet.ids_in_tier(t);
        if (ids.empty()) continue;
        tables_.emplace_back(device_seeds_[static_cast<std::size_t>(ids.front())], init_low,
                             init_high);
        tiers_.push_back(t);
        for (auto id : ids) owner_[static_cast<std::size_t>(id)] = tables_.size() - 1;
    }
}

QTable& QTables::table_for(DeviceId id) { return tables_.at(owner_.at(static_cast<std::size_t>(id))); }

const QTable& QTables::table_for(DeviceId id) const {
    return tables_.at(owner_.at(static_cast<std::size_t>(id)));
}

QTables QTables::shared_copy() const {
    if (shared_) return *this;
    QTables out;
    out.shared_ = true;
    out.device_seeds_ = device_seeds_;
    out.owner_.assign(owner_.size(), 0);
    for (Tier t : kTiers) {
        std::vector<std::size_t> members;
        for (std::size_t d = 0; d < owner_.size(); ++d) {
            if (tiers_[owner_[d]] == t) members.push_back(d);
        }
        if (members.empty()) continue;
        const auto& first = tables_[owner_[members.front()]];
        QTable merged(device_seeds_[members.front()], first.init_low(), first.init_high());

        struct Acc {
            double weighted = 0.0;
            double plain = 0.0;
            std::uint64_t count = 0;
            std::size_t seen = 0;
        };
        std::map<std::uint64_t, Acc> acc;
        for (auto d : members) {
            for (const auto& [key, e] : tables_[owner_[d]].entries()) {
                auto& a = acc[key];
                a.weighted += e.value * static_cast<double>(e.count);
                a.plain += e.value;
                a.count += e.count;
                a.seen += 1;
            }
        }
        for (const auto& [key, a] : acc) {
            const double v = a.count > 0 ? a.weighted / static_cast<double>(a.count)
                                         : a.plain / static_cast<double>(a.seen);
            merged.set(key, {v, a.count});
        }
        out.tables_.push_back(std::move(merged));
        out.tiers_.push_back(t);
        for (auto d : members) out.owner_[d] = out.tables_.size() - 1;
    }
    return out;
}

namespace {

std::string exact(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

void QTables::write_csv(std::ostream& out) const {
    out << "# flsim-qtable v1\n";
    out << "M," << (shared_ ? "shared" : "per-device") << ',' << owner_.size() << '\n';
    for (std::size_t i = 0; i < tables_.size(); ++i) {
        const auto& t = tables_[i];
        out << "T," << i << ',' << to_string(tiers_[i]) << ',' << t.init_seed() << ','
            << exact(t.init_low()) << ',' << exact(t.init_high()) << '\n';
    }
    for (std::size_t i = 0; i < tables_.size(); ++i) {
        for (const auto& [key, e] : tables_[i].entries()) {
            const auto s = q_key_state(key);
            const auto a = q_key_action(key);
            out << "E," << i << ',' << pack(s.global) << ',' << pack(s.local) << ','
                << to_string(a.processor) << ',' << a.step << ',' << exact(e.value) << ','
                << e.count << '\n';
        }
    }
}

QTables QTables::read_csv(std::istream& in, const Fleet& fleet) {
    std::string line;
    if (!std::getline(in, line) || line != "# flsim-qtable v1") {
        throw ConfigError("not a flsim-qtable v1 dump");
    }
    const auto fields = [](const std::string& row) {
        std::vector<std::string> out;
        std::stringstream ss(row);
        std::string f;
        while (std::getline(ss, f, ',')) out.push_back(f);
        return out;
    };
    if (!std::getline(in, line)) throw ConfigError("q-table dump missing mode line");
    auto mode = fields(line);
    if (mode.size() != 3 || mode[0] != "M") throw ConfigError("malformed q-table mode line");
    if (std::stoull(mode[2]) != fleet.size()) {
        throw ConfigError("q-table dump was written for a different fleet size");
    }
    QTables out(fleet, mode[1] == "shared", 0);
    for (auto& t : out.tables_) t = QTable();
    std::size_t tables_seen = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto f = fields(line);
        if (f[0] == "T" && f.size() == 6) {
            const auto idx = std::stoull(f[1]);
            if (idx >= out.tables_.size()) throw ConfigError("q-table index out of range");
            out.tables_[idx] = QTable(std::stoull(f[3]), std::stod(f[4]), std::stod(f[5]));
            ++tables_seen;
        } else if (f[0] == "E" && f.size() == 8) {
            const auto idx = std::stoull(f[1]);
            if (idx >= out.tables_.size()) throw ConfigError("q-table index out of range");
            StateKey s{unpack_global(static_cast<std::uint32_t>(std::stoul(f[2]))),
                       unpack_local(static_cast<std::uint32_t>(std::stoul(f[3])))};
            Action a{f[4] == "GPU" ? Processor::GPU : Processor::CPU, std::stoull(f[5])};
            out.tables_[idx].set(q_key(s, a), {std::stod(f[6]), std::stoull(f[7])});
        } else {
            throw ConfigError("malformed q-table row: " + line);
        }
    }
    if (tables_seen != out.tables_.size()) throw ConfigError("q-table dump is missing tables");
    if (!out.shared_) {
        for (std::size_t d = 0; d < out.owner_.size(); ++d) {
            out.device_seeds_[d] = out.tables_[out.owner_[d]].init_seed();
        }
    }
    return out;
}

}  // namespace flsim
