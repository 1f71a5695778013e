#include "flsim/report.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <cstring>
#include <map>
#include <ostream>

namespace flsim {

namespace {

std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

std::string opt(const std::optional<double>& v) { return v ? num(*v) : std::string(); }

class Fnv {
public:
    void bytes(const void* p, std::size_t n) {
        const auto* b = static_cast<const unsigned char*>(p);
        for (std::size_t i = 0; i < n; ++i) {
            h_ ^= b[i];
            h_ *= 0x100000001b3ULL;
        }
    }
    void f64(double v) {
        std::uint64_t bits;
        std::memcpy(&bits, &v, sizeof bits);
        u64(bits);
    }
    void u64(std::uint64_t v) {
        unsigned char b[8];
        for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
        bytes(b, 8);
    }
    std::uint64_t value() const { return h_; }

private:
    std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

}  // namespace

void write_rounds_csv(const RunReport& report, const Fleet& fleet, std::ostream& out) {
    out << kRoundsCsvHeader << "\n";
    out << "round,policy,t_round,energy_total,accuracy,excluded,sel_h,sel_m,sel_l,act_cpu,act_gpu\n";
    for (const auto& r : report.rounds) {
        TierCounts tiers;
        int cpu = 0;
        int gpu = 0;
        for (const auto& [id, act] : r.plan.actions) {
            ++tiers[fleet.device(id).tier];
            (act.processor == Processor::CPU ? cpu : gpu) += 1;
        }
        out << r.round << ',' << report.policy << ',' << num(r.t_round) << ','
            << num(r.energy_total) << ',' << num(r.accuracy) << ',' << r.excluded.size() << ','
            << tiers.h << ',' << tiers.m << ',' << tiers.l << ',' << cpu << ',' << gpu << "\n";
    }
}

std::uint64_t variance_hash(const RunReport& report) {
    Fnv h;
    for (const auto& r : report.rounds) {
        h.u64(r.round);
        for (const auto& c : r.conditions) {
            h.f64(c.interference.co_cpu);
            h.f64(c.interference.co_mem);
            h.f64(c.network.bandwidth_mbps);
            h.u64(static_cast<std::uint64_t>(c.network.signal));
        }
    }
    return h.value();
}

std::optional<double> run_ppw(const RunReport& report, std::size_t warmup_rounds) {
    if (report.jobs.empty()) return report.ppw();
    double energy = 0.0;
    std::size_t n = 0;
    for (const auto& j : report.jobs) {
        if (j.first_round < warmup_rounds) continue;
        energy += j.energy;
        ++n;
    }
    if (n == 0 || !(energy > 0.0)) return std::nullopt;
    return static_cast<double>(n) / energy;
}

std::vector<std::pair<std::size_t, double>> greedy_reward_trace(const RunReport& report) {
    std::vector<std::pair<std::size_t, double>> out;
    for (const auto& r : report.rounds) {
        if (r.explored) continue;
        double sum = 0.0;
        std::size_t n = 0;
        for (const auto& d : r.devices) {
            if (!d.reward) continue;
            sum += *d.reward;
            ++n;
        }
        if (n > 0) out.emplace_back(r.round, sum / static_cast<double>(n));
    }
    return out;
}

std::optional<std::size_t> reward_stabilization_round(const RunReport& report, std::size_t window,
                                                      double threshold) {
    const auto trace = greedy_reward_trace(report);
    if (window < 2 || trace.size() < window) return std::nullopt;
    for (std::size_t end = window; end <= trace.size(); ++end) {
        double mean = 0.0;
        for (std::size_t i = end - window; i < end; ++i) mean += trace[i].second;
        mean /= static_cast<double>(window);
        double var = 0.0;
        for (std::size_t i = end - window; i < end; ++i) {
            var += (trace[i].second - mean) * (trace[i].second - mean);
        }
        var /= static_cast<double>(window - 1);
        if (var < threshold) return trace[end - 1].first;
    }
    return std::nullopt;
}

std::vector<SummaryRow> summarize(const std::vector<RunReport>& reports,
                                  std::size_t warmup_rounds) {
    std::map<std::uint64_t, double> random_ppw;
    for (const auto& r : reports) {
        if (r.policy != to_string(PolicyKind::Random)) continue;
        if (auto p = run_ppw(r, warmup_rounds)) random_ppw[r.seed] = *p;
    }

    std::vector<SummaryRow> rows;
    std::vector<std::string> order;
    for (const auto& r : reports) {
        SummaryRow row;
        row.policy = r.policy;
        row.seed = r.seed;
        row.ppw = run_ppw(r, warmup_rounds);
        const auto base = random_ppw.find(r.seed);
        if (row.ppw && base != random_ppw.end()) row.normalized_ppw = *row.ppw / base->second;
        if (r.convergence_round) row.convergence_round = static_cast<double>(*r.convergence_round);
        row.final_accuracy = r.rounds.empty() ? 0.0 : r.rounds.back().accuracy;
        row.total_energy = r.total_energy;
        row.jobs = r.jobs.size();
        row.oracle_match_rate = r.oracle_match_rate;
        rows.push_back(row);
        if (std::find(order.begin(), order.end(), r.policy) == order.end()) order.push_back(r.policy);
    }

    const std::size_t per_run = rows.size();
    const auto mean_of = [&](const std::string& policy, auto field) -> std::optional<double> {
        double sum = 0.0;
        std::size_t n = 0;
        for (std::size_t i = 0; i < per_run; ++i) {
            if (rows[i].policy != policy) continue;
            if (auto v = field(rows[i])) {
                sum += *v;
                ++n;
            }
        }
        if (n == 0) return std::nullopt;
        return sum / static_cast<double>(n);
    };
    for (const auto& policy : order) {
        SummaryRow m;
        m.policy = policy;
        m.ppw = mean_of(policy, [](const SummaryRow& r) { return r.ppw; });
        m.normalized_ppw = mean_of(policy, [](const SummaryRow& r) { return r.normalized_ppw; });
        m.convergence_round =
            mean_of(policy, [](const SummaryRow& r) { return r.convergence_round; });
        m.final_accuracy = mean_of(policy, [](const SummaryRow& r) {
                               return std::optional<double>(r.final_accuracy);
                           }).value_or(0.0);
        m.total_energy = mean_of(policy, [](const SummaryRow& r) {
                             return std::optional<double>(r.total_energy);
                         }).value_or(0.0);
        m.oracle_match_rate =
            mean_of(policy, [](const SummaryRow& r) { return r.oracle_match_rate; });
        std::size_t jobs = 0;
        for (std::size_t i = 0; i < per_run; ++i) {
            if (rows[i].policy == policy) jobs += rows[i].jobs;
        }
        m.jobs = jobs;
        rows.push_back(m);
    }
    return rows;
}

void write_summary_csv(const std::vector<SummaryRow>& rows, std::ostream& out) {
    out << kSummaryCsvHeader << "\n";
    out << "policy,seed,ppw,normalized_ppw,convergence_round,final_accuracy,total_energy,jobs,"
           "oracle_match\n";
    for (const auto& r : rows) {
        out << r.policy << ',' << (r.seed ? std::to_string(*r.seed) : std::string("mean")) << ','
            << opt(r.ppw) << ',' << opt(r.normalized_ppw) << ',' << opt(r.convergence_round)
            << ',' << num(r.final_accuracy) << ',' << num(r.total_energy) << ',' << r.jobs << ','
            << opt(r.oracle_match_rate) << "\n";
    }
}

}  // namespace flsim
