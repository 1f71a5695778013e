#include "flsim/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "flsim/error.hpp"

namespace flsim {

std::size_t workers_from_env() {
    if (const char* v = std::getenv("FLSIM_WORKERS")) {
        char* end = nullptr;
        const long n = std::strtol(v, &end, 10);
        if (end != v && *end == '\0' && n > 0) return static_cast<std::size_t>(n);
        throw ConfigError("FLSIM_WORKERS must be a positive integer");
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

std::string run_file_name(PolicyKind policy, std::uint64_t seed) {
    return "run_" + std::string(to_string(policy)) + "_seed" + std::to_string(seed) + ".csv";
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw SimError("cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) throw SimError("write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw SimError("cannot rename " + tmp.string() + ": " + ec.message());
}

SweepResult run_sweep(const ExperimentConfig& config, const SweepOptions& options) {
    config.validate();
    const std::filesystem::path dir = options.out_dir.value_or(config.output);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw SimError("cannot create " + dir.string() + ": " + ec.message());

    const auto seeds =
        options.seed ? std::vector<std::uint64_t>{*options.seed} : config.seeds;
    std::vector<PolicyKind> policies;
    for (auto p : config.policies) {
        if (options.policies.empty() ||
            std::find(options.policies.begin(), options.policies.end(), p) !=
                options.policies.end()) {
            policies.push_back(p);
        }
    }
    if (policies.empty()) throw ConfigError("policy filter leaves nothing to run");

    struct Job {
        PolicyKind policy;
        std::uint64_t seed;
    };
    std::vector<Job> jobs;
    for (auto p : policies) {
        for (auto s : seeds) jobs.push_back({p, s});
    }

    const auto data = std::make_shared<const DatasetSplit>(load_dataset(config.dataset));
    SweepResult result;
    result.reports.resize(jobs.size());
    result.run_files.resize(jobs.size());

    std::atomic<std::size_t> next{0};
    std::mutex mu;
    std::exception_ptr failure;
    const auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= jobs.size()) return;
            {
                std::lock_guard lock(mu);
                if (failure) return;
            }
            try {
                Simulation sim(config.run_config(jobs[i].policy, jobs[i].seed), data);
                auto report = sim.run();
                std::ostringstream csv;
                write_rounds_csv(report, sim.fleet(), csv);
                const auto path = dir / run_file_name(jobs[i].policy, jobs[i].seed);
                write_file_atomic(path, csv.str());
                if (options.verbosity > 0) {
                    std::lock_guard lock(mu);
                    std::cerr << "finished " << report.policy << " seed " << report.seed << " ("
                              << report.rounds.size() << " rounds"
                              << (report.converged() ? ", converged" : "") << ")\n";
                }
                result.run_files[i] = path;
                result.reports[i] = std::move(report);
            } catch (...) {
                std::lock_guard lock(mu);
                if (!failure) failure = std::current_exception();
            }
        }
    };

    const std::size_t n_workers =
        std::min(jobs.size(), options.workers > 0 ? options.workers : workers_from_env());
    if (n_workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);

    result.summary = summarize(result.reports, config.warmup_rounds);
    std::ostringstream summary;
    write_summary_csv(result.summary, summary);
    result.summary_file = dir / "summary.csv";
    write_file_atomic(result.summary_file, summary.str());
    return result;
}

}  // namespace flsim
