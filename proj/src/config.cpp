#include "flsim/config.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <type_traits>

#include <json.hpp>

#include "flsim/error.hpp"

namespace flsim {

using nlohmann::json;

namespace {

/// Walks one JSON object, remembering which keys were read so the rest can
/// be reported as unknown.
class Node {
public:
    Node(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) fail("expected an object");
    }

    [[noreturn]] void fail(const std::string& msg) const {
        throw ConfigError(path_ + ": " + msg);
    }
    std::string at(const std::string& key) const { return path_ + "." + key; }

    const json* get(const std::string& key) {
        seen_.insert(key);
        const auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    Node child(const std::string& key) {
        static const json empty = json::object();
        const json* v = get(key);
        return Node(v ? *v : empty, at(key));
    }

    void number(const std::string& key, double& out) {
        if (const json* v = get(key)) {
            if (!v->is_number()) throw ConfigError(at(key) + ": expected a number");
            out = v->get<double>();
        }
    }

    template <typename T>
    void integer(const std::string& key, T& out) {
        if (const json* v = get(key)) {
            const bool ok = std::is_unsigned_v<T> ? v->is_number_unsigned() : v->is_number_integer();
            if (!ok) throw ConfigError(at(key) + ": expected a non-negative integer");
            out = v->get<T>();
        }
    }

    void boolean(const std::string& key, bool& out) {
        if (const json* v = get(key)) {
            if (!v->is_boolean()) throw ConfigError(at(key) + ": expected true or false");
            out = v->get<bool>();
        }
    }

    std::optional<std::string> string(const std::string& key) {
        if (const json* v = get(key)) {
            if (!v->is_string()) throw ConfigError(at(key) + ": expected a string");
            return v->get<std::string>();
        }
        return std::nullopt;
    }

    bool has(const std::string& key) const { return j_.contains(key); }

    void finish() const {
        for (const auto& [key, value] : j_.items()) {
            if (!seen_.count(key)) throw ConfigError(at(key) + ": unknown key");
        }
    }

private:
    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

/// Rethrows a module's ConfigError under a field path.
template <typename F>
auto scoped(const std::string& path, F&& fn) {
    try {
        return fn();
    } catch (const ConfigError& e) {
        throw ConfigError(path + ": " + e.what());
    }
}

void read_fleet(Node n, ExperimentConfig& c) {
    n.integer("h", c.fleet.counts.h);
    n.integer("m", c.fleet.counts.m);
    n.integer("l", c.fleet.counts.l);
    if (c.fleet.counts.h < 0 || c.fleet.counts.m < 0 || c.fleet.counts.l < 0) {
        n.fail("tier counts must be non-negative");
    }
    if (c.fleet.counts.total() == 0) n.fail("fleet is empty");
    // Power-model knobs apply to every tier.
    auto& t0 = c.fleet.tiers[0];
    double cpu_idle = t0.cpu_idle_fraction, gpu_idle = t0.gpu_idle_fraction;
    double gpu_factor = t0.gpu_throughput_factor, fmin = t0.min_frequency_fraction;
    double tx_regular = t0.tx_power_regular_w, tx_bad = t0.tx_power_bad_w;
    n.number("cpu_idle_fraction", cpu_idle);
    n.number("gpu_idle_fraction", gpu_idle);
    n.number("gpu_throughput_factor", gpu_factor);
    n.number("min_frequency_fraction", fmin);
    n.number("tx_power_regular_w", tx_regular);
    n.number("tx_power_bad_w", tx_bad);
    for (auto& t : c.fleet.tiers) {
        t.cpu_idle_fraction = cpu_idle;
        t.gpu_idle_fraction = gpu_idle;
        t.gpu_throughput_factor = gpu_factor;
        t.min_frequency_fraction = fmin;
        t.tx_power_regular_w = tx_regular;
        t.tx_power_bad_w = tx_bad;
    }
    n.finish();
}

void read_workload(Node n, ExperimentConfig& c) {
    if (auto name = n.string("name")) {
        c.workload = scoped(n.at("name"), [&] { return WorkloadSpec::preset(*name); });
    }
    if (auto model = n.string("model")) {
        if (*model == "logistic") {
            c.workload.trainable_arch.kind = ArchKind::Logistic;
        } else if (*model == "mlp") {
            c.workload.trainable_arch.kind = ArchKind::MLP;
        } else {
            throw ConfigError(n.at("model") + ": expected \"logistic\" or \"mlp\"");
        }
    }
    if (const json* h = n.get("hidden")) {
        if (!h->is_array()) throw ConfigError(n.at("hidden") + ": expected an array");
        c.workload.trainable_arch.hidden.clear();
        for (const auto& v : *h) {
            if (!v.is_number_unsigned() || v.get<std::size_t>() == 0) {
                throw ConfigError(n.at("hidden") + ": expected positive integers");
            }
            c.workload.trainable_arch.hidden.push_back(v.get<std::size_t>());
        }
    }
    if (c.workload.trainable_arch.kind == ArchKind::Logistic) {
        c.workload.trainable_arch.hidden.clear();
    } else if (c.workload.trainable_arch.hidden.empty()) {
        throw ConfigError(n.at("hidden") + ": an mlp needs at least one hidden layer");
    }
    n.number("sgd_learning_rate", c.workload.learning_rate_sgd);
    if (!(c.workload.learning_rate_sgd > 0.0)) {
        throw ConfigError(n.at("sgd_learning_rate") + ": must be positive");
    }
    n.finish();
}

void read_params(Node n, ExperimentConfig& c) {
    if (auto preset = n.string("preset")) {
        const auto p = scoped(n.at("preset"), [&] { return GlobalParams::preset(*preset); });
        c.params.batch_size = p.batch_size;
        c.params.local_epochs = p.local_epochs;
        c.params.participants = p.participants;
        c.params_preset = *preset;
    }
    n.integer("batch_size", c.params.batch_size);
    n.integer("local_epochs", c.params.local_epochs);
    n.integer("participants", c.params.participants);
    n.integer("max_rounds", c.params.max_rounds);
    n.number("target_accuracy", c.params.target_accuracy);
    n.finish();
}

void read_data(Node n, ExperimentConfig& c) {
    n.integer("noniid_percent", c.regime.noniid_percent);
    n.number("concentration", c.regime.concentration);
    n.number("size_skew", c.regime.size_skew);
    const int m = c.regime.noniid_percent;
    if (m != 0 && m != 50 && m != 75 && m != 100) {
        throw ConfigError(n.at("noniid_percent") + ": expected 0, 50, 75 or 100");
    }
    if (!(c.regime.concentration > 0.0)) {
        throw ConfigError(n.at("concentration") + ": must be positive");
    }
    if (c.regime.size_skew < 0.0) throw ConfigError(n.at("size_skew") + ": must be non-negative");
    {
        Node s = n.child("synthetic");
        auto& syn = c.dataset.synthetic;
        s.integer("num_classes", syn.num_classes);
        s.integer("samples_per_class", syn.samples_per_class);
        s.integer("test_samples_per_class", syn.test_samples_per_class);
        s.integer("feature_dim", syn.feature_dim);
        s.number("separation", syn.separation);
        s.number("noise", syn.noise);
        s.integer("seed", syn.seed);
        if (syn.num_classes < 2) throw ConfigError(s.at("num_classes") + ": need at least 2");
        if (syn.samples_per_class == 0) throw ConfigError(s.at("samples_per_class") + ": must be positive");
        if (syn.feature_dim == 0) throw ConfigError(s.at("feature_dim") + ": must be positive");
        if (!(syn.noise > 0.0)) throw ConfigError(s.at("noise") + ": must be positive");
        s.finish();
    }
    if (n.has("idx")) {
        Node x = n.child("idx");
        IdxSource idx;
        const auto path = [&](const char* key) {
            auto v = x.string(key);
            if (!v) throw ConfigError(x.at(key) + ": required");
            return std::filesystem::path(*v);
        };
        idx.train_images = path("train_images");
        idx.train_labels = path("train_labels");
        idx.test_images = path("test_images");
        idx.test_labels = path("test_labels");
        x.integer("num_classes", idx.num_classes);
        x.finish();
        c.dataset.idx = idx;
    } else {
        n.get("idx");
    }
    n.finish();
}

void read_variance(Node n, ExperimentConfig& c) {
    if (auto s = n.string("scenario")) {
        c.variance.scenario = scoped(n.at("scenario"), [&] { return parse_scenario(*s); });
    }
    n.number("affected_fraction", c.variance.affected_fraction);
    n.number("bandwidth_mean_mbps", c.variance.bandwidth_mean_mbps);
    n.number("bandwidth_stddev_mbps", c.variance.bandwidth_stddev_mbps);
    if (!(c.variance.affected_fraction >= 0.0 && c.variance.affected_fraction <= 1.0)) {
        throw ConfigError(n.at("affected_fraction") + ": must be in [0, 1]");
    }
    if (!(c.variance.bandwidth_mean_mbps > 0.0)) {
        throw ConfigError(n.at("bandwidth_mean_mbps") + ": must be positive");
    }
    if (!(c.variance.bandwidth_stddev_mbps >= 0.0)) {
        throw ConfigError(n.at("bandwidth_stddev_mbps") + ": must be non-negative");
    }
    n.finish();
}

void read_learner(Node n, ExperimentConfig& c) {
    auto& l = c.learner;
    n.number("learning_rate", l.learning_rate);
    n.number("discount", l.discount);
    n.number("epsilon", l.epsilon);
    n.number("alpha", l.alpha);
    n.number("beta", l.beta);
    n.boolean("shared_tables", l.shared_tables);
    n.number("energy_normalizer", l.energy_normalizer);
    n.number("init_low", l.init_low);
    n.number("init_high", l.init_high);
    scoped("config.learner", [&] {
        l.validate();
        return 0;
    });
    n.finish();
}

}  // namespace

void ExperimentConfig::validate() const {
    if (seeds.empty()) throw ConfigError("config.seeds: must not be empty");
    if (policies.empty()) throw ConfigError("config.policies: must not be empty");
    scoped("config.params", [&] {
        params.validate(static_cast<std::size_t>(fleet.counts.total()));
        return 0;
    });
    scoped("config.learner", [&] {
        learner.validate();
        return 0;
    });
    if (!(straggler_multiplier > 0.0)) {
        throw ConfigError("config.straggler_multiplier: must be positive");
    }
    if (output.empty()) throw ConfigError("config.output: must not be empty");
}

RunConfig ExperimentConfig::run_config(PolicyKind policy, std::uint64_t seed) const {
    RunConfig r;
    r.policy = policy;
    r.fleet = fleet;
    r.workload = workload;
    r.params = params;
    r.dataset = dataset;
    r.regime = regime;
    r.variance = variance;
    r.learner = learner;
    r.seed = seed;
    r.straggler_multiplier = straggler_multiplier;
    r.record_oracle = record_oracle;
    r.restart_on_target = restart_on_target;
    return r;
}

ExperimentConfig parse_config_text(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config: not valid JSON: ") + e.what());
    }
    ExperimentConfig c;
    Node root(j, "config");
    read_fleet(root.child("fleet"), c);
    read_workload(root.child("workload"), c);
    read_params(root.child("params"), c);
    read_data(root.child("data"), c);
    read_variance(root.child("variance"), c);
    read_learner(root.child("learner"), c);
    if (const json* p = root.get("policies")) {
        if (!p->is_array()) throw ConfigError("config.policies: expected an array");
        c.policies.clear();
        for (std::size_t i = 0; i < p->size(); ++i) {
            const auto path = "config.policies[" + std::to_string(i) + "]";
            if (!(*p)[i].is_string()) throw ConfigError(path + ": expected a string");
            const auto kind =
                scoped(path, [&] { return parse_policy((*p)[i].get<std::string>()); });
            for (auto k : c.policies) {
                if (k == kind) throw ConfigError(path + ": duplicate policy");
            }
            c.policies.push_back(kind);
        }
    }
    if (const json* s = root.get("seeds")) {
        if (!s->is_array()) throw ConfigError("config.seeds: expected an array");
        c.seeds.clear();
        for (std::size_t i = 0; i < s->size(); ++i) {
            if (!(*s)[i].is_number_unsigned()) {
                throw ConfigError("config.seeds[" + std::to_string(i) +
                                  "]: expected a non-negative integer");
            }
            c.seeds.push_back((*s)[i].get<std::uint64_t>());
        }
    }
    root.number("straggler_multiplier", c.straggler_multiplier);
    root.boolean("record_oracle", c.record_oracle);
    root.boolean("restart_on_target", c.restart_on_target);
    root.integer("warmup_rounds", c.warmup_rounds);
    if (auto out = root.string("output")) c.output = *out;
    root.finish();
    c.validate();
    return c;
}

ExperimentConfig parse_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str());
}

std::string serialize_config(const ExperimentConfig& c) {
    const auto& t = c.fleet.tiers[0];
    json j;
    j["fleet"] = {{"h", c.fleet.counts.h},
                  {"m", c.fleet.counts.m},
                  {"l", c.fleet.counts.l},
                  {"cpu_idle_fraction", t.cpu_idle_fraction},
                  {"gpu_idle_fraction", t.gpu_idle_fraction},
                  {"gpu_throughput_factor", t.gpu_throughput_factor},
                  {"min_frequency_fraction", t.min_frequency_fraction},
                  {"tx_power_regular_w", t.tx_power_regular_w},
                  {"tx_power_bad_w", t.tx_power_bad_w}};
    j["workload"] = {
        {"name", c.workload.name},
        {"model", c.workload.trainable_arch.kind == ArchKind::MLP ? "mlp" : "logistic"},
        {"hidden", c.workload.trainable_arch.hidden},
        {"sgd_learning_rate", c.workload.learning_rate_sgd}};
    json params = {{"batch_size", c.params.batch_size},
                   {"local_epochs", c.params.local_epochs},
                   {"participants", c.params.participants},
                   {"max_rounds", c.params.max_rounds},
                   {"target_accuracy", c.params.target_accuracy}};
    if (c.params_preset) params["preset"] = *c.params_preset;
    j["params"] = params;
    const auto& s = c.dataset.synthetic;
    json data = {{"noniid_percent", c.regime.noniid_percent},
                 {"concentration", c.regime.concentration},
                 {"size_skew", c.regime.size_skew},
                 {"synthetic",
                  {{"num_classes", s.num_classes},
                   {"samples_per_class", s.samples_per_class},
                   {"test_samples_per_class", s.test_samples_per_class},
                   {"feature_dim", s.feature_dim},
                   {"separation", s.separation},
                   {"noise", s.noise},
                   {"seed", s.seed}}}};
    if (c.dataset.idx) {
        const auto& x = *c.dataset.idx;
        data["idx"] = {{"train_images", x.train_images.string()},
                       {"train_labels", x.train_labels.string()},
                       {"test_images", x.test_images.string()},
                       {"test_labels", x.test_labels.string()},
                       {"num_classes", x.num_classes}};
    }
    j["data"] = data;
    j["variance"] = {{"scenario", std::string(to_string(c.variance.scenario))},
                     {"affected_fraction", c.variance.affected_fraction},
                     {"bandwidth_mean_mbps", c.variance.bandwidth_mean_mbps},
                     {"bandwidth_stddev_mbps", c.variance.bandwidth_stddev_mbps}};
    const auto& l = c.learner;
    j["learner"] = {{"learning_rate", l.learning_rate},     {"discount", l.discount},
                    {"epsilon", l.epsilon},                 {"alpha", l.alpha},
                    {"beta", l.beta},                       {"shared_tables", l.shared_tables},
                    {"energy_normalizer", l.energy_normalizer}, {"init_low", l.init_low},
                    {"init_high", l.init_high}};
    json policies = json::array();
    for (auto p : c.policies) policies.push_back(std::string(to_string(p)));
    j["policies"] = policies;
    j["seeds"] = c.seeds;
    j["straggler_multiplier"] = c.straggler_multiplier;
    j["record_oracle"] = c.record_oracle;
    j["restart_on_target"] = c.restart_on_target;
    j["warmup_rounds"] = c.warmup_rounds;
    j["output"] = c.output;
    return j.dump(2) + "\n";
}

}  // namespace flsim
