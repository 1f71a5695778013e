#include "flsim/training.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <string>

#include "flsim/error.hpp"
#include "flsim/rng.hpp"

namespace flsim {

namespace {

/// Widths of every dense layer boundary: input, hidden..., classes.
std::vector<std::size_t> layer_widths(const ModelShape& shape) {
    std::vector<std::size_t> w{shape.input_dim};
    if (shape.arch.kind == ArchKind::MLP) w.insert(w.end(), shape.arch.hidden.begin(), shape.arch.hidden.end());
    w.push_back(shape.num_classes);
    return w;
}

struct Activations {
    /// Post-activation outputs per layer boundary; [0] is the input.
    std::vector<std::vector<double>> values;
};

void run_forward(const ModelState& model, const std::vector<std::size_t>& widths,
                 std::span<const double> x, Activations& act) {
    act.values.resize(widths.size());
    act.values[0].assign(x.begin(), x.end());
    std::size_t offset = 0;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        const auto in = widths[l];
        const auto out = widths[l + 1];
        const double* w = model.parameters.data() + offset;
        const double* b = w + out * in;
        auto& y = act.values[l + 1];
        y.assign(out, 0.0);
        const auto& xin = act.values[l];
        for (std::size_t o = 0; o < out; ++o) {
            double s = b[o];
            const double* row = w + o * in;
            for (std::size_t i = 0; i < in; ++i) s += row[i] * xin[i];
            y[o] = (l + 2 < widths.size()) ? std::tanh(s) : s;
        }
        offset += out * in + out;
    }
}

/// Adds the per-sample cross-entropy gradient into `grad`; returns the loss.
double accumulate_sample(const ModelState& model, const std::vector<std::size_t>& widths,
                         std::span<const double> x, int label, std::vector<double>& grad,
                         Activations& act) {
    run_forward(model, widths, x, act);
    auto& logits = act.values.back();
    const double mx = *std::max_element(logits.begin(), logits.end());
    double z = 0.0;
    for (double v : logits) z += std::exp(v - mx);
    const double log_z = mx + std::log(z);
    const double loss = log_z - logits[static_cast<std::size_t>(label)];

    std::vector<double> delta(logits.size());
    for (std::size_t c = 0; c < logits.size(); ++c) delta[c] = std::exp(logits[c] - log_z);
    delta[static_cast<std::size_t>(label)] -= 1.0;

    // Offsets of each layer's weight block.
    std::vector<std::size_t> offsets(widths.size() - 1);
    std::size_t off = 0;
    for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
        offsets[l] = off;
        off += widths[l + 1] * widths[l] + widths[l + 1];
    }
    for (std::size_t l = widths.size() - 1; l-- > 0;) {
        const auto in = widths[l];
        const auto out = widths[l + 1];
        const auto& xin = act.values[l];
        double* gw = grad.data() + offsets[l];
        double* gb = gw + out * in;
        for (std::size_t o = 0; o < out; ++o) {
            double* row = gw + o * in;
            for (std::size_t i = 0; i < in; ++i) row[i] += delta[o] * xin[i];
            gb[o] += delta[o];
        }
        if (l == 0) break;
        const double* w = model.parameters.data() + offsets[l];
        std::vector<double> prev(in, 0.0);
        for (std::size_t o = 0; o < out; ++o) {
            const double* row = w + o * in;
            for (std::size_t i = 0; i < in; ++i) prev[i] += row[i] * delta[o];
        }
        for (std::size_t i = 0; i < in; ++i) prev[i] *= 1.0 - xin[i] * xin[i];
        delta = std::move(prev);
    }
    return loss;
}

void check_shape(const ModelState& model, const Dataset& data) {
    model.validate();
    if (model.shape.input_dim != data.feature_dim ||
        model.shape.num_classes != static_cast<std::size_t>(data.num_classes)) {
        throw SimError("model shape does not match dataset");
    }
}

}  // namespace

void ModelState::validate() const {
    if (shape.input_dim == 0 || shape.num_classes == 0) throw SimError("empty model shape");
    if (parameters.size() != shape.parameter_count()) {
        throw SimError("parameter count " + std::to_string(parameters.size()) +
                       " does not match architecture (" +
                       std::to_string(shape.parameter_count()) + ")");
    }
    for (double p : parameters) {
        if (!std::isfinite(p)) throw SimError("model has non-finite parameters");
    }
}

ModelState init_model(const ModelShape& shape, std::uint64_t seed) {
    ModelState m;
    m.shape = shape;
    m.parameters.resize(shape.parameter_count());
    auto eng = keyed_engine(Stream::ModelInit, seed);
    std::normal_distribution<double> normal(0.0, 0.01);
    for (auto& p : m.parameters) p = normal(eng);
    return m;
}

std::vector<double> forward(const ModelState& model, std::span<const double> x) {
    Activations act;
    run_forward(model, layer_widths(model.shape), x, act);
    return act.values.back();
}

double loss_and_gradient(const ModelState& model, const Dataset& data,
                         std::span<const std::size_t> indices, std::vector<double>& grad) {
    if (indices.empty()) throw SimError("empty batch");
    const auto widths = layer_widths(model.shape);
    grad.assign(model.parameters.size(), 0.0);
    Activations act;
    double loss = 0.0;
    for (auto i : indices) {
        loss += accumulate_sample(model, widths, data.row(i), data.labels[i], grad, act);
    }
    const double inv = 1.0 / static_cast<double>(indices.size());
    for (auto& g : grad) g *= inv;
    return loss * inv;
}

LocalUpdate local_train(const ModelState& model, const Dataset& data,
                        std::span<const std::size_t> shard, const SgdConfig& config,
                        std::uint64_t seed) {
    if (shard.empty()) throw SimError("local_train needs a non-empty shard");
    if (config.batch_size == 0 || config.epochs == 0) {
        throw SimError("batch size and epochs must be positive");
    }
    check_shape(model, data);

    ModelState local = model;
    std::vector<std::size_t> order(shard.begin(), shard.end());
    std::vector<double> grad;
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        auto eng = keyed_engine(Stream::Shuffle, seed, epoch);
        std::shuffle(order.begin(), order.end(), eng);
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const auto len = std::min(config.batch_size, order.size() - start);
            const double loss = loss_and_gradient(
                local, data, std::span<const std::size_t>(order).subspan(start, len), grad);
            if (!std::isfinite(loss)) throw SimError("non-finite training loss");
            for (std::size_t k = 0; k < grad.size(); ++k) {
                local.parameters[k] -= config.learning_rate * grad[k];
            }
        }
    }
    return {std::move(local.parameters), shard.size() * config.epochs};
}

std::optional<std::vector<double>> fedavg_aggregate(std::span<const LocalUpdate> updates) {
    if (updates.empty()) return std::nullopt;
    const auto n = updates.front().parameters.size();
    double total = 0.0;
    for (const auto& u : updates) {
        if (u.parameters.size() != n) throw SimError("updates have different parameter counts");
        total += static_cast<double>(u.samples_used);
    }
    if (!(total > 0.0)) throw SimError("updates carry no samples");
    std::vector<double> out(n, 0.0);
    for (const auto& u : updates) {
        const double w = static_cast<double>(u.samples_used) / total;
        for (std::size_t k = 0; k < n; ++k) out[k] += w * u.parameters[k];
    }
    return out;
}

double evaluate(const ModelState& model, const Dataset& test) {
    if (test.size() == 0) throw SimError("evaluation needs a non-empty test split");
    check_shape(model, test);
    const auto widths = layer_widths(model.shape);
    Activations act;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < test.size(); ++i) {
        run_forward(model, widths, test.row(i), act);
        const auto& y = act.values.back();
        const auto pred = std::max_element(y.begin(), y.end()) - y.begin();
        if (pred == test.labels[i]) ++correct;
    }
    return 100.0 * static_cast<double>(correct) / static_cast<double>(test.size());
}

namespace {

void put_le64(std::ostream& out, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t get_le64(std::istream& in) {
    unsigned char b[8];
    if (!in.read(reinterpret_cast<char*>(b), 8)) throw SimError("truncated checkpoint");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{b[i]} << (8 * i);
    return v;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, std::span<const double> parameters) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw SimError("cannot write checkpoint " + path.string());
    put_le64(out, parameters.size());
    for (double p : parameters) put_le64(out, std::bit_cast<std::uint64_t>(p));
    if (!out) throw SimError("failed writing checkpoint " + path.string());
}

std::vector<double> load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SimError("cannot open checkpoint " + path.string());
    const auto n = get_le64(in);
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(n));
    for (std::uint64_t i = 0; i < n; ++i) out.push_back(std::bit_cast<double>(get_le64(in)));
    return out;
}

}  // namespace flsim
