#include "flsim/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <string>

#include "flsim/error.hpp"
#include "flsim/rng.hpp"

namespace flsim {

void Dataset::validate() const {
    if (num_classes <= 0) throw SimError("dataset needs at least one class");
    if (features.size() != labels.size() * feature_dim) {
        throw SimError("feature matrix does not match label count");
    }
    for (int y : labels) {
        if (y < 0 || y >= num_classes) throw SimError("label out of range");
    }
}

namespace {

std::vector<std::vector<double>> class_means(const SyntheticSpec& spec) {
    const auto dim = spec.feature_dim;
    const double radius = spec.separation * spec.noise;
    std::vector<std::vector<double>> means(static_cast<std::size_t>(spec.num_classes),
                                           std::vector<double>(dim, 0.0));
    if (dim >= static_cast<std::size_t>(spec.num_classes)) {
        for (std::size_t c = 0; c < means.size(); ++c) means[c][c] = radius;
        return means;
    }
    auto eng = keyed_engine(Stream::Dataset, spec.seed, 0xC1A55);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (auto& m : means) {
        double norm = 0.0;
        for (auto& v : m) {
            v = normal(eng);
            norm += v * v;
        }
        norm = std::sqrt(norm);
        for (auto& v : m) v *= radius / norm;
    }
    return means;
}

Dataset draw_blobs(const SyntheticSpec& spec, const std::vector<std::vector<double>>& means,
                   std::size_t per_class, std::uint64_t split_tag) {
    Dataset ds;
    ds.feature_dim = spec.feature_dim;
    ds.num_classes = spec.num_classes;
    ds.features.reserve(per_class * means.size() * spec.feature_dim);
    ds.labels.reserve(per_class * means.size());
    auto eng = keyed_engine(Stream::Dataset, spec.seed, split_tag);
    std::normal_distribution<double> normal(0.0, spec.noise);
    for (std::size_t c = 0; c < means.size(); ++c) {
        for (std::size_t i = 0; i < per_class; ++i) {
            for (std::size_t k = 0; k < spec.feature_dim; ++k) {
                ds.features.push_back(means[c][k] + normal(eng));
            }
            ds.labels.push_back(static_cast<int>(c));
        }
    }
    return ds;
}

}  // namespace

DatasetSplit generate_synthetic(const SyntheticSpec& spec) {
    if (spec.num_classes <= 0 || spec.samples_per_class == 0 || spec.feature_dim == 0) {
        throw ConfigError("synthetic dataset counts must be positive");
    }
    if (!(spec.noise > 0.0) || spec.separation < 0.0) {
        throw ConfigError("synthetic dataset needs positive noise and non-negative separation");
    }
    const auto means = class_means(spec);
    const auto test_per_class =
        spec.test_samples_per_class == 0 ? spec.samples_per_class : spec.test_samples_per_class;
    return {draw_blobs(spec, means, spec.samples_per_class, 1),
            draw_blobs(spec, means, test_per_class, 2)};
}

namespace {

std::uint32_t read_be32(std::istream& in, const std::filesystem::path& path) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) {
        throw SimError("truncated IDX header in " + path.string());
    }
    return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) |
           std::uint32_t{b[3]};
}

std::vector<unsigned char> read_payload(std::istream& in, std::size_t n,
                                        const std::filesystem::path& path) {
    std::vector<unsigned char> buf(n);
    if (n > 0 && !in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n))) {
        throw SimError("truncated IDX payload in " + path.string());
    }
    return buf;
}

}  // namespace

Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                 int num_classes) {
    std::ifstream img(images, std::ios::binary);
    if (!img) throw SimError("cannot open " + images.string());
    std::ifstream lab(labels, std::ios::binary);
    if (!lab) throw SimError("cannot open " + labels.string());

    if (read_be32(img, images) != 0x00000803) throw SimError("bad IDX image magic in " + images.string());
    const std::size_t count = read_be32(img, images);
    const std::size_t rows = read_be32(img, images);
    const std::size_t cols = read_be32(img, images);

    if (read_be32(lab, labels) != 0x00000801) throw SimError("bad IDX label magic in " + labels.string());
    const std::size_t label_count = read_be32(lab, labels);
    if (label_count != count) throw SimError("IDX image and label counts differ");

    const auto pixels = read_payload(img, count * rows * cols, images);
    const auto raw_labels = read_payload(lab, count, labels);

    Dataset ds;
    ds.feature_dim = rows * cols;
    ds.num_classes = num_classes;
    ds.features.reserve(pixels.size());
    for (unsigned char p : pixels) ds.features.push_back(p / 255.0);
    ds.labels.assign(raw_labels.begin(), raw_labels.end());
    ds.validate();
    return ds;
}

std::vector<std::size_t> apportion(std::size_t total, std::span<const double> weights,
                                   std::size_t tie_offset) {
    const double sum = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (weights.empty() || !(sum > 0.0)) throw SimError("apportion needs positive total weight");
    const std::size_t n = weights.size();
    std::vector<std::size_t> out(n, 0);
    std::vector<double> frac(n, 0.0);
    std::size_t assigned = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double exact = static_cast<double>(total) * weights[i] / sum;
        out[i] = static_cast<std::size_t>(std::floor(exact));
        frac[i] = exact - static_cast<double>(out[i]);
        assigned += out[i];
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::rotate(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(tie_offset % n),
                order.end());
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return frac[a] > frac[b]; });
    for (std::size_t i = 0; assigned < total; ++i, ++assigned) out[order[i % n]] += 1;
    // Floating-point floors can overshoot by one when weights are near-integral.
    for (std::size_t i = n; assigned > total && i-- > 0;) {
        if (out[order[i]] > 0) {
            out[order[i]] -= 1;
            --assigned;
        }
    }
    return out;
}

DataPartition partition(const Dataset& dataset, std::size_t num_devices, const DataRegime& regime,
                        std::uint64_t seed) {
    const int m = regime.noniid_percent;
    if (m != 0 && m != 50 && m != 75 && m != 100) {
        throw ConfigError("non-IID percentage must be one of 0, 50, 75, 100");
    }
    if (!(regime.concentration > 0.0)) throw ConfigError("Dirichlet concentration must be positive");
    if (regime.size_skew < 0.0) throw ConfigError("size_skew must be non-negative");
    if (num_devices == 0) throw SimError("partition needs at least one device");
    if (num_devices > dataset.size()) {
        throw SimError("more devices (" + std::to_string(num_devices) + ") than samples (" +
                       std::to_string(dataset.size()) + ")");
    }

    const auto num_classes = static_cast<std::size_t>(dataset.num_classes);
    DataPartition part;
    part.num_classes = num_classes;
    part.assignment.assign(num_devices, {});
    part.non_iid.assign(num_devices, false);

    std::vector<std::size_t> devices(num_devices);
    std::iota(devices.begin(), devices.end(), 0);
    const std::size_t n_noniid = num_devices * static_cast<std::size_t>(m) / 100;
    {
        auto eng = keyed_engine(Stream::Partition, seed, 1);
        std::shuffle(devices.begin(), devices.end(), eng);
    }
    std::vector<std::size_t> noniid(devices.begin(), devices.begin() + static_cast<std::ptrdiff_t>(n_noniid));
    std::vector<std::size_t> iid(devices.begin() + static_cast<std::ptrdiff_t>(n_noniid), devices.end());
    std::sort(noniid.begin(), noniid.end());
    std::sort(iid.begin(), iid.end());
    for (auto d : noniid) part.non_iid[d] = true;

    std::vector<double> iid_weights(iid.size(), 1.0);
    if (regime.size_skew > 0.0) {
        auto eng = keyed_engine(Stream::Partition, seed, 2);
        std::normal_distribution<double> normal(0.0, 1.0);
        for (auto& w : iid_weights) w = std::exp(regime.size_skew * normal(eng));
    }

    std::vector<std::vector<std::size_t>> by_class(num_classes);
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        by_class[static_cast<std::size_t>(dataset.labels[i])].push_back(i);
    }

    std::size_t rotation = 0;
    for (std::size_t c = 0; c < num_classes; ++c) {
        auto& pool = by_class[c];
        auto eng = keyed_engine(Stream::Partition, seed, 3, c);
        std::shuffle(pool.begin(), pool.end(), eng);

        const std::size_t iid_count =
            noniid.empty() ? pool.size()
                           : (iid.empty() ? 0 : pool.size() * iid.size() / num_devices);
        std::size_t cursor = 0;
        if (!iid.empty() && iid_count > 0) {
            const auto counts = apportion(iid_count, iid_weights, rotation);
            rotation += iid_count;
            for (std::size_t k = 0; k < iid.size(); ++k) {
                auto& dst = part.assignment[iid[k]];
                dst.insert(dst.end(), pool.begin() + static_cast<std::ptrdiff_t>(cursor),
                           pool.begin() + static_cast<std::ptrdiff_t>(cursor + counts[k]));
                cursor += counts[k];
            }
        }
        const std::size_t rest = pool.size() - cursor;
        if (!noniid.empty() && rest > 0) {
            std::gamma_distribution<double> gamma(regime.concentration, 1.0);
            std::vector<double> props(noniid.size());
            for (auto& p : props) p = gamma(eng);
            if (!(std::accumulate(props.begin(), props.end(), 0.0) > 0.0)) {
                std::uniform_int_distribution<std::size_t> pick(0, props.size() - 1);
                props[pick(eng)] = 1.0;
            }
            const auto counts = apportion(rest, props);
            for (std::size_t k = 0; k < noniid.size(); ++k) {
                auto& dst = part.assignment[noniid[k]];
                dst.insert(dst.end(), pool.begin() + static_cast<std::ptrdiff_t>(cursor),
                           pool.begin() + static_cast<std::ptrdiff_t>(cursor + counts[k]));
                cursor += counts[k];
            }
        }
    }

    part.classes_present.assign(num_devices, {});
    for (std::size_t d = 0; d < num_devices; ++d) {
        auto& idx = part.assignment[d];
        std::sort(idx.begin(), idx.end());
        std::vector<bool> seen(num_classes, false);
        for (auto i : idx) seen[static_cast<std::size_t>(dataset.labels[i])] = true;
        for (std::size_t c = 0; c < num_classes; ++c) {
            if (seen[c]) part.classes_present[d].push_back(static_cast<int>(c));
        }
    }
    return part;
}

}  // namespace flsim
