#include "lcfl/kde.hpp"

#include <stdexcept>

#include "lcfl/rng.hpp"

namespace lcfl {

namespace {

std::vector<std::vector<std::size_t>> index_by_class(const std::vector<LabeledExample>& points,
                                                     int classes) {
    std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(classes));
    for (std::size_t i = 0; i < points.size(); ++i) {
        by_class[static_cast<std::size_t>(points[i].y)].push_back(i);
    }
    return by_class;
}

}  // namespace

KdeGenerator::KdeGenerator(const Dataset& shard, double bandwidth, int client_id)
    : client_id_(client_id), dim_(shard.dim), classes_(shard.num_classes), bandwidth_(bandwidth) {
    if (shard.empty()) {
        throw std::invalid_argument("KdeGenerator: empty shard");
    }
    if (!(bandwidth > 0.0)) {
        throw std::invalid_argument("KdeGenerator: bandwidth must be positive");
    }
    shard.validate();
    points_ = shard.examples;
    by_class_ = index_by_class(points_, classes_);
    class_counts_.assign(static_cast<std::size_t>(classes_), 0.0);
    for (const auto& e : points_) {
        class_counts_[static_cast<std::size_t>(e.y)] += 1.0;
    }
}

KdeGenerator::KdeGenerator(int client_id, int dim, int num_classes, double bandwidth,
                           std::vector<LabeledExample> points)
    : client_id_(client_id), dim_(dim), classes_(num_classes), bandwidth_(bandwidth),
      points_(std::move(points)) {
    if (points_.empty()) {
        throw std::invalid_argument("KdeGenerator: no points");
    }
    by_class_ = index_by_class(points_, classes_);
    class_counts_.assign(static_cast<std::size_t>(classes_), 0.0);
    for (const auto& e : points_) {
        class_counts_[static_cast<std::size_t>(e.y)] += 1.0;
    }
}

std::vector<int> KdeGenerator::label_support() const {
    std::vector<int> labels;
    for (int c = 0; c < classes_; ++c) {
        if (!by_class_[static_cast<std::size_t>(c)].empty()) {
            labels.push_back(c);
        }
    }
    return labels;
}

Dataset KdeGenerator::sample(std::size_t k, std::uint64_t seed) const {
    if (k == 0) {
        throw std::invalid_argument("Generator::sample: k must be positive");
    }
    Rng rng(derive_seed(seed, "kde-sample"));
    Dataset out(dim_, classes_);
    out.examples.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
        const auto label = rng.weighted_index(class_counts_);
        const auto& bucket = by_class_[label];
        const auto& base = points_[bucket[rng.index(bucket.size())]];
        std::vector<double> x(static_cast<std::size_t>(dim_));
        for (int f = 0; f < dim_; ++f) {
            x[static_cast<std::size_t>(f)] = base.x[static_cast<std::size_t>(f)] +
                                             bandwidth_ * rng.normal();
        }
        out.examples.push_back({std::move(x), static_cast<int>(label)});
    }
    return out;
}

std::vector<std::uint8_t> KdeGenerator::serialize() const {
    ByteWriter w;
    write_blob_header(w, kTagKde);
    w.i32(client_id_);
    w.i32(dim_);
    w.i32(classes_);
    w.f64(bandwidth_);
    w.u32(static_cast<std::uint32_t>(points_.size()));
    for (const auto& e : points_) {
        w.i32(e.y);
        w.f64_array(e.x);
    }
    return w.take();
}

std::unique_ptr<Generator> KdeGenerator::decode(ByteReader& r) {
    int client_id = r.i32();
    int dim = r.i32();
    int classes = r.i32();
    double bandwidth = r.f64();
    if (dim < 1 || classes < 1 || !(bandwidth > 0.0)) {
        throw std::runtime_error("kde decode: bad parameters");
    }
    std::uint32_t n = r.u32();
    std::vector<LabeledExample> points;
    points.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) {
        LabeledExample e;
        e.y = r.i32();
        if (e.y < 0 || e.y >= classes) {
            throw std::runtime_error("kde decode: label out of range");
        }
        e.x = r.f64_array(static_cast<std::size_t>(dim));
        points.push_back(std::move(e));
    }
    return std::make_unique<KdeGenerator>(client_id, dim, classes, bandwidth, std::move(points));
}

std::unique_ptr<Generator> KdeGenerator::clone() const {
    return std::make_unique<KdeGenerator>(*this);
}

}  // namespace lcfl
