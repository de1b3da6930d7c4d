#include "lcfl/stumps.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "lcfl/rng.hpp"

namespace lcfl {

StumpEnsemble::StumpEnsemble(int dim, int num_classes) : dim_(dim), classes_(num_classes) {
    if (dim < 1 || num_classes < 2) {
        throw std::invalid_argument("StumpEnsemble: dim >= 1 and num_classes >= 2 required");
    }
}

StumpEnsemble::StumpEnsemble(int dim, int num_classes, std::vector<Stump> stumps)
    : StumpEnsemble(dim, num_classes) {
    for (const auto& s : stumps) {
        if (s.feature < 0 || s.feature >= dim || s.left_class < 0 || s.left_class >= num_classes ||
            s.right_class < 0 || s.right_class >= num_classes || !(s.weight > 0.0)) {
            throw std::invalid_argument("StumpEnsemble: invalid stump");
        }
    }
    stumps_ = std::move(stumps);
}

std::vector<double> StumpEnsemble::confidence(std::span<const double> x) const {
    check_input(x);
    std::vector<double> votes(static_cast<std::size_t>(classes_), 0.0);
    double total = 0.0;
    for (const auto& s : stumps_) {
        votes[static_cast<std::size_t>(stump_vote(s, x))] += s.weight;
        total += s.weight;
    }
    // Laplace smoothing keeps every entry strictly inside (0, 1).
    const double denom = total + static_cast<double>(classes_);
    for (double& v : votes) {
        v = (v + 1.0) / denom;
    }
    return votes;
}

namespace {

struct StumpSearchResult {
    Stump stump;
    double error = std::numeric_limits<double>::infinity();
};

int weighted_argmax(const std::vector<double>& w) {
    return static_cast<int>(std::max_element(w.begin(), w.end()) - w.begin());
}

// Exhaustive scan over features and split midpoints; ties keep the first
// (lowest feature, lowest threshold) candidate.
StumpSearchResult best_stump(const Dataset& data, const std::vector<double>& weights,
                             int num_classes) {
    const std::size_t n = data.size();
    StumpSearchResult best;

    // Constant-rule fallback: threshold below every value, all points right.
    {
        std::vector<double> class_w(static_cast<std::size_t>(num_classes), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            class_w[static_cast<std::size_t>(data.examples[i].y)] += weights[i];
        }
        int majority = weighted_argmax(class_w);
        double total = std::accumulate(class_w.begin(), class_w.end(), 0.0);
        double min_val = data.examples[0].x[0];
        for (const auto& e : data.examples) {
            min_val = std::min(min_val, e.x[0]);
        }
        best.stump = {0, min_val - 1.0, majority, majority, 1.0};
        best.error = total - class_w[static_cast<std::size_t>(majority)];
    }

    std::vector<std::size_t> order(n);
    for (int f = 0; f < data.dim; ++f) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            double va = data.examples[a].x[static_cast<std::size_t>(f)];
            double vb = data.examples[b].x[static_cast<std::size_t>(f)];
            return va != vb ? va < vb : a < b;
        });

        std::vector<double> left_w(static_cast<std::size_t>(num_classes), 0.0);
        std::vector<double> right_w(static_cast<std::size_t>(num_classes), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            right_w[static_cast<std::size_t>(data.examples[i].y)] += weights[i];
        }
        const double total = std::accumulate(right_w.begin(), right_w.end(), 0.0);

        for (std::size_t k = 0; k + 1 < n; ++k) {
            const auto& e = data.examples[order[k]];
            left_w[static_cast<std::size_t>(e.y)] += weights[order[k]];
            right_w[static_cast<std::size_t>(e.y)] -= weights[order[k]];
            const double v = e.x[static_cast<std::size_t>(f)];
            const double v_next = data.examples[order[k + 1]].x[static_cast<std::size_t>(f)];
            if (v == v_next) {
                continue;  // not a valid split point
            }
            int lc = weighted_argmax(left_w);
            int rc = weighted_argmax(right_w);
            double err = total - left_w[static_cast<std::size_t>(lc)] -
                         right_w[static_cast<std::size_t>(rc)];
            if (err < best.error) {
                best.stump = {f, 0.5 * (v + v_next), lc, rc, 1.0};
                best.error = err;
            }
        }
    }
    return best;
}

}  // namespace

void StumpEnsemble::boost(const Dataset& data, int rounds) {
    const std::size_t n = data.size();
    std::vector<double> w(n, 1.0 / static_cast<double>(n));
    const double chance = 1.0 - 1.0 / static_cast<double>(classes_);

    for (int round = 0; round < rounds; ++round) {
        auto found = best_stump(data, w, classes_);
        double err = found.error;  // weights stay normalized, so this is a rate
        if (err >= chance) {
            break;  // no better than chance on the current weighting
        }
        bool perfect = err <= 1e-12;
        err = std::max(err, 1e-12);
        // SAMME vote weight
        const double alpha = std::log((1.0 - err) / err) + std::log(static_cast<double>(classes_ - 1));
        found.stump.weight = alpha;
        stumps_.push_back(found.stump);
        if (perfect) {
            break;
        }
        double wsum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (stump_vote(found.stump, data.examples[i].x) != data.examples[i].y) {
                w[i] *= std::exp(alpha);
            }
            wsum += w[i];
        }
        for (double& wi : w) {
            wi /= wsum;
        }
    }
}

void StumpEnsemble::absorb(const Dataset& data, std::uint64_t seed) {
    reservoir_.insert(reservoir_.end(), data.examples.begin(), data.examples.end());
    if (reservoir_.size() > kReservoirCap) {
        Rng rng(derive_seed(seed, "reservoir", absorb_count_));
        rng.shuffle(reservoir_);
        reservoir_.resize(kReservoirCap);
    }
    absorb_count_++;
}

void StumpEnsemble::fit(const Dataset& train, const TrainConfig& cfg) {
    check_train_args(train, cfg);
    if (cfg.epochs == 0) {
        return;
    }
    stumps_.clear();
    reservoir_.clear();
    absorb_count_ = 0;
    boost(train, cfg.epochs);
    absorb(train, cfg.seed);
}

void StumpEnsemble::update(const Dataset& batch, const TrainConfig& cfg) {
    check_train_args(batch, cfg);
    if (cfg.epochs == 0) {
        return;
    }
    Dataset mixed(dim_, classes_);
    mixed.examples = batch.examples;
    mixed.examples.insert(mixed.examples.end(), reservoir_.begin(), reservoir_.end());
    boost(mixed, cfg.epochs);
    absorb(batch, cfg.seed);
}

std::vector<std::uint8_t> StumpEnsemble::serialize() const {
    ByteWriter w;
    write_blob_header(w, kTagStumps);
    w.i32(dim_);
    w.i32(classes_);
    w.u64(absorb_count_);
    w.u32(static_cast<std::uint32_t>(stumps_.size()));
    for (const auto& s : stumps_) {
        w.i32(s.feature);
        w.f64(s.threshold);
        w.i32(s.left_class);
        w.i32(s.right_class);
        w.f64(s.weight);
    }
    // The reservoir is training state; without it a transferred ensemble
    // could not be updated coherently.
    w.u32(static_cast<std::uint32_t>(reservoir_.size()));
    for (const auto& e : reservoir_) {
        w.i32(e.y);
        w.f64_array(e.x);
    }
    return w.take();
}

std::unique_ptr<ConfidenceModel> StumpEnsemble::decode(ByteReader& r) {
    int dim = r.i32();
    int classes = r.i32();
    if (dim < 1 || classes < 2) {
        throw std::runtime_error("stumps decode: bad shape");
    }
    std::uint64_t absorb_count = r.u64();
    std::uint32_t n_stumps = r.u32();
    std::vector<Stump> stumps;
    stumps.reserve(n_stumps);
    for (std::uint32_t i = 0; i < n_stumps; ++i) {
        Stump s;
        s.feature = r.i32();
        s.threshold = r.f64();
        s.left_class = r.i32();
        s.right_class = r.i32();
        s.weight = r.f64();
        stumps.push_back(s);
    }
    auto model = std::make_unique<StumpEnsemble>(dim, classes, std::move(stumps));
    std::uint32_t n_res = r.u32();
    if (n_res > kReservoirCap) {
        throw std::runtime_error("stumps decode: reservoir exceeds capacity");
    }
    model->reservoir_.reserve(n_res);
    for (std::uint32_t i = 0; i < n_res; ++i) {
        LabeledExample e;
        e.y = r.i32();
        if (e.y < 0 || e.y >= classes) {
            throw std::runtime_error("stumps decode: reservoir label out of range");
        }
        e.x = r.f64_array(static_cast<std::size_t>(dim));
        model->reservoir_.push_back(std::move(e));
    }
    model->absorb_count_ = absorb_count;
    return model;
}

std::unique_ptr<ConfidenceModel> StumpEnsemble::clone() const {
    return std::make_unique<StumpEnsemble>(*this);
}

}  // namespace lcfl
