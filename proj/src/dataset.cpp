#include "lcfl/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "lcfl/rng.hpp"

namespace lcfl {

void Dataset::add(std::vector<double> x, int y) {
    if (static_cast<int>(x.size()) != dim) {
        throw std::invalid_argument("Dataset::add: expected dimension " + std::to_string(dim) +
                                    ", got " + std::to_string(x.size()));
    }
    if (y < 0 || y >= num_classes) {
        throw std::invalid_argument("Dataset::add: label " + std::to_string(y) +
                                    " outside [0, " + std::to_string(num_classes) + ")");
    }
    for (double v : x) {
        if (!std::isfinite(v)) {
            throw std::invalid_argument("Dataset::add: non-finite feature value");
        }
    }
    examples.push_back({std::move(x), y});
}

void Dataset::append(const Dataset& other) {
    if (other.dim != dim || other.num_classes != num_classes) {
        throw std::invalid_argument("Dataset::append: shape mismatch");
    }
    examples.insert(examples.end(), other.examples.begin(), other.examples.end());
}

std::vector<std::size_t> Dataset::label_histogram() const {
    std::vector<std::size_t> hist(static_cast<std::size_t>(num_classes), 0);
    for (const auto& e : examples) {
        hist[static_cast<std::size_t>(e.y)]++;
    }
    return hist;
}

std::vector<int> Dataset::label_set() const {
    auto hist = label_histogram();
    std::vector<int> labels;
    for (int c = 0; c < num_classes; ++c) {
        if (hist[static_cast<std::size_t>(c)] > 0) {
            labels.push_back(c);
        }
    }
    return labels;
}

void Dataset::validate() const {
    if (dim <= 0 || num_classes <= 0) {
        throw std::invalid_argument("Dataset: dim and num_classes must be positive");
    }
    for (const auto& e : examples) {
        if (static_cast<int>(e.x.size()) != dim) {
            throw std::invalid_argument("Dataset: example dimension mismatch");
        }
        if (e.y < 0 || e.y >= num_classes) {
            throw std::invalid_argument("Dataset: label out of range");
        }
        for (double v : e.x) {
            if (!std::isfinite(v)) {
                throw std::invalid_argument("Dataset: non-finite feature");
            }
        }
    }
}

namespace {

// Structured class centers (ring for d >= 2, line for d == 1) with exact
// pairwise separation, then a seed-determined rotation and offset. Rotation
// preserves distances, so the separation guarantee survives.
std::vector<std::vector<double>> blob_centers(int num_classes, int dim, double spread, Rng& rng) {
    const double sep = 5.0 * spread;  // > the guaranteed 4 * spread
    std::vector<std::vector<double>> centers(static_cast<std::size_t>(num_classes),
                                             std::vector<double>(static_cast<std::size_t>(dim), 0.0));
    if (dim == 1) {
        for (int c = 0; c < num_classes; ++c) {
            centers[static_cast<std::size_t>(c)][0] = c * sep;
        }
    } else {
        const double pi = 3.14159265358979323846;
        // chord between adjacent ring points = 2 R sin(pi / C) >= sep
        const double radius = sep / (2.0 * std::sin(pi / num_classes));
        for (int c = 0; c < num_classes; ++c) {
            double angle = 2.0 * pi * c / num_classes;
            centers[static_cast<std::size_t>(c)][0] = radius * std::cos(angle);
            centers[static_cast<std::size_t>(c)][1] = radius * std::sin(angle);
        }
    }

    // Random orthogonal matrix via Gram-Schmidt on a Gaussian matrix.
    std::vector<std::vector<double>> q(static_cast<std::size_t>(dim),
                                       std::vector<double>(static_cast<std::size_t>(dim), 0.0));
    for (int col = 0; col < dim; ++col) {
        std::vector<double> v(static_cast<std::size_t>(dim));
        for (int r = 0; r < dim; ++r) {
            v[static_cast<std::size_t>(r)] = rng.normal();
        }
        for (int prev = 0; prev < col; ++prev) {
            double dot = 0.0;
            for (int r = 0; r < dim; ++r) {
                dot += v[static_cast<std::size_t>(r)] * q[static_cast<std::size_t>(r)][static_cast<std::size_t>(prev)];
            }
            for (int r = 0; r < dim; ++r) {
                v[static_cast<std::size_t>(r)] -= dot * q[static_cast<std::size_t>(r)][static_cast<std::size_t>(prev)];
            }
        }
        double norm = 0.0;
        for (double e : v) {
            norm += e * e;
        }
        norm = std::sqrt(norm);
        if (norm < 1e-12) {
            // Degenerate draw; fall back to the unit basis vector.
            std::fill(v.begin(), v.end(), 0.0);
            v[static_cast<std::size_t>(col)] = 1.0;
            norm = 1.0;
        }
        for (int r = 0; r < dim; ++r) {
            q[static_cast<std::size_t>(r)][static_cast<std::size_t>(col)] = v[static_cast<std::size_t>(r)] / norm;
        }
    }

    std::vector<double> offset(static_cast<std::size_t>(dim));
    for (int r = 0; r < dim; ++r) {
        offset[static_cast<std::size_t>(r)] = rng.uniform(-spread, spread);
    }

    for (auto& center : centers) {
        std::vector<double> rotated(static_cast<std::size_t>(dim), 0.0);
        for (int r = 0; r < dim; ++r) {
            double acc = 0.0;
            for (int k = 0; k < dim; ++k) {
                acc += q[static_cast<std::size_t>(r)][static_cast<std::size_t>(k)] * center[static_cast<std::size_t>(k)];
            }
            rotated[static_cast<std::size_t>(r)] = acc + offset[static_cast<std::size_t>(r)];
        }
        center = std::move(rotated);
    }
    return centers;
}

}  // namespace

Dataset make_blobs(int n_per_class, int num_classes, int dim, double spread, std::uint64_t seed) {
    if (n_per_class <= 0) {
        throw std::invalid_argument("make_blobs: n_per_class must be positive");
    }
    if (num_classes < 2) {
        throw std::invalid_argument("make_blobs: need at least 2 classes");
    }
    if (dim < 1) {
        throw std::invalid_argument("make_blobs: dimension must be positive");
    }
    if (spread <= 0.0) {
        throw std::invalid_argument("make_blobs: spread must be positive");
    }

    Rng rng(derive_seed(seed, "blobs"));
    auto centers = blob_centers(num_classes, dim, spread, rng);

    Dataset ds(dim, num_classes);
    ds.examples.reserve(static_cast<std::size_t>(n_per_class) * static_cast<std::size_t>(num_classes));
    for (int c = 0; c < num_classes; ++c) {
        for (int j = 0; j < n_per_class; ++j) {
            std::vector<double> x(static_cast<std::size_t>(dim));
            for (int r = 0; r < dim; ++r) {
                x[static_cast<std::size_t>(r)] = centers[static_cast<std::size_t>(c)][static_cast<std::size_t>(r)] +
                                                 spread * rng.normal();
            }
            ds.examples.push_back({std::move(x), c});
        }
    }
    return ds;
}

namespace {

void validate_partition_spec(const Dataset& ds, const PartitionSpec& spec) {
    const int c = ds.num_classes;
    if (spec.n_clients < 1) {
        throw std::invalid_argument("partition: n_clients must be >= 1");
    }
    if (spec.min_classes < 1 || spec.max_classes < spec.min_classes || spec.max_classes > c) {
        throw std::invalid_argument("partition: classes_per_client range must lie within [1, " +
                                    std::to_string(c) + "]");
    }
    if (spec.balance == Balance::equal && spec.unequal_skew != 1.0) {
        throw std::invalid_argument("partition: equal balance forces unequal_skew = 1");
    }
    if (spec.unequal_skew < 1.0) {
        throw std::invalid_argument("partition: unequal_skew must be >= 1");
    }
    if (static_cast<long long>(spec.n_clients) * spec.max_classes < c) {
        throw std::invalid_argument("partition: coverage impossible, n_clients * max_classes < " +
                                    std::to_string(c));
    }
    auto hist = ds.label_histogram();
    for (int label = 0; label < c; ++label) {
        if (hist[static_cast<std::size_t>(label)] == 0) {
            throw std::invalid_argument("partition: class " + std::to_string(label) +
                                        " has no examples, coverage impossible");
        }
    }
}

// Largest-remainder rounding of quotas that sum to total.
std::vector<std::size_t> apportion(std::size_t total, const std::vector<double>& weights) {
    double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);
    std::vector<std::size_t> counts(weights.size(), 0);
    std::vector<std::pair<double, std::size_t>> fractional;  // (-frac, owner) for stable ordering
    std::size_t assigned = 0;
    for (std::size_t j = 0; j < weights.size(); ++j) {
        double quota = total * weights[j] / wsum;
        counts[j] = static_cast<std::size_t>(std::floor(quota));
        assigned += counts[j];
        fractional.push_back({-(quota - std::floor(quota)), j});
    }
    std::sort(fractional.begin(), fractional.end());
    for (std::size_t k = 0; assigned < total; ++k, ++assigned) {
        counts[fractional[k % fractional.size()].second]++;
    }
    return counts;
}

}  // namespace

std::vector<Dataset> partition(const Dataset& ds, const PartitionSpec& spec, std::uint64_t seed) {
    validate_partition_spec(ds, spec);
    const int n = spec.n_clients;
    const int c = ds.num_classes;
    Rng rng(derive_seed(seed, "partition"));

    // Label-set sizes. If the draw cannot cover all classes, bump seats until
    // it can; the coverage invariant outranks strict uniformity of the draw.
    std::vector<int> seats(static_cast<std::size_t>(n));
    long long capacity = 0;
    for (int i = 0; i < n; ++i) {
        seats[static_cast<std::size_t>(i)] = static_cast<int>(rng.int_in(spec.min_classes, spec.max_classes));
        capacity += seats[static_cast<std::size_t>(i)];
    }
    while (capacity < c) {
        auto i = rng.index(static_cast<std::size_t>(n));
        if (seats[i] < spec.max_classes) {
            seats[i]++;
            capacity++;
        }
    }

    // Ownership: round-robin over a shuffled class order guarantees coverage,
    // then each client fills its remaining seats with random unowned classes.
    std::vector<std::vector<char>> owns(static_cast<std::size_t>(n),
                                        std::vector<char>(static_cast<std::size_t>(c), 0));
    std::vector<int> owned_count(static_cast<std::size_t>(n), 0);
    std::vector<int> class_order(static_cast<std::size_t>(c));
    std::iota(class_order.begin(), class_order.end(), 0);
    rng.shuffle(class_order);

    std::size_t cursor = 0;
    for (int label : class_order) {
        for (int tries = 0; tries < n; ++tries) {
            std::size_t i = cursor % static_cast<std::size_t>(n);
            cursor++;
            if (owned_count[i] < seats[i] && !owns[i][static_cast<std::size_t>(label)]) {
                owns[i][static_cast<std::size_t>(label)] = 1;
                owned_count[i]++;
                break;
            }
        }
    }
    for (int i = 0; i < n; ++i) {
        std::vector<int> pool;
        for (int label = 0; label < c; ++label) {
            if (!owns[static_cast<std::size_t>(i)][static_cast<std::size_t>(label)]) {
                pool.push_back(label);
            }
        }
        rng.shuffle(pool);
        for (std::size_t k = 0; owned_count[static_cast<std::size_t>(i)] <
                                    seats[static_cast<std::size_t>(i)] && k < pool.size(); ++k) {
            owns[static_cast<std::size_t>(i)][static_cast<std::size_t>(pool[k])] = 1;
            owned_count[static_cast<std::size_t>(i)]++;
        }
    }

    // Per-class example allocation among owners.
    std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(c));
    for (std::size_t idx = 0; idx < ds.examples.size(); ++idx) {
        by_class[static_cast<std::size_t>(ds.examples[idx].y)].push_back(idx);
    }

    std::vector<Dataset> shards(static_cast<std::size_t>(n), Dataset(ds.dim, c));
    for (int label = 0; label < c; ++label) {
        auto& idxs = by_class[static_cast<std::size_t>(label)];
        rng.shuffle(idxs);
        std::vector<std::size_t> owners;
        for (int i = 0; i < n; ++i) {
            if (owns[static_cast<std::size_t>(i)][static_cast<std::size_t>(label)]) {
                owners.push_back(static_cast<std::size_t>(i));
            }
        }
        std::vector<double> weights(owners.size(), 1.0);
        if (spec.balance == Balance::unequal) {
            for (auto& w : weights) {
                w = std::pow(spec.unequal_skew, rng.uniform());
            }
        }
        auto counts = apportion(idxs.size(), weights);
        std::size_t pos = 0;
        for (std::size_t j = 0; j < owners.size(); ++j) {
            for (std::size_t k = 0; k < counts[j]; ++k) {
                shards[owners[j]].examples.push_back(ds.examples[idxs[pos++]]);
            }
        }
    }
    return shards;
}

std::pair<Dataset, Dataset> train_test_split(const Dataset& ds, double test_fraction,
                                             std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
        throw std::invalid_argument("train_test_split: fraction must be in (0, 1)");
    }
    Rng rng(derive_seed(seed, "split"));

    std::vector<std::vector<std::size_t>> by_class(static_cast<std::size_t>(ds.num_classes));
    for (std::size_t idx = 0; idx < ds.examples.size(); ++idx) {
        by_class[static_cast<std::size_t>(ds.examples[idx].y)].push_back(idx);
    }

    Dataset train(ds.dim, ds.num_classes);
    Dataset test(ds.dim, ds.num_classes);
    for (int label = 0; label < ds.num_classes; ++label) {
        auto& idxs = by_class[static_cast<std::size_t>(label)];
        rng.shuffle(idxs);
        auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(idxs.size())));
        for (std::size_t k = 0; k < idxs.size(); ++k) {
            (k < n_test ? test : train).examples.push_back(ds.examples[idxs[k]]);
        }
    }
    if (train.empty() || test.empty()) {
        throw std::invalid_argument("train_test_split: a side is empty after the split");
    }
    return {std::move(train), std::move(test)};
}

Dataset load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("load_csv: cannot open " + path);
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw std::runtime_error("load_csv: " + path + " is empty, header row required");
    }

    auto split = [](const std::string& s) {
        std::vector<std::string> cells;
        std::stringstream ss(s);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            cells.push_back(cell);
        }
        return cells;
    };

    auto header = split(line);
    if (header.size() < 2 || header.back() != "label") {
        throw std::runtime_error("load_csv: " + path +
                                 " line 1: header must be f0,...,f{d-1},label");
    }
    const int dim = static_cast<int>(header.size()) - 1;

    std::vector<std::vector<double>> xs;
    std::vector<int> ys;
    int max_label = -1;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        line_no++;
        if (line.empty()) {
            continue;
        }
        auto cells = split(line);
        if (static_cast<int>(cells.size()) != dim + 1) {
            throw std::runtime_error("load_csv: " + path + " line " + std::to_string(line_no) +
                                     ": expected " + std::to_string(dim + 1) + " cells, got " +
                                     std::to_string(cells.size()));
        }
        std::vector<double> x(static_cast<std::size_t>(dim));
        for (int f = 0; f < dim; ++f) {
            try {
                std::size_t used = 0;
                x[static_cast<std::size_t>(f)] = std::stod(cells[static_cast<std::size_t>(f)], &used);
                if (used != cells[static_cast<std::size_t>(f)].size()) {
                    throw std::invalid_argument("trailing characters");
                }
            } catch (const std::exception&) {
                throw std::runtime_error("load_csv: " + path + " line " + std::to_string(line_no) +
                                         ": bad feature value '" + cells[static_cast<std::size_t>(f)] + "'");
            }
            if (!std::isfinite(x[static_cast<std::size_t>(f)])) {
                throw std::runtime_error("load_csv: " + path + " line " + std::to_string(line_no) +
                                         ": non-finite feature");
            }
        }
        int label = 0;
        try {
            std::size_t used = 0;
            label = std::stoi(cells.back(), &used);
            if (used != cells.back().size()) {
                throw std::invalid_argument("trailing characters");
            }
        } catch (const std::exception&) {
            throw std::runtime_error("load_csv: " + path + " line " + std::to_string(line_no) +
                                     ": bad label '" + cells.back() + "'");
        }
        if (label < 0) {
            throw std::runtime_error("load_csv: " + path + " line " + std::to_string(line_no) +
                                     ": negative label");
        }
        max_label = std::max(max_label, label);
        xs.push_back(std::move(x));
        ys.push_back(label);
    }
    if (xs.empty()) {
        throw std::runtime_error("load_csv: " + path + " has no data rows");
    }

    Dataset ds(dim, max_label + 1);
    ds.examples.reserve(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) {
        ds.examples.push_back({std::move(xs[i]), ys[i]});
    }
    return ds;
}

}  // namespace lcfl
