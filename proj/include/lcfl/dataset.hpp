#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace lcfl {

/// One feature vector with its class label. The unit flowing through
/// generators, margin computation and model updates.
struct LabeledExample {
    std::vector<double> x;
    int y = 0;
};

/// Ordered, indexable collection of examples with a declared feature
/// dimension and class count. Order is part of the contract: seeded sampling
/// over a dataset is reproducible.
struct Dataset {
    std::vector<LabeledExample> examples;
    int dim = 0;
    int num_classes = 0;

    Dataset() = default;
    Dataset(int d, int c) : dim(d), num_classes(c) {}

    std::size_t size() const { return examples.size(); }
    bool empty() const { return examples.empty(); }

    /// Appends after checking dimension, label range and finiteness.
    void add(std::vector<double> x, int y);
    void append(const Dataset& other);

    /// Example counts per label, length num_classes.
    std::vector<std::size_t> label_histogram() const;
    /// Ascending list of labels present.
    std::vector<int> label_set() const;

    /// Throws std::invalid_argument if any example violates the invariants.
    void validate() const;
};

enum class Balance { equal, unequal };

/// Declarative description of how a dataset is sharded across clients.
struct PartitionSpec {
    int n_clients = 1;
    int min_classes = 1;  // inclusive range for each client's label-set size
    int max_classes = 1;
    Balance balance = Balance::equal;
    double unequal_skew = 1.0;  // largest/smallest per-class allocation ratio
};

/// Synthetic classification data: one isotropic Gaussian per class, centers
/// pairwise separated by at least 4*spread so the classes are cleanly
/// learnable. Centers are seed-determined (structured layout under a random
/// rotation and offset). Examples are ordered class-major.
Dataset make_blobs(int n_per_class, int num_classes, int dim, double spread, std::uint64_t seed);

/// Shard a dataset into n_clients disjoint client datasets. Each client's
/// label-set size is drawn from [min_classes, max_classes]; class ownership
/// is assigned round-robin first so every class is owned by at least one
/// client. Under Balance::unequal, per-(client,class) allocations are drawn
/// log-uniformly with max/min ratio bounded by unequal_skew.
std::vector<Dataset> partition(const Dataset& ds, const PartitionSpec& spec, std::uint64_t seed);

/// Class-stratified split; per-class test share is within +-1 example of
/// test_fraction. Returns (train, test).
std::pair<Dataset, Dataset> train_test_split(const Dataset& ds, double test_fraction,
                                             std::uint64_t seed);

/// CSV loader: header row `f0,...,f{d-1},label` required, one example per
/// row, labels non-negative integers. Class count is max label + 1.
Dataset load_csv(const std::string& path);

}  // namespace lcfl
