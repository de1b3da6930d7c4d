#pragma once

#include <span>
#include <vector>

#include "lcfl/dataset.hpp"
#include "lcfl/model.hpp"

namespace lcfl {

/// Result of a margin evaluation at one labeled example:
///   rho     = h_{i_plus}(x, y) - h_{i_minus}(x, y_minus)
///   i_plus  = client most confident on the true class y
///   i_minus = client most confident on any incorrect class
///   y_minus = that incorrect class (never equals y)
/// Ties resolve to the lowest client id, then the lowest class index.
struct MarginVerdict {
    double rho = 0.0;
    int i_plus = -1;
    int i_minus = -1;
    int y_minus = -1;
};

/// Non-owning ordered set of (client id, model), all sharing one input
/// dimension and class count. Ids are unique and kept in ascending order.
struct ModelSet {
    struct Entry {
        int client_id;
        ConfidenceModel* model;
    };
    std::vector<Entry> entries;

    void add(int client_id, ConfidenceModel* model);
    std::size_t size() const { return entries.size(); }
    int dim() const;
    int num_classes() const;
    /// Position of a client id within entries; throws if absent.
    std::size_t position(int client_id) const;
};

/// Multi-party multi-class margin at (x, y):
///   rho = max_i h_i(x, y) - max_{j, y' != y} h_j(x, y').
MarginVerdict mpmc_margin(const ModelSet& models, std::span<const double> x, int y);

/// Fraction of the pool with non-positive margin (rho == 0 counts).
double margin_loss(const ModelSet& models, const Dataset& pool);

/// Brute-force reference: identical semantics to mpmc_margin by full
/// enumeration of every (i) and (j, y') candidate. Kept free of any code
/// shared with mpmc_margin so the two are independent routes.
MarginVerdict margin_oracle(const ModelSet& models, std::span<const double> x, int y);

}  // namespace lcfl
