#include "lcfl/margin.hpp"

#include <algorithm>
#include <stdexcept>

#include "lcfl/parallel.hpp"

namespace lcfl {

void ModelSet::add(int client_id, ConfidenceModel* model) {
    if (model == nullptr) {
        throw std::invalid_argument("ModelSet::add: null model");
    }
    if (!entries.empty()) {
        if (model->input_dim() != dim() || model->num_classes() != num_classes()) {
            throw std::invalid_argument("ModelSet::add: model shape mismatch");
        }
    }
    auto it = std::lower_bound(entries.begin(), entries.end(), client_id,
                               [](const Entry& e, int id) { return e.client_id < id; });
    if (it != entries.end() && it->client_id == client_id) {
        throw std::invalid_argument("ModelSet::add: duplicate client id " +
                                    std::to_string(client_id));
    }
    entries.insert(it, Entry{client_id, model});
}

int ModelSet::dim() const {
    if (entries.empty()) {
        throw std::logic_error("ModelSet: empty");
    }
    return entries.front().model->input_dim();
}

int ModelSet::num_classes() const {
    if (entries.empty()) {
        throw std::logic_error("ModelSet: empty");
    }
    return entries.front().model->num_classes();
}

std::size_t ModelSet::position(int client_id) const {
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (entries[i].client_id == client_id) {
            return i;
        }
    }
    throw std::invalid_argument("ModelSet: unknown client id " + std::to_string(client_id));
}

MarginVerdict mpmc_margin(const ModelSet& models, std::span<const double> x, int y) {
    if (models.entries.empty()) {
        throw std::invalid_argument("mpmc_margin: empty model set");
    }
    const int classes = models.num_classes();
    if (y < 0 || y >= classes) {
        throw std::invalid_argument("mpmc_margin: label " + std::to_string(y) + " outside [0, " +
                                    std::to_string(classes) + ")");
    }
    if (static_cast<int>(x.size()) != models.dim()) {
        throw std::invalid_argument("mpmc_margin: input dimension mismatch");
    }

    MarginVerdict v;
    double best_true = -1.0;
    double best_wrong = -1.0;
    // Entries are in ascending client-id order and classes scan ascending;
    // strict comparisons make the first maximum win, which is exactly the
    // lowest-client-then-lowest-class tie rule.
    for (const auto& entry : models.entries) {
        auto conf = entry.model->confidence(x);
        if (conf[static_cast<std::size_t>(y)] > best_true) {
            best_true = conf[static_cast<std::size_t>(y)];
            v.i_plus = entry.client_id;
        }
        for (int c = 0; c < classes; ++c) {
            if (c == y) {
                continue;
            }
            if (conf[static_cast<std::size_t>(c)] > best_wrong) {
                best_wrong = conf[static_cast<std::size_t>(c)];
                v.i_minus = entry.client_id;
                v.y_minus = c;
            }
        }
    }
    v.rho = best_true - best_wrong;
    return v;
}

double margin_loss(const ModelSet& models, const Dataset& pool) {
    if (pool.empty()) {
        throw std::invalid_argument("margin_loss: empty pool");
    }
    std::vector<char> hit(pool.size(), 0);
    parallel::for_each_index(pool.size(), [&](std::size_t i) {
        const auto& e = pool.examples[i];
        hit[i] = mpmc_margin(models, e.x, e.y).rho <= 0.0 ? 1 : 0;
    });
    std::size_t losses = 0;
    for (char h : hit) {
        losses += static_cast<std::size_t>(h);
    }
    return static_cast<double>(losses) / static_cast<double>(pool.size());
}

}  // namespace lcfl
