#pragma once

#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "lcfl/dataset.hpp"
#include "lcfl/model.hpp"
#include "lcfl/rng.hpp"

namespace lcfl::detail {

/// Mini-batch SGD shared by the parametric models. batch_gradient_into must
/// fill `grad` with the gradient of the mean batch cross-entropy at the
/// current parameters. L2 applies only to entries flagged in l2_mask. The
/// proximal pull toward `anchor` uses the exact proximal map of
/// (mu/2)*||w - anchor||^2, so it is stable for any mu and reduces to the
/// plain SGD step at mu == 0.
template <typename GradFn>
void sgd_train(std::vector<double>& params, std::size_t n_examples, const TrainConfig& cfg,
               std::span<const double> anchor, double mu, const std::vector<char>& l2_mask,
               const GradFn& batch_gradient_into) {
    if (mu < 0.0) {
        throw std::invalid_argument("sgd_train: mu must be non-negative");
    }
    if (mu > 0.0 && anchor.size() != params.size()) {
        throw std::invalid_argument("sgd_train: anchor size mismatch");
    }

    Rng rng(derive_seed(cfg.seed, "sgd"));
    std::vector<std::size_t> order(n_examples);
    std::iota(order.begin(), order.end(), std::size_t{0});

    std::vector<double> grad(params.size());
    const double lr = cfg.learning_rate;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t start = 0; start < n_examples; start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t end = std::min(n_examples, start + static_cast<std::size_t>(cfg.batch_size));
            batch_gradient_into(std::span<const std::size_t>(order.data() + start, end - start), grad);
            if (cfg.l2 > 0.0) {
                for (std::size_t k = 0; k < params.size(); ++k) {
                    if (l2_mask[k]) {
                        grad[k] += cfg.l2 * params[k];
                    }
                }
            }
            if (mu > 0.0) {
                const double denom = 1.0 + lr * mu;
                for (std::size_t k = 0; k < params.size(); ++k) {
                    params[k] = (params[k] - lr * grad[k] + lr * mu * anchor[k]) / denom;
                }
            } else {
                for (std::size_t k = 0; k < params.size(); ++k) {
                    params[k] -= lr * grad[k];
                }
            }
        }
    }
}

}  // namespace lcfl::detail
