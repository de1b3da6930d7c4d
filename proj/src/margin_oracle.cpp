#include <stdexcept>
#include <tuple>

#include "lcfl/margin.hpp"

namespace lcfl {

// Reference implementation by exhaustive candidate materialization. This file
// intentionally shares no helpers with margin.cpp: it builds the full list of
// (client, class, confidence) candidates and scans them, rather than tracking
// running maxima during the confidence pass.
MarginVerdict margin_oracle(const ModelSet& models, std::span<const double> x, int y) {
    if (models.entries.empty()) {
        throw std::invalid_argument("margin_oracle: empty model set");
    }
    const int classes = models.num_classes();
    if (y < 0 || y >= classes) {
        throw std::invalid_argument("margin_oracle: label out of range");
    }
    if (static_cast<int>(x.size()) != models.dim()) {
        throw std::invalid_argument("margin_oracle: input dimension mismatch");
    }

    struct Candidate {
        int client_id;
        int label;
        double confidence;
    };
    std::vector<Candidate> true_side;
    std::vector<Candidate> wrong_side;
    for (const auto& entry : models.entries) {
        auto conf = entry.model->confidence(x);
        for (int c = 0; c < classes; ++c) {
            Candidate cand{entry.client_id, c, conf[static_cast<std::size_t>(c)]};
            if (c == y) {
                true_side.push_back(cand);
            } else {
                wrong_side.push_back(cand);
            }
        }
    }

    // Best candidate = highest confidence; ties prefer the lower client id,
    // then the lower class index.
    auto better = [](const Candidate& a, const Candidate& b) {
        return std::tuple(-a.confidence, a.client_id, a.label) <
               std::tuple(-b.confidence, b.client_id, b.label);
    };
    Candidate best_true = true_side.front();
    for (const auto& cand : true_side) {
        if (better(cand, best_true)) {
            best_true = cand;
        }
    }
    Candidate best_wrong = wrong_side.front();
    for (const auto& cand : wrong_side) {
        if (better(cand, best_wrong)) {
            best_wrong = cand;
        }
    }

    MarginVerdict v;
    v.rho = best_true.confidence - best_wrong.confidence;
    v.i_plus = best_true.client_id;
    v.i_minus = best_wrong.client_id;
    v.y_minus = best_wrong.label;
    return v;
}

}  // namespace lcfl
