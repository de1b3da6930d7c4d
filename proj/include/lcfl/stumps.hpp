#pragma once

#include <memory>

#include "lcfl/model.hpp"

namespace lcfl {

/// Depth-1 decision rule: x[feature] <= threshold goes left.
struct Stump {
    int feature = 0;
    double threshold = 0.0;
    int left_class = 0;
    int right_class = 0;
    double weight = 1.0;  // boosting vote weight, always positive
};

/// Multiclass boosted decision stumps (SAMME). Confidence is the
/// Laplace-smoothed share of weighted votes per class,
/// (votes_c + 1) / (total_votes + C), so no class ever gets confidence 0.
///
/// Boosting cannot be resumed on fresh data alone, so the ensemble retains a
/// bounded reservoir of examples it has trained on; update() fits new stumps
/// on the incoming batch mixed with that reservoir and appends them.
class StumpEnsemble : public ConfidenceModel {
public:
    StumpEnsemble(int dim, int num_classes);
    /// Hand-built ensemble (also used by decode).
    StumpEnsemble(int dim, int num_classes, std::vector<Stump> stumps);

    const char* type_name() const override { return "stumps"; }
    std::uint8_t type_tag() const override { return kTagStumps; }
    int input_dim() const override { return dim_; }
    int num_classes() const override { return classes_; }

    std::vector<double> confidence(std::span<const double> x) const override;
    /// cfg.epochs boosting rounds from scratch; the training data seeds the
    /// reservoir.
    void fit(const Dataset& train, const TrainConfig& cfg) override;
    /// cfg.epochs additional rounds on batch + reservoir; appends stumps.
    void update(const Dataset& batch, const TrainConfig& cfg) override;
    std::vector<std::uint8_t> serialize() const override;
    std::unique_ptr<ConfidenceModel> clone() const override;

    const std::vector<Stump>& stumps() const { return stumps_; }
    std::size_t reservoir_size() const { return reservoir_.size(); }

    static std::unique_ptr<ConfidenceModel> decode(ByteReader& r);
    static constexpr std::size_t kReservoirCap = 512;

private:
    int stump_vote(const Stump& s, std::span<const double> x) const {
        return x[static_cast<std::size_t>(s.feature)] <= s.threshold ? s.left_class
                                                                     : s.right_class;
    }
    void boost(const Dataset& data, int rounds);
    void absorb(const Dataset& data, std::uint64_t seed);

    int dim_;
    int classes_;
    std::vector<Stump> stumps_;
    std::vector<LabeledExample> reservoir_;
    std::uint64_t absorb_count_ = 0;
};

}  // namespace lcfl
