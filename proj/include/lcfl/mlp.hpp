#pragma once

#include <memory>

#include "lcfl/model.hpp"

namespace lcfl {

/// One-hidden-layer perceptron: tanh hidden units, softmax output. Weights
/// initialized at scale 1/sqrt(fan_in) from a seed-derived stream.
class Mlp : public ParametricModel {
public:
    Mlp(int dim, int num_classes, int hidden = 32, std::uint64_t init_seed = 0);

    const char* type_name() const override { return "mlp"; }
    std::uint8_t type_tag() const override { return kTagMlp; }
    int input_dim() const override { return dim_; }
    int num_classes() const override { return classes_; }
    int hidden_units() const { return hidden_; }

    std::vector<double> confidence(std::span<const double> x) const override;
    void fit(const Dataset& train, const TrainConfig& cfg) override;
    void update(const Dataset& batch, const TrainConfig& cfg) override;
    std::vector<std::uint8_t> serialize() const override;
    std::unique_ptr<ConfidenceModel> clone() const override;

    std::size_t parameter_count() const override { return params_.size(); }
    std::vector<double> parameters() const override { return params_; }
    void set_parameters(std::span<const double> params) override;
    double mean_cross_entropy(const Dataset& data) const override;
    std::vector<double> cross_entropy_gradient(const Dataset& data) const override;
    void train_sgd(const Dataset& data, const TrainConfig& cfg, std::span<const double> anchor,
                   double mu) override;

    static std::unique_ptr<ConfidenceModel> decode(ByteReader& r);

private:
    // Layout: W1 [h*d], b1 [h], W2 [C*h], b2 [C], in that order.
    std::size_t off_b1() const { return static_cast<std::size_t>(hidden_) * dim_; }
    std::size_t off_w2() const { return off_b1() + static_cast<std::size_t>(hidden_); }
    std::size_t off_b2() const { return off_w2() + static_cast<std::size_t>(classes_) * hidden_; }

    std::vector<double> forward(std::span<const double> x, std::vector<double>* hidden_out) const;
    void accumulate_gradient(std::span<const std::size_t> indices, const Dataset& data,
                             std::vector<double>& grad) const;

    int dim_;
    int classes_;
    int hidden_;
    std::vector<double> params_;
    std::vector<char> l2_mask_;
};

}  // namespace lcfl
