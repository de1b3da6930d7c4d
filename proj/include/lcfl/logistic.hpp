#pragma once

#include <memory>

#include "lcfl/model.hpp"

namespace lcfl {

/// Multinomial (softmax) logistic regression trained by mini-batch SGD.
/// Parameters start at zero, so an untrained model outputs the uniform
/// distribution.
class LogisticRegression : public ParametricModel {
public:
    LogisticRegression(int dim, int num_classes);

    const char* type_name() const override { return "logistic"; }
    std::uint8_t type_tag() const override { return kTagLogistic; }
    int input_dim() const override { return dim_; }
    int num_classes() const override { return classes_; }

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
    // Layout: W row-major [class * dim + feature], then biases [C*d + class].
    std::vector<double> scores(std::span<const double> x) const;
    void accumulate_gradient(std::span<const std::size_t> indices, const Dataset& data,
                             std::vector<double>& grad) const;

    int dim_;
    int classes_;
    std::vector<double> params_;
    std::vector<char> l2_mask_;  // weights 1, biases 0
};

/// Numerically stable in-place softmax.
void softmax_inplace(std::vector<double>& z);

}  // namespace lcfl
