#pragma once

#include "lcfl/generator.hpp"

namespace lcfl {

/// One diagonal-covariance Gaussian mixture per present class, fitted by EM.
/// Class priors are proportional to shard counts. All variances are floored
/// at kVarianceFloor so degenerate (e.g. singleton) classes still sample.
class GmmGenerator : public Generator {
public:
    struct Component {
        double weight = 1.0;
        std::vector<double> mean;
        std::vector<double> var;  // diagonal
    };
    struct ClassMixture {
        int label = 0;
        double prior = 0.0;
        std::vector<Component> components;
    };

    static constexpr double kVarianceFloor = 1e-4;
    static constexpr int kMaxEmIterations = 100;
    static constexpr double kEmTolerance = 1e-6;

    /// EM fit; classes with fewer than 2*components_per_class examples fall
    /// back to a single Gaussian.
    GmmGenerator(const Dataset& shard, int components_per_class, std::uint64_t seed, int client_id);
    /// From already-fitted mixtures (decode, privatize).
    GmmGenerator(int client_id, int dim, int num_classes, std::vector<ClassMixture> mixtures);

    const char* type_name() const override { return "gmm"; }
    std::uint8_t type_tag() const override { return kTagGmm; }
    int client_id() const override { return client_id_; }
    int input_dim() const override { return dim_; }
    int num_classes() const override { return classes_; }
    std::vector<int> label_support() const override;

    Dataset sample(std::size_t k, std::uint64_t seed) const override;
    std::vector<std::uint8_t> serialize() const override;
    std::unique_ptr<Generator> clone() const override;

    const std::vector<ClassMixture>& mixtures() const { return mixtures_; }
    std::vector<ClassMixture>& mutable_mixtures() { return mixtures_; }

    static std::unique_ptr<Generator> decode(ByteReader& r);

private:
    int client_id_;
    int dim_;
    int classes_;
    std::vector<ClassMixture> mixtures_;  // ascending label order
};

}  // namespace lcfl
