#pragma once

#include "lcfl/generator.hpp"

namespace lcfl {

/// Kernel-density generator: sampling picks a stored shard example of a
/// class drawn proportionally to shard counts and adds Gaussian noise of
/// scale `bandwidth` per coordinate.
class KdeGenerator : public Generator {
public:
    KdeGenerator(const Dataset& shard, double bandwidth, int client_id);
    KdeGenerator(int client_id, int dim, int num_classes, double bandwidth,
                 std::vector<LabeledExample> points);

    const char* type_name() const override { return "kde"; }
    std::uint8_t type_tag() const override { return kTagKde; }
    int client_id() const override { return client_id_; }
    int input_dim() const override { return dim_; }
    int num_classes() const override { return classes_; }
    std::vector<int> label_support() const override;

    Dataset sample(std::size_t k, std::uint64_t seed) const override;
    std::vector<std::uint8_t> serialize() const override;
    std::unique_ptr<Generator> clone() const override;

    double bandwidth() const { return bandwidth_; }

    static std::unique_ptr<Generator> decode(ByteReader& r);

private:
    int client_id_;
    int dim_;
    int classes_;
    double bandwidth_;
    std::vector<LabeledExample> points_;
    std::vector<double> class_counts_;  // length num_classes
    std::vector<std::vector<std::size_t>> by_class_;
};

}  // namespace lcfl
