#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "lcfl/bytes.hpp"
#include "lcfl/dataset.hpp"

namespace lcfl {

struct TrainConfig {
    int epochs = 1;
    double learning_rate = 0.1;
    int batch_size = 32;
    double l2 = 0.0;
    std::uint64_t seed = 0;
};

/// The only contract the orchestration layer sees: same input/output
/// dimensions across a scenario and class-posterior confidence outputs.
/// confidence() returns a length-C vector with entries in [0,1] summing to 1.
class ConfidenceModel {
public:
    virtual ~ConfidenceModel() = default;

    virtual const char* type_name() const = 0;
    virtual std::uint8_t type_tag() const = 0;
    virtual int input_dim() const = 0;
    virtual int num_classes() const = 0;

    virtual std::vector<double> confidence(std::span<const double> x) const = 0;

    /// Train on the given dataset. cfg.epochs == 0 leaves the model unchanged.
    /// Deterministic given cfg.seed.
    virtual void fit(const Dataset& train, const TrainConfig& cfg) = 0;

    /// Additional training on a batch only (incremental update).
    virtual void update(const Dataset& batch, const TrainConfig& cfg) = 0;

    virtual std::vector<std::uint8_t> serialize() const = 0;
    virtual std::unique_ptr<ConfidenceModel> clone() const = 0;

protected:
    void check_input(std::span<const double> x) const;
    void check_train_args(const Dataset& data, const TrainConfig& cfg) const;
};

/// Models whose state is a flat real parameter vector. Needed by the
/// aggregation baselines and the gradient checks.
class ParametricModel : public ConfidenceModel {
public:
    virtual std::size_t parameter_count() const = 0;
    virtual std::vector<double> parameters() const = 0;
    virtual void set_parameters(std::span<const double> params) = 0;

    /// Mean cross-entropy over the dataset at the current parameters
    /// (regularization not included).
    virtual double mean_cross_entropy(const Dataset& data) const = 0;

    /// Gradient of mean_cross_entropy w.r.t. the flat parameter vector.
    virtual std::vector<double> cross_entropy_gradient(const Dataset& data) const = 0;

    /// Mini-batch SGD with an optional proximal pull toward anchor:
    /// each step takes a gradient step on the data loss and then applies the
    /// exact proximal map of (mu/2)*||w - anchor||^2, which reduces to the
    /// plain step when mu == 0 and stays stable for arbitrarily large mu.
    virtual void train_sgd(const Dataset& data, const TrainConfig& cfg,
                           std::span<const double> anchor, double mu) = 0;
};

/// Argmax class with ties broken toward the lowest class index.
int predict(const ConfidenceModel& model, std::span<const double> x);

/// Fraction of examples whose predicted class equals the label.
double evaluate(const ConfidenceModel& model, const Dataset& test);

double mean_cross_entropy(const ConfidenceModel& model, const Dataset& data);

/// Decode a serialized model. Unknown tags and malformed payloads raise
/// std::runtime_error with a diagnostic.
std::unique_ptr<ConfidenceModel> deserialize_model(std::span<const std::uint8_t> bytes);

/// Type registry keyed by the blob tag byte. The built-in types are
/// pre-registered; additional model types can be added at runtime without
/// touching the orchestration code.
class ModelRegistry {
public:
    using Decoder = std::function<std::unique_ptr<ConfidenceModel>(ByteReader&)>;

    static ModelRegistry& instance();

    void register_type(std::uint8_t tag, std::string name, Decoder decoder);
    bool has(std::uint8_t tag) const;
    std::unique_ptr<ConfidenceModel> decode(std::uint8_t tag, ByteReader& reader) const;

private:
    struct EntryT {
        std::string name;
        Decoder decoder;
    };
    std::vector<std::pair<std::uint8_t, EntryT>> entries_;
};

inline constexpr std::uint8_t kTagLogistic = 0x01;
inline constexpr std::uint8_t kTagMlp = 0x02;
inline constexpr std::uint8_t kTagStumps = 0x03;

}  // namespace lcfl
