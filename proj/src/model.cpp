#include "lcfl/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lcfl/logistic.hpp"
#include "lcfl/mlp.hpp"
#include "lcfl/parallel.hpp"
#include "lcfl/stumps.hpp"

namespace lcfl {

void ConfidenceModel::check_input(std::span<const double> x) const {
    if (static_cast<int>(x.size()) != input_dim()) {
        throw std::invalid_argument(std::string(type_name()) + ": input dimension " +
                                    std::to_string(x.size()) + " != " +
                                    std::to_string(input_dim()));
    }
}

void ConfidenceModel::check_train_args(const Dataset& data, const TrainConfig& cfg) const {
    if (data.empty()) {
        throw std::invalid_argument(std::string(type_name()) + ": empty training set");
    }
    if (data.dim != input_dim() || data.num_classes != num_classes()) {
        throw std::invalid_argument(std::string(type_name()) + ": dataset shape (" +
                                    std::to_string(data.dim) + ", " +
                                    std::to_string(data.num_classes) + ") != model shape (" +
                                    std::to_string(input_dim()) + ", " +
                                    std::to_string(num_classes()) + ")");
    }
    if (cfg.epochs < 0 || cfg.learning_rate <= 0.0 || cfg.batch_size <= 0 || cfg.l2 < 0.0) {
        throw std::invalid_argument(std::string(type_name()) + ": invalid TrainConfig");
    }
}

int predict(const ConfidenceModel& model, std::span<const double> x) {
    auto conf = model.confidence(x);
    // std::max_element keeps the first maximum: lowest class index wins ties.
    return static_cast<int>(std::max_element(conf.begin(), conf.end()) - conf.begin());
}

double evaluate(const ConfidenceModel& model, const Dataset& test) {
    if (test.empty()) {
        throw std::invalid_argument("evaluate: empty test set");
    }
    std::vector<char> correct(test.size(), 0);
    parallel::for_each_index(test.size(), [&](std::size_t i) {
        const auto& e = test.examples[i];
        correct[i] = predict(model, e.x) == e.y ? 1 : 0;
    });
    std::size_t hits = 0;
    for (char c : correct) {
        hits += static_cast<std::size_t>(c);
    }
    return static_cast<double>(hits) / static_cast<double>(test.size());
}

double mean_cross_entropy(const ConfidenceModel& model, const Dataset& data) {
    if (data.empty()) {
        throw std::invalid_argument("mean_cross_entropy: empty dataset");
    }
    std::vector<double> losses(data.size(), 0.0);
    parallel::for_each_index(data.size(), [&](std::size_t i) {
        const auto& e = data.examples[i];
        auto conf = model.confidence(e.x);
        losses[i] = -std::log(std::max(conf[static_cast<std::size_t>(e.y)], 1e-12));
    });
    double total = 0.0;
    for (double l : losses) {
        total += l;
    }
    return total / static_cast<double>(data.size());
}

ModelRegistry& ModelRegistry::instance() {
    static ModelRegistry reg = [] {
        ModelRegistry r;
        r.register_type(kTagLogistic, "logistic",
                        [](ByteReader& br) { return LogisticRegression::decode(br); });
        r.register_type(kTagMlp, "mlp", [](ByteReader& br) { return Mlp::decode(br); });
        r.register_type(kTagStumps, "stumps",
                        [](ByteReader& br) { return StumpEnsemble::decode(br); });
        return r;
    }();
    return reg;
}

void ModelRegistry::register_type(std::uint8_t tag, std::string name, Decoder decoder) {
    for (auto& [t, entry] : entries_) {
        if (t == tag) {
            throw std::invalid_argument("ModelRegistry: tag " + std::to_string(tag) +
                                        " already registered as " + entry.name);
        }
    }
    entries_.push_back({tag, {std::move(name), std::move(decoder)}});
}

bool ModelRegistry::has(std::uint8_t tag) const {
    for (const auto& [t, entry] : entries_) {
        if (t == tag) {
            return true;
        }
    }
    return false;
}

std::unique_ptr<ConfidenceModel> ModelRegistry::decode(std::uint8_t tag, ByteReader& reader) const {
    for (const auto& [t, entry] : entries_) {
        if (t == tag) {
            return entry.decoder(reader);
        }
    }
    throw std::runtime_error("model decode: unknown type tag " + std::to_string(tag));
}

std::unique_ptr<ConfidenceModel> deserialize_model(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes, "model decode");
    std::uint8_t tag = read_blob_header(r);
    auto model = ModelRegistry::instance().decode(tag, r);
    r.expect_end();
    return model;
}

}  // namespace lcfl
