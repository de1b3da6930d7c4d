#include "lcfl/generator.hpp"

#include <stdexcept>

#include "lcfl/gmm.hpp"
#include "lcfl/kde.hpp"
#include "lcfl/bytes.hpp"
#include "lcfl/rng.hpp"

namespace lcfl {

void DpParams::validate() const {
    if (!(epsilon > 0.0)) {
        throw std::invalid_argument("DpParams: epsilon must be positive");
    }
    if (!(delta > 0.0 && delta < 1.0)) {
        throw std::invalid_argument("DpParams: delta must lie in (0, 1)");
    }
    if (!(sensitivity > 0.0)) {
        throw std::invalid_argument("DpParams: sensitivity must be positive");
    }
    if (!(sigma > 0.0)) {
        throw std::invalid_argument("DpParams: sigma must be positive");
    }
}

std::vector<double> gaussian_mechanism(std::span<const double> values, const DpParams& dp,
                                       std::uint64_t seed) {
    dp.validate();
    Rng rng(derive_seed(seed, "gaussian-mechanism"));
    const double scale = dp.sensitivity * dp.sigma;
    std::vector<double> out(values.begin(), values.end());
    for (double& v : out) {
        v += scale * rng.normal();
    }
    return out;
}

std::unique_ptr<Generator> deserialize_generator(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes, "generator decode");
    std::uint8_t tag = read_blob_header(r);
    std::unique_ptr<Generator> gen;
    switch (tag) {
        case kTagGmm:
            gen = GmmGenerator::decode(r);
            break;
        case kTagKde:
            gen = KdeGenerator::decode(r);
            break;
        default:
            throw std::runtime_error("generator decode: unknown type tag " + std::to_string(tag));
    }
    r.expect_end();
    return gen;
}

std::unique_ptr<Generator> privatize(const Generator& gen, const DpParams& dp,
                                     std::uint64_t seed) {
    dp.validate();
    const auto* gmm = dynamic_cast<const GmmGenerator*>(&gen);
    if (gmm == nullptr) {
        throw std::invalid_argument(std::string("privatize: unsupported generator type ") +
                                    gen.type_name());
    }

    // Concatenate all component means, perturb in one mechanism invocation,
    // scatter back. Variances are untouched apart from re-flooring.
    std::vector<double> flat;
    for (const auto& mix : gmm->mixtures()) {
        for (const auto& comp : mix.components) {
            flat.insert(flat.end(), comp.mean.begin(), comp.mean.end());
        }
    }
    auto noisy = gaussian_mechanism(flat, dp, seed);

    auto clone = gmm->clone();
    auto* out = dynamic_cast<GmmGenerator*>(clone.get());
    std::size_t pos = 0;
    for (auto& mix : out->mutable_mixtures()) {
        for (auto& comp : mix.components) {
            for (double& m : comp.mean) {
                m = noisy[pos++];
            }
            for (double& v : comp.var) {
                v = std::max(v, GmmGenerator::kVarianceFloor);
            }
        }
    }
    return clone;
}

}  // namespace lcfl
