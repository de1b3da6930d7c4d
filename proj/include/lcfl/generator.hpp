#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "lcfl/bytes.hpp"
#include "lcfl/dataset.hpp"

namespace lcfl {

/// Parameters of the Gaussian noise mechanism. sigma is the noise multiplier
/// and sensitivity the query sensitivity s_f; noise std is sensitivity*sigma
/// per coordinate. epsilon/delta record the declared privacy budget; no
/// formal accounting is performed on them here.
struct DpParams {
    double epsilon = 1.0;
    double delta = 1e-5;
    double sensitivity = 1.0;  // s_f
    double sigma = 1.0;        // noise multiplier

    void validate() const;
};

/// values + i.i.d. N(0, (sensitivity * sigma)^2) per coordinate.
std::vector<double> gaussian_mechanism(std::span<const double> values, const DpParams& dp,
                                       std::uint64_t seed);

/// Fitted per-client sampler of artificial labeled examples. A generator is
/// constructed from exactly one shard and can only emit labels present in
/// that shard. Sampling is deterministic given the seed.
class Generator {
public:
    virtual ~Generator() = default;

    virtual const char* type_name() const = 0;
    virtual std::uint8_t type_tag() const = 0;
    virtual int client_id() const = 0;
    virtual int input_dim() const = 0;
    virtual int num_classes() const = 0;
    /// Ascending labels the generator can emit (the fitting shard's labels).
    virtual std::vector<int> label_support() const = 0;

    virtual Dataset sample(std::size_t k, std::uint64_t seed) const = 0;
    virtual std::vector<std::uint8_t> serialize() const = 0;
    virtual std::unique_ptr<Generator> clone() const = 0;
};

std::unique_ptr<Generator> deserialize_generator(std::span<const std::uint8_t> bytes);

/// Gaussian-mechanism perturbation of a fitted generator's parameters
/// (mixture means for the GMM kind). Throws for generator kinds without a
/// parameter-level mechanism.
std::unique_ptr<Generator> privatize(const Generator& gen, const DpParams& dp, std::uint64_t seed);

inline constexpr std::uint8_t kTagGmm = 0x11;
inline constexpr std::uint8_t kTagKde = 0x12;

}  // namespace lcfl
