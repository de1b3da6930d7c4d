#include "lcfl/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "lcfl/parallel.hpp"
#include "lcfl/rng.hpp"

namespace lcfl {

namespace {

constexpr double kLog2Pi = 1.8378770664093453;

double log_normal_diag(std::span<const double> x, const std::vector<double>& mean,
                       const std::vector<double>& var) {
    double acc = 0.0;
    for (std::size_t f = 0; f < mean.size(); ++f) {
        const double d = x[f] - mean[f];
        acc += -0.5 * (kLog2Pi + std::log(var[f]) + d * d / var[f]);
    }
    return acc;
}

double log_sum_exp(std::span<const double> v) {
    double m = *std::max_element(v.begin(), v.end());
    double acc = 0.0;
    for (double e : v) {
        acc += std::exp(e - m);
    }
    return m + std::log(acc);
}

// EM for one class's point set. points are row indices into flat storage.
std::vector<GmmGenerator::Component> fit_mixture(const std::vector<const LabeledExample*>& points,
                                                 int dim, int n_components, Rng& rng) {
    const std::size_t n = points.size();
    const auto d = static_cast<std::size_t>(dim);
    const auto m = static_cast<std::size_t>(n_components);

    // Per-coordinate class mean/variance for initialization.
    std::vector<double> class_mean(d, 0.0);
    std::vector<double> class_var(d, 0.0);
    for (const auto* p : points) {
        for (std::size_t f = 0; f < d; ++f) {
            class_mean[f] += p->x[f];
        }
    }
    for (std::size_t f = 0; f < d; ++f) {
        class_mean[f] /= static_cast<double>(n);
    }
    for (const auto* p : points) {
        for (std::size_t f = 0; f < d; ++f) {
            const double diff = p->x[f] - class_mean[f];
            class_var[f] += diff * diff;
        }
    }
    for (std::size_t f = 0; f < d; ++f) {
        class_var[f] = std::max(class_var[f] / static_cast<double>(n), GmmGenerator::kVarianceFloor);
    }

    // Means start at m distinct seeded points.
    std::vector<std::size_t> pick(n);
    std::iota(pick.begin(), pick.end(), std::size_t{0});
    rng.shuffle(pick);
    std::vector<GmmGenerator::Component> comps(m);
    for (std::size_t k = 0; k < m; ++k) {
        comps[k].weight = 1.0 / static_cast<double>(m);
        comps[k].mean.assign(points[pick[k % n]]->x.begin(), points[pick[k % n]]->x.end());
        comps[k].var = class_var;
    }
    if (m == 1) {
        comps[0].mean = class_mean;
    }

    std::vector<double> resp(n * m, 0.0);
    double prev_ll = -std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < GmmGenerator::kMaxEmIterations; ++iter) {
        // E-step: per-point responsibilities; each point writes its own row.
        std::vector<double> point_ll(n, 0.0);
        parallel::for_each_index(n, [&](std::size_t i) {
            std::vector<double> logp(m);
            for (std::size_t k = 0; k < m; ++k) {
                logp[k] = std::log(std::max(comps[k].weight, 1e-300)) +
                          log_normal_diag(points[i]->x, comps[k].mean, comps[k].var);
            }
            const double lse = log_sum_exp(logp);
            point_ll[i] = lse;
            for (std::size_t k = 0; k < m; ++k) {
                resp[i * m + k] = std::exp(logp[k] - lse);
            }
        });
        double ll = 0.0;
        for (double v : point_ll) {
            ll += v;
        }
        ll /= static_cast<double>(n);

        // M-step sums via the deterministic chunked reduction.
        struct Acc {
            std::vector<double> nk;       // m
            std::vector<double> sum;      // m*d
            std::vector<double> sum_sq;   // m*d
        };
        auto totals = parallel::chunked_reduce<Acc>(
            n,
            [&] {
                return Acc{std::vector<double>(m, 0.0), std::vector<double>(m * d, 0.0),
                           std::vector<double>(m * d, 0.0)};
            },
            [&](Acc& acc, std::size_t i) {
                for (std::size_t k = 0; k < m; ++k) {
                    const double r = resp[i * m + k];
                    acc.nk[k] += r;
                    for (std::size_t f = 0; f < d; ++f) {
                        const double v = points[i]->x[f];
                        acc.sum[k * d + f] += r * v;
                        acc.sum_sq[k * d + f] += r * v * v;
                    }
                }
            },
            [](Acc& total, const Acc& part) {
                for (std::size_t k = 0; k < total.nk.size(); ++k) {
                    total.nk[k] += part.nk[k];
                }
                for (std::size_t k = 0; k < total.sum.size(); ++k) {
                    total.sum[k] += part.sum[k];
                    total.sum_sq[k] += part.sum_sq[k];
                }
            });

        for (std::size_t k = 0; k < m; ++k) {
            const double nk = totals.nk[k];
            if (nk < 1e-10) {
                continue;  // dead component keeps its parameters, weight decays
            }
            comps[k].weight = nk / static_cast<double>(n);
            for (std::size_t f = 0; f < d; ++f) {
                const double mean = totals.sum[k * d + f] / nk;
                comps[k].mean[f] = mean;
                const double var = totals.sum_sq[k * d + f] / nk - mean * mean;
                comps[k].var[f] = std::max(var, GmmGenerator::kVarianceFloor);
            }
        }

        if (std::abs(ll - prev_ll) < GmmGenerator::kEmTolerance) {
            break;
        }
        prev_ll = ll;
    }
    return comps;
}

}  // namespace

GmmGenerator::GmmGenerator(const Dataset& shard, int components_per_class, std::uint64_t seed,
                           int client_id)
    : client_id_(client_id), dim_(shard.dim), classes_(shard.num_classes) {
    if (shard.empty()) {
        throw std::invalid_argument("GmmGenerator: empty shard");
    }
    if (components_per_class < 1) {
        throw std::invalid_argument("GmmGenerator: components_per_class must be positive");
    }
    shard.validate();

    std::vector<std::vector<const LabeledExample*>> by_class(static_cast<std::size_t>(classes_));
    for (const auto& e : shard.examples) {
        by_class[static_cast<std::size_t>(e.y)].push_back(&e);
    }

    Rng rng(derive_seed(seed, "gmm-fit"));
    for (int label = 0; label < classes_; ++label) {
        const auto& points = by_class[static_cast<std::size_t>(label)];
        if (points.empty()) {
            continue;
        }
        // Too few points for the requested mixture: single Gaussian fallback.
        int m = static_cast<int>(points.size()) >= 2 * components_per_class ? components_per_class : 1;
        ClassMixture mix;
        mix.label = label;
        mix.prior = static_cast<double>(points.size()) / static_cast<double>(shard.size());
        mix.components = fit_mixture(points, dim_, m, rng);
        mixtures_.push_back(std::move(mix));
    }
}

GmmGenerator::GmmGenerator(int client_id, int dim, int num_classes,
                           std::vector<ClassMixture> mixtures)
    : client_id_(client_id), dim_(dim), classes_(num_classes), mixtures_(std::move(mixtures)) {
    if (mixtures_.empty()) {
        throw std::invalid_argument("GmmGenerator: no mixtures");
    }
}

std::vector<int> GmmGenerator::label_support() const {
    std::vector<int> labels;
    for (const auto& mix : mixtures_) {
        labels.push_back(mix.label);
    }
    return labels;
}

Dataset GmmGenerator::sample(std::size_t k, std::uint64_t seed) const {
    if (k == 0) {
        throw std::invalid_argument("Generator::sample: k must be positive");
    }
    Rng rng(derive_seed(seed, "gmm-sample"));
    std::vector<double> priors;
    priors.reserve(mixtures_.size());
    for (const auto& mix : mixtures_) {
        priors.push_back(mix.prior);
    }

    Dataset out(dim_, classes_);
    out.examples.reserve(k);
    for (std::size_t i = 0; i < k; ++i) {
        const auto& mix = mixtures_[rng.weighted_index(priors)];
        std::vector<double> weights;
        weights.reserve(mix.components.size());
        for (const auto& comp : mix.components) {
            weights.push_back(comp.weight);
        }
        const auto& comp = mix.components[rng.weighted_index(weights)];
        std::vector<double> x(static_cast<std::size_t>(dim_));
        for (int f = 0; f < dim_; ++f) {
            x[static_cast<std::size_t>(f)] =
                comp.mean[static_cast<std::size_t>(f)] +
                std::sqrt(comp.var[static_cast<std::size_t>(f)]) * rng.normal();
        }
        out.examples.push_back({std::move(x), mix.label});
    }
    return out;
}

std::vector<std::uint8_t> GmmGenerator::serialize() const {
    ByteWriter w;
    write_blob_header(w, kTagGmm);
    w.i32(client_id_);
    w.i32(dim_);
    w.i32(classes_);
    w.u32(static_cast<std::uint32_t>(mixtures_.size()));
    for (const auto& mix : mixtures_) {
        w.i32(mix.label);
        w.f64(mix.prior);
        w.u32(static_cast<std::uint32_t>(mix.components.size()));
        for (const auto& comp : mix.components) {
            w.f64(comp.weight);
            w.f64_array(comp.mean);
            w.f64_array(comp.var);
        }
    }
    return w.take();
}

std::unique_ptr<Generator> GmmGenerator::decode(ByteReader& r) {
    int client_id = r.i32();
    int dim = r.i32();
    int classes = r.i32();
    if (dim < 1 || classes < 1) {
        throw std::runtime_error("gmm decode: bad shape");
    }
    std::uint32_t n_mix = r.u32();
    std::vector<ClassMixture> mixtures;
    mixtures.reserve(n_mix);
    for (std::uint32_t i = 0; i < n_mix; ++i) {
        ClassMixture mix;
        mix.label = r.i32();
        if (mix.label < 0 || mix.label >= classes) {
            throw std::runtime_error("gmm decode: label out of range");
        }
        mix.prior = r.f64();
        std::uint32_t n_comp = r.u32();
        for (std::uint32_t c = 0; c < n_comp; ++c) {
            Component comp;
            comp.weight = r.f64();
            comp.mean = r.f64_array(static_cast<std::size_t>(dim));
            comp.var = r.f64_array(static_cast<std::size_t>(dim));
            mix.components.push_back(std::move(comp));
        }
        mixtures.push_back(std::move(mix));
    }
    return std::make_unique<GmmGenerator>(client_id, dim, classes, std::move(mixtures));
}

std::unique_ptr<Generator> GmmGenerator::clone() const {
    return std::make_unique<GmmGenerator>(*this);
}

}  // namespace lcfl
