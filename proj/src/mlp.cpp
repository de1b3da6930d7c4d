#include "lcfl/mlp.hpp"

#include <cmath>
#include <stdexcept>

#include "lcfl/logistic.hpp"  // softmax_inplace
#include "lcfl/parallel.hpp"
#include "lcfl/rng.hpp"
#include "lcfl/sgd.hpp"

namespace lcfl {

Mlp::Mlp(int dim, int num_classes, int hidden, std::uint64_t init_seed)
    : dim_(dim), classes_(num_classes), hidden_(hidden) {
    if (dim < 1 || num_classes < 2 || hidden < 1) {
        throw std::invalid_argument("Mlp: dim >= 1, num_classes >= 2, hidden >= 1 required");
    }
    params_.assign(off_b2() + static_cast<std::size_t>(classes_), 0.0);
    l2_mask_.assign(params_.size(), 0);

    Rng rng(derive_seed(init_seed, "mlp-init"));
    const double s1 = 1.0 / std::sqrt(static_cast<double>(dim_));
    for (std::size_t k = 0; k < off_b1(); ++k) {
        params_[k] = s1 * rng.normal();
        l2_mask_[k] = 1;
    }
    const double s2 = 1.0 / std::sqrt(static_cast<double>(hidden_));
    for (std::size_t k = off_w2(); k < off_b2(); ++k) {
        params_[k] = s2 * rng.normal();
        l2_mask_[k] = 1;
    }
}

std::vector<double> Mlp::forward(std::span<const double> x, std::vector<double>* hidden_out) const {
    std::vector<double> h(static_cast<std::size_t>(hidden_));
    const double* w1 = params_.data();
    const double* b1 = params_.data() + off_b1();
    for (int j = 0; j < hidden_; ++j) {
        double acc = b1[j];
        const double* row = w1 + static_cast<std::size_t>(j) * dim_;
        for (int f = 0; f < dim_; ++f) {
            acc += row[f] * x[static_cast<std::size_t>(f)];
        }
        h[static_cast<std::size_t>(j)] = std::tanh(acc);
    }
    std::vector<double> z(static_cast<std::size_t>(classes_));
    const double* w2 = params_.data() + off_w2();
    const double* b2 = params_.data() + off_b2();
    for (int c = 0; c < classes_; ++c) {
        double acc = b2[c];
        const double* row = w2 + static_cast<std::size_t>(c) * hidden_;
        for (int j = 0; j < hidden_; ++j) {
            acc += row[j] * h[static_cast<std::size_t>(j)];
        }
        z[static_cast<std::size_t>(c)] = acc;
    }
    if (hidden_out != nullptr) {
        *hidden_out = std::move(h);
    }
    return z;
}

std::vector<double> Mlp::confidence(std::span<const double> x) const {
    check_input(x);
    auto z = forward(x, nullptr);
    softmax_inplace(z);
    return z;
}

void Mlp::accumulate_gradient(std::span<const std::size_t> indices, const Dataset& data,
                              std::vector<double>& grad) const {
    const std::size_t n_params = params_.size();
    auto result = parallel::chunked_reduce<std::vector<double>>(
        indices.size(),
        [n_params] { return std::vector<double>(n_params, 0.0); },
        [&](std::vector<double>& acc, std::size_t k) {
            const auto& e = data.examples[indices[k]];
            std::vector<double> h;
            auto p = forward(e.x, &h);
            softmax_inplace(p);
            p[static_cast<std::size_t>(e.y)] -= 1.0;  // dz

            double* g_w2 = acc.data() + off_w2();
            double* g_b2 = acc.data() + off_b2();
            const double* w2 = params_.data() + off_w2();
            std::vector<double> dh(static_cast<std::size_t>(hidden_), 0.0);
            for (int c = 0; c < classes_; ++c) {
                const double dz = p[static_cast<std::size_t>(c)];
                double* row = g_w2 + static_cast<std::size_t>(c) * hidden_;
                const double* w_row = w2 + static_cast<std::size_t>(c) * hidden_;
                for (int j = 0; j < hidden_; ++j) {
                    row[j] += dz * h[static_cast<std::size_t>(j)];
                    dh[static_cast<std::size_t>(j)] += dz * w_row[j];
                }
                g_b2[c] += dz;
            }

            double* g_w1 = acc.data();
            double* g_b1 = acc.data() + off_b1();
            for (int j = 0; j < hidden_; ++j) {
                const double hj = h[static_cast<std::size_t>(j)];
                const double da = dh[static_cast<std::size_t>(j)] * (1.0 - hj * hj);
                double* row = g_w1 + static_cast<std::size_t>(j) * dim_;
                for (int f = 0; f < dim_; ++f) {
                    row[f] += da * e.x[static_cast<std::size_t>(f)];
                }
                g_b1[j] += da;
            }
        },
        [](std::vector<double>& total, const std::vector<double>& part) {
            for (std::size_t k = 0; k < total.size(); ++k) {
                total[k] += part[k];
            }
        });
    const double inv_n = 1.0 / static_cast<double>(indices.size());
    grad.assign(n_params, 0.0);
    for (std::size_t k = 0; k < n_params; ++k) {
        grad[k] = result[k] * inv_n;
    }
}

void Mlp::fit(const Dataset& train, const TrainConfig& cfg) {
    check_train_args(train, cfg);
    train_sgd(train, cfg, {}, 0.0);
}

void Mlp::update(const Dataset& batch, const TrainConfig& cfg) {
    check_train_args(batch, cfg);
    train_sgd(batch, cfg, {}, 0.0);
}

void Mlp::train_sgd(const Dataset& data, const TrainConfig& cfg, std::span<const double> anchor,
                    double mu) {
    check_train_args(data, cfg);
    detail::sgd_train(params_, data.size(), cfg, anchor, mu, l2_mask_,
                      [&](std::span<const std::size_t> idx, std::vector<double>& grad) {
                          accumulate_gradient(idx, data, grad);
                      });
}

double Mlp::mean_cross_entropy(const Dataset& data) const {
    if (data.empty()) {
        throw std::invalid_argument("mean_cross_entropy: empty dataset");
    }
    double total = parallel::chunked_sum(data.size(), [&](std::size_t i) {
        const auto& e = data.examples[i];
        auto p = forward(e.x, nullptr);
        softmax_inplace(p);
        return -std::log(std::max(p[static_cast<std::size_t>(e.y)], 1e-300));
    });
    return total / static_cast<double>(data.size());
}

std::vector<double> Mlp::cross_entropy_gradient(const Dataset& data) const {
    std::vector<std::size_t> all(data.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    std::vector<double> grad;
    accumulate_gradient(all, data, grad);
    return grad;
}

void Mlp::set_parameters(std::span<const double> params) {
    if (params.size() != params_.size()) {
        throw std::invalid_argument("Mlp: parameter count mismatch");
    }
    params_.assign(params.begin(), params.end());
}

std::vector<std::uint8_t> Mlp::serialize() const {
    ByteWriter w;
    write_blob_header(w, kTagMlp);
    w.i32(dim_);
    w.i32(classes_);
    w.i32(hidden_);
    w.f64_array(params_);
    return w.take();
}

std::unique_ptr<ConfidenceModel> Mlp::decode(ByteReader& r) {
    int dim = r.i32();
    int classes = r.i32();
    int hidden = r.i32();
    if (dim < 1 || classes < 2 || hidden < 1) {
        throw std::runtime_error("mlp decode: bad shape");
    }
    auto model = std::make_unique<Mlp>(dim, classes, hidden, 0);
    auto params = r.f64_array(model->parameter_count());
    model->set_parameters(params);
    return model;
}

std::unique_ptr<ConfidenceModel> Mlp::clone() const { return std::make_unique<Mlp>(*this); }

}  // namespace lcfl
