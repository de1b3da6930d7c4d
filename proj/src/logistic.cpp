#include "lcfl/logistic.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lcfl/parallel.hpp"
#include "lcfl/sgd.hpp"

namespace lcfl {

void softmax_inplace(std::vector<double>& z) {
    double zmax = *std::max_element(z.begin(), z.end());
    double total = 0.0;
    for (double& v : z) {
        v = std::exp(v - zmax);
        total += v;
    }
    for (double& v : z) {
        v /= total;
    }
}

LogisticRegression::LogisticRegression(int dim, int num_classes)
    : dim_(dim), classes_(num_classes) {
    if (dim < 1 || num_classes < 2) {
        throw std::invalid_argument("LogisticRegression: dim >= 1 and num_classes >= 2 required");
    }
    params_.assign(static_cast<std::size_t>(classes_) * dim_ + classes_, 0.0);
    l2_mask_.assign(params_.size(), 1);
    for (int c = 0; c < classes_; ++c) {
        l2_mask_[static_cast<std::size_t>(classes_) * dim_ + c] = 0;
    }
}

std::vector<double> LogisticRegression::scores(std::span<const double> x) const {
    std::vector<double> z(static_cast<std::size_t>(classes_));
    for (int c = 0; c < classes_; ++c) {
        const double* w = params_.data() + static_cast<std::size_t>(c) * dim_;
        double acc = params_[static_cast<std::size_t>(classes_) * dim_ + c];
        for (int f = 0; f < dim_; ++f) {
            acc += w[f] * x[static_cast<std::size_t>(f)];
        }
        z[static_cast<std::size_t>(c)] = acc;
    }
    return z;
}

std::vector<double> LogisticRegression::confidence(std::span<const double> x) const {
    check_input(x);
    auto z = scores(x);
    softmax_inplace(z);
    return z;
}

void LogisticRegression::accumulate_gradient(std::span<const std::size_t> indices,
                                             const Dataset& data, std::vector<double>& grad) const {
    const std::size_t n_params = params_.size();
    auto result = parallel::chunked_reduce<std::vector<double>>(
        indices.size(),
        [n_params] { return std::vector<double>(n_params, 0.0); },
        [&](std::vector<double>& acc, std::size_t k) {
            const auto& e = data.examples[indices[k]];
            auto p = scores(e.x);
            softmax_inplace(p);
            p[static_cast<std::size_t>(e.y)] -= 1.0;  // dL/dz = softmax - onehot
            for (int c = 0; c < classes_; ++c) {
                const double dz = p[static_cast<std::size_t>(c)];
                double* gw = acc.data() + static_cast<std::size_t>(c) * dim_;
                for (int f = 0; f < dim_; ++f) {
                    gw[f] += dz * e.x[static_cast<std::size_t>(f)];
                }
                acc[static_cast<std::size_t>(classes_) * dim_ + c] += dz;
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

void LogisticRegression::fit(const Dataset& train, const TrainConfig& cfg) {
    check_train_args(train, cfg);
    train_sgd(train, cfg, {}, 0.0);
}

void LogisticRegression::update(const Dataset& batch, const TrainConfig& cfg) {
    check_train_args(batch, cfg);
    train_sgd(batch, cfg, {}, 0.0);
}

void LogisticRegression::train_sgd(const Dataset& data, const TrainConfig& cfg,
                                   std::span<const double> anchor, double mu) {
    check_train_args(data, cfg);
    detail::sgd_train(params_, data.size(), cfg, anchor, mu, l2_mask_,
                      [&](std::span<const std::size_t> idx, std::vector<double>& grad) {
                          accumulate_gradient(idx, data, grad);
                      });
}

double LogisticRegression::mean_cross_entropy(const Dataset& data) const {
    if (data.empty()) {
        throw std::invalid_argument("mean_cross_entropy: empty dataset");
    }
    double total = parallel::chunked_sum(data.size(), [&](std::size_t i) {
        const auto& e = data.examples[i];
        auto p = scores(e.x);
        softmax_inplace(p);
        return -std::log(std::max(p[static_cast<std::size_t>(e.y)], 1e-300));
    });
    return total / static_cast<double>(data.size());
}

std::vector<double> LogisticRegression::cross_entropy_gradient(const Dataset& data) const {
    std::vector<std::size_t> all(data.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    std::vector<double> grad;
    accumulate_gradient(all, data, grad);
    return grad;
}

void LogisticRegression::set_parameters(std::span<const double> params) {
    if (params.size() != params_.size()) {
        throw std::invalid_argument("LogisticRegression: parameter count mismatch");
    }
    params_.assign(params.begin(), params.end());
}

std::vector<std::uint8_t> LogisticRegression::serialize() const {
    ByteWriter w;
    write_blob_header(w, kTagLogistic);
    w.i32(dim_);
    w.i32(classes_);
    w.f64_array(params_);
    return w.take();
}

std::unique_ptr<ConfidenceModel> LogisticRegression::decode(ByteReader& r) {
    int dim = r.i32();
    int classes = r.i32();
    if (dim < 1 || classes < 2) {
        throw std::runtime_error("logistic decode: bad shape");
    }
    auto model = std::make_unique<LogisticRegression>(dim, classes);
    auto params = r.f64_array(model->parameter_count());
    model->set_parameters(params);
    return model;
}

std::unique_ptr<ConfidenceModel> LogisticRegression::clone() const {
    return std::make_unique<LogisticRegression>(*this);
}

}  // namespace lcfl
