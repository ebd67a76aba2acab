#pragma once

#include <span>
#include <vector>

#include "sequential.hpp"

namespace windnet::nn {

/// w <- w - lr * grad for every parameter, then zero the gradients.
inline void sgd_step(std::span<const ParamRef> params, double learning_rate)
{
    for (const auto& p : params) {
        auto w = p.value->values();
        auto g = p.grad->values();
        for (std::size_t i = 0; i < w.size(); ++i) {
            w[i] -= learning_rate * g[i];
        }
        p.grad->fill(0.0);
    }
}

/// Mini-batch gradient descent with optional heavy-ball momentum
/// (momentum = 0 reduces exactly to sgd_step).
class Sgd {
public:
    explicit Sgd(double learning_rate, double momentum = 0.0)
        : learning_rate_(learning_rate), momentum_(momentum)
    {}

    double learning_rate() const noexcept { return learning_rate_; }
    double momentum() const noexcept { return momentum_; }

    void step(std::span<const ParamRef> params)
    {
        if (momentum_ == 0.0) {
            sgd_step(params, learning_rate_);
            return;
        }
        if (velocity_.size() != params.size()) {
            velocity_.clear();
            for (const auto& p : params) {
                velocity_.emplace_back(p.value->size(), 0.0);
            }
        }
        for (std::size_t k = 0; k < params.size(); ++k) {
            auto w = params[k].value->values();
            auto g = params[k].grad->values();
            auto& v = velocity_[k];
            for (std::size_t i = 0; i < w.size(); ++i) {
                v[i] = momentum_ * v[i] + g[i];
                w[i] -= learning_rate_ * v[i];
            }
            params[k].grad->fill(0.0);
        }
    }

private:
    double learning_rate_;
    double momentum_;
    std::vector<std::vector<double>> velocity_;
};

/// Multiply every gradient buffer by factor (batch averaging).
inline void scale_gradients(std::span<const ParamRef> params, double factor)
{
    for (const auto& p : params) {
        for (double& g : p.grad->values()) {
            g *= factor;
        }
    }
}

} // namespace windnet::nn
