#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "tensor.hpp"

namespace windnet::nn {

struct LossResult {
    double value = 0.0;
    Tensor grad;
};

/// Reconstruction loss (1/2L) * sum over all 2L entries of (output - target)^2,
/// where both tensors hold 2L values (the real channel followed by the
/// imaginary channel). The gradient is (output - target) / L.
inline LossResult mse_loss(const Tensor& output, const Tensor& target)
{
    if (output.size() != target.size()) {
        throw ShapeError("mse_loss: output has " + std::to_string(output.size()) + " values, target has "
                         + std::to_string(target.size()));
    }
    if (output.size() % 2 != 0) {
        throw ShapeError("mse_loss: expected 2L values, got " + std::to_string(output.size()));
    }
    const double sites = static_cast<double>(output.size() / 2);
    LossResult result{0.0, Tensor(output.shape())};
    double acc = 0.0;
    for (std::size_t i = 0; i < output.size(); ++i) {
        const double d = output[i] - target[i];
        acc += d * d;
        result.grad[i] = d / sites;
    }
    result.value = acc / (2.0 * sites);
    return result;
}

struct SoftmaxXentResult {
    double loss = 0.0;
    Tensor probabilities;
    Tensor grad;
};

/// Max-shifted softmax over the logits.
inline Tensor softmax(const Tensor& logits)
{
    const auto values = logits.values();
    const double shift = *std::max_element(values.begin(), values.end());
    Tensor p(logits.shape());
    double total = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        p[i] = std::exp(logits[i] - shift);
        total += p[i];
    }
    for (double& v : p.values()) {
        v /= total;
    }
    return p;
}

inline SoftmaxXentResult softmax_xent(const Tensor& logits, std::size_t true_class)
{
    if (logits.rank() != 1) {
        throw ShapeError("softmax_xent: logits must be a vector, got " + shape_string(logits.shape()));
    }
    if (true_class >= logits.size()) {
        throw Error("softmax_xent: class " + std::to_string(true_class) + " out of range for "
                    + std::to_string(logits.size()) + " classes");
    }
    const auto values = logits.values();
    const double shift = *std::max_element(values.begin(), values.end());
    double total = 0.0;
    for (double v : values) {
        total += std::exp(v - shift);
    }
    SoftmaxXentResult result;
    result.probabilities = softmax(logits);
    // log-sum-exp form keeps the loss finite when p[true] underflows
    result.loss = std::log(total) - (logits[true_class] - shift);
    result.grad = result.probabilities;
    result.grad[true_class] -= 1.0;
    return result;
}

} // namespace windnet::nn
