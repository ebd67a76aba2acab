#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "random.hpp"
#include "tensor.hpp"

namespace windnet::nn {

enum class Mode { train, eval };

enum class Padding { same_zero };

struct Conv1DSpec {
    std::size_t in_channels = 1;
    std::size_t out_channels = 1;
    std::size_t kernel_size = 1;
    std::size_t stride = 1;
    Padding padding = Padding::same_zero;

    friend bool operator==(const Conv1DSpec&, const Conv1DSpec&) = default;
};

struct ReluSpec {
    friend bool operator==(const ReluSpec&, const ReluSpec&) = default;
};

struct MaxPool1DSpec {
    std::size_t window = 2;
    std::size_t stride = 2;

    friend bool operator==(const MaxPool1DSpec&, const MaxPool1DSpec&) = default;
};

struct FlattenSpec {
    friend bool operator==(const FlattenSpec&, const FlattenSpec&) = default;
};

struct DenseSpec {
    std::size_t in_dim = 1;
    std::size_t out_dim = 1;

    friend bool operator==(const DenseSpec&, const DenseSpec&) = default;
};

struct DropoutSpec {
    double rate = 0.5;

    friend bool operator==(const DropoutSpec&, const DropoutSpec&) = default;
};

using LayerSpec = std::variant<Conv1DSpec, ReluSpec, MaxPool1DSpec, FlattenSpec, DenseSpec, DropoutSpec>;

inline void validate(const Conv1DSpec& s)
{
    if (s.in_channels < 1 || s.out_channels < 1 || s.kernel_size < 1) {
        throw Error("Conv1D: channels and kernel_size must be >= 1");
    }
    if (s.stride != 1) {
        throw Error("Conv1D: only stride 1 is supported, got " + std::to_string(s.stride));
    }
}

inline void validate(const MaxPool1DSpec& s)
{
    if (s.window < 1 || s.stride < 1) {
        throw Error("MaxPool1D: window and stride must be >= 1");
    }
    if (s.window != s.stride) {
        throw Error("MaxPool1D: only non-overlapping pooling (window == stride) is supported");
    }
}

inline void validate(const DenseSpec& s)
{
    if (s.in_dim < 1 || s.out_dim < 1) {
        throw Error("Dense: dimensions must be >= 1");
    }
}

inline void validate(const DropoutSpec& s)
{
    if (!(s.rate >= 0.0 && s.rate < 1.0)) {
        throw Error("Dropout: rate must lie in [0, 1), got " + std::to_string(s.rate));
    }
}

inline void validate(const ReluSpec&) {}
inline void validate(const FlattenSpec&) {}

inline void validate(const LayerSpec& spec)
{
    std::visit([](const auto& s) { validate(s); }, spec);
}

/// Weights and biases of one parametric layer together with gradient buffers
/// of identical shapes.
struct Parameters {
    Tensor weights;
    Tensor biases;
    Tensor grad_weights;
    Tensor grad_biases;

    Parameters() = default;

    Parameters(Shape weight_shape, Shape bias_shape)
        : weights(weight_shape), biases(bias_shape), grad_weights(weight_shape), grad_biases(bias_shape)
    {}

    void zero_grad()
    {
        grad_weights.fill(0.0);
        grad_biases.fill(0.0);
    }

    /// Uniform on [-a, a] with a = sqrt(1 / fan_in); biases zero.
    void init_uniform(std::size_t fan_in, Rng& rng)
    {
        const double a = std::sqrt(1.0 / static_cast<double>(fan_in));
        for (double& w : weights.values()) {
            w = rng.uniform(-a, a);
        }
        biases.fill(0.0);
        zero_grad();
    }
};

// ---------------------------------------------------------------------------
// Stateless kernels. The layer classes below add caching around these.

/// Left zero-padding for a same-length stride-1 convolution; the remaining
/// kernel_size - 1 - left sites are padded on the right.
constexpr std::size_t same_padding_left(std::size_t kernel_size) noexcept
{
    return (kernel_size - 1) / 2;
}

inline Tensor conv1d_forward(const Tensor& input, const Conv1DSpec& spec, const Parameters& params)
{
    validate(spec);
    if (input.rank() != 2 || input.dim(0) != spec.in_channels) {
        throw ShapeError("conv1d_forward: expected input [" + std::to_string(spec.in_channels)
                         + " x L], got " + shape_string(input.shape()));
    }
    require_shape(params.weights, {spec.out_channels, spec.in_channels, spec.kernel_size}, "conv1d weights");
    require_shape(params.biases, {spec.out_channels}, "conv1d biases");

    const std::size_t length = input.dim(1);
    const std::size_t k_size = spec.kernel_size;
    const auto pad = static_cast<std::ptrdiff_t>(same_padding_left(k_size));
    const auto len = static_cast<std::ptrdiff_t>(length);

    Tensor out({spec.out_channels, length});
    for (std::size_t f = 0; f < spec.out_channels; ++f) {
        double* row = out.data() + f * length;
        std::fill(row, row + length, params.biases[f]);
        for (std::size_t c = 0; c < spec.in_channels; ++c) {
            const double* x = input.data() + c * length;
            const double* w = params.weights.data() + (f * spec.in_channels + c) * k_size;
            for (std::size_t k = 0; k < k_size; ++k) {
                const std::ptrdiff_t shift = static_cast<std::ptrdiff_t>(k) - pad;
                const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, -shift);
                const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(len, len - shift);
                const double wk = w[k];
                for (std::ptrdiff_t i = lo; i < hi; ++i) {
                    row[i] += wk * x[i + shift];
                }
            }
        }
    }
    return out;
}

/// Returns the gradient with respect to the input and adds parameter
/// gradients into params.grad_*.
inline Tensor conv1d_backward(const Tensor& grad_out, const Tensor& cached_input, const Conv1DSpec& spec,
                              Parameters& params)
{
    const std::size_t length = cached_input.dim(1);
    require_shape(grad_out, {spec.out_channels, length}, "conv1d_backward grad_out");

    const std::size_t k_size = spec.kernel_size;
    const auto pad = static_cast<std::ptrdiff_t>(same_padding_left(k_size));
    const auto len = static_cast<std::ptrdiff_t>(length);

    Tensor grad_in({spec.in_channels, length});
    for (std::size_t f = 0; f < spec.out_channels; ++f) {
        const double* g = grad_out.data() + f * length;
        double bias_acc = 0.0;
        for (std::size_t i = 0; i < length; ++i) {
            bias_acc += g[i];
        }
        params.grad_biases[f] += bias_acc;
        for (std::size_t c = 0; c < spec.in_channels; ++c) {
            const double* x = cached_input.data() + c * length;
            double* gx = grad_in.data() + c * length;
            const std::size_t w_offset = (f * spec.in_channels + c) * k_size;
            const double* w = params.weights.data() + w_offset;
            double* gw = params.grad_weights.data() + w_offset;
            for (std::size_t k = 0; k < k_size; ++k) {
                const std::ptrdiff_t shift = static_cast<std::ptrdiff_t>(k) - pad;
                const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, -shift);
                const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(len, len - shift);
                const double wk = w[k];
                double acc = 0.0;
                for (std::ptrdiff_t i = lo; i < hi; ++i) {
                    acc += g[i] * x[i + shift];
                    gx[i + shift] += wk * g[i];
                }
                gw[k] += acc;
            }
        }
    }
    return grad_in;
}

inline Tensor relu_forward(const Tensor& input)
{
    Tensor out = input;
    for (double& v : out.values()) {
        v = v > 0.0 ? v : 0.0;
    }
    return out;
}

/// Subgradient at exactly zero is zero.
inline Tensor relu_backward(const Tensor& grad_out, const Tensor& cached_input)
{
    require_shape(grad_out, cached_input.shape(), "relu_backward grad_out");
    Tensor grad_in = grad_out;
    for (std::size_t i = 0; i < grad_in.size(); ++i) {
        if (!(cached_input[i] > 0.0)) {
            grad_in[i] = 0.0;
        }
    }
    return grad_in;
}

/// Forward max pooling; writes the flat input index of each window's first
/// maximum into argmax.
inline Tensor maxpool1d_forward(const Tensor& input, const MaxPool1DSpec& spec, std::vector<std::size_t>& argmax)
{
    validate(spec);
    if (input.rank() != 2) {
        throw ShapeError("maxpool1d_forward: expected [channels x L], got " + shape_string(input.shape()));
    }
    const std::size_t channels = input.dim(0);
    const std::size_t length = input.dim(1);
    if (length % spec.stride != 0) {
        throw ShapeError("maxpool1d_forward: length " + std::to_string(length) + " is not divisible by stride "
                         + std::to_string(spec.stride));
    }
    const std::size_t out_len = length / spec.stride;
    Tensor out({channels, out_len});
    argmax.assign(channels * out_len, 0);
    for (std::size_t c = 0; c < channels; ++c) {
        for (std::size_t j = 0; j < out_len; ++j) {
            const std::size_t start = c * length + j * spec.stride;
            std::size_t best = start;
            for (std::size_t k = 1; k < spec.window; ++k) {
                if (input[start + k] > input[best]) {
                    best = start + k;
                }
            }
            out[c * out_len + j] = input[best];
            argmax[c * out_len + j] = best;
        }
    }
    return out;
}

inline Tensor maxpool1d_backward(const Tensor& grad_out, const Shape& input_shape,
                                 const std::vector<std::size_t>& argmax)
{
    if (grad_out.size() != argmax.size()) {
        throw ShapeError("maxpool1d_backward: grad_out has " + std::to_string(grad_out.size())
                         + " values, forward produced " + std::to_string(argmax.size()));
    }
    Tensor grad_in(input_shape);
    for (std::size_t i = 0; i < argmax.size(); ++i) {
        grad_in[argmax[i]] += grad_out[i];
    }
    return grad_in;
}

inline Tensor dense_forward(const Tensor& input, const DenseSpec& spec, const Parameters& params)
{
    validate(spec);
    require_shape(input, {spec.in_dim}, "dense_forward input");
    require_shape(params.weights, {spec.out_dim, spec.in_dim}, "dense weights");
    require_shape(params.biases, {spec.out_dim}, "dense biases");

    Tensor out({spec.out_dim});
    const double* x = input.data();
    for (std::size_t o = 0; o < spec.out_dim; ++o) {
        const double* w = params.weights.data() + o * spec.in_dim;
        double acc = params.biases[o];
        for (std::size_t i = 0; i < spec.in_dim; ++i) {
            acc += w[i] * x[i];
        }
        out[o] = acc;
    }
    return out;
}

inline Tensor dense_backward(const Tensor& grad_out, const Tensor& cached_input, const DenseSpec& spec,
                             Parameters& params)
{
    require_shape(grad_out, {spec.out_dim}, "dense_backward grad_out");
    Tensor grad_in({spec.in_dim});
    const double* x = cached_input.data();
    double* gx = grad_in.data();
    for (std::size_t o = 0; o < spec.out_dim; ++o) {
        const double g = grad_out[o];
        params.grad_biases[o] += g;
        if (g == 0.0) {
            continue;
        }
        const double* w = params.weights.data() + o * spec.in_dim;
        double* gw = params.grad_weights.data() + o * spec.in_dim;
        for (std::size_t i = 0; i < spec.in_dim; ++i) {
            gw[i] += g * x[i];
            gx[i] += g * w[i];
        }
    }
    return grad_in;
}

inline Tensor apply_mask(const Tensor& input, const std::vector<double>& mask)
{
    if (mask.size() != input.size()) {
        throw ShapeError("dropout mask has " + std::to_string(mask.size()) + " entries, input has "
                         + std::to_string(input.size()));
    }
    Tensor out = input;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] *= mask[i];
    }
    return out;
}

/// Inverted dropout: survivors are scaled by 1 / (1 - rate) at train time so
/// that eval mode is the identity. The mask holds 0 or that scale per element.
inline Tensor dropout_forward(const Tensor& input, const DropoutSpec& spec, Mode mode, Rng& rng,
                              std::vector<double>& mask)
{
    validate(spec);
    if (mode == Mode::eval || spec.rate == 0.0) {
        mask.assign(input.size(), 1.0);
        return input;
    }
    const double scale = 1.0 / (1.0 - spec.rate);
    mask.resize(input.size());
    for (double& m : mask) {
        m = rng.bernoulli(spec.rate) ? 0.0 : scale;
    }
    return apply_mask(input, mask);
}

// ---------------------------------------------------------------------------
// Layers with forward caches.

struct ForwardContext {
    Mode mode = Mode::eval;
    Rng* rng = nullptr;
};

class Conv1D {
public:
    explicit Conv1D(Conv1DSpec spec)
        : spec_(spec), params_({spec.out_channels, spec.in_channels, spec.kernel_size}, {spec.out_channels})
    {
        validate(spec_);
    }

    const Conv1DSpec& spec() const noexcept { return spec_; }
    Parameters* parameters() noexcept { return &params_; }
    const Parameters* parameters() const noexcept { return &params_; }
    std::size_t fan_in() const noexcept { return spec_.in_channels * spec_.kernel_size; }

    Tensor forward(const Tensor& input, const ForwardContext&)
    {
        Tensor out = conv1d_forward(input, spec_, params_);
        cached_input_ = input;
        return out;
    }

    Tensor backward(const Tensor& grad_out)
    {
        if (!cached_input_) {
            throw Error("Conv1D::backward called without a cached forward input");
        }
        return conv1d_backward(grad_out, *cached_input_, spec_, params_);
    }

private:
    Conv1DSpec spec_;
    Parameters params_;
    std::optional<Tensor> cached_input_;
};

class Relu {
public:
    explicit Relu(ReluSpec = {}) {}

    ReluSpec spec() const noexcept { return {}; }
    Parameters* parameters() noexcept { return nullptr; }
    const Parameters* parameters() const noexcept { return nullptr; }

    Tensor forward(const Tensor& input, const ForwardContext&)
    {
        cached_input_ = input;
        return relu_forward(input);
    }

    const std::optional<Tensor>& cached_input() const noexcept { return cached_input_; }

    Tensor backward(const Tensor& grad_out)
    {
        if (!cached_input_) {
            throw Error("Relu::backward called without a cached forward input");
        }
        return relu_backward(grad_out, *cached_input_);
    }

private:
    std::optional<Tensor> cached_input_;
};

class MaxPool1D {
public:
    explicit MaxPool1D(MaxPool1DSpec spec)
        : spec_(spec)
    {
        validate(spec_);
    }

    const MaxPool1DSpec& spec() const noexcept { return spec_; }
    Parameters* parameters() noexcept { return nullptr; }
    const Parameters* parameters() const noexcept { return nullptr; }
    const std::vector<std::size_t>& argmax() const noexcept { return argmax_; }

    Tensor forward(const Tensor& input, const ForwardContext&)
    {
        Tensor out = maxpool1d_forward(input, spec_, argmax_);
        input_shape_ = input.shape();
        return out;
    }

    Tensor backward(const Tensor& grad_out)
    {
        if (input_shape_.empty()) {
            throw Error("MaxPool1D::backward called without a cached forward pass");
        }
        return maxpool1d_backward(grad_out, input_shape_, argmax_);
    }

private:
    MaxPool1DSpec spec_;
    std::vector<std::size_t> argmax_;
    Shape input_shape_;
};

class Flatten {
public:
    explicit Flatten(FlattenSpec = {}) {}

    FlattenSpec spec() const noexcept { return {}; }
    Parameters* parameters() noexcept { return nullptr; }
    const Parameters* parameters() const noexcept { return nullptr; }

    Tensor forward(const Tensor& input, const ForwardContext&)
    {
        input_shape_ = input.shape();
        return input.reshaped({input.size()});
    }

    Tensor backward(const Tensor& grad_out)
    {
        if (input_shape_.empty()) {
            throw Error("Flatten::backward called without a cached forward pass");
        }
        return grad_out.reshaped(input_shape_);
    }

private:
    Shape input_shape_;
};

class Dense {
public:
    explicit Dense(DenseSpec spec)
        : spec_(spec), params_({spec.out_dim, spec.in_dim}, {spec.out_dim})
    {
        validate(spec_);
    }

    const DenseSpec& spec() const noexcept { return spec_; }
    Parameters* parameters() noexcept { return &params_; }
    const Parameters* parameters() const noexcept { return &params_; }
    std::size_t fan_in() const noexcept { return spec_.in_dim; }

    Tensor forward(const Tensor& input, const ForwardContext&)
    {
        Tensor out = dense_forward(input, spec_, params_);
        cached_input_ = input;
        return out;
    }

    Tensor backward(const Tensor& grad_out)
    {
        if (!cached_input_) {
            throw Error("Dense::backward called without a cached forward input");
        }
        return dense_backward(grad_out, *cached_input_, spec_, params_);
    }

private:
    DenseSpec spec_;
    Parameters params_;
    std::optional<Tensor> cached_input_;
};

class Dropout {
public:
    explicit Dropout(DropoutSpec spec)
        : spec_(spec)
    {
        validate(spec_);
    }

    const DropoutSpec& spec() const noexcept { return spec_; }
    Parameters* parameters() noexcept { return nullptr; }
    const Parameters* parameters() const noexcept { return nullptr; }

    /// While frozen, train-mode forward passes reuse the last mask instead of
    /// drawing a new one. Used by gradient checks.
    void freeze_mask(bool frozen) noexcept { frozen_ = frozen; }
    const std::vector<double>& mask() const noexcept { return mask_; }

    Tensor forward(const Tensor& input, const ForwardContext& ctx)
    {
        if (ctx.mode == Mode::train && frozen_ && mask_.size() == input.size()) {
            return apply_mask(input, mask_);
        }
        if (ctx.mode == Mode::train && spec_.rate > 0.0 && ctx.rng == nullptr) {
            throw Error("Dropout: train-mode forward requires a random generator");
        }
        Rng unused(0);
        return dropout_forward(input, spec_, ctx.mode, ctx.rng != nullptr ? *ctx.rng : unused, mask_);
    }

    Tensor backward(const Tensor& grad_out)
    {
        return apply_mask(grad_out, mask_);
    }

private:
    DropoutSpec spec_;
    std::vector<double> mask_;
    bool frozen_ = false;
};

} // namespace windnet::nn
