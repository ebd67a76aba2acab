#pragma once

#include <string>
#include <variant>
#include <vector>

#include "layers.hpp"

namespace windnet::nn {

using Layer = std::variant<Conv1D, Relu, MaxPool1D, Flatten, Dense, Dropout>;

inline Layer make_layer(const LayerSpec& spec)
{
    return std::visit(
        [](const auto& s) -> Layer {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, Conv1DSpec>) {
                return Conv1D(s);
            } else if constexpr (std::is_same_v<S, ReluSpec>) {
                return Relu(s);
            } else if constexpr (std::is_same_v<S, MaxPool1DSpec>) {
                return MaxPool1D(s);
            } else if constexpr (std::is_same_v<S, FlattenSpec>) {
                return Flatten(s);
            } else if constexpr (std::is_same_v<S, DenseSpec>) {
                return Dense(s);
            } else {
                return Dropout(s);
            }
        },
        spec);
}

inline LayerSpec layer_spec(const Layer& layer)
{
    return std::visit([](const auto& l) -> LayerSpec { return l.spec(); }, layer);
}

/// A named view of one parameter array and its gradient buffer.
struct ParamRef {
    std::string name;
    Tensor* value;
    Tensor* grad;
};

/// Linear chain of layers with per-layer forward caches.
class Sequential {
public:
    Sequential() = default;

    explicit Sequential(const std::vector<LayerSpec>& specs)
    {
        layers_.reserve(specs.size());
        for (const auto& spec : specs) {
            layers_.push_back(make_layer(spec));
        }
    }

    std::size_t size() const noexcept { return layers_.size(); }
    Layer& operator[](std::size_t i) { return layers_[i]; }
    const Layer& operator[](std::size_t i) const { return layers_[i]; }

    std::vector<LayerSpec> specs() const
    {
        std::vector<LayerSpec> out;
        out.reserve(layers_.size());
        for (const auto& layer : layers_) {
            out.push_back(layer_spec(layer));
        }
        return out;
    }

    Tensor forward(Tensor x, const ForwardContext& ctx)
    {
        for (auto& layer : layers_) {
            x = std::visit([&](auto& l) { return l.forward(x, ctx); }, layer);
        }
        return x;
    }

    Tensor backward(Tensor grad)
    {
        for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
            grad = std::visit([&](auto& l) { return l.backward(grad); }, *it);
        }
        return grad;
    }

    void init_parameters(Rng& rng)
    {
        for (auto& layer : layers_) {
            std::visit(
                [&](auto& l) {
                    if constexpr (requires { l.fan_in(); }) {
                        l.parameters()->init_uniform(l.fan_in(), rng);
                    }
                },
                layer);
        }
    }

    void zero_grad()
    {
        for (auto& layer : layers_) {
            if (auto* p = std::visit([](auto& l) { return l.parameters(); }, layer)) {
                p->zero_grad();
            }
        }
    }

    /// Parameter arrays in layer order: "<prefix><index>.weight", "<prefix><index>.bias".
    std::vector<ParamRef> parameters(const std::string& prefix = "")
    {
        std::vector<ParamRef> refs;
        for (std::size_t i = 0; i < layers_.size(); ++i) {
            if (auto* p = std::visit([](auto& l) { return l.parameters(); }, layers_[i])) {
                const std::string base = prefix + std::to_string(i);
                refs.push_back({base + ".weight", &p->weights, &p->grad_weights});
                refs.push_back({base + ".bias", &p->biases, &p->grad_biases});
            }
        }
        return refs;
    }

    void freeze_dropout_masks(bool frozen)
    {
        for (auto& layer : layers_) {
            if (auto* d = std::get_if<Dropout>(&layer)) {
                d->freeze_mask(frozen);
            }
        }
    }

    /// Which linear piece the last forward pass landed on: the on/off state of
    /// every ReLU input and every pooling argmax.
    std::vector<std::size_t> branch_signature() const
    {
        std::vector<std::size_t> sig;
        for (const auto& layer : layers_) {
            if (const auto* r = std::get_if<Relu>(&layer); r != nullptr && r->cached_input()) {
                for (double v : r->cached_input()->values()) {
                    sig.push_back(v > 0.0 ? 1 : 0);
                }
            } else if (const auto* m = std::get_if<MaxPool1D>(&layer)) {
                sig.insert(sig.end(), m->argmax().begin(), m->argmax().end());
            }
        }
        return sig;
    }

private:
    std::vector<Layer> layers_;
};

} // namespace windnet::nn
