#pragma once

#include <span>
#include <string>
#include <vector>

#include "base64.hpp"
#include "json.hpp"
#include "sequential.hpp"

namespace windnet {

using ordered_json = nlohmann::ordered_json;

inline constexpr const char* checkpoint_format = "windnet-checkpoint";
inline constexpr int checkpoint_format_version = 1;
inline constexpr const char* parameter_encoding = "base64-f64le";

/// Common framing for model checkpoints: a JSON document whose parameter
/// arrays are base64 strings of little-endian binary64 values, so reals are
/// stored bit-exactly.
inline ordered_json checkpoint_header(const std::string& kind)
{
    ordered_json doc;
    doc["format"] = checkpoint_format;
    doc["format_version"] = checkpoint_format_version;
    doc["kind"] = kind;
    return doc;
}

inline void check_checkpoint_header(const ordered_json& doc, const std::string& kind)
{
    if (!doc.is_object() || doc.value("format", std::string{}) != checkpoint_format) {
        throw Error("not a windnet checkpoint");
    }
    const int version = doc.value("format_version", -1);
    if (version != checkpoint_format_version) {
        throw Error("unsupported checkpoint format_version " + std::to_string(version));
    }
    const std::string found = doc.value("kind", std::string{});
    if (found != kind) {
        throw Error("checkpoint holds a '" + found + "' model, expected '" + kind + "'");
    }
}

inline ordered_json encode_parameters(std::span<const nn::ParamRef> params)
{
    ordered_json arrays = ordered_json::array();
    for (const auto& p : params) {
        ordered_json entry;
        entry["name"] = p.name;
        entry["shape"] = p.value->shape();
        entry["encoding"] = parameter_encoding;
        entry["data"] = encode_doubles(p.value->values());
        arrays.push_back(std::move(entry));
    }
    return arrays;
}

/// Fills the model's parameters from the encoded arrays; names and shapes must
/// match one-to-one and in order.
inline void decode_parameters(const ordered_json& arrays, std::span<const nn::ParamRef> params)
{
    if (!arrays.is_array() || arrays.size() != params.size()) {
        throw Error("checkpoint has " + std::to_string(arrays.is_array() ? arrays.size() : 0)
                    + " parameter arrays, model expects " + std::to_string(params.size()));
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto& entry = arrays[i];
        const auto& p = params[i];
        const auto name = entry.at("name").get<std::string>();
        if (name != p.name) {
            throw Error("checkpoint array " + std::to_string(i) + " is '" + name + "', expected '" + p.name + "'");
        }
        if (entry.at("encoding").get<std::string>() != parameter_encoding) {
            throw Error("unsupported parameter encoding for '" + name + "'");
        }
        const auto shape = entry.at("shape").get<Shape>();
        if (shape != p.value->shape()) {
            throw ShapeError("checkpoint array '" + name + "' has shape " + shape_string(shape) + ", model expects "
                             + shape_string(p.value->shape()));
        }
        auto values = decode_doubles(entry.at("data").get<std::string>());
        *p.value = Tensor(shape, std::move(values));
        p.grad->fill(0.0);
    }
}

inline std::string dump_checkpoint(const ordered_json& doc)
{
    return doc.dump(2) + "\n";
}

inline ordered_json parse_checkpoint(const std::string& text)
{
    try {
        return ordered_json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(std::string("malformed checkpoint: ") + e.what());
    }
}

} // namespace windnet
