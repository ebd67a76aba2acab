#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tensor.hpp"

namespace windnet {

inline std::string base64_encode(std::span<const std::uint8_t> bytes)
{
    static constexpr char alphabet[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::string out;
    out.reserve((bytes.size() + 2) / 3 * 4);
    std::size_t i = 0;
    for (; i + 3 <= bytes.size(); i += 3) {
        const std::uint32_t n = (std::uint32_t{bytes[i]} << 16) | (std::uint32_t{bytes[i + 1]} << 8) | bytes[i + 2];
        out += alphabet[(n >> 18) & 63];
        out += alphabet[(n >> 12) & 63];
        out += alphabet[(n >> 6) & 63];
        out += alphabet[n & 63];
    }
    const std::size_t rest = bytes.size() - i;
    if (rest == 1) {
        const std::uint32_t n = std::uint32_t{bytes[i]} << 16;
        out += alphabet[(n >> 18) & 63];
        out += alphabet[(n >> 12) & 63];
        out += "==";
    } else if (rest == 2) {
        const std::uint32_t n = (std::uint32_t{bytes[i]} << 16) | (std::uint32_t{bytes[i + 1]} << 8);
        out += alphabet[(n >> 18) & 63];
        out += alphabet[(n >> 12) & 63];
        out += alphabet[(n >> 6) & 63];
        out += '=';
    }
    return out;
}

inline std::vector<std::uint8_t> base64_decode(std::string_view text)
{
    static const auto table = [] {
        std::array<int, 256> t{};
        t.fill(-1);
        const std::string_view a = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
        for (std::size_t i = 0; i < a.size(); ++i) {
            t[static_cast<unsigned char>(a[i])] = static_cast<int>(i);
        }
        return t;
    }();

    if (text.size() % 4 != 0) {
        throw Error("base64: length " + std::to_string(text.size()) + " is not a multiple of 4");
    }
    std::vector<std::uint8_t> out;
    out.reserve(text.size() / 4 * 3);
    for (std::size_t i = 0; i < text.size(); i += 4) {
        std::uint32_t n = 0;
        int pad = 0;
        for (std::size_t k = 0; k < 4; ++k) {
            const char c = text[i + k];
            int v = 0;
            if (c == '=' && i + 4 == text.size() && k >= 2) {
                ++pad;
            } else {
                if (pad != 0) {
                    throw Error("base64: data after padding");
                }
                v = table[static_cast<unsigned char>(c)];
                if (v < 0) {
                    throw Error(std::string("base64: invalid character '") + c + "'");
                }
            }
            n = (n << 6) | static_cast<std::uint32_t>(v);
        }
        out.push_back(static_cast<std::uint8_t>(n >> 16));
        if (pad < 2) {
            out.push_back(static_cast<std::uint8_t>(n >> 8));
        }
        if (pad < 1) {
            out.push_back(static_cast<std::uint8_t>(n));
        }
    }
    return out;
}

/// Little-endian IEEE-754 binary64 encoding of the values.
inline std::string encode_doubles(std::span<const double> values)
{
    std::vector<std::uint8_t> bytes(values.size() * 8);
    for (std::size_t i = 0; i < values.size(); ++i) {
        const auto bits = std::bit_cast<std::uint64_t>(values[i]);
        for (int b = 0; b < 8; ++b) {
            bytes[i * 8 + b] = static_cast<std::uint8_t>(bits >> (8 * b));
        }
    }
    return base64_encode(bytes);
}

inline std::vector<double> decode_doubles(std::string_view text)
{
    const auto bytes = base64_decode(text);
    if (bytes.size() % 8 != 0) {
        throw Error("encoded array length " + std::to_string(bytes.size()) + " is not a multiple of 8 bytes");
    }
    std::vector<double> values(bytes.size() / 8);
    for (std::size_t i = 0; i < values.size(); ++i) {
        std::uint64_t bits = 0;
        for (int b = 0; b < 8; ++b) {
            bits |= std::uint64_t{bytes[i * 8 + b]} << (8 * b);
        }
        values[i] = std::bit_cast<double>(bits);
    }
    return values;
}

} // namespace windnet
