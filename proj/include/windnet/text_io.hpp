#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "tensor.hpp"

namespace windnet {

/// 17 significant digits, enough to round-trip any binary64 value.
inline std::string format_real(double value)
{
    if (!std::isfinite(value)) {
        throw Error("cannot serialize non-finite value");
    }
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

inline void append_real_array(std::string& out, std::span<const double> values)
{
    out += '[';
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i != 0) {
            out += ',';
        }
        out += format_real(values[i]);
    }
    out += ']';
}

inline void append_string(std::string& out, const std::string& s)
{
    out += '"';
    for (char c : s) {
        if (c == '"' || c == '\\') {
            out += '\\';
        }
        out += c;
    }
    out += '"';
}

inline std::ofstream open_for_write(const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error("cannot open '" + path.string() + "' for writing");
    }
    return out;
}

inline std::ifstream open_for_read(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("cannot open '" + path.string() + "' for reading");
    }
    return in;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text)
{
    auto out = open_for_write(path);
    out << text;
    if (!out) {
        throw Error("write to '" + path.string() + "' failed");
    }
}

inline std::string read_text_file(const std::filesystem::path& path)
{
    auto in = open_for_read(path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

} // namespace windnet
