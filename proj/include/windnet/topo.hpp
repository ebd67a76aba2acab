#pragma once

#include <cmath>
#include <numbers>
#include <span>
#include <string>

#include "tensor.hpp"

/// Discrete winding number of a sampled circle-valued sequence.
namespace windnet::topo {

inline constexpr double min_modulus = 1e-9;

struct Winding {
    int value = 0;
    /// Sum of principal phase steps divided by 2*pi, before rounding.
    double raw = 0.0;
};

/// Principal argument of b / a in (-pi, pi].
inline double phase_step(double a_re, double a_im, double b_re, double b_im) noexcept
{
    // b * conj(a)
    const double re = b_re * a_re + b_im * a_im;
    const double im = b_im * a_re - b_re * a_im;
    const double step = std::atan2(im, re);
    return step == -std::numbers::pi ? std::numbers::pi : step;
}

/// Sum of principal phase increments between consecutive sites 1..L, divided
/// by 2*pi. The last site closes the loop, so a periodic sequence yields an
/// integer up to rounding error.
inline Winding winding_number(std::span<const double> re, std::span<const double> im)
{
    if (re.size() != im.size()) {
        throw ShapeError("winding_number: re has " + std::to_string(re.size()) + " values, im has "
                         + std::to_string(im.size()));
    }
    if (re.size() < 2) {
        throw Error("winding_number: need at least 2 sites");
    }
    for (std::size_t i = 0; i < re.size(); ++i) {
        if (std::hypot(re[i], im[i]) < min_modulus) {
            throw Error("winding_number: phase undefined at site " + std::to_string(i + 1));
        }
    }
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < re.size(); ++i) {
        total += phase_step(re[i], im[i], re[i + 1], im[i + 1]);
    }
    const double raw = total / (2.0 * std::numbers::pi);
    return {static_cast<int>(std::lround(raw)), raw};
}

/// Distance of the unrounded winding from the nearest integer.
inline double winding_residual(std::span<const double> re, std::span<const double> im)
{
    const Winding w = winding_number(re, im);
    return std::abs(w.raw - std::round(w.raw));
}

} // namespace windnet::topo
