#pragma once

// Reference implementations used only by tests. Each is written directly from
// the mathematical definition and shares no code with the library kernels.

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <vector>

namespace windnet::testing {

/// out[f][i] = b[f] + sum_{c,k} w[f][c][k] * padded[c][i + k], where padded
/// holds floor((K-1)/2) zeros on the left and the rest on the right.
inline std::vector<std::vector<double>> naive_conv1d(const std::vector<std::vector<double>>& input,
                                                     const std::vector<std::vector<std::vector<double>>>& w,
                                                     const std::vector<double>& b)
{
    const std::size_t channels = input.size();
    const std::size_t length = input[0].size();
    const std::size_t filters = w.size();
    const std::size_t k_size = w[0][0].size();
    const std::size_t left = (k_size - 1) / 2;
    const std::size_t right = k_size - 1 - left;

    std::vector<std::vector<double>> padded(channels, std::vector<double>(left + length + right, 0.0));
    for (std::size_t c = 0; c < channels; ++c) {
        for (std::size_t i = 0; i < length; ++i) {
            padded[c][left + i] = input[c][i];
        }
    }
    std::vector<std::vector<double>> out(filters, std::vector<double>(length, 0.0));
    for (std::size_t f = 0; f < filters; ++f) {
        for (std::size_t i = 0; i < length; ++i) {
            double acc = b[f];
            for (std::size_t c = 0; c < channels; ++c) {
                for (std::size_t k = 0; k < k_size; ++k) {
                    acc += w[f][c][k] * padded[c][i + k];
                }
            }
            out[f][i] = acc;
        }
    }
    return out;
}

/// Winding from a continuous lift: unwrap atan2 angles by adding multiples of
/// 2*pi so each step lies within (-pi, pi], then (theta_L - theta_1) / 2pi.
inline double lift_winding(const std::vector<double>& re, const std::vector<double>& im)
{
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double lift = std::atan2(im[0], re[0]);
    const double start = lift;
    double previous_angle = lift;
    for (std::size_t i = 1; i < re.size(); ++i) {
        const double angle = std::atan2(im[i], re[i]);
        double step = angle - previous_angle;
        while (step > std::numbers::pi) {
            step -= two_pi;
        }
        while (step <= -std::numbers::pi) {
            step += two_pi;
        }
        lift += step;
        previous_angle = angle;
    }
    return (lift - start) / two_pi;
}

/// Rank of the true class by sorting class indices by (probability desc,
/// index asc) and locating the true class.
inline std::size_t sorted_rank(const std::vector<double>& p, std::size_t true_class)
{
    std::vector<std::size_t> idx(p.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        idx[i] = i;
    }
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return p[a] > p[b]; });
    return static_cast<std::size_t>(std::find(idx.begin(), idx.end(), true_class) - idx.begin()) + 1;
}

} // namespace windnet::testing
