#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include <windnet/topo.hpp>
#include <windnet/windgen.hpp>

#include "support/oracles.hpp"

using namespace windnet;
using namespace windnet::topo;

namespace {

constexpr double two_pi = 2.0 * std::numbers::pi;

Winding wind(const std::vector<double>& re, const std::vector<double>& im) { return winding_number(re, im); }

/// Unit circle traversed n times in L - 1 equal steps, site L = site 1.
std::pair<std::vector<double>, std::vector<double>> circle(int n, std::size_t L)
{
    std::vector<double> re(L);
    std::vector<double> im(L);
    for (std::size_t i = 0; i + 1 < L; ++i) {
        const double t = two_pi * n * static_cast<double>(i) / static_cast<double>(L - 1);
        re[i] = std::cos(t);
        im[i] = std::sin(t);
    }
    re[L - 1] = re[0];
    im[L - 1] = im[0];
    return {re, im};
}

} // namespace

TEST(Topo, ConstantHasZeroWinding)
{
    const std::vector<double> re(50, 0.3);
    const std::vector<double> im(50, -0.8);
    EXPECT_EQ(wind(re, im).value, 0);
    EXPECT_EQ(wind(re, im).raw, 0.0);
}

TEST(Topo, UniformCircles)
{
    for (int n = -5; n <= 5; ++n) {
        const auto [re, im] = circle(n, 128);
        EXPECT_EQ(wind(re, im).value, n);
        EXPECT_LT(winding_residual(re, im), 1e-10);
    }
}

TEST(Topo, NoiselessGeneratorIsExact)
{
    windgen::GenParams params;
    params.noise_amplitude = 0.0;
    params.samples_per_pattern = 5;
    for (const auto& s : windgen::generate_split(params, windgen::Split::train)) {
        EXPECT_EQ(wind(s.re, s.im).value, s.label_nw) << s.id;
        EXPECT_LT(winding_residual(s.re, s.im), 1e-10);
    }
}

TEST(Topo, MixedPatternWindsThree)
{
    windgen::GenParams params;
    params.noise_amplitude = 0.0;
    const windgen::WindingPattern p{{+1, +1, +1, -1, +1}};
    const auto s = windgen::generate(p, params, 2);
    EXPECT_EQ(s.label_nw, 3);
    EXPECT_EQ(wind(s.re, s.im).value, 3);
}

TEST(Topo, AgreesWithLiftOracle)
{
    Rng rng(31);
    for (int trial = 0; trial < 10000; ++trial) {
        const std::size_t L = 2 + rng.below(60);
        std::vector<double> re(L);
        std::vector<double> im(L);
        double theta = rng.uniform(-3.0, 3.0);
        for (std::size_t i = 0; i + 1 < L; ++i) {
            theta += rng.normal() * 1.2;
            const double r = rng.uniform(0.1, 2.0);
            re[i] = r * std::cos(theta);
            im[i] = r * std::sin(theta);
        }
        re[L - 1] = re[0];
        im[L - 1] = im[0];
        const double lifted = windnet::testing::lift_winding(re, im);
        ASSERT_EQ(wind(re, im).value, std::lround(lifted));
    }
}

TEST(Topo, DefaultNoiseResidualsAreSmall)
{
    // Periodic sequences close the loop, so the raw sum is an integer up to
    // rounding error whatever the noise.
    windgen::GenParams params;
    params.samples_per_pattern = 20;
    std::size_t below_tenth = 0;
    const auto data = windgen::generate_split(params, windgen::Split::test);
    for (const auto& s : data) {
        const double r = winding_residual(s.re, s.im);
        EXPECT_LT(r, 0.5);
        below_tenth += r < 0.1 ? 1 : 0;
    }
    EXPECT_GE(static_cast<double>(below_tenth), 0.95 * static_cast<double>(data.size()));
}

TEST(Topo, InvariantUnderGlobalRotationAndScale)
{
    Rng rng(32);
    windgen::GenParams params;
    params.samples_per_pattern = 2;
    for (const auto& s : windgen::generate_split(params, windgen::Split::train)) {
        const std::complex<double> rot = std::polar(rng.uniform(0.5, 3.0), rng.uniform(-3.0, 3.0));
        std::vector<double> re(s.sites());
        std::vector<double> im(s.sites());
        std::vector<double> conj_im(s.sites());
        for (std::size_t i = 0; i < s.sites(); ++i) {
            const auto z = rot * std::complex<double>(s.re[i], s.im[i]);
            re[i] = z.real();
            im[i] = z.imag();
            conj_im[i] = -s.im[i];
        }
        const int w = wind(s.re, s.im).value;
        EXPECT_EQ(wind(re, im).value, w);
        EXPECT_EQ(wind(s.re, conj_im).value, -w);
    }
}

TEST(Topo, HalfTurnCountsPositive)
{
    // (1,0) -> (-1,0) is exactly pi, taken as +pi.
    EXPECT_EQ(phase_step(1.0, 0.0, -1.0, 0.0), std::numbers::pi);
    EXPECT_EQ(phase_step(-1.0, 0.0, 1.0, 0.0), std::numbers::pi);
    EXPECT_EQ(wind({1.0, -1.0, 1.0}, {0.0, 0.0, 0.0}).value, 1);
}

TEST(Topo, InputErrors)
{
    EXPECT_THROW(wind({1.0, 1.0}, {0.0}), ShapeError);
    EXPECT_THROW(wind({1.0}, {0.0}), Error);
    EXPECT_THROW(wind({1.0, 0.0, 1.0}, {0.0, 1e-12, 0.0}), Error);
}

TEST(Topo, InvariantUnderCyclicRotation)
{
    windgen::GenParams params;
    params.samples_per_pattern = 2;
    Rng rng(33);
    for (const auto& s : windgen::generate_split(params, windgen::Split::test)) {
        const std::size_t n = s.sites() - 1;
        const std::size_t shift = 1 + rng.below(n - 1);
        std::vector<double> re(s.sites());
        std::vector<double> im(s.sites());
        for (std::size_t i = 0; i < n; ++i) {
            re[i] = s.re[(i + shift) % n];
            im[i] = s.im[(i + shift) % n];
        }
        re[n] = re[0];
        im[n] = im[0];
        EXPECT_EQ(wind(re, im).value, wind(s.re, s.im).value);
    }
}
