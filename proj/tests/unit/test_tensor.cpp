#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <set>

#include <windnet/base64.hpp>
#include <windnet/checkpoint.hpp>
#include <windnet/random.hpp>
#include <windnet/tensor.hpp>
#include <windnet/text_io.hpp>

using namespace windnet;

TEST(Tensor, ShapeAndIndexing)
{
    Tensor t({2, 3, 4});
    EXPECT_EQ(t.size(), 24u);
    EXPECT_EQ(t.rank(), 3u);
    t.at(1, 2, 3) = 5.0;
    EXPECT_EQ(t[23], 5.0);
    Tensor m({2, 3}, {1, 2, 3, 4, 5, 6});
    EXPECT_EQ(m.at(1, 0), 4.0);
    EXPECT_EQ(m.reshaped({6})[5], 6.0);
}

TEST(Tensor, RejectsBadShapes)
{
    EXPECT_THROW(Tensor(Shape{}), ShapeError);
    EXPECT_THROW(Tensor({1, 2, 3, 4}), ShapeError);
    EXPECT_THROW(Tensor({2, 0}), ShapeError);
    EXPECT_THROW(Tensor({2, 2}, {1.0, 2.0, 3.0}), ShapeError);
    EXPECT_THROW(Tensor({4}).reshaped({3}), ShapeError);
}

TEST(Tensor, FiniteCheck)
{
    Tensor t({3}, 1.0);
    EXPECT_TRUE(t.all_finite());
    t[1] = std::numeric_limits<double>::quiet_NaN();
    EXPECT_FALSE(t.all_finite());
}

TEST(Random, SameSeedSameStream)
{
    Rng a(42);
    Rng b(42);
    for (int i = 0; i < 100; ++i) {
        EXPECT_EQ(a.next(), b.next());
    }
    Rng c(43);
    EXPECT_NE(Rng(42).next(), c.next());
}

TEST(Random, DeriveSeedDependsOnOrder)
{
    EXPECT_NE(derive_seed(1, {2, 3}), derive_seed(1, {3, 2}));
    EXPECT_NE(derive_seed(1, {2}), derive_seed(2, {2}));
    EXPECT_EQ(derive_seed(7, {1, 2, 3}), derive_seed(7, {1, 2, 3}));
}

TEST(Random, UniformMomentsAndRange)
{
    Rng rng(5);
    double sum = 0.0;
    double sq = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        sum += u;
        sq += u * u;
    }
    EXPECT_NEAR(sum / n, 0.5, 0.005);
    EXPECT_NEAR(sq / n - (sum / n) * (sum / n), 1.0 / 12.0, 0.002);
}

TEST(Random, NormalMoments)
{
    Rng rng(6);
    double sum = 0.0;
    double sq = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double z = rng.normal();
        sum += z;
        sq += z * z;
    }
    EXPECT_NEAR(sum / n, 0.0, 0.01);
    EXPECT_NEAR(sq / n, 1.0, 0.02);
}

TEST(Random, BelowCoversRange)
{
    Rng rng(7);
    std::vector<int> counts(11, 0);
    for (int i = 0; i < 110000; ++i) {
        ++counts[rng.below(11)];
    }
    for (int c : counts) {
        EXPECT_NEAR(c, 10000, 500);
    }
}

TEST(Random, ShuffleIsPermutation)
{
    Rng rng(8);
    std::vector<int> v(50);
    for (int i = 0; i < 50; ++i) {
        v[i] = i;
    }
    rng.shuffle(std::span<int>(v));
    EXPECT_EQ(std::set<int>(v.begin(), v.end()).size(), 50u);
}

TEST(Base64, KnownVectors)
{
    const std::string text = "foobar";
    std::vector<std::uint8_t> bytes(text.begin(), text.end());
    EXPECT_EQ(base64_encode(std::span<const std::uint8_t>(bytes.data(), 0)), "");
    EXPECT_EQ(base64_encode(std::span<const std::uint8_t>(bytes.data(), 1)), "Zg==");
    EXPECT_EQ(base64_encode(std::span<const std::uint8_t>(bytes.data(), 2)), "Zm8=");
    EXPECT_EQ(base64_encode(bytes), "Zm9vYmFy");
    EXPECT_EQ(base64_decode("Zm9vYmE="), std::vector<std::uint8_t>(bytes.begin(), bytes.end() - 1));
    EXPECT_THROW(base64_decode("Zm9"), Error);
    EXPECT_THROW(base64_decode("Zm9!"), Error);
}

TEST(Base64, DoublesRoundTripBitwise)
{
    const std::vector<double> v{0.0, -0.0, 1.0 / 3.0, -1e-300, 1e300, std::numeric_limits<double>::denorm_min()};
    const auto back = decode_doubles(encode_doubles(v));
    ASSERT_EQ(back.size(), v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        EXPECT_EQ(std::bit_cast<std::uint64_t>(back[i]), std::bit_cast<std::uint64_t>(v[i]));
    }
    // 1.0 as little-endian f64.
    EXPECT_EQ(encode_doubles(std::vector<double>{1.0}), "AAAAAAAA8D8=");
}

TEST(TextIo, RealFormatting)
{
    EXPECT_EQ(format_real(0.1), "0.10000000000000001");
    EXPECT_EQ(format_real(1.0), "1");
    EXPECT_EQ(std::stod(format_real(1.0 / 3.0)), 1.0 / 3.0);
    EXPECT_THROW(format_real(std::numeric_limits<double>::infinity()), Error);
}

TEST(Checkpoint, HeaderChecks)
{
    auto doc = checkpoint_header("ae");
    EXPECT_NO_THROW(check_checkpoint_header(doc, "ae"));
    EXPECT_THROW(check_checkpoint_header(doc, "probe"), Error);
    doc["format_version"] = 2;
    EXPECT_THROW(check_checkpoint_header(doc, "ae"), Error);
    EXPECT_THROW(parse_checkpoint("{not json"), Error);
}
