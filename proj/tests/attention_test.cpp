#include "oracles.hpp"
#include "vesselmark/attention.hpp"
#include "vesselmark/raster_io.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace vesselmark;

TEST(AttentionWeights, Examples)
{
    const Field a(3, 1, std::vector<double>{0.0, 1.0, 0.5});
    const Field w = attention_weights(a);
    EXPECT_EQ(w(0, 0), 0.5);
    EXPECT_EQ(w(1, 0), 1.5);
    EXPECT_EQ(w(2, 0), 1.0);
}

TEST(AttentionWeights, RejectsUnnormalizedInput)
{
    EXPECT_THROW(attention_weights(Field(1, 1, 1.01)), Error);
    EXPECT_THROW(attention_weights(Field(1, 1, -0.01)), Error);
}

TEST(AttentionBounds, Validation)
{
    EXPECT_THROW((AttentionBounds{0.0, 1.0}.validate()), Error);
    EXPECT_THROW((AttentionBounds{1.2, 1.0}.validate()), Error);
    EXPECT_NO_THROW((AttentionBounds{1.0, 1.0}.validate()));
}

TEST(Fuse, Examples)
{
    std::mt19937_64 rng(21);
    const Field r = oracle::random_field(16, 16, rng);
    EXPECT_EQ(fuse(r, Field(16, 16, 1.0)), r);
    const Field half = fuse(r, Field(16, 16, 0.5));
    for (std::size_t i = 0; i < r.size(); ++i)
        EXPECT_DOUBLE_EQ(half.data()[i], r.data()[i] / 2);

    const Field hot = fuse(Field(1, 1, 0.8), Field(1, 1, 1.5));
    EXPECT_NEAR(hot(0, 0), 1.2, 1e-15);
    EXPECT_EQ(quantize(hot, 8).pixels(0, 0), 255);
    EXPECT_EQ(quantize(hot, 16).pixels(0, 0), 65535);
}

TEST(Fuse, DimensionMismatch)
{
    EXPECT_THROW(fuse(Field(3, 3), Field(3, 4)), Error);
}

TEST(Fuse, PointwiseBounds)
{
    std::mt19937_64 rng(22);
    for (int trial = 0; trial < 20; ++trial) {
        const Field r = oracle::random_field(32, 32, rng);
        const Field a = oracle::random_field(32, 32, rng);
        const Field f = fuse(r, attention_weights(a));
        for (std::size_t i = 0; i < r.size(); ++i) {
            if (r.data()[i] <= 0)
                continue;
            const double ratio = f.data()[i] / r.data()[i];
            EXPECT_GE(ratio, 0.5 - 1e-15);
            EXPECT_LE(ratio, 1.5 + 1e-15);
        }
    }
}

TEST(Fuse, MonotoneInAttention)
{
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < 200; ++i) {
        const double r = u(rng), a0 = u(rng), a1 = u(rng);
        const double lo = std::min(a0, a1), hi = std::max(a0, a1);
        const double f_lo = fuse(Field(1, 1, r), attention_weights(Field(1, 1, lo)))(0, 0);
        const double f_hi = fuse(Field(1, 1, r), attention_weights(Field(1, 1, hi)))(0, 0);
        EXPECT_LE(f_lo, f_hi);
    }
}

TEST(Fuse, IdentityBoundsReproduceInput)
{
    std::mt19937_64 rng(24);
    const Field r = oracle::random_field(20, 20, rng);
    const Field a = oracle::random_field(20, 20, rng);
    EXPECT_EQ(fuse(r, attention_weights(a, {1.0, 1.0})), r);
}

TEST(ResampleBilinear, IdentityAndConstant)
{
    std::mt19937_64 rng(25);
    const Field r = oracle::random_field(9, 7, rng);
    EXPECT_EQ(resample_bilinear(r, 9, 7), r);
    const Field c = resample_bilinear(Field(10, 10, 0.3), 23, 5);
    EXPECT_EQ(c.width(), 23);
    for (double v : c)
        EXPECT_NEAR(v, 0.3, 1e-15);
}

TEST(ResampleBilinear, HalfPixelAlignment)
{
    // 2x upsampling of [0, 1]: sample centres at 0.25 and 0.75 of the source
    const Field src(2, 1, std::vector<double>{0.0, 1.0});
    const Field up = resample_bilinear(src, 4, 1);
    EXPECT_EQ(up.data(), (std::vector<double>{0.0, 0.25, 0.75, 1.0}));
}
