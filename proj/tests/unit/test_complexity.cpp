#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "bellrand/complexity.hpp"
#include "support/oracles.hpp"

using namespace bellrand;

static std::string bit_string(std::uint32_t v, int len) {
    std::string s;
    for (int i = 0; i < len; ++i) s += ((v >> i) & 1u) ? '1' : '0';
    return s;
}

TEST(Lz76, MatchesBruteForceOnAllShortStrings) {
    for (int len = 1; len <= 12; ++len)
        for (std::uint32_t v = 0; v < (1u << len); ++v) {
            const auto s = bit_string(v, len);
            ASSERT_EQ(lz76_phrase_count(BitVector::from_string(s)), oracle::lz76(s)) << s;
        }
}

TEST(Lz76, MatchesBruteForceOnRandomLongerStrings) {
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        const auto b = oracle::random_bits(300 + 17 * seed, seed, seed % 2 ? 0.5 : 0.8);
        EXPECT_EQ(lz76_phrase_count(b), oracle::lz76(b.to_string()));
    }
}

TEST(Lz76, ReferenceParse) {
    // 0 | 001 | 10 | 100 | 1000 | 101
    EXPECT_EQ(lz76_phrase_count(BitVector::from_string("0001101001000101")), 6u);
}

TEST(Lz76, ConstantAndPeriodicSeriesAreSimple) {
    EXPECT_EQ(lz76_phrase_count(BitVector(1000, false)), 2u);
    BitVector alt;
    for (int i = 0; i < 1000; ++i) alt.push_back(i % 2);
    EXPECT_EQ(lz76_phrase_count(alt), 3u);
}

TEST(Lz76, EmptySeriesThrows) {
    try {
        lz76_phrase_count(BitVector{});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::empty_series);
    }
}

TEST(Kc, Normalization) {
    const auto b = BitVector::from_string("0001101001000101");
    const auto r = kc(b);
    EXPECT_EQ(r.phrase_count, 6u);
    EXPECT_DOUBLE_EQ(r.kc, 6.0 * 4.0 / 16.0);
}

TEST(Kc, RandomNearOnePeriodicNearZero) {
    EXPECT_NEAR(kc(oracle::random_bits(100000, 7)).kc, 1.0, 0.05);
    BitVector per;
    for (int i = 0; i < 100000; ++i) per.push_back((i % 7) < 3);
    EXPECT_LT(kc(per).kc, 0.01);
}

TEST(Kc, TooShort) { EXPECT_THROW(kc(BitVector::from_string("1")), Error); }

TEST(MinEntropy, Definitions) {
    const auto r = min_entropy(BitVector::from_string("0001"));
    EXPECT_NEAR(r.h_min, -std::log2(0.75), 1e-12);
    EXPECT_NEAR(r.shannon, -(0.75 * std::log2(0.75) + 0.25 * std::log2(0.25)), 1e-12);
    EXPECT_DOUBLE_EQ(r.max_prob, 0.75);
    EXPECT_DOUBLE_EQ(min_entropy(BitVector::from_string("0101")).h_min, 1.0);
    EXPECT_DOUBLE_EQ(min_entropy(BitVector(10, true)).h_min, 0.0);
}

TEST(MinEntropy, BoundedByShannon) {
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto r = min_entropy(oracle::random_bits(1000, seed, 0.05 + 0.018 * static_cast<double>(seed)));
        EXPECT_LE(r.h_min, r.shannon + 1e-12);
    }
}

TEST(ChshBound, ReferenceValues) {
    EXPECT_DOUBLE_EQ(chsh_min_entropy_bound(2.0 * std::numbers::sqrt2), 1.0);
    EXPECT_NEAR(chsh_min_entropy_bound(2.73), 0.546, 0.001);
    EXPECT_DOUBLE_EQ(chsh_min_entropy_bound(2.0), 0.0);
    EXPECT_DOUBLE_EQ(chsh_min_entropy_bound(1.5), 0.0);
}

TEST(ChshBound, MonotoneAboveLocalBound) {
    double prev = 0.0;
    for (double s = 2.0; s <= 2.0 * std::numbers::sqrt2; s += 0.01) {
        const double b = chsh_min_entropy_bound(s);
        EXPECT_GE(b, prev);
        prev = b;
    }
}

TEST(ChshBound, AboveTsirelsonThrows) {
    try {
        chsh_min_entropy_bound(2.9);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::out_of_range);
    }
}

TEST(Hurst, IidNearHalf) {
    const auto h = hurst_exponent(oracle::random_bits(100000, 11));
    EXPECT_NEAR(h.h, 0.5, 0.05);
    EXPECT_GT(h.fit_r2, 0.9);
    EXPECT_EQ(h.fit_points.front().first, std::log(16.0));
}

TEST(Hurst, RandomWalkLevelsNearOne) {
    const auto walk = oracle::random_walk(100000, 3);
    EXPECT_GT(hurst_exponent(walk).h, 0.9);
}

TEST(Hurst, Errors) {
    EXPECT_THROW(hurst_exponent(oracle::random_bits(255, 1)), Error);
    try {
        hurst_exponent(BitVector(1000, true));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::degenerate_variance);
    }
}

TEST(Zurek, RandomSeriesSatisfyBound) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto z = zurek_check(oracle::random_bits(20000, seed, 0.5 + 0.02 * static_cast<double>(seed % 10)));
        EXPECT_TRUE(z.satisfied) << "kc " << z.kc << " h_min " << z.h_min;
    }
}
