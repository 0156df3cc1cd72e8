#include <gtest/gtest.h>

#include <chrono>

#include "bellrand/complexity.hpp"
#include "bellrand/toeplitz.hpp"
#include "support/oracles.hpp"

using namespace bellrand;

namespace {

std::vector<std::vector<int>> dense(const ToeplitzMatrix& t) {
    std::vector<std::vector<int>> a(t.rows(), std::vector<int>(t.cols()));
    for (std::size_t i = 0; i < t.rows(); ++i)
        for (std::size_t j = 0; j < t.cols(); ++j) a[i][j] = t.entry(i, j);
    return a;
}

std::vector<int> as_ints(const BitVector& b) {
    std::vector<int> v(b.size());
    for (std::size_t i = 0; i < b.size(); ++i) v[i] = b[i];
    return v;
}

BitVector xor_of(const BitVector& a, const BitVector& b) {
    BitVector out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out.set(i, a[i] != b[i]);
    return out;
}

BitSeries raw_series(std::size_t n, std::uint64_t seed, double p) {
    BitSeries s;
    s.bits = oracle::random_bits(n, seed, p);
    s.provenance.kind = SeriesKind::TD;
    s.provenance.threshold_ps = 1234;
    return s;
}

} // namespace

TEST(Toeplitz, OneByOne) {
    const auto b = build_toeplitz(BitVector::from_string("1"), 1, 1);
    EXPECT_EQ(b.bits_consumed, 1u);
    EXPECT_TRUE(b.matrix.entry(0, 0));
}

TEST(Toeplitz, TwoByTwoHandConstruction) {
    const auto b = build_toeplitz(BitVector::from_string("101"), 2, 2);
    EXPECT_EQ(dense(b.matrix), (std::vector<std::vector<int>>{{1, 0}, {1, 1}}));
    EXPECT_EQ(extract(b.matrix, BitVector::from_string("11")).to_string(), "10");
    EXPECT_EQ(extract(b.matrix, BitVector::from_string("00")).to_string(), "00");
}

TEST(Toeplitz, RowThenColumnLayout) {
    const auto raw = oracle::random_bits(40, 5);
    const std::size_t m = 7, n = 11, off = 3;
    const auto b = build_toeplitz(raw, m, n, off);
    EXPECT_EQ(b.bits_consumed, n + m - 1);
    for (std::size_t j = 0; j < n; ++j) EXPECT_EQ(b.matrix.entry(0, j), raw[off + j]);
    for (std::size_t i = 1; i < m; ++i) EXPECT_EQ(b.matrix.entry(i, 0), raw[off + n - 1 + i]);
    for (std::size_t i = 0; i + 1 < m; ++i)
        for (std::size_t j = 0; j + 1 < n; ++j) EXPECT_EQ(b.matrix.entry(i, j), b.matrix.entry(i + 1, j + 1));
}

TEST(Toeplitz, DefaultDimsConsume) {
    const auto raw = oracle::random_bits(32767, 1);
    EXPECT_EQ(build_toeplitz(raw, 16384, 16384).bits_consumed, 32767u);
    EXPECT_EQ(toeplitz_block_cost(16384, 16384), 49151u);
}

TEST(Toeplitz, MatchesDenseOracleAtSmallDims) {
    std::uint64_t seed = 0;
    for (std::size_t m = 1; m <= 16; ++m)
        for (std::size_t n = 1; n <= 16; ++n) {
            const auto raw = oracle::random_bits(n + m - 1, ++seed);
            const auto t = build_toeplitz(raw, m, n).matrix;
            for (int trial = 0; trial < 4; ++trial) {
                const auto x = oracle::random_bits(n, seed * 131 + static_cast<std::uint64_t>(trial));
                ASSERT_EQ(as_ints(extract(t, x)), oracle::gf2_multiply(dense(t), as_ints(x))) << m << "x" << n;
            }
        }
}

TEST(Toeplitz, MatchesDenseOracleAcrossWordBoundaries) {
    for (std::size_t m : {63u, 64u, 65u, 130u})
        for (std::size_t n : {1u, 63u, 64u, 65u, 129u}) {
            const auto t = build_toeplitz(oracle::random_bits(n + m - 1, m * 1000 + n), m, n).matrix;
            const auto x = oracle::random_bits(n, m + n);
            ASSERT_EQ(as_ints(extract(t, x)), oracle::gf2_multiply(dense(t), as_ints(x))) << m << "x" << n;
        }
}

TEST(Toeplitz, LinearInSeed) {
    for (std::uint64_t c = 0; c < 10000; ++c) {
        const std::size_t m = 1 + c % 40, n = 1 + (c / 40) % 40;
        const auto t = build_toeplitz(oracle::random_bits(n + m - 1, c), m, n).matrix;
        const auto x = oracle::random_bits(n, c + 1'000'000), y = oracle::random_bits(n, c + 2'000'000);
        ASSERT_EQ(extract(t, xor_of(x, y)), xor_of(extract(t, x), extract(t, y)));
    }
}

TEST(Toeplitz, Errors) {
    auto code = [](auto&& f) {
        try {
            f();
        } catch (const Error& e) {
            return e.code();
        }
        return Errc::io;
    };
    EXPECT_EQ(code([] { build_toeplitz(BitVector::from_string("10"), 2, 2); }), Errc::insufficient_bits);
    EXPECT_EQ(code([] { build_toeplitz(BitVector::from_string("1011"), 2, 2, 2); }), Errc::insufficient_bits);
    const auto t = build_toeplitz(BitVector::from_string("101"), 2, 2).matrix;
    EXPECT_EQ(code([&] { extract(t, BitVector::from_string("1")); }), Errc::length_mismatch);
    EXPECT_EQ(code([] { ToeplitzMatrix(2, 2, BitVector::from_string("10")); }), Errc::length_mismatch);
    EXPECT_EQ(code([] { ToeplitzMatrix(0, 2, BitVector::from_string("1")); }), Errc::out_of_range);
    EXPECT_EQ(code([] { extract_series(raw_series(49150, 1, 0.5)); }), Errc::insufficient_bits);
}

TEST(ExtractSeries, OneDefaultBlock) {
    const auto raw = raw_series(49151, 2, 0.5);
    const auto t0 = std::chrono::steady_clock::now();
    const auto out = extract_series(raw);
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    EXPECT_EQ(out.bits.size(), 16384u);
    EXPECT_TRUE(out.provenance.extracted);
    EXPECT_EQ(out.provenance.kind, SeriesKind::TD);
    EXPECT_EQ(out.provenance.threshold_ps, 1234);
    EXPECT_LT(secs, 10.0);
    // block equals the explicit build-then-multiply composition
    const auto b = build_toeplitz(raw.bits, 16384, 16384);
    EXPECT_EQ(out.bits, extract(b.matrix, raw.bits.slice(32767, 16384)));
}

TEST(ExtractSeries, SuccessiveBlocksAndFreeze) {
    ExtractOptions opt;
    opt.m = 32;
    opt.n = 48;
    const auto raw = raw_series(3 * toeplitz_block_cost(32, 48) + 10, 3, 0.5);
    const auto out = extract_series(raw, opt);
    EXPECT_EQ(out.bits.size(), 3u * 32);
    const std::size_t cost = toeplitz_block_cost(32, 48);
    const auto second = build_toeplitz(raw.bits, 32, 48, cost);
    EXPECT_EQ(out.bits.slice(32, 32), extract(second.matrix, raw.bits.slice(cost + 79, 48)));

    opt.freeze_matrix = true;
    const auto frozen = extract_series(raw, opt);
    // first block costs 2n+m-1, later ones n bits each
    EXPECT_EQ(frozen.bits.size(), 32u * (1 + (raw.bits.size() - cost) / 48));
    const auto first = build_toeplitz(raw.bits, 32, 48).matrix;
    EXPECT_EQ(frozen.bits.slice(32, 32), extract(first, raw.bits.slice(cost, 48)));
    EXPECT_EQ(extract_series(raw, opt).bits, frozen.bits);
}

TEST(ExtractSeries, BiasedInputBecomesBalanced) {
    const auto out = extract_series(raw_series(49151, 17, 0.75));
    const double ones = static_cast<double>(out.bits.count_ones()) / static_cast<double>(out.bits.size());
    EXPECT_NEAR(ones, 0.5, 0.02);
    EXPECT_GT(min_entropy(out.bits).h_min, 0.95);
}
