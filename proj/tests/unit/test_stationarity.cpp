#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>

#include "bellrand/stationarity.hpp"
#include "support/oracles.hpp"

using namespace bellrand;

namespace {

// Dense least squares on the full ADF design matrix.
double adf_oracle(const std::vector<double>& y, std::size_t p) {
    const std::size_t n = y.size(), rows = n - 1 - p, cols = 2 + p;
    Eigen::MatrixXd x(rows, cols);
    Eigen::VectorXd dy(rows);
    for (std::size_t r = 0; r < rows; ++r) {
        const std::size_t t = r + p + 1;
        dy(r) = y[t] - y[t - 1];
        x(r, 0) = 1.0;
        x(r, 1) = y[t - 1];
        for (std::size_t i = 1; i <= p; ++i) x(r, 1 + i) = y[t - i] - y[t - i - 1];
    }
    const Eigen::VectorXd b = x.householderQr().solve(dy);
    const double s2 = (dy - x * b).squaredNorm() / static_cast<double>(rows - cols);
    const Eigen::MatrixXd cov = s2 * (x.transpose() * x).inverse();
    return b(1) / std::sqrt(cov(1, 1));
}

double kpss_oracle(const std::vector<double>& y, std::size_t l) {
    const std::size_t n = y.size();
    Eigen::MatrixXd x(n, 2);
    Eigen::VectorXd v(n);
    for (std::size_t t = 0; t < n; ++t) {
        x(t, 0) = 1.0;
        x(t, 1) = static_cast<double>(t + 1);
        v(t) = y[t];
    }
    const Eigen::VectorXd e = v - x * x.householderQr().solve(v);
    double lr = e.squaredNorm() / static_cast<double>(n);
    for (std::size_t s = 1; s <= l; ++s) {
        double g = 0;
        for (std::size_t t = s; t < n; ++t) g += e(t) * e(t - s);
        lr += 2.0 * (1.0 - static_cast<double>(s) / static_cast<double>(l + 1)) * g / static_cast<double>(n);
    }
    double cum = 0, eta = 0;
    for (std::size_t t = 0; t < n; ++t) {
        cum += e(t);
        eta += cum * cum;
    }
    return eta / (static_cast<double>(n) * static_cast<double>(n) * lr);
}

} // namespace

TEST(Stationarity, LagRules) {
    EXPECT_EQ(schwert_lags(100), 12u);
    EXPECT_EQ(schwert_lags(10000), 37u);
    EXPECT_EQ(kpss_bandwidth(100), 4u);
    EXPECT_EQ(kpss_bandwidth(10000), 12u);
}

TEST(Stationarity, AdfMatchesDenseRegression) {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        auto y = seed % 2 ? oracle::random_walk(3000, seed) : oracle::gaussian_noise(3000, seed);
        const auto r = adf_test(y);
        EXPECT_NEAR(r.statistic, adf_oracle(y, schwert_lags(y.size())), 1e-6 * std::max(1.0, std::abs(r.statistic)));
    }
}

TEST(Stationarity, KpssMatchesDirectFormula) {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        auto y = seed % 2 ? oracle::random_walk(2000, seed) : oracle::gaussian_noise(2000, seed);
        const auto r = kpss_test(y);
        EXPECT_NEAR(r.statistic, kpss_oracle(y, kpss_bandwidth(y.size())), 1e-9 * std::max(1.0, r.statistic));
    }
}

TEST(Stationarity, CriticalValues) {
    const auto y = oracle::gaussian_noise(10000, 1);
    EXPECT_NEAR(adf_test(y, 0.05).critical_value, -2.862, 0.002);
    EXPECT_NEAR(adf_test(y, 0.01).critical_value, -3.431, 0.002);
    EXPECT_DOUBLE_EQ(kpss_test(y, 0.05).critical_value, 0.146);
    EXPECT_DOUBLE_EQ(kpss_test(y, 0.05, false).critical_value, 0.463);
    EXPECT_THROW(adf_test(y, 0.2), Error);
}

TEST(Stationarity, IidRejectsUnitRootKeepsStationarity) {
    int adf1 = 0, kpss0 = 0;
    const int seeds = 40;
    for (int s = 0; s < seeds; ++s) {
        const auto y = oracle::gaussian_noise(10000, 1000 + static_cast<std::uint64_t>(s));
        adf1 += adf_test(y).flag;
        kpss0 += 1 - kpss_test(y).flag;
    }
    EXPECT_GE(adf1, seeds * 95 / 100);
    EXPECT_GE(kpss0, seeds * 90 / 100);
}

TEST(Stationarity, RandomWalkKeepsUnitRootRejectsStationarity) {
    int adf0 = 0, kpss1 = 0;
    const int seeds = 40;
    for (int s = 0; s < seeds; ++s) {
        const auto y = oracle::random_walk(10000, 2000 + static_cast<std::uint64_t>(s));
        adf0 += 1 - adf_test(y).flag;
        kpss1 += kpss_test(y).flag;
    }
    EXPECT_GE(adf0, seeds * 90 / 100);
    EXPECT_GE(kpss1, seeds * 90 / 100);
}

TEST(Stationarity, TrendPlusNoiseIsTrendStationary) {
    auto y = oracle::gaussian_noise(10000, 77);
    for (std::size_t t = 0; t < y.size(); ++t) y[t] = 0.1 * y[t] + 0.003 * static_cast<double>(t);
    EXPECT_EQ(kpss_test(y).flag, 0);
}

TEST(Stationarity, Errors) {
    const std::vector<double> c(500, 3.0);
    try {
        adf_test(c);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::singular_regression);
    }
    EXPECT_THROW(kpss_test(c), Error);
    const auto s = oracle::gaussian_noise(49, 1);
    try {
        kpss_test(s);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::too_short);
    }
    EXPECT_THROW(stationarity(BitVector(1000, true)), Error);
}

TEST(Stationarity, BitsUsePlusMinusOneAndAreDeterministic) {
    const auto b = oracle::random_bits(20000, 4);
    std::vector<double> pm(b.size());
    for (std::size_t i = 0; i < b.size(); ++i) pm[i] = b[i] ? 1.0 : -1.0;
    const auto x = stationarity(b), y = stationarity(std::span<const double>(pm));
    EXPECT_DOUBLE_EQ(x.adf_stat, y.adf_stat);
    EXPECT_DOUBLE_EQ(x.kpss_stat, y.kpss_stat);
    EXPECT_EQ(x.adf_flag, 1);
    const auto z = stationarity(b);
    EXPECT_EQ(x.adf_stat, z.adf_stat);
    EXPECT_EQ(x.lags_used, schwert_lags(20000));
}
