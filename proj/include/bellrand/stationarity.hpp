#pragma once

// Unit-root (ADF) and trend-stationarity (KPSS) tests with 0/1 flags:
// adf = 1 means the unit root is rejected, kpss = 1 means stationarity is
// rejected.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "bellrand/bits.hpp"
#include "bellrand/error.hpp"

namespace bellrand {

inline constexpr std::size_t min_length_stationarity = 50;

struct AdfResult {
    double statistic = 0.0;
    double critical_value = 0.0;
    int flag = 0;
    std::size_t lags = 0;
};

struct KpssResult {
    double statistic = 0.0;
    double critical_value = 0.0;
    int flag = 0;
    std::size_t bandwidth = 0;
    bool trend = true;
};

struct StationarityResult {
    double adf_stat = 0.0;
    int adf_flag = 0;
    double kpss_stat = 0.0;
    int kpss_flag = 0;
    std::size_t lags_used = 0;
    double alpha = 0.05;
};

namespace detail {

inline std::size_t level_index(double alpha) {
    if (std::abs(alpha - 0.01) < 1e-12) return 0;
    if (std::abs(alpha - 0.05) < 1e-12) return 1;
    if (std::abs(alpha - 0.10) < 1e-12) return 2;
    throw Error(Errc::out_of_range, "significance level must be 0.01, 0.05 or 0.10");
}

// MacKinnon (2010) response surface, constant-only regression:
// cv(T) = b_inf + b1/T + b2/T^2 + b3/T^3
inline double adf_critical_value(double alpha, double t) {
    static constexpr std::array<std::array<double, 4>, 3> coef = {{
        {-3.43035, -6.5393, -16.786, -79.433},
        {-2.86154, -2.8903, -4.234, -40.040},
        {-2.56677, -1.5384, -2.809, 0.0},
    }};
    const auto& c = coef[level_index(alpha)];
    return c[0] + c[1] / t + c[2] / (t * t) + c[3] / (t * t * t);
}

inline double kpss_critical_value(double alpha, bool trend) {
    static constexpr std::array<double, 3> level = {0.739, 0.463, 0.347};
    static constexpr std::array<double, 3> with_trend = {0.216, 0.146, 0.119};
    return (trend ? with_trend : level)[level_index(alpha)];
}

} // namespace detail

inline std::size_t schwert_lags(std::size_t n) {
    return static_cast<std::size_t>(std::floor(12.0 * std::pow(static_cast<double>(n) / 100.0, 0.25)));
}

inline std::size_t kpss_bandwidth(std::size_t n) {
    return static_cast<std::size_t>(std::floor(4.0 * std::pow(static_cast<double>(n) / 100.0, 0.25)));
}

/// Augmented Dickey-Fuller regression with constant:
///   dy_t = c + g*y_{t-1} + sum_{i=1..p} b_i dy_{t-i} + e_t,
/// statistic is the t-ratio of g.
inline AdfResult adf_test(std::span<const double> y, double alpha = 0.05) {
    const std::size_t n = y.size();
    if (n < min_length_stationarity) throw Error(Errc::too_short, "ADF needs at least 50 samples");
    const std::size_t p = schwert_lags(n);
    if (n < p + 4) throw Error(Errc::too_short, "not enough samples for the lag order");
    const std::size_t rows = n - 1 - p;
    const std::size_t cols = 2 + p;

    // Normal equations accumulated in row chunks; the full design matrix is
    // never materialized.
    auto fill_row = [&](std::size_t r, auto&& row) {
        const std::size_t t = r + p + 1; // dy_t = y_t - y_{t-1}
        row(0) = 1.0;
        row(1) = y[t - 1];
        for (std::size_t i = 1; i <= p; ++i) row(static_cast<Eigen::Index>(1 + i)) = y[t - i] - y[t - i - 1];
        return y[t] - y[t - 1];
    };
    constexpr std::size_t chunk = 1024;
    Eigen::MatrixXd xtx = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(cols), static_cast<Eigen::Index>(cols));
    Eigen::VectorXd xty = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(cols));
    Eigen::MatrixXd block(static_cast<Eigen::Index>(chunk), static_cast<Eigen::Index>(cols));
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(chunk));
    for (std::size_t r0 = 0; r0 < rows; r0 += chunk) {
        const std::size_t m = std::min(chunk, rows - r0);
        for (std::size_t k = 0; k < m; ++k) rhs(static_cast<Eigen::Index>(k)) = fill_row(r0 + k, block.row(static_cast<Eigen::Index>(k)));
        const auto b = block.topRows(static_cast<Eigen::Index>(m));
        xtx.noalias() += b.transpose() * b;
        xty.noalias() += b.transpose() * rhs.head(static_cast<Eigen::Index>(m));
    }
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(xtx);
    qr.setThreshold(1e-10);
    if (qr.rank() < static_cast<Eigen::Index>(cols)) throw Error(Errc::singular_regression, "ADF design matrix is rank deficient");
    const Eigen::VectorXd beta = qr.solve(xty);
    double rss = 0.0;
    Eigen::VectorXd row(static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < rows; ++r) {
        const double target = fill_row(r, row);
        const double res = target - row.dot(beta);
        rss += res * res;
    }
    const double dof = static_cast<double>(rows - cols);
    const double sigma2 = rss / dof;
    const Eigen::MatrixXd inv = qr.inverse();
    const double se = std::sqrt(sigma2 * inv(1, 1));
    if (!(se > 0.0) || !std::isfinite(se)) throw Error(Errc::singular_regression, "zero residual variance");

    AdfResult r;
    r.lags = p;
    r.statistic = beta(1) / se;
    r.critical_value = detail::adf_critical_value(alpha, static_cast<double>(rows));
    r.flag = r.statistic < r.critical_value ? 1 : 0;
    return r;
}

/// KPSS with Bartlett-kernel Newey-West long-run variance. With `trend`
/// the residuals come from a regression on (1, t); otherwise on 1.
inline KpssResult kpss_test(std::span<const double> y, double alpha = 0.05, bool trend = true) {
    const std::size_t n = y.size();
    if (n < min_length_stationarity) throw Error(Errc::too_short, "KPSS needs at least 50 samples");
    const double nn = static_cast<double>(n);

    std::vector<double> e(n);
    double mean_y = 0.0;
    for (double v : y) mean_y += v;
    mean_y /= nn;
    if (trend) {
        const double mean_t = (nn - 1.0) / 2.0;
        double sty = 0.0, stt = 0.0;
        for (std::size_t t = 0; t < n; ++t) {
            const double dt = static_cast<double>(t) - mean_t;
            sty += dt * (y[t] - mean_y);
            stt += dt * dt;
        }
        const double slope = sty / stt;
        for (std::size_t t = 0; t < n; ++t) e[t] = y[t] - mean_y - slope * (static_cast<double>(t) - mean_t);
    } else {
        for (std::size_t t = 0; t < n; ++t) e[t] = y[t] - mean_y;
    }

    const std::size_t l = kpss_bandwidth(n);
    double s2 = 0.0;
    for (double v : e) s2 += v * v;
    for (std::size_t s = 1; s <= l && s < n; ++s) {
        double acc = 0.0;
        for (std::size_t t = s; t < n; ++t) acc += e[t] * e[t - s];
        s2 += 2.0 * (1.0 - static_cast<double>(s) / static_cast<double>(l + 1)) * acc;
    }
    s2 /= nn;
    if (!(s2 > 0.0)) throw Error(Errc::degenerate_variance, "KPSS long-run variance is zero");

    double cum = 0.0, eta = 0.0;
    for (double v : e) {
        cum += v;
        eta += cum * cum;
    }
    KpssResult r;
    r.trend = trend;
    r.bandwidth = l;
    r.statistic = eta / (nn * nn * s2);
    r.critical_value = detail::kpss_critical_value(alpha, trend);
    r.flag = r.statistic > r.critical_value ? 1 : 0;
    return r;
}

inline StationarityResult stationarity(std::span<const double> y, double alpha = 0.05) {
    const auto adf = adf_test(y, alpha);
    const auto kpss = kpss_test(y, alpha, true);
    return {adf.statistic, adf.flag, kpss.statistic, kpss.flag, adf.lags, alpha};
}

/// Bits are tested as the +/-1 sequence.
inline StationarityResult stationarity(const BitVector& bits, double alpha = 0.05) {
    std::vector<double> y(bits.size());
    for (std::size_t i = 0; i < bits.size(); ++i) y[i] = bits[i] ? 1.0 : -1.0;
    return stationarity(std::span<const double>(y), alpha);
}

} // namespace bellrand
