#pragma once

// Nine statistical tests of the NIST SP 800-22 family and the battery
// decision: a series is rejected if any applicable test fails.

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "bellrand/bits.hpp"
#include "bellrand/error.hpp"
#include "bellrand/special.hpp"

namespace bellrand {

/// How a test (or the battery) turns several p-values into one decision.
/// `none` compares every p-value with alpha directly. `sidak` holds the
/// family-wise false-rejection probability at alpha:
/// each p-value is compared with 1 - (1 - alpha)^(1/k).
enum class Correction { none, sidak };

inline double per_comparison_level(double alpha, std::size_t k, Correction c) {
    if (c == Correction::none || k <= 1) return alpha;
    return 1.0 - std::pow(1.0 - alpha, 1.0 / static_cast<double>(k));
}

struct TestOptions {
    double alpha = 0.01;
    Correction correction = Correction::sidak;
    bool force = false; // bypass length gates (oracle testing only)
};

struct TestResult {
    std::string test_name;
    std::vector<double> p_values;
    bool applicable = true;
    bool pass = true;  // meaningful only when applicable
    double level = 0;  // per-p-value comparison level actually used
    std::string detail;
    std::vector<double> statistics; // raw test statistics, in test-specific order
};

namespace detail {

inline double clamp_p(double p) { return std::clamp(p, 0.0, 1.0); }

inline void decide(TestResult& r, double alpha, Correction c) {
    if (!r.applicable) {
        r.pass = true;
        r.level = 0;
        return;
    }
    r.level = per_comparison_level(alpha, r.p_values.size(), c);
    r.pass = std::all_of(r.p_values.begin(), r.p_values.end(), [&](double p) { return p >= r.level; });
}

inline TestResult not_applicable(std::string name, std::string why) {
    TestResult r;
    r.test_name = std::move(name);
    r.applicable = false;
    r.detail = std::move(why);
    return r;
}

inline int floor_log2(std::size_t n) { return n == 0 ? -1 : static_cast<int>(std::bit_width(n)) - 1; }

/// Counts of overlapping m-bit patterns with wrap-around (the sequence is
/// extended by its first m-1 bits). Pattern value reads bits MSB first.
inline std::vector<std::uint64_t> overlapping_pattern_counts(const BitVector& bits, int m) {
    std::vector<std::uint64_t> counts(std::size_t{1} << m, 0);
    if (m == 0) {
        counts[0] = bits.size();
        return counts;
    }
    const std::size_t n = bits.size();
    const std::uint32_t mask = (std::uint32_t{1} << m) - 1;
    std::uint32_t v = 0;
    for (int i = 0; i < m - 1; ++i) v = (v << 1) | bits[static_cast<std::size_t>(i) % n];
    for (std::size_t i = 0; i < n; ++i) {
        v = ((v << 1) | bits[(i + static_cast<std::size_t>(m) - 1) % n]) & mask;
        ++counts[v];
    }
    return counts;
}

} // namespace detail

inline constexpr std::size_t min_length_frequency = 100;
inline constexpr std::size_t min_length_runs = 100;
inline constexpr std::size_t min_length_cusum = 100;
inline constexpr std::size_t min_length_longest_run = 128;
inline constexpr std::size_t min_length_dft = 1000;
inline constexpr std::size_t min_length_template = 100000;

/// Balance of ones and zeros.
inline TestResult test_frequency(const BitVector& bits, const TestOptions& opt = {}) {
    const std::size_t n = bits.size();
    if (!opt.force && n < min_length_frequency) return detail::not_applicable("frequency", "n < 100");
    if (n == 0) throw Error(Errc::empty_series, "frequency test on empty series");
    TestResult r;
    r.test_name = "frequency";
    const double s = 2.0 * static_cast<double>(bits.count_ones()) - static_cast<double>(n);
    const double s_obs = std::abs(s) / std::sqrt(static_cast<double>(n));
    r.statistics = {s_obs};
    r.p_values = {detail::clamp_p(std::erfc(s_obs / std::numbers::sqrt2))};
    detail::decide(r, opt.alpha, opt.correction);
    return r;
}

inline TestResult test_block_frequency(const BitVector& bits, std::size_t block_len = 128, const TestOptions& opt = {}) {
    if (block_len < 1) throw Error(Errc::bad_block_len, "block length must be at least 1");
    const std::size_t n = bits.size();
    const std::size_t blocks = n / block_len;
    if (!opt.force && (n < min_length_frequency || blocks < 1))
        return detail::not_applicable("block_frequency", "n < 100 or no complete block");
    if (blocks < 1) throw Error(Errc::bad_block_len, "block length exceeds the series length");
    TestResult r;
    r.test_name = "block_frequency";
    double chi2 = 0.0;
    for (std::size_t b = 0; b < blocks; ++b) {
        std::size_t ones = 0;
        for (std::size_t i = 0; i < block_len; ++i) ones += bits[b * block_len + i];
        const double pi = static_cast<double>(ones) / static_cast<double>(block_len) - 0.5;
        chi2 += pi * pi;
    }
    chi2 *= 4.0 * static_cast<double>(block_len);
    r.statistics = {chi2};
    r.p_values = {detail::clamp_p(special::igamc(static_cast<double>(blocks) / 2.0, chi2 / 2.0))};
    detail::decide(r, opt.alpha, opt.correction);
    return r;
}

/// Total number of runs. Fails outright (p = 0) when the ones proportion
/// violates the frequency prerequisite |pi - 1/2| < 2/sqrt(n).
inline TestResult test_runs(const BitVector& bits, const TestOptions& opt = {}) {
    const std::size_t n = bits.size();
    if (!opt.force && n < min_length_runs) return detail::not_applicable("runs", "n < 100");
    if (n == 0) throw Error(Errc::empty_series, "runs test on empty series");
    TestResult r;
    r.test_name = "runs";
    const double nn = static_cast<double>(n);
    const double pi = static_cast<double>(bits.count_ones()) / nn;
    std::size_t v = 1;
    for (std::size_t i = 0; i + 1 < n; ++i) v += bits[i] != bits[i + 1];
    r.statistics = {static_cast<double>(v), pi};
    if (std::abs(pi - 0.5) >= 2.0 / std::sqrt(nn)) {
        r.p_values = {0.0};
        r.detail = "frequency prerequisite failed";
    } else {
        const double num = std::abs(static_cast<double>(v) - 2.0 * nn * pi * (1.0 - pi));
        const double den = 2.0 * std::sqrt(2.0 * nn) * pi * (1.0 - pi);
        r.p_values = {detail::clamp_p(std::erfc(num / den))};
    }
    detail::decide(r, opt.alpha, opt.correction);
    return r;
}

/// Longest run of ones within blocks, against the SP 800-22 class tables.
inline TestResult test_longest_run(const BitVector& bits, const TestOptions& opt = {}) {
    const std::size_t n = bits.size();
    if (n < min_length_longest_run) {
        if (!opt.force) return detail::not_applicable("longest_run", "n < 128");
        throw Error(Errc::too_short, "longest-run test needs at least 128 bits");
    }
    std::size_t m;
    int lo; // longest run mapped to class 0 when <= lo
    std::vector<double> pi;
    if (n < 6272) {
        m = 8;
        lo = 1;
        pi = {0.21484375, 0.3671875, 0.23046875, 0.1875};
    } else if (n < 750000) {
        m = 128;
        lo = 4;
        pi = {0.1174035788, 0.242955959, 0.249363483, 0.17517706, 0.102701071, 0.112398847};
    } else {
        m = 10000;
        lo = 10;
        pi = {0.0882, 0.2092, 0.2483, 0.1933, 0.1208, 0.0675, 0.0727};
    }
    const std::size_t k = pi.size() - 1;
    const std::size_t blocks = n / m;
    std::vector<double> v(pi.size(), 0.0);
    for (std::size_t b = 0; b < blocks; ++b) {
        int run = 0, longest = 0;
        for (std::size_t i = 0; i < m; ++i) {
            run = bits[b * m + i] ? run + 1 : 0;
            longest = std::max(longest, run);
        }
        const int cls = std::clamp(longest - lo, 0, static_cast<int>(k));
        v[static_cast<std::size_t>(cls)] += 1.0;
    }
    double chi2 = 0.0;
    const double nb = static_cast<double>(blocks);
    for (std::size_t i = 0; i <= k; ++i) chi2 += (v[i] - nb * pi[i]) * (v[i] - nb * pi[i]) / (nb * pi[i]);
    TestResult r;
    r.test_name = "longest_run";
    r.statistics = {chi2};
    r.p_values = {detail::clamp_p(special::igamc(static_cast<double>(k) / 2.0, chi2 / 2.0))};
    r.detail = "block length " + std::to_string(m);
    detail::decide(r, opt.alpha, opt.correction);
    return r;
}

/// Spectral test for periodic features: proportion of DFT moduli below the
/// 95% threshold sqrt(n ln 20).
inline TestResult test_dft(const BitVector& bits, const TestOptions& opt = {}) {
    const std::size_t n = bits.size();
    if (!opt.force && n < min_length_dft) return detail::not_applicable("dft", "n < 1000");
    if (n < 2) throw Error(Errc::too_short, "DFT test needs at least 2 bits");
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = bits[i] ? 1.0 : -1.0;
    const auto s = special::dft(x);
    const double nn = static_cast<double>(n);
    const double threshold = std::sqrt(std::log(1.0 / 0.05) * nn);
    std::size_t below = 0;
    for (std::size_t k = 0; k < n / 2; ++k) below += std::abs(s[k]) < threshold;
    const double n0 = 0.95 * nn / 2.0;
    const double d = (static_cast<double>(below) - n0) / std::sqrt(nn * 0.95 * 0.05 / 4.0);
    TestResult r;
    r.test_name = "dft";
    r.statistics = {d, static_cast<double>(below)};
    r.p_values = {detail::clamp_p(std::erfc(std::abs(d) / std::numbers::sqrt2))};
    detail::decide(r, opt.alpha, opt.correction);
    return r;
}

/// A template is aperiodic when no proper prefix equals the suffix of the
/// same length. Templates are read MSB first.
inline bool is_aperiodic_template(std::uint32_t tpl, int m) {
    for (int shift = 1; shift < m; ++shift) {
        const int overlap = m - shift;
        const std::uint32_t mask = (std::uint32_t{1} << overlap) - 1;
        if ((tpl >> shift) == (tpl & mask)) return false;
    }
    return true;
}

inline std::vector<std::uint32_t> aperiodic_templates(int m) {
    std::vector<std::uint32_t> out;
    for (std::uint32_t t = 0; t < (std::uint32_t{1} << m); ++t)
        if (is_aperiodic_template(t, m)) out.push_back(t);
    return out;
}

/// One p-value per template over N = 8 blocks.
inline TestResult test_non_overlapping_template(const BitVector& bits, int m = 9,
                                                std::optional<std::vector<std::uint32_t>> templates = std::nullopt,
                                                const TestOptions& opt = {}) {
    if (m < 2 || m > 21) throw Error(Errc::bad_template_set, "template length must lie in [2, 21]");
    const std::size_t n = bits.size();
    if (templates) {
        for (auto t : *templates)
            if (t >= (std::uint32_t{1} << m) || !is_aperiodic_template(t, m))
                throw Error(Errc::bad_template_set, "template " + std::to_string(t) + " is not an aperiodic " + std::to_string(m) + "-bit pattern");
    }
    if (!opt.force && n < min_length_template) return detail::not_applicable("non_overlapping_template", "n < 100000");
    constexpr std::size_t blocks = 8;
    const std::size_t block_len = n / blocks;
    if (block_len < static_cast<std::size_t>(m)) throw Error(Errc::too_short, "blocks shorter than the template");
    const auto tpls = templates ? *templates : aperiodic_templates(m);

    // Rolling m-bit value ending at each position, per block.
    const auto mm = static_cast<std::size_t>(m);
    const std::uint32_t mask = (std::uint32_t{1} << m) - 1;
    std::vector<std::uint32_t> window(block_len);
    std::vector<std::vector<std::uint32_t>> counts(tpls.size(), std::vector<std::uint32_t>(blocks, 0));
    for (std::size_t b = 0; b < blocks; ++b) {
        std::uint32_t v = 0;
        for (std::size_t i = 0; i < block_len; ++i) {
            v = ((v << 1) | bits[b * block_len + i]) & mask;
            window[i] = v; // pattern occupying [i-m+1, i]
        }
        for (std::size_t t = 0; t < tpls.size(); ++t) {
            std::uint32_t c = 0;
            std::size_t i = mm - 1;
            while (i < block_len) {
                if (window[i] == tpls[t]) {
                    ++c;
                    i += mm;
                } else {
                    ++i;
                }
            }
            counts[t][b] = c;
        }
    }
    const double M = static_cast<double>(block_len);
    const double p2m = std::ldexp(1.0, -m);
    const double mu = (M - m + 1) * p2m;
    const double var = M * (p2m - (2.0 * m - 1.0) * p2m * p2m);
    TestResult r;
    r.test_name = "non_overlapping_template";
    r.p_values.reserve(tpls.size());
    for (std::size_t t = 0; t < tpls.size(); ++t) {
        double chi2 = 0.0;
        for (auto w : counts[t]) chi2 += (w - mu) * (w - mu) / var;
        r.statistics.push_back(chi2);
        r.p_values.push_back(detail::clamp_p(special::igamc(blocks / 2.0, chi2 / 2.0)));
    }
    r.detail = std::to_string(tpls.size()) + " templates of length " + std::to_string(m);
    detail::decide(r, opt.alpha, opt.correction);
    return r;
}

/// psi^2_m statistic over overlapping patterns with wrap-around.
inline double serial_psi2(const BitVector& bits, int m) {
    if (m <= 0) return 0.0;
    const auto counts = detail::overlapping_pattern_counts(bits, m);
    const double n = static_cast<double>(bits.size());
    double sum = 0.0;
    for (auto c : counts) sum += static_cast<double>(c) * static_cast<double>(c);
    return std::ldexp(sum, m) / n - n;
}

inline int default_serial_m(std::size_t n) { return std::min(16, detail::floor_log2(n) - 3); }
inline int default_apen_m(std::size_t n) { return std::min(10, detail::floor_log2(n) - 6); }

/// Generalized serial test; two p-values from the first and second
/// differences of psi^2.
inline TestResult test_serial(const BitVector& bits, int m, const TestOptions& opt = {}) {
    if (m < 2 || m > 24) throw Error(Errc::bad_m, "serial test needs 2 <= m <= 24");
    const std::size_t n = bits.size();
    if (n == 0) throw Error(Errc::empty_series, "serial test on empty series");
    if (!opt.force && m >= detail::floor_log2(n) - 2) return detail::not_applicable("serial", "m too large for n");
    const double p0 = serial_psi2(bits, m), p1 = serial_psi2(bits, m - 1), p2 = serial_psi2(bits, m - 2);
    const double d1 = p0 - p1;
    const double d2 = p0 - 2.0 * p1 + p2;
    TestResult r;
    r.test_name = "serial";
    r.statistics = {d1, d2};
    // rounding can leave an exact-zero statistic slightly negative
    r.p_values = {detail::clamp_p(special::igamc(std::ldexp(1.0, m - 2), std::max(0.0, d1) / 2.0)),
                  detail::clamp_p(special::igamc(std::ldexp(1.0, m - 3), std::max(0.0, d2) / 2.0))};
    r.detail = "m = " + std::to_string(m);
    detail::decide(r, opt.alpha, opt.correction);
    return r;
}

inline TestResult test_serial(const BitVector& bits, const TestOptions& opt = {}) {
    const int m = default_serial_m(bits.size());
    if (m < 2) return detail::not_applicable("serial", "series too short for m >= 2");
    return test_serial(bits, m, opt);
}

/// Phi^(m) = sum pi ln pi over overlapping m-bit patterns with wrap-around.
inline double apen_phi(const BitVector& bits, int m) {
    if (m <= 0) return 0.0;
    const auto counts = detail::overlapping_pattern_counts(bits, m);
    const double n = static_cast<double>(bits.size());
    double phi = 0.0;
    for (auto c : counts)
        if (c > 0) {
            const double p = static_cast<double>(c) / n;
            phi += p * std::log(p);
        }
    return phi;
}

inline TestResult test_approx_entropy(const BitVector& bits, int m, const TestOptions& opt = {}) {
    if (m < 1 || m > 24) throw Error(Errc::bad_m, "approximate entropy needs 1 <= m <= 24");
    const std::size_t n = bits.size();
    if (n == 0) throw Error(Errc::empty_series, "approximate entropy on empty series");
    if (!opt.force && m >= detail::floor_log2(n) - 5) return detail::not_applicable("approximate_entropy", "m too large for n");
    const double apen = apen_phi(bits, m) - apen_phi(bits, m + 1);
    const double chi2 = 2.0 * static_cast<double>(n) * (std::numbers::ln2 - apen);
    TestResult r;
    r.test_name = "approximate_entropy";
    r.statistics = {apen, chi2};
    r.p_values = {detail::clamp_p(special::igamc(std::ldexp(1.0, m - 1), std::max(0.0, chi2) / 2.0))};
    r.detail = "m = " + std::to_string(m);
    detail::decide(r, opt.alpha, opt.correction);
    return r;
}

inline TestResult test_approx_entropy(const BitVector& bits, const TestOptions& opt = {}) {
    const int m = default_apen_m(bits.size());
    if (m < 1) return detail::not_applicable("approximate_entropy", "series too short for m >= 1");
    return test_approx_entropy(bits, m, opt);
}

/// P-value of the maximal partial-sum excursion z of a +/-1 walk of length n.
inline double cusum_p_value(double z, double n) {
    if (z <= 0.0) return 1.0;
    const double sq = std::sqrt(n);
    double sum1 = 0.0, sum2 = 0.0;
    for (auto k = static_cast<long long>(std::trunc((-n / z + 1.0) / 4.0));
         k <= static_cast<long long>(std::trunc((n / z - 1.0) / 4.0)); ++k)
        sum1 += special::normal_cdf((4.0 * k + 1.0) * z / sq) - special::normal_cdf((4.0 * k - 1.0) * z / sq);
    for (auto k = static_cast<long long>(std::trunc((-n / z - 3.0) / 4.0));
         k <= static_cast<long long>(std::trunc((n / z - 1.0) / 4.0)); ++k)
        sum2 += special::normal_cdf((4.0 * k + 3.0) * z / sq) - special::normal_cdf((4.0 * k + 1.0) * z / sq);
    return detail::clamp_p(1.0 - sum1 + sum2);
}

/// Cumulative sums, forward and backward.
inline TestResult test_cusum(const BitVector& bits, const TestOptions& opt = {}) {
    const std::size_t n = bits.size();
    if (!opt.force && n < min_length_cusum) return detail::not_applicable("cumulative_sums", "n < 100");
    if (n == 0) throw Error(Errc::empty_series, "cumulative sums on empty series");
    long long s = 0, zf = 0;
    for (std::size_t i = 0; i < n; ++i) {
        s += bits[i] ? 1 : -1;
        zf = std::max(zf, std::llabs(s));
    }
    s = 0;
    long long zb = 0;
    for (std::size_t i = n; i-- > 0;) {
        s += bits[i] ? 1 : -1;
        zb = std::max(zb, std::llabs(s));
    }
    const double nn = static_cast<double>(n);
    TestResult r;
    r.test_name = "cumulative_sums";
    r.statistics = {static_cast<double>(zf), static_cast<double>(zb)};
    r.p_values = {cusum_p_value(static_cast<double>(zf), nn), cusum_p_value(static_cast<double>(zb), nn)};
    detail::decide(r, opt.alpha, opt.correction);
    return r;
}

struct BatteryOptions {
    double alpha = 0.01;
    Correction correction = Correction::sidak;
    bool force = false;
    std::size_t block_len = 128;
    int serial_m = 0; // 0: chosen from n
    int apen_m = 0;   // 0: chosen from n
    int template_len = 9;
};

struct BatteryReport {
    std::vector<TestResult> results;
    double alpha = 0.01;
    Correction correction = Correction::sidak;
    bool rejected = false;
    std::size_t series_length = 0;

    std::size_t applicable_count() const {
        return static_cast<std::size_t>(std::count_if(results.begin(), results.end(), [](const TestResult& r) { return r.applicable; }));
    }
    std::size_t failed_count() const {
        return static_cast<std::size_t>(
            std::count_if(results.begin(), results.end(), [](const TestResult& r) { return r.applicable && !r.pass; }));
    }
};

/// Runs all nine tests. With Correction::sidak the battery as a whole has
/// false-rejection probability alpha: each of the T applicable tests is
/// held at 1-(1-alpha)^(1/T), and each test splits its level over its own
/// p-values the same way. Correction::none compares every p-value with alpha.
inline BatteryReport run_battery(const BitVector& bits, const BatteryOptions& opt = {}) {
    if (bits.empty()) throw Error(Errc::empty_series, "battery on empty series");
    const std::size_t n = bits.size();
    TestOptions topt{opt.alpha, opt.correction, opt.force};
    BatteryReport rep;
    rep.alpha = opt.alpha;
    rep.correction = opt.correction;
    rep.series_length = n;

    auto guarded = [&](auto&& fn, const char* name) {
        try {
            rep.results.push_back(fn());
        } catch (const Error& e) {
            if (e.code() == Errc::bad_block_len || e.code() == Errc::bad_m || e.code() == Errc::bad_template_set) throw;
            rep.results.push_back(detail::not_applicable(name, e.what()));
        }
    };
    guarded([&] { return test_frequency(bits, topt); }, "frequency");
    guarded([&] { return test_block_frequency(bits, opt.block_len, topt); }, "block_frequency");
    guarded([&] { return test_runs(bits, topt); }, "runs");
    guarded([&] { return test_longest_run(bits, topt); }, "longest_run");
    guarded([&] { return test_dft(bits, topt); }, "dft");
    guarded([&] { return test_non_overlapping_template(bits, opt.template_len, std::nullopt, topt); }, "non_overlapping_template");
    guarded([&] { return opt.serial_m > 0 ? test_serial(bits, opt.serial_m, topt) : test_serial(bits, topt); }, "serial");
    guarded([&] { return opt.apen_m > 0 ? test_approx_entropy(bits, opt.apen_m, topt) : test_approx_entropy(bits, topt); },
            "approximate_entropy");
    guarded([&] { return test_cusum(bits, topt); }, "cumulative_sums");

    const double test_level = per_comparison_level(opt.alpha, rep.applicable_count(), opt.correction);
    for (auto& r : rep.results) detail::decide(r, test_level, opt.correction);
    rep.rejected = rep.failed_count() > 0;
    return rep;
}

} // namespace bellrand
