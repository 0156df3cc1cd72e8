#pragma once

// Complexity and entropy estimators for binary series: Lempel-Ziv (1976)
// phrase counting with Kaspar-Schuster normalization, per-bit min-entropy,
// the CHSH min-entropy bound, rescaled-range Hurst exponent.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

#include "bellrand/bits.hpp"
#include "bellrand/error.hpp"

namespace bellrand {

namespace detail {

// Suffix automaton over {0,1}, grown one symbol at a time. extend() reports
// the state it cloned (if any) so a caller walking the automaton can move
// its cursor onto the clone when the cursor's string now belongs there.
class BinarySuffixAutomaton {
public:
    explicit BinarySuffixAutomaton(std::size_t capacity) {
        len_.reserve(2 * capacity + 2);
        link_.reserve(2 * capacity + 2);
        next_.reserve(2 * capacity + 2);
        add_state(0, -1);
    }

    struct CloneEvent {
        int original = -1;
        int clone = -1;
    };

    CloneEvent extend(unsigned c) {
        CloneEvent ev;
        const int cur = add_state(len_[last_] + 1, -1);
        int p = last_;
        while (p != -1 && next_[p][c] == -1) {
            next_[p][c] = cur;
            p = link_[p];
        }
        if (p == -1) {
            link_[cur] = 0;
        } else {
            const int q = next_[p][c];
            if (len_[p] + 1 == len_[q]) {
                link_[cur] = q;
            } else {
                const int clone = add_state(len_[p] + 1, link_[q]);
                next_[clone] = next_[q];
                while (p != -1 && next_[p][c] == q) {
                    next_[p][c] = clone;
                    p = link_[p];
                }
                link_[q] = clone;
                link_[cur] = clone;
                ev = {q, clone};
            }
        }
        last_ = cur;
        return ev;
    }

    int step(int state, unsigned c) const noexcept { return next_[state][c]; }
    int length(int state) const noexcept { return len_[state]; }

private:
    int add_state(int len, int link) {
        len_.push_back(len);
        link_.push_back(link);
        next_.push_back({-1, -1});
        return static_cast<int>(len_.size()) - 1;
    }

    std::vector<int> len_;
    std::vector<int> link_;
    std::vector<std::array<int, 2>> next_;
    int last_ = 0;
};

} // namespace detail

/// Number of phrases in the LZ76 exhaustive-history parse of `bits`.
/// A phrase starting at p extends while s[p..p+L) already occurs starting
/// before p (overlap allowed), then takes one innovative symbol; a final
/// phrase cut short by the end of the data counts as one. Linear time.
inline std::size_t lz76_phrase_count(const BitVector& bits) {
    const std::size_t n = bits.size();
    if (n == 0) throw Error(Errc::empty_series, "LZ76 parse of an empty series");

    detail::BinarySuffixAutomaton sam(n);
    std::size_t added = 0; // symbols inserted into the automaton
    std::size_t phrases = 0;
    std::size_t p = 0;
    while (p < n) {
        while (added < p) sam.extend(bits[added++]);
        int cur = 0;
        std::size_t len = 0;
        for (;;) {
            if (p + len == n) {
                ++phrases;
                p = n;
                break;
            }
            if (len >= 1) {
                const auto ev = sam.extend(bits[added++]);
                if (ev.original == cur && static_cast<int>(len) <= sam.length(ev.clone)) cur = ev.clone;
            }
            const int nxt = sam.step(cur, bits[p + len]);
            if (nxt == -1) {
                ++phrases;
                p += len + 1;
                break;
            }
            cur = nxt;
            ++len;
        }
    }
    return phrases;
}

struct ComplexityResult {
    std::size_t phrase_count = 0;
    double kc = 0.0;
    std::size_t n = 0;
};

/// Normalized complexity c*log2(n)/n. Short or strongly fluctuating series
/// can exceed 1.
inline ComplexityResult kc(const BitVector& bits) {
    const std::size_t n = bits.size();
    if (n < 2) throw Error(Errc::too_short, "Kc needs at least 2 bits");
    const std::size_t c = lz76_phrase_count(bits);
    return {c, static_cast<double>(c) * std::log2(static_cast<double>(n)) / static_cast<double>(n), n};
}

struct EntropyResult {
    double h_min = 0.0;
    double shannon = 0.0;
    double max_prob = 1.0;
};

inline double binary_shannon(double p1) {
    auto term = [](double p) { return p > 0.0 ? -p * std::log2(p) : 0.0; };
    return term(p1) + term(1.0 - p1);
}

/// Per-bit min-entropy and Shannon entropy from empirical symbol frequencies.
inline EntropyResult min_entropy(const BitVector& bits) {
    if (bits.empty()) throw Error(Errc::empty_series, "min-entropy of an empty series");
    const std::size_t ones = bits.count_ones();
    const std::size_t zeros = bits.size() - ones;
    const std::size_t top = std::max(ones, zeros);
    EntropyResult r;
    r.max_prob = static_cast<double>(top) / static_cast<double>(bits.size());
    r.h_min = ones == zeros ? 1.0 : -std::log2(r.max_prob);
    r.shannon = ones == zeros ? 1.0 : binary_shannon(static_cast<double>(ones) / static_cast<double>(bits.size()));
    return r;
}

inline constexpr double tsirelson_bound = 2.0 * std::numbers::sqrt2;

/// Lower bound on per-bit min-entropy implied by a CHSH value s:
/// 1 - log2(1 + sqrt(2 - s^2/4)). Zero below the local bound s = 2.
inline double chsh_min_entropy_bound(double s) {
    if (s > tsirelson_bound + 1e-12)
        throw Error(Errc::out_of_range, "S_CHSH above 2*sqrt(2) has no real bound");
    if (s <= 2.0) return 0.0;
    const double radicand = std::max(0.0, 2.0 - s * s / 4.0);
    return 1.0 - std::log2(1.0 + std::sqrt(radicand));
}

struct HurstResult {
    double h = 0.5;
    std::vector<std::pair<double, double>> fit_points; // (ln window, ln mean R/S)
    double fit_r2 = 0.0;
    bool clamped = false;
};

/// Rescaled-range Hurst exponent. Windows are powers of two from 16 to n/4;
/// each window size contributes the mean R/S of its non-overlapping
/// segments, and H is the least-squares slope of the log-log fit.
inline HurstResult hurst_exponent(std::span<const double> x) {
    const std::size_t n = x.size();
    if (n < 256) throw Error(Errc::too_short, "Hurst exponent needs at least 256 samples");
    {
        const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
        if (*lo == *hi) throw Error(Errc::degenerate_variance, "constant series has no rescaled range");
    }

    HurstResult r;
    for (std::size_t w = 16; w <= n / 4; w *= 2) {
        const std::size_t segments = n / w;
        double acc = 0.0;
        std::size_t used = 0;
        for (std::size_t s = 0; s < segments; ++s) {
            const auto seg = x.subspan(s * w, w);
            double mean = 0.0;
            for (double v : seg) mean += v;
            mean /= static_cast<double>(w);
            double cum = 0.0, lo = 0.0, hi = 0.0, ss = 0.0;
            for (double v : seg) {
                cum += v - mean;
                lo = std::min(lo, cum);
                hi = std::max(hi, cum);
                ss += (v - mean) * (v - mean);
            }
            const double sd = std::sqrt(ss / static_cast<double>(w));
            if (sd > 0.0) {
                acc += (hi - lo) / sd;
                ++used;
            }
        }
        if (used > 0) r.fit_points.emplace_back(std::log(static_cast<double>(w)), std::log(acc / static_cast<double>(used)));
    }
    if (r.fit_points.size() < 2) throw Error(Errc::degenerate_variance, "too few usable windows for the R/S fit");

    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    const double m = static_cast<double>(r.fit_points.size());
    for (auto [a, b] : r.fit_points) {
        sx += a;
        sy += b;
        sxx += a * a;
        sxy += a * b;
        syy += b * b;
    }
    const double cov = sxy - sx * sy / m;
    const double vx = sxx - sx * sx / m;
    const double vy = syy - sy * sy / m;
    double slope = cov / vx;
    r.fit_r2 = vy > 0.0 ? cov * cov / (vx * vy) : 1.0;
    if (slope < 0.0 || slope > 1.0) {
        r.clamped = true;
        slope = std::clamp(slope, 0.0, 1.0);
    }
    r.h = slope;
    return r;
}

/// Bits are fed to the R/S analysis as +/-1 increments.
inline HurstResult hurst_exponent(const BitVector& bits) {
    std::vector<double> x(bits.size());
    for (std::size_t i = 0; i < bits.size(); ++i) x[i] = bits[i] ? 1.0 : -1.0;
    return hurst_exponent(std::span<const double>(x));
}

struct ZurekCheck {
    double kc = 0.0;
    double h_min = 0.0;
    bool satisfied = false;
};

/// Complexity should not fall below the entropy bound for ergodic sources.
inline ZurekCheck zurek_check(const BitVector& bits) {
    if (bits.size() < 2) throw Error(Errc::too_short, "Zurek check needs at least 2 bits");
    ZurekCheck z;
    z.kc = kc(bits).kc;
    z.h_min = min_entropy(bits).h_min;
    z.satisfied = z.kc >= z.h_min;
    return z;
}

} // namespace bellrand
