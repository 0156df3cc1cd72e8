#pragma once

// Delay-coordinate reconstruction: AMI delay, false nearest neighbours,
// largest Lyapunov exponent (Rosenstein) and a nearest-neighbour forecast
// attack on coincidence outcomes.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "bellrand/error.hpp"

namespace bellrand {

namespace detail {

/// Delay vectors (x_i, x_{i+tau}, ..., x_{i+(d-1)tau}) for i < count, with
/// nearest-neighbour queries pruned on the first coordinate.
class DelayCloud {
public:
    DelayCloud(std::span<const double> x, int tau, int dim, std::size_t count)
        : dim_(static_cast<std::size_t>(dim)), count_(count), coords_(count * dim_) {
        for (std::size_t i = 0; i < count; ++i)
            for (std::size_t k = 0; k < dim_; ++k) coords_[i * dim_ + k] = x[i + k * static_cast<std::size_t>(tau)];
        order_.resize(count);
        for (std::size_t i = 0; i < count; ++i) order_[i] = i;
        std::sort(order_.begin(), order_.end(), [&](std::size_t a, std::size_t b) { return first(a) < first(b); });
        rank_.resize(count);
        for (std::size_t r = 0; r < count; ++r) rank_[order_[r]] = r;
    }

    std::size_t size() const noexcept { return count_; }

    double dist2(std::size_t a, std::size_t b, double bound = std::numeric_limits<double>::infinity()) const noexcept {
        const double* pa = &coords_[a * dim_];
        const double* pb = &coords_[b * dim_];
        double s = 0.0;
        for (std::size_t k = 0; k < dim_; ++k) {
            const double d = pa[k] - pb[k];
            s += d * d;
            if (s > bound) return s;
        }
        return s;
    }

    /// Nearest neighbour of point i among points j with |i - j| > exclusion
    /// and accept(j). Returns count() when none exists.
    template <typename Accept>
    std::pair<std::size_t, double> nearest(std::size_t i, std::size_t exclusion, Accept&& accept) const {
        double best = std::numeric_limits<double>::infinity();
        std::size_t arg = count_;
        const double xi = first(i);
        const std::size_t r = rank_[i];
        auto visit = [&](std::size_t j) {
            const std::size_t gap = i > j ? i - j : j - i;
            if (gap <= exclusion || !accept(j)) return;
            const double d = dist2(i, j, best);
            if (d < best) {
                best = d;
                arg = j;
            }
        };
        std::size_t up = r + 1;
        std::size_t down = r;
        bool up_open = up < count_, down_open = down > 0;
        while (up_open || down_open) {
            if (up_open) {
                const double dx = first(order_[up]) - xi;
                if (dx * dx > best) up_open = false;
                else {
                    visit(order_[up]);
                    up_open = ++up < count_;
                }
            }
            if (down_open) {
                const double dx = xi - first(order_[down - 1]);
                if (dx * dx > best) down_open = false;
                else {
                    visit(order_[down - 1]);
                    down_open = --down > 0;
                }
            }
        }
        return {arg, best};
    }

private:
    double first(std::size_t i) const noexcept { return coords_[i * dim_]; }

    std::size_t dim_;
    std::size_t count_;
    std::vector<double> coords_;
    std::vector<std::size_t> order_;
    std::vector<std::size_t> rank_;
};

inline double std_dev(std::span<const double> x) {
    double m = 0.0;
    for (double v : x) m += v;
    m /= static_cast<double>(x.size());
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return std::sqrt(s / static_cast<double>(x.size()));
}

} // namespace detail

struct AmiResult {
    int tau = 1;
    std::vector<double> ami; // ami[k] for lag k = 0..max_lag (nats)
    bool from_minimum = false; // false: autocorrelation fallback
};

/// Average mutual information over equal-width bins; tau is its first local
/// minimum (centre of the plateau when the minimum is flat) that the curve
/// later rises out of by more than the binning bias. When the AMI never rises above the binning bias (no structure),
/// or has no minimum, tau is the first lag where the autocorrelation drops
/// below 1/e (1 if it never does).
inline AmiResult ami_delay(std::span<const double> x, int max_lag = 20, int bins = 16) {
    if (max_lag < 2) throw Error(Errc::out_of_range, "max_lag must be at least 2");
    const std::size_t n = x.size();
    if (n < 10 * static_cast<std::size_t>(max_lag)) throw Error(Errc::too_short, "AMI needs at least 10*max_lag samples");
    const auto [lo_it, hi_it] = std::minmax_element(x.begin(), x.end());
    const double lo = *lo_it, hi = *hi_it;
    if (lo == hi) throw Error(Errc::degenerate, "constant series has no delay structure");

    std::vector<int> bin(n);
    for (std::size_t i = 0; i < n; ++i)
        bin[i] = std::min(bins - 1, static_cast<int>((x[i] - lo) / (hi - lo) * bins));

    AmiResult r;
    r.ami.assign(static_cast<std::size_t>(max_lag) + 1, 0.0);
    const auto b = static_cast<std::size_t>(bins);
    std::vector<double> joint(b * b), pa(b), pb(b);
    for (int lag = 0; lag <= max_lag; ++lag) {
        std::fill(joint.begin(), joint.end(), 0.0);
        std::fill(pa.begin(), pa.end(), 0.0);
        std::fill(pb.begin(), pb.end(), 0.0);
        const std::size_t m = n - static_cast<std::size_t>(lag);
        for (std::size_t i = 0; i < m; ++i) {
            const auto u = static_cast<std::size_t>(bin[i]), v = static_cast<std::size_t>(bin[i + static_cast<std::size_t>(lag)]);
            joint[u * b + v] += 1.0;
            pa[u] += 1.0;
            pb[v] += 1.0;
        }
        double mi = 0.0;
        const double mm = static_cast<double>(m);
        for (std::size_t u = 0; u < b; ++u)
            for (std::size_t v = 0; v < b; ++v)
                if (joint[u * b + v] > 0.0) {
                    const double pj = joint[u * b + v] / mm;
                    mi += pj * std::log(pj / ((pa[u] / mm) * (pb[v] / mm)));
                }
        r.ami[static_cast<std::size_t>(lag)] = mi;
    }

    // Plug-in MI of independent variables is biased up by about (B-1)^2/(2N).
    const double bias = static_cast<double>((b - 1) * (b - 1)) / (2.0 * static_cast<double>(n));
    if (r.ami[1] > 4.0 * bias) {
        for (int lag = 1; lag < max_lag; ++lag) {
            const auto k = static_cast<std::size_t>(lag);
            if (r.ami[k] < r.ami[k - 1] && r.ami[k] <= r.ami[k + 1]) {
                // a dip the curve never climbs out of is binning noise on a decay
                const double later = *std::max_element(r.ami.begin() + static_cast<std::ptrdiff_t>(k) + 1, r.ami.end());
                if (later - r.ami[k] <= bias) continue;
                // a flat-bottomed minimum resolves to the centre of its plateau
                const double tol = 0.01 * (r.ami[0] - r.ami[k]);
                std::size_t left = k, right = k;
                while (left > 1 && r.ami[left - 1] - r.ami[k] <= tol) --left;
                while (right < static_cast<std::size_t>(max_lag) && r.ami[right + 1] - r.ami[k] <= tol) ++right;
                r.tau = static_cast<int>((left + right) / 2);
                r.from_minimum = true;
                return r;
            }
        }
    }

    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : x) var += (v - mean) * (v - mean);
    r.tau = 1;
    for (int lag = 1; lag <= max_lag; ++lag) {
        double c = 0.0;
        for (std::size_t i = 0; i + static_cast<std::size_t>(lag) < n; ++i) c += (x[i] - mean) * (x[i + static_cast<std::size_t>(lag)] - mean);
        if (c / var < std::exp(-1.0)) {
            r.tau = lag;
            break;
        }
    }
    return r;
}

struct FnnOptions {
    int d_max = 12;
    double distance_ratio = 15.0; // R_tol
    double loneliness = 2.0;      // A_tol, in units of the series standard deviation
    double acceptance = 0.01;     // FNN fraction below which d is accepted
};

struct EmbeddingResult {
    int tau = 1;
    std::vector<std::pair<int, double>> fnn_fractions; // (d, fraction)
    std::optional<int> d_e;
    bool saturated = false;
};

/// False-nearest-neighbour fractions for d = 1..d_max. d_e is the smallest d
/// from which the fraction stays below the acceptance level through d_max.
inline EmbeddingResult false_nearest_neighbors(std::span<const double> x, int tau, const FnnOptions& opt = {}) {
    const std::size_t n = x.size();
    if (n < 1000) throw Error(Errc::too_short, "FNN needs at least 1000 samples");
    if (tau < 1 || opt.d_max < 1) throw Error(Errc::out_of_range, "tau and d_max must be positive");
    const double ra = detail::std_dev(x);
    if (!(ra > 0.0)) throw Error(Errc::degenerate_variance, "constant series cannot be embedded");

    EmbeddingResult r;
    r.tau = tau;
    const auto t = static_cast<std::size_t>(tau);
    for (int d = 1; d <= opt.d_max; ++d) {
        const auto dd = static_cast<std::size_t>(d);
        if (n <= dd * t + 1) break;
        const std::size_t count = n - dd * t; // the (d+1)-th coordinate must exist
        const detail::DelayCloud cloud(x, tau, d, count);
        const std::size_t theiler = dd * t;
        std::size_t tested = 0, false_nn = 0;
        for (std::size_t i = 0; i < count; ++i) {
            const auto [j, rd2] = cloud.nearest(i, theiler, [](std::size_t) { return true; });
            if (j == count) continue;
            ++tested;
            const double extra = std::abs(x[i + dd * t] - x[j + dd * t]);
            const double rd = std::sqrt(rd2);
            bool is_false;
            if (rd == 0.0)
                is_false = extra > 0.0;
            else
                is_false = extra / rd > opt.distance_ratio;
            if (!is_false && std::sqrt(rd2 + extra * extra) / ra > opt.loneliness) is_false = true;
            if (is_false) ++false_nn;
        }
        const double frac = tested ? static_cast<double>(false_nn) / static_cast<double>(tested) : 1.0;
        r.fnn_fractions.emplace_back(d, frac);
    }
    for (std::size_t k = 0; k < r.fnn_fractions.size(); ++k) {
        const bool stays = std::all_of(r.fnn_fractions.begin() + static_cast<std::ptrdiff_t>(k), r.fnn_fractions.end(),
                                       [&](const auto& p) { return p.second < opt.acceptance; });
        if (stays) {
            r.d_e = r.fnn_fractions[k].first;
            break;
        }
    }
    r.saturated = r.d_e.has_value();
    return r;
}

struct LyapunovOptions {
    int max_steps = 40;          // length of the divergence curve
    double rise_fraction = 0.7;  // fit ends where the curve reaches this share of its rise
    double min_rise = 1.0;       // below this (nats) the curve counts as flat
    double min_r2 = 0.95;
    std::optional<std::size_t> theiler; // default tau*d
};

struct LyapunovResult {
    double lambda = 0.0; // per sample
    std::pair<int, int> fit_range{0, 0};
    std::vector<double> divergence; // mean ln distance after k steps
    double fit_r2 = 0.0;
    std::optional<long long> horizon;
};

/// ceil(1/lambda) elements for positive lambda.
inline std::optional<long long> predictability_horizon(double lambda) {
    if (!(lambda > 0.0)) return std::nullopt;
    return static_cast<long long>(std::ceil(1.0 / lambda));
}

namespace detail {

inline std::pair<double, double> line_fit(std::span<const double> y, int from, int to) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    const double m = to - from + 1;
    for (int k = from; k <= to; ++k) {
        const double v = y[static_cast<std::size_t>(k)];
        sx += k;
        sy += v;
        sxx += static_cast<double>(k) * k;
        sxy += k * v;
        syy += v * v;
    }
    const double cov = sxy - sx * sy / m, vx = sxx - sx * sx / m, vy = syy - sy * sy / m;
    const double slope = cov / vx;
    const double r2 = vy > 0.0 ? cov * cov / (vx * vy) : 1.0;
    return {slope, r2};
}

} // namespace detail

/// Rosenstein's method: every delay vector is paired with its nearest
/// neighbour outside the Theiler window and the mean log separation is
/// followed for max_steps steps. lambda is the slope of the initial linear
/// rise. A curve that does not rise gives its overall slope (no horizon);
/// a rise without a linear stretch raises NoLinearRegion.
inline LyapunovResult largest_lyapunov(std::span<const double> x, int tau, int dim, const LyapunovOptions& opt = {}) {
    const std::size_t n = x.size();
    if (dim < 1 || tau < 1) throw Error(Errc::out_of_range, "tau and d must be positive");
    if (n < 1000) throw Error(Errc::too_short, "Lyapunov estimation needs at least 1000 samples");
    const auto steps = static_cast<std::size_t>(opt.max_steps);
    const std::size_t points = n - static_cast<std::size_t>(dim - 1) * static_cast<std::size_t>(tau);
    if (points <= steps + 10) throw Error(Errc::too_short, "series too short for the divergence horizon");
    const std::size_t usable = points - steps; // points that can be followed for all steps
    const detail::DelayCloud cloud(x, tau, dim, points);
    const std::size_t theiler = opt.theiler.value_or(static_cast<std::size_t>(tau) * static_cast<std::size_t>(dim));

    // Separations at rounding level carry no dynamics; periodic orbits
    // recur to within it and would otherwise show a spurious rise.
    const double floor2 = std::pow(1e-10 * detail::std_dev(x), 2);
    if (!(floor2 > 0.0)) throw Error(Errc::degenerate_variance, "constant series has no divergence");
    std::vector<double> sum(steps + 1, 0.0);
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < usable; ++i) {
        const auto [j, d0] = cloud.nearest(i, theiler, [&](std::size_t c) { return c < usable; });
        if (j == points) continue;
        ++pairs;
        for (std::size_t k = 0; k <= steps; ++k) sum[k] += 0.5 * std::log(std::max(cloud.dist2(i + k, j + k), floor2));
    }
    if (pairs == 0) throw Error(Errc::too_short, "no neighbour pairs outside the Theiler window");
    LyapunovResult r;
    r.divergence.resize(steps + 1);
    for (std::size_t k = 0; k <= steps; ++k) r.divergence[k] = sum[k] / static_cast<double>(pairs);
    const double y0 = r.divergence[0];
    const double ymax = *std::max_element(r.divergence.begin(), r.divergence.end());
    if (ymax - y0 < opt.min_rise) {
        const auto [slope, r2] = detail::line_fit(r.divergence, 0, opt.max_steps);
        r.lambda = std::min(slope, 0.0); // no divergence
        r.fit_range = {0, opt.max_steps};
        r.fit_r2 = r2;
        return r;
    }
    int end = 0;
    while (end < opt.max_steps && r.divergence[static_cast<std::size_t>(end)] < y0 + opt.rise_fraction * (ymax - y0)) ++end;
    for (int start = 0; start <= 1; ++start) {
        if (end - start + 1 < 4) break;
        const auto [slope, r2] = detail::line_fit(r.divergence, start, end);
        if (r2 >= opt.min_r2 && slope > 0.0) {
            r.lambda = slope;
            r.fit_range = {start, end};
            r.fit_r2 = r2;
            r.horizon = predictability_horizon(slope);
            return r;
        }
    }
    throw Error(Errc::no_linear_region, "divergence curve has no linear rise");
}

/// Coincidence outcome code: 2 * gate_A + gate_B, i.e. 00, 01, 10, 11.
using Outcome = int;

struct Announcement {
    std::int64_t t = 0;
    std::optional<Outcome> truth;
};

struct PredictOptions {
    FnnOptions fnn{};
    std::optional<int> tau;      // default: AMI delay of each sub-series
    bool force = false;          // model outcomes lacking d_e with forced_dimension
    int forced_dimension = 3;
};

struct PredictionResult {
    std::vector<Outcome> guesses;
    std::optional<double> accuracy;
    std::array<std::optional<int>, 4> d_e{};
    std::array<bool, 4> predictable{};
};

namespace detail {

struct OutcomeModel {
    bool usable = false;
    int tau = 1;
    int dim = 1;
    std::vector<double> diffs;
    std::int64_t last_time = 0;

    /// Next time difference by nearest-neighbour analogue in delay space.
    double forecast() const {
        const std::size_t span = static_cast<std::size_t>(dim - 1) * static_cast<std::size_t>(tau);
        const std::size_t L = diffs.size();
        const std::size_t q = L - 1; // current vector ends at q
        double best = std::numeric_limits<double>::infinity();
        std::size_t arg = 0;
        for (std::size_t e = span; e + 1 < L; ++e) { // candidate vector ends at e, successor at e+1
            double s = 0.0;
            for (std::size_t k = 0; k <= span && s < best; k += static_cast<std::size_t>(tau)) {
                const double d = diffs[q - k] - diffs[e - k];
                s += d * d;
            }
            if (s < best) {
                best = s;
                arg = e;
            }
        }
        return diffs[arg + 1];
    }
};

} // namespace detail

/// For each announced coincidence time, every outcome's model forecasts its
/// next event time (its last event plus a forecast gap); the guess is the
/// outcome whose forecast is closest to the announcement. Histories are then
/// extended with the announced time under the true outcome when it is
/// supplied (one-step-ahead evaluation), otherwise under the guess.
/// Outcomes whose sub-series admit no embedding dimension are not modelled.
inline PredictionResult predict_outcomes(const std::array<std::vector<std::int64_t>, 4>& history,
                                         std::span<const Announcement> announced, const PredictOptions& opt = {}) {
    PredictionResult res;
    std::array<detail::OutcomeModel, 4> models;
    for (std::size_t o = 0; o < 4; ++o) {
        const auto& t = history[o];
        auto& m = models[o];
        if (t.size() < 1001) continue;
        m.diffs.resize(t.size() - 1);
        for (std::size_t i = 0; i + 1 < t.size(); ++i) m.diffs[i] = static_cast<double>(t[i + 1] - t[i]);
        m.last_time = t.back();
        try {
            m.tau = opt.tau.value_or(ami_delay(m.diffs).tau);
            const auto emb = false_nearest_neighbors(m.diffs, m.tau, opt.fnn);
            res.d_e[o] = emb.d_e;
            if (emb.d_e) {
                m.dim = *emb.d_e;
                m.usable = true;
            } else if (opt.force) {
                m.dim = opt.forced_dimension;
                m.usable = true;
            }
        } catch (const Error&) {
            m.usable = false;
        }
        res.predictable[o] = m.usable;
    }
    if (std::none_of(models.begin(), models.end(), [](const auto& m) { return m.usable; }))
        throw Error(Errc::no_prediction, "no outcome sub-series has a reliable embedding dimension");
    for (const auto& m : models)
        if (m.usable && m.diffs.size() < static_cast<std::size_t>(m.dim) * static_cast<std::size_t>(m.tau) + 2)
            throw Error(Errc::insufficient_history, "sub-series too short for its embedding");

    std::size_t correct = 0, judged = 0;
    res.guesses.reserve(announced.size());
    for (const auto& a : announced) {
        Outcome guess = -1;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t o = 0; o < 4; ++o) {
            if (!models[o].usable) continue;
            const double predicted = static_cast<double>(models[o].last_time) + models[o].forecast();
            const double err = std::abs(predicted - static_cast<double>(a.t));
            if (err < best) {
                best = err;
                guess = static_cast<Outcome>(o);
            }
        }
        res.guesses.push_back(guess);
        if (a.truth) {
            ++judged;
            correct += *a.truth == guess;
        }
        const auto owner = static_cast<std::size_t>(a.truth.value_or(guess));
        if (owner < 4 && a.t >= models[owner].last_time) {
            auto& m = models[owner];
            if (!history[owner].empty()) m.diffs.push_back(static_cast<double>(a.t - m.last_time));
            m.last_time = a.t;
        }
    }
    if (judged > 0) res.accuracy = static_cast<double>(correct) / static_cast<double>(judged);
    return res;
}

} // namespace bellrand
