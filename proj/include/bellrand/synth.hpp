#pragma once

// Synthetic two-station Bell experiment: Poissonian pair emission,
// polarization-correlated outcomes, per-detector efficiencies, background
// singles and Gaussian timing jitter.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "bellrand/error.hpp"
#include "bellrand/events.hpp"

namespace bellrand {

/// Analyzer angles in degrees: station A uses a (0) or a' (45), station B
/// uses b (22.5) or b' (67.5).
inline constexpr std::array<double, 2> angles_a = {0.0, 45.0};
inline constexpr std::array<double, 2> angles_b = {22.5, 67.5};

struct SynthConfig {
    double visibility = 0.96;
    double pair_rate = 110000.0;             // pairs / s
    double background_singles_rate = 2500.0; // detections / s / station
    std::array<double, 4> efficiency = {0.21, 0.21, 0.21, 0.21}; // A0, A1, B0, B1
    double jitter_sigma_ps = 300.0;
    double duration_s = 10.0;
    std::uint64_t rng_seed = 1;
    int setting_a = 0; // index into angles_a
    int setting_b = 0; // index into angles_b
    std::int64_t resolution_ps = 10;
    std::string label = "synthetic";
};

inline void validate(const SynthConfig& c) {
    auto fail = [](const std::string& m) { throw Error(Errc::invalid_config, m); };
    if (!(c.visibility >= 0.0 && c.visibility <= 1.0)) fail("visibility must lie in [0,1]");
    if (!(c.pair_rate >= 0.0) || !(c.background_singles_rate >= 0.0)) fail("rates must be non-negative");
    if (!(c.duration_s > 0.0)) fail("duration must be positive");
    if (!(c.jitter_sigma_ps >= 0.0)) fail("jitter sigma must be non-negative");
    for (double e : c.efficiency)
        if (!(e > 0.0 && e <= 1.0)) fail("efficiencies must lie in (0,1]");
    if (c.setting_a < 0 || c.setting_a > 1 || c.setting_b < 0 || c.setting_b > 1) fail("setting index must be 0 or 1");
    if (c.resolution_ps <= 0) fail("resolution must be positive");
}

/// Ideal-angle CHSH value for a given two-photon visibility.
inline double nominal_chsh(double visibility) { return 2.0 * std::numbers::sqrt2 * visibility; }

/// Correlation E = V cos(2(a - b)) for the configured analyzer pair.
inline double model_correlation(double visibility, int setting_a, int setting_b) {
    const double delta = (angles_a[setting_a] - angles_b[setting_b]) * std::numbers::pi / 180.0;
    return visibility * std::cos(2.0 * delta);
}

inline EventStream simulate_run(const SynthConfig& cfg) {
    validate(cfg);
    std::mt19937_64 rng(cfg.rng_seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);

    auto jitter = [&]() -> double {
        if (cfg.jitter_sigma_ps == 0.0) return 0.0;
        for (;;) {
            const double z = gauss(rng);
            if (std::abs(z) <= 5.0) return z * cfg.jitter_sigma_ps;
        }
    };
    const double horizon_ps = cfg.duration_s * 1e12;
    auto quantize = [&](double t_ps) {
        const double q = std::round(std::max(0.0, t_ps) / static_cast<double>(cfg.resolution_ps));
        return static_cast<std::int64_t>(q) * cfg.resolution_ps;
    };

    std::vector<DetectionEvent> ev;
    const double expected = cfg.duration_s * (cfg.pair_rate * 0.5 + cfg.background_singles_rate * 2.0);
    ev.reserve(static_cast<std::size_t>(expected * 1.1) + 16);

    const double corr = model_correlation(cfg.visibility, cfg.setting_a, cfg.setting_b);
    const double p_same = 0.5 * (1.0 + corr);
    if (cfg.pair_rate > 0.0) {
        std::exponential_distribution<double> gap(cfg.pair_rate / 1e12);
        for (double t = gap(rng); t < horizon_ps; t += gap(rng)) {
            const unsigned ga = unit(rng) < 0.5 ? 1u : 0u;
            const unsigned gb = unit(rng) < p_same ? ga : 1u - ga;
            const auto cha = static_cast<Channel>(ga);
            const auto chb = static_cast<Channel>(2 + gb);
            const bool det_a = unit(rng) < cfg.efficiency[ga];
            const bool det_b = unit(rng) < cfg.efficiency[2 + gb];
            if (det_a) ev.push_back({quantize(t + jitter()), cha});
            if (det_b) ev.push_back({quantize(t + jitter()), chb});
        }
    }
    if (cfg.background_singles_rate > 0.0) {
        std::exponential_distribution<double> gap(cfg.background_singles_rate / 1e12);
        for (unsigned station = 0; station < 2; ++station) {
            const double e0 = cfg.efficiency[2 * station], e1 = cfg.efficiency[2 * station + 1];
            const double p1 = e1 / (e0 + e1);
            for (double t = gap(rng); t < horizon_ps; t += gap(rng)) {
                const unsigned g = unit(rng) < p1 ? 1u : 0u;
                ev.push_back({quantize(t + jitter()), static_cast<Channel>(2 * station + g)});
            }
        }
    }
    std::stable_sort(ev.begin(), ev.end(),
                     [](const DetectionEvent& x, const DetectionEvent& y) { return x.timestamp_ps < y.timestamp_ps; });

    EventStream s;
    s.events = std::move(ev);
    s.meta.nominal_s_chsh = nominal_chsh(cfg.visibility);
    s.meta.duration_s = cfg.duration_s;
    s.meta.resolution_ps = cfg.resolution_ps;
    s.meta.label = cfg.label;
    return s;
}

/// Coincidence outcome counts at one analyzer setting pair; '+' is gate 0.
struct SettingCounts {
    std::uint64_t pp = 0, pm = 0, mp = 0, mm = 0;

    std::uint64_t total() const noexcept { return pp + pm + mp + mm; }
    double correlation() const {
        return (static_cast<double>(pp) + static_cast<double>(mm) - static_cast<double>(pm) - static_cast<double>(mp)) /
               static_cast<double>(total());
    }
};

struct ChshEstimate {
    double s = 0.0;
    double std_error = 0.0;
};

/// counts indexed [a_index * 2 + b_index] for (a,b), (a,b'), (a',b), (a',b').
/// S = |E(a,b) - E(a,b') + E(a',b) + E(a',b')|.
inline ChshEstimate estimate_chsh(std::span<const SettingCounts, 4> counts) {
    for (const auto& c : counts)
        if (c.total() == 0) throw Error(Errc::empty_counts, "every setting pair needs coincidences");
    static constexpr std::array<double, 4> sign = {1.0, -1.0, 1.0, 1.0};
    double s = 0.0, var = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
        const double e = counts[i].correlation();
        s += sign[i] * e;
        var += (1.0 - e * e) / static_cast<double>(counts[i].total());
    }
    return {std::abs(s), std::sqrt(var)};
}

inline ChshEstimate estimate_chsh(const std::array<SettingCounts, 4>& counts) {
    return estimate_chsh(std::span<const SettingCounts, 4>(counts));
}

} // namespace bellrand
