#pragma once

// Derivation of binary series from a two-station event stream: coincidence
// matching, CO/SO/AL classification, outcome (OUT) series and binarized
// time-difference (TD) series.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "bellrand/bits.hpp"
#include "bellrand/complexity.hpp"
#include "bellrand/error.hpp"
#include "bellrand/events.hpp"
#include "bellrand/synth.hpp"

namespace bellrand {

struct CoincidencePair {
    std::size_t index_a = 0; // into the station-A event sequence
    std::size_t index_b = 0; // into the station-B event sequence
    std::int64_t t_a = 0;
    std::int64_t t_b = 0;

    friend bool operator==(const CoincidencePair&, const CoincidencePair&) = default;
};

struct CoincidenceSet {
    std::vector<CoincidencePair> pairs;
    std::int64_t window_ps = 0;
    std::int64_t delay_ps = 0;

    std::size_t size() const noexcept { return pairs.size(); }
};

/// |t_b - t_a - delay| <= window/2, evaluated without rounding.
inline bool in_window(std::int64_t t_a, std::int64_t t_b, std::int64_t window_ps, std::int64_t delay_ps) noexcept {
    return 2 * std::llabs(t_b - t_a - delay_ps) <= window_ps;
}

/// Greedy earliest-first one-to-one matching. Each A event, in time order,
/// takes the earliest still-unmatched B event inside its window.
inline CoincidenceSet find_coincidences(std::span<const StationEvent> a, std::span<const StationEvent> b,
                                        std::int64_t window_ps, std::int64_t delay_ps) {
    CoincidenceSet cs;
    cs.window_ps = window_ps;
    cs.delay_ps = delay_ps;
    std::size_t j = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const std::int64_t centre = a[i].t + delay_ps;
        // B events too early for this A event are too early for every later one.
        while (j < b.size() && 2 * (centre - b[j].t) > window_ps) ++j;
        if (j < b.size() && in_window(a[i].t, b[j].t, window_ps, delay_ps)) {
            cs.pairs.push_back({i, j, a[i].t, b[j].t});
            ++j;
        }
    }
    return cs;
}

struct DelayScan {
    std::int64_t lo = -20000;
    std::int64_t hi = 20000;
    std::int64_t step = 1000;
};

struct DelayResult {
    std::int64_t delay_ps = 0;
    std::size_t count = 0;
    bool low_contrast = false; // peak / mean count < 2
};

/// Exhaustive scan; ties go to the smallest |delay|, then the smaller delay.
inline DelayResult optimize_delay(std::span<const StationEvent> a, std::span<const StationEvent> b,
                                  std::int64_t window_ps, const DelayScan& scan) {
    if (scan.step <= 0 || scan.hi < scan.lo) throw Error(Errc::empty_scan, "delay scan range is empty");
    DelayResult best;
    bool have = false;
    double total = 0.0;
    std::size_t points = 0;
    for (std::int64_t d = scan.lo; d <= scan.hi; d += scan.step) {
        const std::size_t c = find_coincidences(a, b, window_ps, d).size();
        total += static_cast<double>(c);
        ++points;
        const bool better = !have || c > best.count ||
                            (c == best.count && (std::llabs(d) < std::llabs(best.delay_ps) ||
                                                 (std::llabs(d) == std::llabs(best.delay_ps) && d < best.delay_ps)));
        if (better) {
            best.delay_ps = d;
            best.count = c;
            have = true;
        }
    }
    const double mean = total / static_cast<double>(points);
    best.low_contrast = mean <= 0.0 || static_cast<double>(best.count) / mean < 2.0;
    return best;
}

struct StationSubsets {
    std::vector<StationEvent> co;
    std::vector<StationEvent> so;
    std::vector<StationEvent> al;
};

struct Classification {
    StationSubsets a;
    StationSubsets b;
};

/// Splits each station's events into coincident (CO) and single (SO) subsets;
/// AL is the whole station sequence.
inline Classification classify(std::span<const StationEvent> a, std::span<const StationEvent> b,
                               const CoincidenceSet& cs) {
    std::vector<char> matched_a(a.size(), 0), matched_b(b.size(), 0);
    for (const auto& p : cs.pairs) {
        if (p.index_a >= a.size() || p.index_b >= b.size())
            throw Error(Errc::inconsistent_inputs, "coincidence index out of range");
        if (a[p.index_a].t != p.t_a || b[p.index_b].t != p.t_b)
            throw Error(Errc::inconsistent_inputs, "coincidence timestamps do not match the events");
        if (matched_a[p.index_a]++ || matched_b[p.index_b]++)
            throw Error(Errc::inconsistent_inputs, "event used by more than one coincidence");
    }
    Classification out;
    auto fill = [](std::span<const StationEvent> ev, const std::vector<char>& m, StationSubsets& s) {
        s.al.assign(ev.begin(), ev.end());
        for (std::size_t i = 0; i < ev.size(); ++i) (m[i] ? s.co : s.so).push_back(ev[i]);
    };
    fill(a, matched_a, out.a);
    fill(b, matched_b, out.b);
    return out;
}

/// Bit i is the gate of the i-th detection.
inline BitSeries out_series(std::span<const StationEvent> subset, Station station, SeriesClass cls) {
    BitSeries s;
    s.bits.reserve(subset.size());
    for (const auto& e : subset) s.bits.push_back(e.gate != 0);
    s.provenance.cls = cls;
    s.provenance.kind = SeriesKind::OUT;
    s.provenance.station = station;
    return s;
}

struct TimeDiffSeries {
    std::vector<std::int64_t> diffs;
    SeriesClass cls = SeriesClass::AL;
    Station station = Station::A;

    std::size_t size() const noexcept { return diffs.size(); }
};

inline TimeDiffSeries td_series(std::span<const std::int64_t> times, SeriesClass cls, Station station) {
    if (times.size() < 2) throw Error(Errc::too_short, "time differences need at least 2 detections");
    TimeDiffSeries td;
    td.cls = cls;
    td.station = station;
    td.diffs.resize(times.size() - 1);
    for (std::size_t i = 0; i + 1 < times.size(); ++i) td.diffs[i] = times[i + 1] - times[i];
    return td;
}

inline TimeDiffSeries td_series(std::span<const StationEvent> subset, SeriesClass cls, Station station) {
    std::vector<std::int64_t> t(subset.size());
    for (std::size_t i = 0; i < subset.size(); ++i) t[i] = subset[i].t;
    return td_series(std::span<const std::int64_t>(t), cls, station);
}

/// CO time differences use the station-A timestamp of each pair.
inline TimeDiffSeries td_series(const CoincidenceSet& cs) {
    std::vector<std::int64_t> t(cs.pairs.size());
    for (std::size_t i = 0; i < cs.pairs.size(); ++i) t[i] = cs.pairs[i].t_a;
    return td_series(std::span<const std::int64_t>(t), SeriesClass::CO, Station::Joint);
}

/// Bit = 1 iff diff > threshold; a diff equal to the threshold gives 0.
inline BitSeries binarize(const TimeDiffSeries& td, std::int64_t threshold_ps) {
    if (threshold_ps < 0) throw Error(Errc::out_of_range, "threshold must be non-negative");
    BitSeries s;
    s.bits.reserve(td.diffs.size());
    for (auto d : td.diffs) s.bits.push_back(d > threshold_ps);
    s.provenance.cls = td.cls;
    s.provenance.kind = SeriesKind::TD;
    s.provenance.station = td.station;
    s.provenance.threshold_ps = threshold_ps;
    return s;
}

struct SpectrumPoint {
    double quantile = 0.0;
    std::int64_t threshold_ps = 0;
    double kc = 0.0;
    double h_min = 0.0;
};

struct ThresholdSpectrum {
    std::vector<SpectrumPoint> grid;
    std::size_t kc_argmax = 0;   // grid index
    std::size_t h_min_argmax = 0; // grid index
    std::int64_t theta_star = 0; // threshold at the Kc maximum
    std::int64_t median = 0;
    double median_position = 0.0; // fractional grid index of the 0.5 quantile
    /// Threshold used for binarization: the H_min maximum when the two
    /// maxima coincide to within one grid step, otherwise theta_star.
    std::int64_t threshold = 0;
    bool maxima_coincide = false;
};

namespace detail {

/// Empirical quantile: the smallest sample with at least q*n samples <= it.
inline std::int64_t quantile_of_sorted(std::span<const std::int64_t> sorted, double q) {
    const auto n = static_cast<double>(sorted.size());
    auto idx = static_cast<std::ptrdiff_t>(std::ceil(q * n - 1e-9)) - 1;
    idx = std::clamp<std::ptrdiff_t>(idx, 0, static_cast<std::ptrdiff_t>(sorted.size()) - 1);
    return sorted[static_cast<std::size_t>(idx)];
}

} // namespace detail

inline constexpr int default_threshold_grid = 19;

/// Kc and H_min of the binarized series over thresholds at the empirical
/// quantiles k/(Q+1), k = 1..Q.
inline ThresholdSpectrum select_threshold(const TimeDiffSeries& td, int grid_quantiles = default_threshold_grid) {
    if (grid_quantiles < 3) throw Error(Errc::out_of_range, "threshold grid needs at least 3 quantiles");
    if (td.diffs.size() < 2) throw Error(Errc::too_short, "threshold selection needs at least 2 differences");
    std::vector<std::int64_t> sorted = td.diffs;
    std::sort(sorted.begin(), sorted.end());
    if (sorted.front() == sorted.back()) throw Error(Errc::degenerate, "all time differences are equal");

    ThresholdSpectrum sp;
    sp.median = detail::quantile_of_sorted(sorted, 0.5);
    sp.median_position = 0.5 * (grid_quantiles + 1) - 1.0;
    sp.grid.reserve(static_cast<std::size_t>(grid_quantiles));
    for (int k = 1; k <= grid_quantiles; ++k) {
        SpectrumPoint pt;
        pt.quantile = static_cast<double>(k) / (grid_quantiles + 1);
        pt.threshold_ps = detail::quantile_of_sorted(sorted, pt.quantile);
        const BitSeries b = binarize(td, pt.threshold_ps);
        pt.kc = kc(b.bits).kc;
        pt.h_min = min_entropy(b.bits).h_min;
        sp.grid.push_back(pt);
    }
    for (std::size_t i = 1; i < sp.grid.size(); ++i) {
        if (sp.grid[i].kc > sp.grid[sp.kc_argmax].kc) sp.kc_argmax = i;
        if (sp.grid[i].h_min > sp.grid[sp.h_min_argmax].h_min) sp.h_min_argmax = i;
    }
    sp.theta_star = sp.grid[sp.kc_argmax].threshold_ps;
    const auto gap = sp.kc_argmax > sp.h_min_argmax ? sp.kc_argmax - sp.h_min_argmax : sp.h_min_argmax - sp.kc_argmax;
    sp.maxima_coincide = gap <= 1;
    sp.threshold = sp.maxima_coincide ? sp.grid[sp.h_min_argmax].threshold_ps : sp.theta_star;
    return sp;
}

/// Outcome counts of a coincidence set, for CHSH estimation.
inline SettingCounts setting_counts(std::span<const StationEvent> a, std::span<const StationEvent> b,
                                    const CoincidenceSet& cs) {
    SettingCounts c;
    for (const auto& p : cs.pairs) {
        const unsigned ga = a[p.index_a].gate, gb = b[p.index_b].gate;
        if (ga == 0 && gb == 0) ++c.pp;
        else if (ga == 0) ++c.pm;
        else if (gb == 0) ++c.mp;
        else ++c.mm;
    }
    return c;
}

struct DeriveOptions {
    std::int64_t window_ps = 10000;
    std::int64_t delay_ps = 0;
    std::optional<DelayScan> scan; // overrides delay_ps when set
    int grid_quantiles = default_threshold_grid;
};

struct DerivedSeries {
    BitSeries series;
    std::optional<TimeDiffSeries> td;         // TD kind only
    std::optional<ThresholdSpectrum> spectrum; // TD kind only
    std::string error;                          // non-empty if derivation failed

    bool ok() const noexcept { return error.empty(); }
};

struct DerivedSet {
    std::vector<DerivedSeries> series;
    CoincidenceSet coincidences;
    std::optional<DelayResult> delay_scan;
};

/// Produces, in order: CO/SO/AL OUT series for A then B, the joint CO TD
/// series, then SO and AL TD series for A then B. CO-class series are
/// omitted when there are no coincidences.
inline DerivedSet derive_all(const EventStream& stream, const DeriveOptions& opt = {}) {
    const auto a = station_split(stream, Side::A);
    const auto b = station_split(stream, Side::B);
    DerivedSet out;
    std::int64_t delay = opt.delay_ps;
    if (opt.scan) {
        out.delay_scan = optimize_delay(a, b, opt.window_ps, *opt.scan);
        delay = out.delay_scan->delay_ps;
    }
    out.coincidences = find_coincidences(a, b, opt.window_ps, delay);
    const Classification cls = classify(a, b, out.coincidences);
    const bool have_co = !out.coincidences.pairs.empty();

    auto add_out = [&](const std::vector<StationEvent>& subset, Station st, SeriesClass c) {
        DerivedSeries d;
        d.series = out_series(subset, st, c);
        d.series.provenance.source = stream.meta.label;
        out.series.push_back(std::move(d));
    };
    auto add_td = [&](auto make_td, Station st, SeriesClass c) {
        DerivedSeries d;
        d.series.provenance = {c, SeriesKind::TD, st, std::nullopt, false, stream.meta.label};
        try {
            TimeDiffSeries td = make_td();
            ThresholdSpectrum sp = select_threshold(td, opt.grid_quantiles);
            d.series = binarize(td, sp.threshold);
            d.series.provenance.source = stream.meta.label;
            d.td = std::move(td);
            d.spectrum = std::move(sp);
        } catch (const Error& e) {
            d.error = e.what();
        }
        out.series.push_back(std::move(d));
    };

    if (have_co) {
        add_out(cls.a.co, Station::A, SeriesClass::CO);
        add_out(cls.b.co, Station::B, SeriesClass::CO);
    }
    add_out(cls.a.so, Station::A, SeriesClass::SO);
    add_out(cls.b.so, Station::B, SeriesClass::SO);
    add_out(cls.a.al, Station::A, SeriesClass::AL);
    add_out(cls.b.al, Station::B, SeriesClass::AL);
    if (have_co) add_td([&] { return td_series(out.coincidences); }, Station::Joint, SeriesClass::CO);
    add_td([&] { return td_series(std::span<const StationEvent>(cls.a.so), SeriesClass::SO, Station::A); }, Station::A, SeriesClass::SO);
    add_td([&] { return td_series(std::span<const StationEvent>(cls.b.so), SeriesClass::SO, Station::B); }, Station::B, SeriesClass::SO);
    add_td([&] { return td_series(std::span<const StationEvent>(cls.a.al), SeriesClass::AL, Station::A); }, Station::A, SeriesClass::AL);
    add_td([&] { return td_series(std::span<const StationEvent>(cls.b.al), SeriesClass::AL, Station::B); }, Station::B, SeriesClass::AL);
    return out;
}

} // namespace bellrand
