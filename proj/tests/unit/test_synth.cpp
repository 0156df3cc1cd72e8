#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "bellrand/series.hpp"
#include "bellrand/synth.hpp"

using namespace bellrand;

namespace {

std::array<SettingCounts, 4> chsh_counts(SynthConfig cfg) {
    std::array<SettingCounts, 4> out;
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
            cfg.setting_a = a;
            cfg.setting_b = b;
            cfg.rng_seed += 17;
            const auto s = simulate_run(cfg);
            const auto sa = station_split(s, Side::A), sb = station_split(s, Side::B);
            const auto cs = find_coincidences(sa, sb, 10000, 0);
            out[static_cast<std::size_t>(a * 2 + b)] = setting_counts(sa, sb, cs);
        }
    return out;
}

} // namespace

TEST(Synth, NominalChsh) {
    EXPECT_DOUBLE_EQ(nominal_chsh(1.0), 2.0 * std::numbers::sqrt2);
    EXPECT_NEAR(nominal_chsh(0.98), 2.772, 5e-4);
    SynthConfig cfg;
    cfg.duration_s = 0.01;
    EXPECT_DOUBLE_EQ(simulate_run(cfg).meta.nominal_s_chsh, nominal_chsh(cfg.visibility));
}

TEST(Synth, Deterministic) {
    SynthConfig cfg;
    cfg.duration_s = 0.2;
    cfg.rng_seed = 1234;
    EXPECT_EQ(simulate_run(cfg), simulate_run(cfg));
    auto other = cfg;
    other.rng_seed = 1235;
    EXPECT_NE(simulate_run(cfg), simulate_run(other));
}

TEST(Synth, TimestampsSortedAndQuantized) {
    SynthConfig cfg;
    cfg.duration_s = 0.2;
    const auto s = simulate_run(cfg);
    for (std::size_t i = 0; i < s.size(); ++i) {
        EXPECT_EQ(s.events[i].timestamp_ps % cfg.resolution_ps, 0);
        if (i > 0) {
            ASSERT_LE(s.events[i - 1].timestamp_ps, s.events[i].timestamp_ps);
        }
    }
}

TEST(Synth, InvalidConfig) {
    SynthConfig c;
    c.visibility = 1.2;
    EXPECT_THROW(simulate_run(c), Error);
    c = {};
    c.duration_s = 0;
    EXPECT_THROW(simulate_run(c), Error);
    c = {};
    c.efficiency[1] = 0.0;
    EXPECT_THROW(simulate_run(c), Error);
    c = {};
    c.pair_rate = -1;
    EXPECT_THROW(simulate_run(c), Error);
}

TEST(Synth, IdealSourceReachesTsirelson) {
    SynthConfig cfg;
    cfg.visibility = 1.0;
    cfg.efficiency = {1.0, 1.0, 1.0, 1.0};
    cfg.background_singles_rate = 0.0;
    cfg.duration_s = 0.5; // ~5.5e4 pairs per setting
    const auto est = estimate_chsh(chsh_counts(cfg));
    EXPECT_NEAR(est.s, 2.0 * std::numbers::sqrt2, 3.0 * est.std_error);
}

TEST(Synth, ChshConvergesToVisibilityScaledValue) {
    SynthConfig cfg;
    cfg.visibility = 0.9;
    cfg.duration_s = 2.0;
    const auto est = estimate_chsh(chsh_counts(cfg));
    EXPECT_NEAR(est.s, 2.0 * std::numbers::sqrt2 * 0.9, 3.0 * est.std_error + 0.02); // accidentals dilute slightly
}

TEST(Synth, CoincidenceToSinglesRatioAtDefaultRates) {
    SynthConfig cfg;
    cfg.duration_s = 2.0;
    const auto s = simulate_run(cfg);
    const auto sa = station_split(s, Side::A), sb = station_split(s, Side::B);
    const auto cs = find_coincidences(sa, sb, 10000, 0);
    const double ratio = static_cast<double>(cs.size()) / static_cast<double>(sa.size());
    EXPECT_GE(ratio, 0.18);
    EXPECT_LE(ratio, 0.22);
}

TEST(EstimateChsh, Examples) {
    std::array<SettingCounts, 4> flat;
    for (auto& c : flat) c = {25, 25, 25, 25};
    EXPECT_DOUBLE_EQ(estimate_chsh(flat).s, 0.0);
    std::array<SettingCounts, 4> perfect{SettingCounts{50, 0, 0, 50}, SettingCounts{0, 50, 50, 0}, SettingCounts{50, 0, 0, 50},
                                         SettingCounts{50, 0, 0, 50}};
    EXPECT_DOUBLE_EQ(estimate_chsh(perfect).s, 4.0);
    flat[2] = {};
    EXPECT_THROW(estimate_chsh(flat), Error);
}
