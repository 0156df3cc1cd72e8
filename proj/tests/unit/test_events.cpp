#include <gtest/gtest.h>

#include "bellrand/events.hpp"
#include "bellrand/synth.hpp"

using namespace bellrand;

namespace {

Errc code_of(auto&& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error thrown";
    return Errc::io;
}

} // namespace

TEST(Timetag, ParsesCsv) {
    const auto s = parse_timetag(std::string_view("timestamp_ps,channel\n0,A0\n1200,B1"));
    ASSERT_EQ(s.size(), 2u);
    EXPECT_EQ(s.events[0], (DetectionEvent{0, Channel::A0}));
    EXPECT_EQ(s.events[1], (DetectionEvent{1200, Channel::B1}));
}

TEST(Timetag, RejectsDecreasingTimestamps) {
    EXPECT_EQ(code_of([] { parse_timetag(std::string_view("timestamp_ps,channel\n500,A0\n300,A1\n")); }), Errc::non_monotonic);
}

TEST(Timetag, RejectsBadChannelAndTimestamp) {
    EXPECT_EQ(code_of([] { parse_timetag(std::string_view("timestamp_ps,channel\n100,C7\n")); }), Errc::malformed_record);
    EXPECT_EQ(code_of([] { parse_timetag(std::string_view("timestamp_ps,channel\n-5,A0\n")); }), Errc::malformed_record);
    EXPECT_EQ(code_of([] { parse_timetag(std::string_view("timestamp_ps,channel\n1x,A0\n")); }), Errc::malformed_record);
    EXPECT_EQ(code_of([] { parse_timetag(std::string_view("ts,ch\n1,A0\n")); }), Errc::malformed_record);
}

TEST(Timetag, EmptyInputIsEmptyStream) {
    EXPECT_EQ(parse_timetag(std::string_view("")).size(), 0u);
    EXPECT_EQ(parse_timetag(std::string_view("timestamp_ps,channel\n")).size(), 0u);
}

TEST(Timetag, EmptyStreamWritesHeaderOnlyCsv) {
    EXPECT_EQ(write_timetag(EventStream{}, TimetagFormat::csv), "timestamp_ps,channel\n");
}

TEST(Timetag, EqualTimestampsKeepFileOrder) {
    const auto s = parse_timetag(std::string_view("timestamp_ps,channel\n7,B0\n7,A1\n7,A0\n"));
    ASSERT_EQ(s.size(), 3u);
    EXPECT_EQ(s.events[0].channel, Channel::B0);
    EXPECT_EQ(s.events[1].channel, Channel::A1);
    EXPECT_EQ(s.events[2].channel, Channel::A0);
}

TEST(Timetag, BinaryLayout) {
    EventStream s;
    s.events = {{5, Channel::A1}, {258, Channel::B0}};
    const auto bytes = write_timetag(s, TimetagFormat::binary);
    ASSERT_GE(bytes.size(), 4u + 8 + 18 + 4);
    EXPECT_EQ(bytes.substr(0, 4), "BTG1");
    EXPECT_EQ(static_cast<unsigned char>(bytes[4]), 2u);            // record count, little endian
    EXPECT_EQ(static_cast<unsigned char>(bytes[12]), 5u);           // first timestamp
    EXPECT_EQ(static_cast<unsigned char>(bytes[20]), 1u);           // channel A1
    EXPECT_EQ(static_cast<unsigned char>(bytes[21]), 2u);           // 258 = 0x0102
    EXPECT_EQ(static_cast<unsigned char>(bytes[22]), 1u);
    EXPECT_EQ(static_cast<unsigned char>(bytes[29]), 2u);           // channel B0
}

TEST(Timetag, BinaryRejectsTruncationAndBadChannel) {
    EventStream s;
    s.events = {{5, Channel::A1}, {9, Channel::B0}};
    auto bytes = write_timetag(s, TimetagFormat::binary);
    EXPECT_EQ(code_of([&] { parse_timetag(std::string_view(bytes).substr(0, 20)); }), Errc::malformed_record);
    bytes[20] = 9;
    EXPECT_EQ(code_of([&] { parse_timetag(std::string_view(bytes)); }), Errc::malformed_record);
}

class RoundTrip : public ::testing::TestWithParam<std::uint64_t> {};

TEST_P(RoundTrip, BothFormatsAreIdentity) {
    SynthConfig cfg;
    cfg.duration_s = 0.25; // ~1e5 events at the default rates
    cfg.rng_seed = GetParam();
    cfg.label = "seed " + std::to_string(GetParam());
    const auto s = simulate_run(cfg);
    ASSERT_GT(s.size(), 5000u);
    EXPECT_EQ(parse_timetag(std::string_view(write_timetag(s, TimetagFormat::csv))), s);
    EXPECT_EQ(parse_timetag(std::string_view(write_timetag(s, TimetagFormat::binary))), s);
}

INSTANTIATE_TEST_SUITE_P(Seeds, RoundTrip, ::testing::Values(1, 2, 3, 99));

TEST(Timetag, LargeRunRoundTrip) {
    SynthConfig cfg;
    cfg.duration_s = 2.0;
    const auto s = simulate_run(cfg);
    ASSERT_GT(s.size(), 100000u);
    EXPECT_EQ(parse_timetag(std::string_view(write_timetag(s, TimetagFormat::binary))), s);
}

TEST(StationSplit, Examples) {
    EventStream s;
    s.events = {{0, Channel::A0}, {10, Channel::B1}, {20, Channel::A1}};
    EXPECT_EQ(station_split(s, Side::A), (std::vector<StationEvent>{{0, 0}, {20, 1}}));
    EXPECT_EQ(station_split(s, Side::B), (std::vector<StationEvent>{{10, 1}}));
    EventStream only_b;
    only_b.events = {{3, Channel::B0}};
    EXPECT_TRUE(station_split(only_b, Side::A).empty());
}

TEST(StationSplit, PartitionsTheStream) {
    SynthConfig cfg;
    cfg.duration_s = 0.1;
    const auto s = simulate_run(cfg);
    EXPECT_EQ(station_split(s, Side::A).size() + station_split(s, Side::B).size(), s.size());
}

TEST(Metadata, ValidationAndJson) {
    RunMetadata m{2.5, 10.0, 10, "run"};
    EXPECT_NO_THROW(validate(m));
    EXPECT_EQ(nlohmann::json(m).get<RunMetadata>(), m);
    m.nominal_s_chsh = 3.0;
    EXPECT_THROW(validate(m), Error);
    m.nominal_s_chsh = 2.0;
    m.resolution_ps = 0;
    EXPECT_THROW(validate(m), Error);
}
