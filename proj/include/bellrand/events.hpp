#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "bellrand/error.hpp"

namespace bellrand {

/// Station A/B and analyzer gate 0/1. The numeric value is the binary
/// channel code.
enum class Channel : std::uint8_t { A0 = 0, A1 = 1, B0 = 2, B1 = 3 };

inline std::string_view to_string(Channel c) {
    static constexpr std::string_view names[] = {"A0", "A1", "B0", "B1"};
    return names[static_cast<unsigned>(c) & 3u];
}

inline bool is_station_a(Channel c) noexcept { return c == Channel::A0 || c == Channel::A1; }
inline unsigned gate_of(Channel c) noexcept { return static_cast<unsigned>(c) & 1u; }

struct DetectionEvent {
    std::int64_t timestamp_ps = 0;
    Channel channel = Channel::A0;

    friend bool operator==(const DetectionEvent&, const DetectionEvent&) = default;
};

struct RunMetadata {
    double nominal_s_chsh = 0.0;
    double duration_s = 0.0;
    std::int64_t resolution_ps = 10;
    std::string label;

    friend bool operator==(const RunMetadata&, const RunMetadata&) = default;
};

inline void to_json(nlohmann::json& j, const RunMetadata& m) {
    j = {{"nominal_s_chsh", m.nominal_s_chsh},
         {"duration_s", m.duration_s},
         {"resolution_ps", m.resolution_ps},
         {"label", m.label}};
}

inline void from_json(const nlohmann::json& j, RunMetadata& m) {
    m.nominal_s_chsh = j.value("nominal_s_chsh", 0.0);
    m.duration_s = j.value("duration_s", 0.0);
    m.resolution_ps = j.value("resolution_ps", std::int64_t{10});
    m.label = j.value("label", std::string{});
}

inline void validate(const RunMetadata& m) {
    if (!(m.nominal_s_chsh >= 0.0 && m.nominal_s_chsh <= 2.0 * std::sqrt(2.0) + 1e-12))
        throw Error(Errc::malformed_record, "nominal_s_chsh outside [0, 2*sqrt(2)]");
    if (m.resolution_ps <= 0) throw Error(Errc::malformed_record, "resolution must be positive");
}

struct EventStream {
    std::vector<DetectionEvent> events;
    RunMetadata meta;

    std::size_t size() const noexcept { return events.size(); }

    friend bool operator==(const EventStream&, const EventStream&) = default;
};

enum class TimetagFormat { csv, binary };

inline constexpr char binary_magic[4] = {'B', 'T', 'G', '1'};
inline constexpr std::string_view csv_header = "timestamp_ps,channel";
inline constexpr std::string_view csv_meta_prefix = "# meta ";

namespace detail {

inline void check_order(const std::vector<DetectionEvent>& ev, std::size_t i) {
    if (i > 0 && ev[i].timestamp_ps < ev[i - 1].timestamp_ps)
        throw Error(Errc::non_monotonic, "timestamp decreases at record " + std::to_string(i + 1));
}

template <typename T>
T read_le(const std::uint8_t* p) {
    T v = 0;
    for (std::size_t b = 0; b < sizeof(T); ++b) v |= static_cast<T>(p[b]) << (8 * b);
    return v;
}

template <typename T>
void write_le(std::string& out, T v) {
    for (std::size_t b = 0; b < sizeof(T); ++b) out.push_back(static_cast<char>((v >> (8 * b)) & 0xff));
}

inline EventStream parse_binary(std::span<const std::uint8_t> in) {
    // BTG1 | u64 record count | records (u64 ts, u8 channel) | u32 len | JSON
    if (in.size() < 12) throw Error(Errc::malformed_record, "binary timetag truncated before record count");
    const auto count = read_le<std::uint64_t>(in.data() + 4);
    std::size_t pos = 12;
    if (count > (in.size() - pos) / 9) throw Error(Errc::malformed_record, "binary timetag truncated in records");
    EventStream s;
    s.events.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i, pos += 9) {
        const auto ts = read_le<std::uint64_t>(in.data() + pos);
        const std::uint8_t ch = in[pos + 8];
        if (ch > 3) throw Error(Errc::malformed_record, "channel code " + std::to_string(ch) + " at record " + std::to_string(i + 1));
        if (ts > static_cast<std::uint64_t>(INT64_MAX)) throw Error(Errc::malformed_record, "timestamp overflows int64");
        s.events.push_back({static_cast<std::int64_t>(ts), static_cast<Channel>(ch)});
        check_order(s.events, s.events.size() - 1);
    }
    if (in.size() - pos < 4) throw Error(Errc::malformed_record, "binary timetag missing metadata block");
    const auto len = read_le<std::uint32_t>(in.data() + pos);
    pos += 4;
    if (in.size() - pos != len) throw Error(Errc::malformed_record, "metadata block length mismatch");
    try {
        s.meta = nlohmann::json::parse(in.begin() + static_cast<std::ptrdiff_t>(pos), in.end()).get<RunMetadata>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::malformed_record, std::string("metadata JSON: ") + e.what());
    }
    return s;
}

inline Channel parse_channel(std::string_view tok, std::size_t line) {
    if (tok.size() == 2 && (tok[0] == 'A' || tok[0] == 'B') && (tok[1] == '0' || tok[1] == '1'))
        return static_cast<Channel>((tok[0] == 'B' ? 2 : 0) + (tok[1] - '0'));
    throw Error(Errc::malformed_record, "bad channel '" + std::string(tok) + "' on line " + std::to_string(line));
}

inline EventStream parse_csv(std::string_view text) {
    EventStream s;
    std::size_t line_no = 0;
    bool seen_header = false;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        if (line.front() == '#') {
            if (line.starts_with(csv_meta_prefix)) {
                try {
                    s.meta = nlohmann::json::parse(line.substr(csv_meta_prefix.size())).get<RunMetadata>();
                } catch (const nlohmann::json::exception& e) {
                    throw Error(Errc::malformed_record, std::string("metadata JSON: ") + e.what());
                }
            }
            continue;
        }
        if (!seen_header) {
            if (line != csv_header) throw Error(Errc::malformed_record, "expected header '" + std::string(csv_header) + "'");
            seen_header = true;
            continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string_view::npos)
            throw Error(Errc::malformed_record, "missing ',' on line " + std::to_string(line_no));
        const auto ts_tok = line.substr(0, comma);
        std::uint64_t ts = 0;
        const auto [ptr, ec] = std::from_chars(ts_tok.data(), ts_tok.data() + ts_tok.size(), ts);
        if (ec != std::errc{} || ptr != ts_tok.data() + ts_tok.size() || ts > static_cast<std::uint64_t>(INT64_MAX))
            throw Error(Errc::malformed_record, "bad timestamp '" + std::string(ts_tok) + "' on line " + std::to_string(line_no));
        s.events.push_back({static_cast<std::int64_t>(ts), parse_channel(line.substr(comma + 1), line_no)});
        check_order(s.events, s.events.size() - 1);
    }
    if (!seen_header && !s.events.empty()) throw Error(Errc::malformed_record, "missing CSV header");
    return s;
}

} // namespace detail

/// Parses either timetag format; the binary form is recognized by its magic.
/// Empty input yields an empty stream.
inline EventStream parse_timetag(std::span<const std::uint8_t> bytes) {
    EventStream s;
    if (bytes.size() >= 4 && std::memcmp(bytes.data(), binary_magic, 4) == 0)
        s = detail::parse_binary(bytes);
    else
        s = detail::parse_csv(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
    validate(s.meta);
    return s;
}

inline EventStream parse_timetag(std::string_view bytes) {
    return parse_timetag(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()));
}

/// CSV carries metadata in a leading "# meta {json}" comment, omitted when
/// the metadata is default so that an empty default stream is header-only.
inline std::string write_timetag(const EventStream& s, TimetagFormat format) {
    std::string out;
    if (format == TimetagFormat::csv) {
        out.reserve(24 * s.events.size() + 64);
        if (s.meta != RunMetadata{}) {
            out += csv_meta_prefix;
            out += nlohmann::json(s.meta).dump();
            out += '\n';
        }
        out += csv_header;
        out += '\n';
        char buf[24];
        for (const auto& e : s.events) {
            const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, e.timestamp_ps);
            out.append(buf, ptr);
            out += ',';
            out += to_string(e.channel);
            out += '\n';
        }
        return out;
    }
    const std::string meta = nlohmann::json(s.meta).dump();
    out.reserve(16 + 9 * s.events.size() + meta.size());
    out.append(binary_magic, 4);
    detail::write_le<std::uint64_t>(out, s.events.size());
    for (const auto& e : s.events) {
        detail::write_le<std::uint64_t>(out, static_cast<std::uint64_t>(e.timestamp_ps));
        out.push_back(static_cast<char>(e.channel));
    }
    detail::write_le<std::uint32_t>(out, static_cast<std::uint32_t>(meta.size()));
    out += meta;
    return out;
}

/// One station's detection: timestamp and analyzer gate bit.
struct StationEvent {
    std::int64_t t = 0;
    std::uint8_t gate = 0;

    friend bool operator==(const StationEvent&, const StationEvent&) = default;
};

enum class Side { A, B };

inline std::vector<StationEvent> station_split(const EventStream& s, Side side) {
    std::vector<StationEvent> out;
    out.reserve(s.events.size() / 2 + 1);
    for (const auto& e : s.events)
        if (is_station_a(e.channel) == (side == Side::A))
            out.push_back({e.timestamp_ps, static_cast<std::uint8_t>(gate_of(e.channel))});
    return out;
}

} // namespace bellrand
