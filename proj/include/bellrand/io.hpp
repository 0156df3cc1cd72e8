#pragma once

// Packed-bit series files. `<path>` holds the bits MSB-first per byte, the
// last byte zero-padded; `<path>.json` carries length and provenance.
// Time differences of TD series live next to them in `<path>.td`, one
// integer (ps) per line.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bellrand/bits.hpp"
#include "bellrand/error.hpp"
#include "bellrand/events.hpp"

namespace bellrand {

inline constexpr int series_file_schema = 1;

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error(Errc::io, "cannot open " + p.string());
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_file(const std::filesystem::path& p, std::string_view data) {
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::io, "cannot write " + p.string());
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) throw Error(Errc::io, "write failed for " + p.string());
}

inline std::vector<std::uint8_t> pack_bits(const BitVector& bits) {
    std::vector<std::uint8_t> out((bits.size() + 7) / 8, 0);
    for (std::size_t i = 0; i < bits.size(); ++i)
        if (bits[i]) out[i / 8] |= static_cast<std::uint8_t>(0x80u >> (i % 8));
    return out;
}

inline BitVector unpack_bits(std::span<const std::uint8_t> bytes, std::size_t length) {
    if (length > bytes.size() * 8) throw Error(Errc::malformed_record, "bit file shorter than its declared length");
    BitVector v(length);
    for (std::size_t i = 0; i < length; ++i) v.set(i, (bytes[i / 8] >> (7 - i % 8)) & 1u);
    return v;
}

inline void to_json(nlohmann::json& j, const Provenance& p) {
    j = nlohmann::json{{"class", std::string(to_string(p.cls))},
                       {"kind", std::string(to_string(p.kind))},
                       {"station", std::string(to_string(p.station))},
                       {"threshold_ps", p.threshold_ps ? nlohmann::json(*p.threshold_ps) : nlohmann::json(nullptr)},
                       {"extracted", p.extracted},
                       {"source", p.source}};
}

inline void from_json(const nlohmann::json& j, Provenance& p) {
    p.cls = series_class_from(j.at("class").get<std::string>());
    p.kind = series_kind_from(j.at("kind").get<std::string>());
    p.station = station_from(j.at("station").get<std::string>());
    const auto& t = j.at("threshold_ps");
    p.threshold_ps = t.is_null() ? std::nullopt : std::optional<std::int64_t>(t.get<std::int64_t>());
    p.extracted = j.value("extracted", false);
    p.source = j.value("source", std::string{});
}

/// A series file as found on disk: bits, optional run metadata and
/// optional pre-binarization time differences.
struct SeriesFile {
    BitSeries series;
    std::optional<RunMetadata> run;
    std::optional<std::vector<std::int64_t>> td;
    nlohmann::json extra = nlohmann::json::object(); // e.g. threshold spectrum
};

inline std::filesystem::path sidecar_path(const std::filesystem::path& p) { return p.string() + ".json"; }
inline std::filesystem::path td_path(const std::filesystem::path& p) { return p.string() + ".td"; }

inline void write_series_file(const std::filesystem::path& p, const SeriesFile& f) {
    const auto bytes = pack_bits(f.series.bits);
    write_file(p, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
    nlohmann::json side = f.extra;
    side["schema"] = series_file_schema;
    side["length"] = f.series.size();
    side["provenance"] = f.series.provenance;
    if (f.run) side["run"] = *f.run;
    write_file(sidecar_path(p), side.dump(2) + "\n");
    if (f.td) {
        std::string text;
        text.reserve(f.td->size() * 8);
        for (auto d : *f.td) {
            text += std::to_string(d);
            text += '\n';
        }
        write_file(td_path(p), text);
    }
}

/// Without a sidecar the whole file is read as bits with default provenance.
inline SeriesFile read_series_file(const std::filesystem::path& p) {
    const std::string raw = read_file(p);
    const auto* data = reinterpret_cast<const std::uint8_t*>(raw.data());
    const std::span<const std::uint8_t> bytes(data, raw.size());
    SeriesFile f;
    const auto side_p = sidecar_path(p);
    if (!std::filesystem::exists(side_p)) {
        f.series.bits = unpack_bits(bytes, bytes.size() * 8);
        f.series.provenance.source = p.filename().string();
    } else {
        nlohmann::json side;
        try {
            side = nlohmann::json::parse(read_file(side_p));
            if (side.at("schema").get<int>() != series_file_schema) throw Error(Errc::malformed_record, "unsupported sidecar schema");
            f.series.bits = unpack_bits(bytes, side.at("length").get<std::size_t>());
            f.series.provenance = side.at("provenance").get<Provenance>();
            if (side.contains("run")) f.run = side["run"].get<RunMetadata>();
        } catch (const nlohmann::json::exception& e) {
            throw Error(Errc::malformed_record, side_p.string() + ": " + e.what());
        }
        for (const char* k : {"schema", "length", "provenance", "run"}) side.erase(k);
        f.extra = std::move(side);
    }
    if (const auto tp = td_path(p); std::filesystem::exists(tp)) {
        std::istringstream in(read_file(tp));
        std::vector<std::int64_t> td;
        std::int64_t v = 0;
        while (in >> v) td.push_back(v);
        if (!in.eof()) throw Error(Errc::malformed_record, tp.string() + ": non-integer entry");
        f.td = std::move(td);
    }
    return f;
}

} // namespace bellrand
