#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "bellrand/error.hpp"

namespace bellrand {

/// Packed binary sequence. Bit i lives in word i/64 at position i%64
/// (LSB first); unused high bits of the last word are always zero.
class BitVector {
public:
    BitVector() = default;

    explicit BitVector(std::size_t n, bool value = false)
        : words_((n + 63) / 64, value ? ~std::uint64_t{0} : 0), size_(n) {
        trim();
    }

    /// Parses a string of '0'/'1' characters; anything else is rejected.
    static BitVector from_string(std::string_view s) {
        BitVector v;
        v.reserve(s.size());
        for (char c : s) {
            if (c != '0' && c != '1')
                throw Error(Errc::malformed_record, "bit string contains '" + std::string(1, c) + "'");
            v.push_back(c == '1');
        }
        return v;
    }

    template <typename Range>
    static BitVector from_range(const Range& r) {
        BitVector v;
        for (auto x : r) v.push_back(x != 0);
        return v;
    }

    std::size_t size() const noexcept { return size_; }
    bool empty() const noexcept { return size_ == 0; }

    void reserve(std::size_t n) { words_.reserve((n + 63) / 64); }

    void push_back(bool b) {
        if (size_ % 64 == 0) words_.push_back(0);
        if (b) words_.back() |= std::uint64_t{1} << (size_ % 64);
        ++size_;
    }

    bool operator[](std::size_t i) const noexcept { return (words_[i >> 6] >> (i & 63)) & 1u; }

    void set(std::size_t i, bool b) noexcept {
        const auto mask = std::uint64_t{1} << (i & 63);
        if (b)
            words_[i >> 6] |= mask;
        else
            words_[i >> 6] &= ~mask;
    }

    std::size_t count_ones() const noexcept {
        std::size_t c = 0;
        for (auto w : words_) c += static_cast<std::size_t>(std::popcount(w));
        return c;
    }

    /// Copy of bits [first, first + count).
    BitVector slice(std::size_t first, std::size_t count) const {
        if (first + count > size_) throw Error(Errc::insufficient_bits, "slice beyond end of series");
        BitVector out;
        out.words_.assign((count + 63) / 64, 0);
        out.size_ = count;
        const std::size_t shift = first & 63;
        const std::size_t base = first >> 6;
        for (std::size_t w = 0; w < out.words_.size(); ++w) {
            std::uint64_t lo = words_[base + w] >> shift;
            if (shift != 0 && base + w + 1 < words_.size()) lo |= words_[base + w + 1] << (64 - shift);
            out.words_[w] = lo;
        }
        out.trim();
        return out;
    }

    std::span<const std::uint64_t> words() const noexcept { return words_; }

    std::string to_string() const {
        std::string s(size_, '0');
        for (std::size_t i = 0; i < size_; ++i)
            if ((*this)[i]) s[i] = '1';
        return s;
    }

    /// Bits as 0/1 bytes, convenient for byte-wise scans.
    std::vector<std::uint8_t> unpack() const {
        std::vector<std::uint8_t> out(size_);
        for (std::size_t i = 0; i < size_; ++i) out[i] = (*this)[i];
        return out;
    }

    BitVector& operator^=(const BitVector& o) {
        if (o.size_ != size_) throw Error(Errc::length_mismatch, "xor of unequal-length bit vectors");
        for (std::size_t w = 0; w < words_.size(); ++w) words_[w] ^= o.words_[w];
        return *this;
    }

    friend BitVector operator^(BitVector a, const BitVector& b) { return a ^= b; }

    friend bool operator==(const BitVector& a, const BitVector& b) = default;

private:
    void trim() noexcept {
        if (size_ % 64 != 0 && !words_.empty()) words_.back() &= (std::uint64_t{1} << (size_ % 64)) - 1;
    }

    std::vector<std::uint64_t> words_;
    std::size_t size_ = 0;
};

enum class SeriesClass { CO, SO, AL };
enum class SeriesKind { OUT, TD };
enum class Station { A, B, Joint };

inline std::string_view to_string(SeriesClass c) {
    switch (c) {
    case SeriesClass::CO: return "CO";
    case SeriesClass::SO: return "SO";
    case SeriesClass::AL: return "AL";
    }
    return "?";
}

inline std::string_view to_string(SeriesKind k) { return k == SeriesKind::OUT ? "OUT" : "TD"; }

inline std::string_view to_string(Station s) {
    switch (s) {
    case Station::A: return "A";
    case Station::B: return "B";
    case Station::Joint: return "joint";
    }
    return "?";
}

inline SeriesClass series_class_from(std::string_view s) {
    if (s == "CO") return SeriesClass::CO;
    if (s == "SO") return SeriesClass::SO;
    if (s == "AL") return SeriesClass::AL;
    throw Error(Errc::malformed_record, "unknown series class '" + std::string(s) + "'");
}

inline SeriesKind series_kind_from(std::string_view s) {
    if (s == "OUT") return SeriesKind::OUT;
    if (s == "TD") return SeriesKind::TD;
    throw Error(Errc::malformed_record, "unknown series kind '" + std::string(s) + "'");
}

inline Station station_from(std::string_view s) {
    if (s == "A") return Station::A;
    if (s == "B") return Station::B;
    if (s == "joint") return Station::Joint;
    throw Error(Errc::malformed_record, "unknown station '" + std::string(s) + "'");
}

struct Provenance {
    SeriesClass cls = SeriesClass::AL;
    SeriesKind kind = SeriesKind::OUT;
    Station station = Station::A;
    std::optional<std::int64_t> threshold_ps; // set iff kind == TD
    bool extracted = false;
    std::string source; // run label the series was derived from

    std::string name() const {
        std::string n = std::string(to_string(cls)) + "+" + std::string(to_string(kind));
        n += "(" + std::string(to_string(station)) + ")";
        if (extracted) n += "[ext]";
        return n;
    }

    friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct BitSeries {
    BitVector bits;
    Provenance provenance;

    std::size_t size() const noexcept { return bits.size(); }

    friend bool operator==(const BitSeries&, const BitSeries&) = default;
};

} // namespace bellrand
