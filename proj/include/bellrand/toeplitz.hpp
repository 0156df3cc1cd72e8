#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "bellrand/bits.hpp"
#include "bellrand/error.hpp"

namespace bellrand {

inline constexpr std::size_t default_toeplitz_dim = 16384;

/// m x n GF(2) Toeplitz matrix stored by its m+n-1 diagonals:
/// entry(i, j) = diagonals[i - j + n - 1].
class ToeplitzMatrix {
public:
    ToeplitzMatrix(std::size_t m, std::size_t n, BitVector diagonals) : m_(m), n_(n), diag_(std::move(diagonals)) {
        if (m == 0 || n == 0) throw Error(Errc::out_of_range, "Toeplitz dimensions must be positive");
        if (diag_.size() != m + n - 1) throw Error(Errc::length_mismatch, "need m+n-1 diagonal bits");
        // Row i, read over j, is the reversed diagonal sequence starting at m-1-i.
        reversed_.reserve(m + n - 1);
        for (std::size_t k = m + n - 1; k-- > 0;) reversed_.push_back(diag_[k]);
    }

    std::size_t rows() const noexcept { return m_; }
    std::size_t cols() const noexcept { return n_; }
    const BitVector& diagonals() const noexcept { return diag_; }

    bool entry(std::size_t i, std::size_t j) const noexcept { return diag_[i + n_ - 1 - j]; }

    /// GF(2) product with an n-bit column vector; word-parallel AND/popcount.
    BitVector multiply(const BitVector& seed) const {
        if (seed.size() != n_) throw Error(Errc::length_mismatch, "seed length must equal the column count");
        const auto rw = reversed_.words();
        const auto sw = seed.words();
        BitVector out(m_);
        for (std::size_t i = 0; i < m_; ++i) {
            const std::size_t off = m_ - 1 - i;
            const std::size_t q = off >> 6, s = off & 63;
            std::uint64_t acc = 0;
            for (std::size_t w = 0; w < sw.size(); ++w) {
                std::uint64_t v = rw[q + w] >> s;
                if (s != 0 && q + w + 1 < rw.size()) v |= rw[q + w + 1] << (64 - s);
                acc ^= v & sw[w];
            }
            out.set(i, std::popcount(acc) & 1);
        }
        return out;
    }

private:
    std::size_t m_;
    std::size_t n_;
    BitVector diag_;
    BitVector reversed_;
};

struct BuiltToeplitz {
    ToeplitzMatrix matrix;
    std::size_t bits_consumed;
};

/// First row = raw[offset, offset+n), first column continues with the next
/// m-1 raw bits; the remaining entries follow from diagonal constancy.
inline BuiltToeplitz build_toeplitz(const BitVector& raw, std::size_t m, std::size_t n, std::size_t offset = 0) {
    if (m == 0 || n == 0) throw Error(Errc::out_of_range, "Toeplitz dimensions must be positive");
    const std::size_t need = n + m - 1;
    if (raw.size() < offset + need) throw Error(Errc::insufficient_bits, "need " + std::to_string(need) + " raw bits for the matrix");
    BitVector diag(need);
    for (std::size_t j = 0; j < n; ++j) diag.set(n - 1 - j, raw[offset + j]);
    for (std::size_t i = 1; i < m; ++i) diag.set(n - 1 + i, raw[offset + n - 1 + i]);
    return {ToeplitzMatrix(m, n, std::move(diag)), need};
}

inline BitVector extract(const ToeplitzMatrix& matrix, const BitVector& seed) { return matrix.multiply(seed); }

struct ExtractOptions {
    std::size_t m = default_toeplitz_dim;
    std::size_t n = default_toeplitz_dim;
    bool freeze_matrix = false; // reuse the first block's matrix; later blocks consume only a seed
};

inline std::size_t toeplitz_block_cost(std::size_t m, std::size_t n) { return 2 * n + m - 1; }

/// Hashes successive raw segments: each block builds its matrix from n+m-1
/// bits and its seed from the following n, emitting m bits.
inline BitSeries extract_series(const BitSeries& raw, const ExtractOptions& opt = {}) {
    const std::size_t cost = toeplitz_block_cost(opt.m, opt.n);
    if (raw.bits.size() < cost)
        throw Error(Errc::insufficient_bits, "need at least " + std::to_string(cost) + " raw bits, have " + std::to_string(raw.bits.size()));
    BitSeries out;
    out.provenance = raw.provenance;
    out.provenance.extracted = true;

    std::size_t pos = 0;
    std::optional<ToeplitzMatrix> frozen;
    for (;;) {
        const bool rebuild = !opt.freeze_matrix || !frozen;
        const std::size_t need = rebuild ? cost : opt.n;
        if (raw.bits.size() - pos < need) break;
        if (rebuild) {
            auto built = build_toeplitz(raw.bits, opt.m, opt.n, pos);
            pos += built.bits_consumed;
            frozen.emplace(std::move(built.matrix));
        }
        const BitVector seed = raw.bits.slice(pos, opt.n);
        pos += opt.n;
        const BitVector block = frozen->multiply(seed);
        out.bits.reserve(out.bits.size() + block.size());
        for (std::size_t i = 0; i < block.size(); ++i) out.bits.push_back(block[i]);
    }
    return out;
}

} // namespace bellrand
