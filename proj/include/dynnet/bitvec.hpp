#pragma once

#include <array>
#include <cassert>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <memory>
#include <vector>

namespace dynnet {

// Bits needed to store any value in [0, v]. Never less than 1.
inline int bit_width_for(std::uint64_t v) {
    int w = 0;
    while (v > 0) {
        ++w;
        v >>= 1;
    }
    return w < 1 ? 1 : w;
}

// Smallest w with 2^w >= x, for x >= 1. ceil_log2(1) == 0.
inline int ceil_log2(std::uint64_t x) {
    assert(x >= 1);
    int w = 0;
    std::uint64_t p = 1;
    while (p < x) {
        p <<= 1;
        ++w;
        if (p == 0) break;
    }
    return w;
}

// Exact-length bit string. Fields are appended most significant bit first,
// so the lexicographic order of the bits matches append order. Bodies up to
// 256 bits live inline; longer strings spill to the heap.
class BitVec {
    static constexpr std::size_t kInlineWords = 4;

  public:
    BitVec() = default;

    BitVec(const BitVec& o) : bits_(o.bits_), sbo_(o.sbo_) {
        if (o.spill_) spill_ = std::make_unique<std::vector<std::uint64_t>>(*o.spill_);
    }
    BitVec(BitVec&&) noexcept = default;
    BitVec& operator=(const BitVec& o) {
        if (this != &o) {
            bits_ = o.bits_;
            sbo_ = o.sbo_;
            spill_ = o.spill_ ? std::make_unique<std::vector<std::uint64_t>>(*o.spill_)
                              : nullptr;
        }
        return *this;
    }
    BitVec& operator=(BitVec&&) noexcept = default;

    std::size_t bits() const { return bits_; }
    bool empty() const { return bits_ == 0; }

    void clear() {
        bits_ = 0;
        sbo_.fill(0);
        spill_.reset();
    }

    // Appends the low `width` bits of value, most significant first.
    void append(std::uint64_t value, int width) {
        assert(width >= 0 && width <= 64);
        if (width == 0) return;
        if (width < 64) {
            assert(value < (std::uint64_t(1) << width));
        }
        std::size_t pos = bits_;
        bits_ += static_cast<std::size_t>(width);
        ensure_words((bits_ + 63) / 64);
        std::uint64_t* w = data_mut();
        std::size_t wi = pos / 64;
        int off = static_cast<int>(pos % 64);
        int room = 64 - off;
        if (width <= room) {
            w[wi] |= (width == 64 && off == 0)
                         ? value
                         : (value << (room - width));
        } else {
            int hi = room;            // bits that fit in the current word
            int lo = width - hi;      // bits that go in the next word
            w[wi] |= value >> lo;
            w[wi + 1] |= value << (64 - lo);
        }
    }

    void append_bit(int bitval) { append(static_cast<std::uint64_t>(bitval & 1), 1); }

    // Reads `width` bits starting at bit position pos.
    std::uint64_t read(std::size_t pos, int width) const {
        assert(width >= 0 && width <= 64);
        assert(pos + static_cast<std::size_t>(width) <= bits_);
        if (width == 0) return 0;
        const std::uint64_t* w = data();
        std::size_t wi = pos / 64;
        int off = static_cast<int>(pos % 64);
        int room = 64 - off;
        if (width <= room) {
            std::uint64_t v = w[wi] >> (room - width);
            return width == 64 ? v : (v & ((std::uint64_t(1) << width) - 1));
        }
        int hi = room;
        int lo = width - hi;
        std::uint64_t v = (w[wi] & ((std::uint64_t(1) << hi) - 1)) << lo;
        v |= w[wi + 1] >> (64 - lo);
        return v;
    }

    int read_bit(std::size_t pos) const { return static_cast<int>(read(pos, 1)); }

    std::size_t word_count() const { return (bits_ + 63) / 64; }
    std::uint64_t word(std::size_t i) const { return data()[i]; }

    bool operator==(const BitVec& o) const {
        if (bits_ != o.bits_) return false;
        std::size_t wc = word_count();
        const std::uint64_t* a = data();
        const std::uint64_t* b = o.data();
        for (std::size_t i = 0; i < wc; ++i)
            if (a[i] != b[i]) return false;
        return true;
    }
    bool operator!=(const BitVec& o) const { return !(*this == o); }
    bool operator<(const BitVec& o) const {
        std::size_t wc = word_count(), owc = o.word_count();
        std::size_t common = wc < owc ? wc : owc;
        const std::uint64_t* a = data();
        const std::uint64_t* b = o.data();
        for (std::size_t i = 0; i < common; ++i) {
            if (a[i] != b[i]) return a[i] < b[i];
        }
        return bits_ < o.bits_;
    }

  private:
    const std::uint64_t* data() const { return spill_ ? spill_->data() : sbo_.data(); }
    std::uint64_t* data_mut() { return spill_ ? spill_->data() : sbo_.data(); }

    void ensure_words(std::size_t need) {
        if (need <= kInlineWords) return;
        if (!spill_) {
            spill_ = std::make_unique<std::vector<std::uint64_t>>(need, 0);
            std::memcpy(spill_->data(), sbo_.data(), kInlineWords * sizeof(std::uint64_t));
        } else if (spill_->size() < need) {
            spill_->resize(need, 0);
        }
    }

    std::size_t bits_ = 0;
    std::array<std::uint64_t, kInlineWords> sbo_{};
    std::unique_ptr<std::vector<std::uint64_t>> spill_;
};

// Sequential reader over a BitVec.
class BitReader {
  public:
    explicit BitReader(const BitVec& bv) : bv_(&bv), pos_(0) {}

    std::uint64_t read(int width) {
        std::uint64_t v = bv_->read(pos_, width);
        pos_ += static_cast<std::size_t>(width);
        return v;
    }
    int read_bit() { return static_cast<int>(read(1)); }
    std::size_t remaining() const { return bv_->bits() - pos_; }
    std::size_t pos() const { return pos_; }

  private:
    const BitVec* bv_;
    std::size_t pos_;
};

inline std::uint64_t fnv1a64(const void* data, std::size_t len) {
    const unsigned char* p = static_cast<const unsigned char*>(data);
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ull;
    }
    return h;
}

}  // namespace dynnet
