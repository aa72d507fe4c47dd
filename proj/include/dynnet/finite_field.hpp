#pragma once

#include <cstdint>
#include <vector>

#include "dynnet/bitvec.hpp"
#include "dynnet/errors.hpp"

namespace dynnet {

using felem = std::uint32_t;  // value in [0, q)

// Prime field F_q, q a prime fitting in 32 bits.
//
// Symbols travel on the wire as sym_bits = ceil(log2 q) bits each. Packing
// raw token bits into symbols uses only floor(log2 q) bits per symbol so
// every packed value is a valid field element; for q = 2 the two coincide
// and a packed token is just its own bits.
class FieldSpec {
  public:
    explicit FieldSpec(std::uint32_t q);

    std::uint32_t q() const { return q_; }
    int sym_bits() const { return sym_bits_; }
    int pack_bits() const { return pack_bits_; }

    felem add(felem a, felem b) const {
        std::uint64_t s = std::uint64_t(a) + b;
        return s >= q_ ? felem(s - q_) : felem(s);
    }
    felem sub(felem a, felem b) const { return a >= b ? a - b : felem(q_ - b + a); }
    felem neg(felem a) const { return a == 0 ? 0 : felem(q_ - a); }
    felem mul(felem a, felem b) const {
        return felem((std::uint64_t(a) * b) % q_);
    }
    felem inv(felem a) const;                 // throws ZeroInverse on 0
    felem div(felem a, felem b) const { return mul(a, inv(b)); }

    // Symbols needed to pack d raw bits.
    int packed_len(int d) const { return (d + pack_bits_ - 1) / pack_bits_; }

    // Pack d bits into packed_len(d) symbols, pack_bits per symbol, front
    // bits in the leading symbol, zero padding at the tail. Exact inverse
    // pair: unpack(pack(x)) == x bit for bit.
    std::vector<felem> pack_token(const BitVec& bits) const;
    BitVec unpack_token(const std::vector<felem>& syms, int d) const;

    static bool is_prime(std::uint32_t q);

  private:
    std::uint32_t q_;
    int sym_bits_;
    int pack_bits_;
};

}  // namespace dynnet
