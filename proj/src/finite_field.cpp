#include "dynnet/finite_field.hpp"

#include <string>

namespace dynnet {

bool FieldSpec::is_prime(std::uint32_t q) {
    if (q < 2) return false;
    if (q % 2 == 0) return q == 2;
    for (std::uint64_t d = 3; d * d <= q; d += 2) {
        if (q % d == 0) return false;
    }
    return true;
}

FieldSpec::FieldSpec(std::uint32_t q) : q_(q) {
    if (!is_prime(q)) {
        throw ConfigError("field order " + std::to_string(q) + " is not prime");
    }
    sym_bits_ = ceil_log2(q);
    if (sym_bits_ == 0) sym_bits_ = 1;  // q == 2 needs one bit on the wire
    // floor(log2 q): largest w with 2^w <= q
    pack_bits_ = bit_width_for(q) - 1;
    if ((1ull << pack_bits_) > q) --pack_bits_;
}

felem FieldSpec::inv(felem a) const {
    if (a == 0) throw ZeroInverse();
    // extended Euclid on (a, q)
    std::int64_t t = 0, newt = 1;
    std::int64_t r = q_, newr = a;
    while (newr != 0) {
        std::int64_t quot = r / newr;
        std::int64_t tmp = t - quot * newt;
        t = newt;
        newt = tmp;
        tmp = r - quot * newr;
        r = newr;
        newr = tmp;
    }
    if (t < 0) t += q_;
    return felem(t);
}

std::vector<felem> FieldSpec::pack_token(const BitVec& bits) const {
    int d = static_cast<int>(bits.bits());
    std::vector<felem> out;
    out.reserve(packed_len(d));
    for (int pos = 0; pos < d; pos += pack_bits_) {
        int w = pack_bits_ < d - pos ? pack_bits_ : d - pos;
        // Short tail chunk sits in the high bits of its symbol so unpack can
        // always read pack_bits and truncate.
        std::uint64_t v = bits.read(static_cast<std::size_t>(pos), w);
        out.push_back(felem(v << (pack_bits_ - w)));
    }
    return out;
}

BitVec FieldSpec::unpack_token(const std::vector<felem>& syms, int d) const {
    BitVec out;
    int pos = 0;
    for (felem s : syms) {
        if (pos >= d) break;
        int w = pack_bits_ < d - pos ? pack_bits_ : d - pos;
        out.append(std::uint64_t(s) >> (pack_bits_ - w), w);
        pos += w;
    }
    return out;
}

}  // namespace dynnet
