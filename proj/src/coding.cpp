#include "dynnet/coding.hpp"

#include <algorithm>
#include <string>

#include "dynnet/errors.hpp"

namespace dynnet {

KnowledgeBasis::KnowledgeBasis(const FieldSpec& field, int k, int payload_syms)
    : field_(&field), k_(k), dp_(payload_syms), gf2_(field.q() == 2) {
    if (k < 0 || payload_syms < 0) {
        throw DimensionMismatch("negative basis dimensions");
    }
    if (gf2_) stride_ = (len() + 63) / 64;
}

std::vector<std::uint64_t> KnowledgeBasis::to_words(const CodedVector& v) const {
    std::vector<std::uint64_t> w(stride_, 0);
    for (int i = 0; i < k_; ++i) {
        if (v.coeffs[std::size_t(i)]) w[std::size_t(i) / 64] |= 1ull << (63 - (i % 64));
    }
    for (int j = 0; j < dp_; ++j) {
        int i = k_ + j;
        if (v.payload[std::size_t(j)]) w[std::size_t(i) / 64] |= 1ull << (63 - (i % 64));
    }
    return w;
}

CodedVector KnowledgeBasis::from_words(const std::vector<std::uint64_t>& w) const {
    CodedVector v;
    v.coeffs.resize(std::size_t(k_));
    v.payload.resize(std::size_t(dp_));
    for (int i = 0; i < k_; ++i) {
        v.coeffs[std::size_t(i)] = (w[std::size_t(i) / 64] >> (63 - (i % 64))) & 1;
    }
    for (int j = 0; j < dp_; ++j) {
        int i = k_ + j;
        v.payload[std::size_t(j)] = (w[std::size_t(i) / 64] >> (63 - (i % 64))) & 1;
    }
    return v;
}

static int first_set(const std::vector<std::uint64_t>& w) {
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (w[i]) return int(i) * 64 + __builtin_clzll(w[i]);
    }
    return -1;
}

static bool get_bit(const std::vector<std::uint64_t>& w, int i) {
    return (w[std::size_t(i) / 64] >> (63 - (i % 64))) & 1;
}

static void xor_into(std::vector<std::uint64_t>& a,
                     const std::vector<std::uint64_t>& b) {
    for (std::size_t i = 0; i < a.size(); ++i) a[i] ^= b[i];
}

bool KnowledgeBasis::insert_gf2(std::vector<std::uint64_t> w) {
    for (std::size_t r = 0; r < wrows_.size(); ++r) {
        if (get_bit(w, pivots_[r])) xor_into(w, wrows_[r]);
    }
    int p = first_set(w);
    if (p < 0) return false;
    // Insert keeping pivots ascending, then clear the new pivot column above.
    std::size_t at = 0;
    while (at < pivots_.size() && pivots_[at] < p) ++at;
    wrows_.insert(wrows_.begin() + long(at), std::move(w));
    pivots_.insert(pivots_.begin() + long(at), p);
    for (std::size_t r = 0; r < wrows_.size(); ++r) {
        if (r != at && get_bit(wrows_[r], p)) xor_into(wrows_[r], wrows_[at]);
    }
    ++rank_;
    return true;
}

bool KnowledgeBasis::insert_gen(std::vector<felem> v) {
    const FieldSpec& f = *field_;
    for (std::size_t r = 0; r < grows_.size(); ++r) {
        felem c = v[std::size_t(pivots_[r])];
        if (c) {
            for (int i = 0; i < len(); ++i) {
                v[std::size_t(i)] = f.sub(v[std::size_t(i)],
                                          f.mul(c, grows_[r][std::size_t(i)]));
            }
        }
    }
    int p = -1;
    for (int i = 0; i < len(); ++i) {
        if (v[std::size_t(i)]) { p = i; break; }
    }
    if (p < 0) return false;
    felem scale = f.inv(v[std::size_t(p)]);
    for (int i = p; i < len(); ++i) v[std::size_t(i)] = f.mul(v[std::size_t(i)], scale);
    std::size_t at = 0;
    while (at < pivots_.size() && pivots_[at] < p) ++at;
    grows_.insert(grows_.begin() + long(at), std::move(v));
    pivots_.insert(pivots_.begin() + long(at), p);
    for (std::size_t r = 0; r < grows_.size(); ++r) {
        if (r == at) continue;
        felem c = grows_[r][std::size_t(p)];
        if (c) {
            for (int i = 0; i < len(); ++i) {
                grows_[r][std::size_t(i)] = f.sub(
                    grows_[r][std::size_t(i)], f.mul(c, grows_[at][std::size_t(i)]));
            }
        }
    }
    ++rank_;
    return true;
}

bool KnowledgeBasis::insert(const CodedVector& v) {
    if (int(v.coeffs.size()) != k_ || int(v.payload.size()) != dp_) {
        throw DimensionMismatch("coded vector is " + std::to_string(v.coeffs.size()) +
                                "+" + std::to_string(v.payload.size()) +
                                " symbols, basis wants " + std::to_string(k_) + "+" +
                                std::to_string(dp_));
    }
    if (gf2_) return insert_gf2(to_words(v));
    std::vector<felem> flat;
    flat.reserve(std::size_t(len()));
    flat.insert(flat.end(), v.coeffs.begin(), v.coeffs.end());
    flat.insert(flat.end(), v.payload.begin(), v.payload.end());
    return insert_gen(std::move(flat));
}

CodedVector KnowledgeBasis::random_combination(Rng& rng) const {
    if (rank_ == 0) throw EmptyBasis();
    if (gf2_) {
        std::vector<std::uint64_t> acc(std::size_t(stride_), 0);
        for (int r = 0; r < rank_; ++r) {
            if (rng.next_bits(1)) xor_into(acc, wrows_[std::size_t(r)]);
        }
        return from_words(acc);
    }
    const FieldSpec& f = *field_;
    CodedVector out;
    out.coeffs.assign(std::size_t(k_), 0);
    out.payload.assign(std::size_t(dp_), 0);
    for (int r = 0; r < rank_; ++r) {
        felem c = felem(rng.next_below(f.q()));
        if (!c) continue;
        const auto& row = grows_[std::size_t(r)];
        for (int i = 0; i < k_; ++i) {
            out.coeffs[std::size_t(i)] =
                f.add(out.coeffs[std::size_t(i)], f.mul(c, row[std::size_t(i)]));
        }
        for (int j = 0; j < dp_; ++j) {
            out.payload[std::size_t(j)] = f.add(out.payload[std::size_t(j)],
                                                f.mul(c, row[std::size_t(k_ + j)]));
        }
    }
    return out;
}

bool KnowledgeBasis::senses(const std::vector<felem>& mu) const {
    if (int(mu.size()) != k_) throw DimensionMismatch("mu has wrong length");
    if (gf2_) {
        for (const auto& row : wrows_) {
            int acc = 0;
            for (int i = 0; i < k_; ++i) {
                if (mu[std::size_t(i)] && get_bit(row, i)) acc ^= 1;
            }
            if (acc) return true;
        }
        return false;
    }
    const FieldSpec& f = *field_;
    for (const auto& row : grows_) {
        felem acc = 0;
        for (int i = 0; i < k_; ++i) {
            acc = f.add(acc, f.mul(mu[std::size_t(i)], row[std::size_t(i)]));
        }
        if (acc) return true;
    }
    return false;
}

bool KnowledgeBasis::header_in_span(const std::vector<felem>& mu) const {
    if (int(mu.size()) != k_) throw DimensionMismatch("mu has wrong length");
    // Reduce mu against the header parts of the rows.
    const FieldSpec& f = *field_;
    std::vector<felem> v = mu;
    for (int r = 0; r < rank_; ++r) {
        int p = pivots_[std::size_t(r)];
        if (p >= k_) break;  // payload-only rows cannot help the header
        felem c = v[std::size_t(p)];
        if (!c) continue;
        if (gf2_) {
            for (int i = 0; i < k_; ++i) {
                if (get_bit(wrows_[std::size_t(r)], i)) v[std::size_t(i)] ^= 1;
            }
        } else {
            for (int i = 0; i < k_; ++i) {
                v[std::size_t(i)] = f.sub(v[std::size_t(i)],
                                          f.mul(c, grows_[std::size_t(r)][std::size_t(i)]));
            }
        }
    }
    for (felem x : v) if (x) return false;
    return true;
}

std::vector<int> KnowledgeBasis::decoded_indices() const {
    std::vector<int> out;
    for (int r = 0; r < rank_; ++r) {
        int p = pivots_[std::size_t(r)];
        if (p >= k_) break;
        bool unit = true;
        if (gf2_) {
            for (int i = 0; i < k_ && unit; ++i) {
                if (i != p && get_bit(wrows_[std::size_t(r)], i)) unit = false;
            }
        } else {
            for (int i = 0; i < k_ && unit; ++i) {
                if (i != p && grows_[std::size_t(r)][std::size_t(i)]) unit = false;
            }
        }
        if (unit) out.push_back(p);
    }
    return out;
}

std::optional<std::vector<felem>> KnowledgeBasis::decode_payload(int i) const {
    for (int r = 0; r < rank_; ++r) {
        if (pivots_[std::size_t(r)] != i) continue;
        bool unit = true;
        if (gf2_) {
            for (int c = 0; c < k_ && unit; ++c) {
                if (c != i && get_bit(wrows_[std::size_t(r)], c)) unit = false;
            }
            if (!unit) return std::nullopt;
            std::vector<felem> pay(static_cast<std::size_t>(dp_));
            for (int j = 0; j < dp_; ++j) {
                pay[std::size_t(j)] = get_bit(wrows_[std::size_t(r)], k_ + j) ? 1 : 0;
            }
            return pay;
        }
        for (int c = 0; c < k_ && unit; ++c) {
            if (c != i && grows_[std::size_t(r)][std::size_t(c)]) unit = false;
        }
        if (!unit) return std::nullopt;
        std::vector<felem> pay(grows_[std::size_t(r)].begin() + k_,
                               grows_[std::size_t(r)].end());
        return pay;
    }
    return std::nullopt;
}

std::vector<CodedVector> KnowledgeBasis::rows() const {
    std::vector<CodedVector> out;
    out.reserve(std::size_t(rank_));
    for (int r = 0; r < rank_; ++r) {
        if (gf2_) {
            out.push_back(from_words(wrows_[std::size_t(r)]));
        } else {
            CodedVector v;
            const auto& row = grows_[std::size_t(r)];
            v.coeffs.assign(row.begin(), row.begin() + k_);
            v.payload.assign(row.begin() + k_, row.end());
            out.push_back(std::move(v));
        }
    }
    return out;
}

bool KnowledgeBasis::operator==(const KnowledgeBasis& o) const {
    return k_ == o.k_ && dp_ == o.dp_ && rank_ == o.rank_ && pivots_ == o.pivots_ &&
           wrows_ == o.wrows_ && grows_ == o.grows_;
}

bool sensing_transfer_trial(const KnowledgeBasis& basis,
                            const std::vector<felem>& mu, Rng& rng) {
    if (!basis.senses(mu)) {
        throw PreconditionViolated("basis does not sense the target vector");
    }
    CodedVector v = basis.random_combination(rng);
    const FieldSpec& f = basis.field();
    felem acc = 0;
    for (std::size_t i = 0; i < mu.size(); ++i) {
        acc = f.add(acc, f.mul(mu[i], v.coeffs[i]));
    }
    return acc != 0;
}

void encode_coded_vector(const FieldSpec& f, const CodedVector& v, BitVec& out) {
    for (felem c : v.coeffs) out.append(c, f.sym_bits());
    for (felem p : v.payload) out.append(p, f.sym_bits());
}

CodedVector decode_coded_vector(const FieldSpec& f, BitReader& in, int k,
                                int payload_syms) {
    CodedVector v;
    v.coeffs.reserve(std::size_t(k));
    v.payload.reserve(std::size_t(payload_syms));
    for (int i = 0; i < k; ++i) v.coeffs.push_back(felem(in.read(f.sym_bits())));
    for (int j = 0; j < payload_syms; ++j) v.payload.push_back(felem(in.read(f.sym_bits())));
    return v;
}

}  // namespace dynnet
