#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <vector>

#include "dynnet/bitvec.hpp"
#include "dynnet/finite_field.hpp"
#include "dynnet/rng.hpp"

namespace dynnet {

// Totally ordered token identity: (origin uid, sequence number).
struct TokenId {
    std::uint32_t origin = 0;
    std::uint32_t seq = 0;
    auto operator<=>(const TokenId&) const = default;
};

struct Token {
    TokenId id;
    BitVec bits;
};

// Header-plus-payload vector over F_q: k coefficient symbols followed by
// payload symbols. The header position of a source vector i is e_i.
struct CodedVector {
    std::vector<felem> coeffs;
    std::vector<felem> payload;

    bool is_zero() const {
        for (felem c : coeffs) if (c) return false;
        for (felem p : payload) if (p) return false;
        return true;
    }
};

// Row space of every coded vector seen so far, kept in reduced row echelon
// form. Any message a node sends is a fresh uniform combination of these
// canonical rows, so what it transmits depends only on the span (equal spans
// produce identical canonical rows and hence identically distributed
// messages).
class KnowledgeBasis {
  public:
    KnowledgeBasis(const FieldSpec& field, int k, int payload_syms);

    int k() const { return k_; }
    int payload_syms() const { return dp_; }
    int rank() const { return rank_; }
    const FieldSpec& field() const { return *field_; }

    // Inserts a vector; true iff the rank grew (vector outside the span).
    // Throws DimensionMismatch on wrong layout.
    bool insert(const CodedVector& v);

    // Uniform random combination of the canonical rows. Throws EmptyBasis
    // when rank is 0. The zero vector is a legal outcome.
    CodedVector random_combination(Rng& rng) const;

    // True iff some basis row's header has nonzero dot product with mu
    // (mu has k coefficients).
    bool senses(const std::vector<felem>& mu) const;

    // True iff mu itself lies in the span of the basis row headers
    // (projection onto the coefficient part only).
    bool header_in_span(const std::vector<felem>& mu) const;

    // Indices i whose unit header e_i is in the span, i.e. rows reduced to
    // e_i || payload. Sorted ascending.
    std::vector<int> decoded_indices() const;

    // Payload of the decoded index i; nullopt when not decodable.
    std::optional<std::vector<felem>> decode_payload(int i) const;

    // Canonical rows, pivot order (for span-equality tests).
    std::vector<CodedVector> rows() const;

    bool operator==(const KnowledgeBasis& o) const;

  private:
    int len() const { return k_ + dp_; }

    // q == 2 fast path: rows are bit vectors.
    bool insert_gf2(std::vector<std::uint64_t> w);
    std::vector<std::uint64_t> to_words(const CodedVector& v) const;
    CodedVector from_words(const std::vector<std::uint64_t>& w) const;

    bool insert_gen(std::vector<felem> v);

    const FieldSpec* field_;
    int k_;
    int dp_;
    int rank_ = 0;

    bool gf2_;
    int stride_ = 0;                         // words per row (gf2)
    std::vector<std::vector<std::uint64_t>> wrows_;  // gf2 rows
    std::vector<std::vector<felem>> grows_;          // general rows
    std::vector<int> pivots_;                // ascending pivot per row
};

// One sensing-transfer experiment: draw a random combination from a basis
// that senses mu and report whether the combination still senses mu. The
// success probability is at least 1 - 1/q. Throws PreconditionViolated if
// the basis does not sense mu.
bool sensing_transfer_trial(const KnowledgeBasis& basis,
                            const std::vector<felem>& mu, Rng& rng);

// Wire layout: k coefficient symbols then payload symbols, sym_bits each,
// big-endian within each symbol.
void encode_coded_vector(const FieldSpec& f, const CodedVector& v, BitVec& out);
CodedVector decode_coded_vector(const FieldSpec& f, BitReader& in, int k,
                                int payload_syms);

}  // namespace dynnet
