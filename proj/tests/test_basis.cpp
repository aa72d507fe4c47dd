#include <doctest.h>

#include <set>
#include <vector>

#include "dynnet/coding.hpp"
#include "dynnet/errors.hpp"
#include "dynnet/rng.hpp"

using namespace dynnet;

namespace {

CodedVector rand_cv(const FieldSpec& f, int k, int dp, Rng& rng) {
    CodedVector v;
    v.coeffs.resize(k);
    v.payload.resize(dp);
    for (felem& c : v.coeffs) c = static_cast<felem>(rng.next_below(f.q()));
    for (felem& p : v.payload) p = static_cast<felem>(rng.next_below(f.q()));
    return v;
}

std::uint32_t as_mask(const CodedVector& v) {
    std::uint32_t m = 0;
    for (felem c : v.coeffs) m = (m << 1) | c;
    for (felem p : v.payload) m = (m << 1) | p;
    return m;
}

}  // namespace

TEST_CASE("rank grows only on vectors outside the span") {
    FieldSpec f(2);
    KnowledgeBasis kb(f, 4, 3);
    Rng rng(3);
    int rank = 0;
    for (int i = 0; i < 40; ++i) {
        CodedVector v = rand_cv(f, 4, 3, rng);
        bool grew = kb.insert(v);
        if (grew) ++rank;
        CHECK(kb.rank() == rank);
        CHECK(kb.insert(v) == false);  // now inside for sure
    }
    CHECK(rank <= 7);
}

TEST_CASE("gf2 span matches a brute force closure") {
    FieldSpec f(2);
    Rng rng(17);
    for (int rep = 0; rep < 30; ++rep) {
        KnowledgeBasis kb(f, 5, 4);
        std::set<std::uint32_t> closure{0};
        for (int i = 0; i < 5; ++i) {
            CodedVector v = rand_cv(f, 5, 4, rng);
            std::uint32_t m = as_mask(v);
            std::set<std::uint32_t> grown = closure;
            for (std::uint32_t x : closure) grown.insert(x ^ m);
            closure.swap(grown);
            kb.insert(v);
        }
        REQUIRE((1u << kb.rank()) == closure.size());
        for (const CodedVector& r : kb.rows()) CHECK(closure.count(as_mask(r)));
        // Random combinations of the basis never leave the closure.
        for (int t = 0; t < 10 && kb.rank(); ++t)
            CHECK(closure.count(as_mask(kb.random_combination(rng))));
    }
}

TEST_CASE("general field path agrees with the gf2 layout rules") {
    FieldSpec f(5);
    KnowledgeBasis kb(f, 3, 2);
    Rng rng(23);
    for (int i = 0; i < 20; ++i) kb.insert(rand_cv(f, 3, 2, rng));
    std::vector<CodedVector> rows = kb.rows();
    REQUIRE(static_cast<int>(rows.size()) == kb.rank());
    int prev = -1;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        int piv = -1;
        std::vector<felem> flat = rows[i].coeffs;
        flat.insert(flat.end(), rows[i].payload.begin(), rows[i].payload.end());
        for (std::size_t j = 0; j < flat.size(); ++j)
            if (flat[j]) {
                piv = static_cast<int>(j);
                break;
            }
        REQUIRE(piv > prev);
        CHECK(flat[static_cast<std::size_t>(piv)] == 1);
        for (std::size_t o = 0; o < rows.size(); ++o) {
            if (o == i) continue;
            std::vector<felem> oflat = rows[o].coeffs;
            oflat.insert(oflat.end(), rows[o].payload.begin(),
                         rows[o].payload.end());
            CHECK(oflat[static_cast<std::size_t>(piv)] == 0);
        }
        prev = piv;
    }
}

TEST_CASE("decoding returns the exact source payloads") {
    FieldSpec f(3);
    int k = 5, dp = 3;
    Rng rng(31);
    std::vector<std::vector<felem>> pay(k);
    for (auto& p : pay) {
        p.resize(dp);
        for (felem& x : p) x = static_cast<felem>(rng.next_below(3));
    }
    auto unit = [&](int i) {
        CodedVector v;
        v.coeffs.assign(k, 0);
        v.coeffs[i] = 1;
        v.payload = pay[i];
        return v;
    };
    KnowledgeBasis kb(f, k, dp);
    kb.insert(unit(1));
    kb.insert(unit(3));
    CHECK(kb.decoded_indices() == std::vector<int>{1, 3});
    CHECK(*kb.decode_payload(1) == pay[1]);
    CHECK(*kb.decode_payload(3) == pay[3]);
    CHECK(!kb.decode_payload(0).has_value());
    // A mixed vector decodes once enough of the span arrives.
    CodedVector mix = unit(0);
    for (std::size_t i = 0; i < mix.coeffs.size(); ++i)
        mix.coeffs[i] = f.add(mix.coeffs[i], unit(3).coeffs[i]);
    for (std::size_t i = 0; i < mix.payload.size(); ++i)
        mix.payload[i] = f.add(mix.payload[i], unit(3).payload[i]);
    kb.insert(mix);
    CHECK(kb.decoded_indices() == std::vector<int>{0, 1, 3});
    CHECK(*kb.decode_payload(0) == pay[0]);
}

TEST_CASE("sensing reports a nonzero projection onto the target") {
    FieldSpec f(2);
    KnowledgeBasis kb(f, 3, 1);
    CodedVector v;
    v.coeffs = {1, 1, 0};
    v.payload = {0};
    kb.insert(v);
    CHECK(kb.senses({1, 0, 0}));
    CHECK(kb.senses({1, 1, 0}) == false);  // dot is 1+1 = 0 over gf2
    CHECK(kb.senses({0, 0, 1}) == false);
    CHECK(kb.header_in_span({1, 1, 0}));
    CHECK(!kb.header_in_span({1, 0, 0}));
}

TEST_CASE("empty basis cannot emit and layouts are enforced") {
    FieldSpec f(2);
    KnowledgeBasis kb(f, 3, 2);
    Rng rng(1);
    CHECK_THROWS_AS(kb.random_combination(rng), EmptyBasis);
    CodedVector bad;
    bad.coeffs = {1, 0};  // wrong k
    bad.payload = {0, 0};
    CHECK_THROWS_AS(kb.insert(bad), DimensionMismatch);
}

TEST_CASE("sensing transfer succeeds for at least the field guarantee") {
    // The bound is 1 - 1/q; with q = 5 even 500 trials sit far above 0.7.
    FieldSpec f(5);
    Rng rng(77);
    int succ = 0, total = 500;
    for (int t = 0; t < total; ++t) {
        KnowledgeBasis kb(f, 4, 1);
        while (kb.rank() < 2) kb.insert(rand_cv(f, 4, 1, rng));
        std::vector<felem> mu(4);
        do {
            for (felem& m : mu) m = static_cast<felem>(rng.next_below(5));
        } while (!kb.senses(mu));
        if (sensing_transfer_trial(kb, mu, rng)) ++succ;
    }
    CHECK(static_cast<double>(succ) / total > 0.7);
    KnowledgeBasis kb(f, 2, 1);
    CodedVector v;
    v.coeffs = {1, 0};
    v.payload = {0};
    kb.insert(v);
    CHECK_THROWS_AS(sensing_transfer_trial(kb, {0, 1}, rng),
                    PreconditionViolated);
}

TEST_CASE("wire encoding of coded vectors round trips") {
    for (std::uint32_t q : {2u, 3u, 5u}) {
        FieldSpec f(q);
        Rng rng(q);
        for (int rep = 0; rep < 20; ++rep) {
            CodedVector v = rand_cv(f, 6, 4, rng);
            BitVec out;
            encode_coded_vector(f, v, out);
            CHECK(out.bits() == static_cast<std::size_t>(10 * f.sym_bits()));
            BitReader in(out);
            CodedVector back = decode_coded_vector(f, in, 6, 4);
            CHECK(back.coeffs == v.coeffs);
            CHECK(back.payload == v.payload);
        }
    }
}

TEST_CASE("equal spans compare equal regardless of insertion order") {
    FieldSpec f(3);
    Rng rng(41);
    std::vector<CodedVector> vs;
    for (int i = 0; i < 4; ++i) vs.push_back(rand_cv(f, 4, 2, rng));
    KnowledgeBasis a(f, 4, 2), b(f, 4, 2);
    for (const auto& v : vs) a.insert(v);
    for (auto it = vs.rbegin(); it != vs.rend(); ++it) b.insert(*it);
    CHECK(a == b);
}
