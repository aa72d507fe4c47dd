#include <doctest.h>

#include "dynnet/finite_field.hpp"
#include "dynnet/gather.hpp"
#include "dynnet/simulator.hpp"

using namespace dynnet;

TEST_CASE("batch geometry splits the transport unit as documented") {
    FieldSpec f2(2);
    // 128 symbols, 20-bit tokens: 64 coefficient symbols, 64 payload bits,
    // 2-bit count, 3 tokens per block.
    BatchGeometry g = batch_geometry(f2, 128, 20);
    CHECK(g.m_max == 64);
    CHECK(g.blk_syms == 64);
    CHECK(g.blk_bits == 64);
    CHECK(g.cnt_bits == 2);
    CHECK(g.per_block == 3);
    CHECK(g.batch_cap == 192);
    CHECK(g.feasible());

    // 16 symbols cannot carry a 15-bit token next to the count field.
    BatchGeometry tiny = batch_geometry(f2, 16, 15);
    CHECK(!tiny.feasible());

    // Non-binary fields pack fewer data bits per symbol.
    FieldSpec f5(5);
    BatchGeometry g5 = batch_geometry(f5, 30, 7);
    CHECK(g5.m_max == 15);
    CHECK(g5.blk_syms == 15);
    CHECK(g5.blk_bits == 30);
    CHECK(g5.per_block == (30 - g5.cnt_bits) / 7);
    CHECK(g5.batch_cap == g5.m_max * g5.per_block);
}

TEST_CASE("the stability dispatcher picks the only feasible variant") {
    RunConfig cfg;
    cfg.protocol = ProtocolKind::tstable;
    cfg.n = 128;
    cfg.k = 128;
    cfg.d = 8;
    cfg.b = 16;
    cfg.q = 2;
    cfg.adversary.T = 1;
    TStableChoice one = choose_tstable(cfg);
    CHECK(one.variant == TStableChoice::Variant::pipeline);
    CHECK(!one.greedy_feasible);
    CHECK(!one.coded_feasible);

    cfg.adversary.T = 8;
    TStableChoice eight = choose_tstable(cfg);
    CHECK(eight.coded_feasible);
    CHECK(eight.variant == TStableChoice::Variant::coded);
    CHECK(eight.cost_coded < eight.cost_pipeline);
}

TEST_CASE("a roomy budget keeps the batched composition at stability one") {
    RunConfig cfg;
    cfg.protocol = ProtocolKind::tstable;
    cfg.n = 32;
    cfg.k = 32;
    cfg.d = 8;
    cfg.b = 64;
    cfg.q = 2;
    cfg.adversary.T = 1;
    TStableChoice ch = choose_tstable(cfg);
    CHECK(ch.greedy_feasible);
    CHECK(ch.variant == TStableChoice::Variant::greedy);
}

TEST_CASE("random gathering reports who won and how much it holds") {
    RunConfig cfg;
    cfg.protocol = ProtocolKind::random_forward;
    cfg.adversary.kind = AdversaryKind::fresh_random;
    cfg.n = 16;
    cfg.k = 16;
    cfg.d = 8;
    cfg.b = 64;
    cfg.q = 2;
    cfg.master_seed = 7;
    RunRecord rec = run_trial(cfg);
    CHECK(rec.failure == FailureReason::none);
    REQUIRE(rec.termination_round.has_value());
    REQUIRE(rec.stats.count("identified_uid"));
    REQUIRE(rec.stats.count("identified_count"));
    CHECK(rec.stats.at("identified_uid") >= 0);
    CHECK(rec.stats.at("identified_uid") < 16);
    CHECK(rec.stats.at("identified_count") >= 1);
    CHECK(rec.stats.at("identified_count") <= 16);
}

TEST_CASE("the greedy composition disseminates a spread batch exactly") {
    RunConfig cfg;
    cfg.protocol = ProtocolKind::greedy_forward;
    cfg.adversary.kind = AdversaryKind::fresh_random;
    cfg.n = 24;
    cfg.k = 24;
    cfg.d = 8;
    cfg.b = 48;
    cfg.q = 2;
    cfg.master_seed = 9;
    RunRecord rec = run_trial(cfg);
    REQUIRE(rec.completion_round.has_value());
    CHECK(rec.failure == FailureReason::none);
    CHECK(rec.stats.at("knowledge_min") == 24);
    CHECK(rec.stats.at("known_final") == 24);
    CHECK(rec.stats.at("super_epochs") >= 1);
}

TEST_CASE("chunked transport over stable blocks also reaches everyone") {
    RunConfig cfg;
    cfg.protocol = ProtocolKind::tstable;
    cfg.adversary.kind = AdversaryKind::rotating_path;
    cfg.adversary.T = 8;
    cfg.n = 16;
    cfg.k = 16;
    cfg.d = 8;
    cfg.b = 16;
    cfg.q = 2;
    cfg.master_seed = 11;
    RunRecord rec = run_trial(cfg);
    REQUIRE(rec.completion_round.has_value());
    CHECK(rec.failure == FailureReason::none);
    CHECK(rec.stats.at("knowledge_min") == 16);
}
