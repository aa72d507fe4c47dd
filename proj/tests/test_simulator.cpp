#include <doctest.h>

#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include "dynnet/errors.hpp"
#include "dynnet/harness.hpp"
#include "dynnet/rng.hpp"
#include "dynnet/simulator.hpp"

using namespace dynnet;

TEST_CASE("flooding a fixed path advances one hop per round") {
    RunConfig cfg;
    cfg.protocol = ProtocolKind::flood_forward;
    cfg.adversary.kind = AdversaryKind::custom;
    cfg.adversary.schedule = {{{0, 1}, {1, 2}, {2, 3}}};
    cfg.n = 4;
    cfg.k = 2;
    cfg.d = 4;
    cfg.b = 12;  // two 6-bit tokens per message
    cfg.q = 2;
    cfg.master_seed = 7;
    cfg.record_trace = true;
    RunRecord rec = run_trial(cfg);

    // Tokens start at nodes 0 and 1; the far end learns both by round 2.
    REQUIRE(rec.completion_round.has_value());
    CHECK(*rec.completion_round == 2);
    REQUIRE(rec.trace.size() >= 3);
    CHECK(rec.trace[0].knowledge == std::vector<int>{2, 2, 1, 0});
    CHECK(rec.trace[1].knowledge == std::vector<int>{2, 2, 2, 1});
    CHECK(rec.trace[2].knowledge == std::vector<int>{2, 2, 2, 2});

    Topology path;
    path.n = 4;
    path.edges = {{0, 1}, {1, 2}, {2, 3}};
    for (const TraceRow& row : rec.trace) {
        CHECK(row.topology_hash == path.hash());
        CHECK(row.round == rec.trace[0].round + (&row - rec.trace.data()));
    }
    REQUIRE(rec.termination_round.has_value());
    CHECK(*rec.termination_round > *rec.completion_round);
}

TEST_CASE("wire id widths cover the token space exactly") {
    RunConfig cfg;
    cfg.n = 2;
    cfg.k = 2;
    cfg.d = 1;
    cfg.b = 8;
    int uid = 0, seq = 0;
    TrialContext::id_widths(cfg, &uid, &seq);
    CHECK(uid == 1);
    CHECK(seq == 0);

    cfg.n = 1;
    cfg.k = 1;
    TrialContext::id_widths(cfg, &uid, &seq);
    CHECK(uid == 1);
    CHECK(seq == 0);

    // Seven tokens over three nodes: sequence numbers reach 2.
    cfg.n = 3;
    cfg.k = 7;
    TrialContext::id_widths(cfg, &uid, &seq);
    CHECK(uid == 2);
    CHECK(seq == 2);

    cfg.placement = Placement::all_at_origin;
    TrialContext::id_widths(cfg, &uid, &seq);
    CHECK(seq == 3);

    cfg.uid_bits_override = 9;
    TrialContext::id_widths(cfg, &uid, &seq);
    CHECK(uid == 9);
}

TEST_CASE("placements seed tokens where they claim to") {
    RunConfig cfg;
    cfg.n = 4;
    cfg.k = 10;
    cfg.d = 8;
    cfg.b = 64;
    cfg.master_seed = 5;
    {
        TrialContext ctx(cfg);
        REQUIRE(ctx.tokens.size() == 10);
        for (int i = 0; i < 10; ++i) {
            CHECK(ctx.index_of.at(ctx.tokens[i].id) == i);
            CHECK(ctx.tokens[i].bits.bits() == 8);
            if (i > 0) CHECK(ctx.tokens[i - 1].id < ctx.tokens[i].id);
        }
        // Token i sits at node i mod n with sequence i div n.
        std::set<std::pair<int, int>> seen;
        for (int u = 0; u < 4; ++u)
            for (int idx : ctx.holdings[u]) {
                TokenId id = ctx.tokens[idx].id;
                CHECK(static_cast<int>(id.origin) == u);
                seen.insert({static_cast<int>(id.origin),
                             static_cast<int>(id.seq)});
            }
        CHECK(seen.size() == 10);
        for (int i = 0; i < 10; ++i)
            CHECK(seen.count({i % 4, i / 4}) == 1);
    }
    cfg.placement = Placement::all_at_origin;
    {
        TrialContext ctx(cfg);
        CHECK(ctx.holdings[0].size() == 10);
        for (int u = 1; u < 4; ++u) CHECK(ctx.holdings[u].empty());
        for (int i = 0; i < 10; ++i) {
            CHECK(ctx.tokens[i].id.origin == 0);
            CHECK(static_cast<int>(ctx.tokens[i].id.seq) == i);
        }
    }
    cfg.placement = Placement::random_nodes;
    {
        TrialContext ctx(cfg);
        int held = 0;
        std::map<int, std::set<int>> seqs;
        for (int u = 0; u < 4; ++u) {
            held += static_cast<int>(ctx.holdings[u].size());
            for (int idx : ctx.holdings[u]) {
                TokenId id = ctx.tokens[idx].id;
                CHECK(static_cast<int>(id.origin) == u);
                seqs[u].insert(static_cast<int>(id.seq));
            }
        }
        CHECK(held == 10);
        // Sequence numbers are dense per origin.
        for (auto& [u, s] : seqs)
            for (int i = 0; i < static_cast<int>(s.size()); ++i)
                CHECK(s.count(i) == 1);
    }
    cfg.placement = Placement::one_per_node;
    cfg.uid_payload_tokens = true;
    cfg.d = 16;
    {
        TrialContext ctx(cfg);
        for (const Token& t : ctx.tokens) {
            BitReader in(t.bits);
            CHECK(in.read(16) == t.id.origin);
        }
    }
}

TEST_CASE("trace rows carry the same topology the engine used") {
    RunConfig cfg;
    cfg.protocol = ProtocolKind::flood_forward;
    cfg.adversary.kind = AdversaryKind::fresh_random;
    cfg.adversary.T = 2;
    cfg.n = 6;
    cfg.k = 6;
    cfg.d = 8;
    cfg.b = 64;
    cfg.master_seed = 11;
    cfg.record_trace = true;
    std::map<std::uint64_t, std::uint64_t> seen;
    EngineHooks hooks;
    hooks.on_topology = [&](std::uint64_t t, const Topology& topo) {
        seen[t] = topo.hash();
    };
    RunRecord rec = run_trial(cfg, &hooks);
    REQUIRE(!rec.trace.empty());
    for (const TraceRow& row : rec.trace) {
        REQUIRE(seen.count(row.round) == 1);
        CHECK(seen[row.round] == row.topology_hash);
    }
}

TEST_CASE("node coin flips cannot steer an oblivious adversary") {
    RunConfig cfg;
    cfg.protocol = ProtocolKind::rlnc_broadcast;
    cfg.adversary.kind = AdversaryKind::fresh_random;
    cfg.adversary.T = 2;
    cfg.n = 8;
    cfg.k = 8;
    cfg.d = 8;
    cfg.b = 32;
    cfg.q = 2;
    cfg.master_seed = 23;
    cfg.round_cap = 16;
    cfg.record_trace = true;
    EngineHooks a, b;
    a.node_stream_salt = 0;
    b.node_stream_salt = 1;
    RunRecord ra = run_trial(cfg, &a);
    RunRecord rb = run_trial(cfg, &b);
    std::size_t common = std::min(ra.trace.size(), rb.trace.size());
    REQUIRE(common > 0);
    for (std::size_t i = 0; i < common; ++i)
        CHECK(ra.trace[i].topology_hash == rb.trace[i].topology_hash);
}

TEST_CASE("exceeding the knowledge bound stops the trial") {
    RunConfig cfg;
    cfg.protocol = ProtocolKind::flood_forward;
    cfg.adversary.kind = AdversaryKind::fresh_random;
    cfg.n = 4;
    cfg.k = 4;
    cfg.d = 4;
    cfg.b = 64;
    cfg.master_seed = 2;
    cfg.abort_if_known_exceeds = 2;
    RunRecord rec = run_trial(cfg);
    CHECK(rec.failure == FailureReason::known_exceeded);
    CHECK(!rec.completion_round.has_value());
}

TEST_CASE("size estimation agrees with the hidden count") {
    for (int hidden : {1, 3, 5}) {
        RunConfig base;
        base.protocol = ProtocolKind::flood_forward;
        base.adversary.kind = AdversaryKind::fresh_random;
        base.n = hidden;
        base.b = 64;
        base.q = 2;
        base.master_seed = Rng::derive(40, static_cast<std::uint64_t>(hidden));
        SizeEstimateResult res = run_size_estimate(base);
        CHECK(res.ok);
        CHECK(res.count == hidden);
        // First power of two the dissemination fits under.
        int expect = 1;
        while (expect < hidden) expect *= 2;
        CHECK(res.estimate == expect);
        REQUIRE(res.budgets.size() == res.rounds_used.size());
        std::uint64_t total = 0;
        for (std::size_t i = 0; i < res.budgets.size(); ++i) {
            CHECK(res.rounds_used[i] <= res.budgets[i]);
            total += res.rounds_used[i];
        }
        CHECK(res.total_rounds == total);
    }
}

TEST_CASE("malformed run configs are rejected up front") {
    RunConfig cfg;
    cfg.n = 0;
    cfg.k = 1;
    cfg.d = 1;
    cfg.b = 8;
    CHECK_THROWS_AS(TrialContext{cfg}, ConfigError);
    cfg.n = 4;
    cfg.b = 0;
    CHECK_THROWS_AS(TrialContext{cfg}, ConfigError);
    cfg.b = 8;
    cfg.n_hat = 2;  // claims fewer nodes than exist
    CHECK_THROWS_AS(TrialContext{cfg}, ConfigError);
    cfg.n_hat = 0;
    cfg.k = -1;
    CHECK_THROWS_AS(TrialContext{cfg}, ConfigError);
}
