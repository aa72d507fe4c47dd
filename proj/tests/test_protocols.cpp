#include <doctest.h>

#include <algorithm>
#include <set>
#include <vector>

#include "dynnet/errors.hpp"
#include "dynnet/protocols.hpp"
#include "dynnet/simulator.hpp"

using namespace dynnet;

namespace {

RunConfig small_cfg(ProtocolKind p, int n, int k, int d, int b) {
    RunConfig cfg;
    cfg.protocol = p;
    cfg.adversary.kind = AdversaryKind::fresh_random;
    cfg.n = n;
    cfg.k = k;
    cfg.d = d;
    cfg.b = b;
    cfg.q = 2;
    cfg.master_seed = 42;
    return cfg;
}

}  // namespace

TEST_CASE("two nodes hand one token over in the first round") {
    // uid takes 1 bit, no sequence field, so the body is exactly d + 1 bits
    // and the remainder flag must ride the tag to stay inside the budget.
    RunConfig cfg = small_cfg(ProtocolKind::flood_forward, 2, 1, 8, 9);
    std::vector<Message> first_round;
    EngineHooks hooks;
    hooks.on_message = [&](std::uint64_t t, int, const Message& m) {
        if (t == 0) first_round.push_back(m);
    };
    RunRecord rec = run_trial(cfg, &hooks);
    REQUIRE(rec.completion_round.has_value());
    CHECK(*rec.completion_round == 0);
    CHECK(rec.failure == FailureReason::none);
    REQUIRE(first_round.size() == 2);
    CHECK(first_round[0].tag == Tag::flood_tokens_flag);
    CHECK(first_round[0].body.bits() == 9);
    // The holder's body fills the budget exactly; the other node has no
    // undelivered work yet so its flag is down.
    CHECK(first_round[1].tag == Tag::flood_tokens);
    CHECK(first_round[1].body.bits() == 0);
}

TEST_CASE("flooding on a static path meets the epoch schedule bound") {
    RunConfig cfg = small_cfg(ProtocolKind::flood_forward, 32, 32, 8, 64);
    cfg.adversary.kind = AdversaryKind::rotating_path;
    cfg.adversary.T = 1u << 20;  // one block: the path never moves
    RunRecord rec = run_trial(cfg);
    REQUIRE(rec.completion_round.has_value());
    // tokens are 13 bits, 4 per message, so 8 marking epochs of 32 rounds
    // plus the in-flight epoch bound completion.
    CHECK(*rec.completion_round >= 31);
    CHECK(*rec.completion_round <= 9 * 32);
    CHECK(rec.stats.at("knowledge_min") == 32);
    REQUIRE(rec.termination_round.has_value());
    CHECK(*rec.termination_round > *rec.completion_round);
}

TEST_CASE("flood marking keeps every node in lockstep on any dynamic graph") {
    RunConfig cfg = small_cfg(ProtocolKind::flood_forward, 12, 12, 8, 26);
    for (AdversaryKind kind :
         {AdversaryKind::fresh_random, AdversaryKind::rank_sorted_path}) {
        cfg.adversary.kind = kind;
        RunRecord rec = run_trial(cfg);
        REQUIRE(rec.completion_round.has_value());
        CHECK(rec.failure == FailureReason::none);
        CHECK(rec.stats.at("knowledge_min") == 12);
        CHECK(rec.stats.at("knowledge_max") == 12);
    }
}

TEST_CASE("coded broadcast completes and decodes exactly") {
    RunConfig cfg = small_cfg(ProtocolKind::rlnc_broadcast, 8, 8, 16, 24);
    cfg.record_trace = true;
    std::set<Tag> tags;
    std::size_t max_body = 0;
    EngineHooks hooks;
    hooks.on_message = [&](std::uint64_t, int, const Message& m) {
        tags.insert(m.tag);
        max_body = std::max(max_body, m.body.bits());
    };
    RunRecord rec = run_trial(cfg, &hooks);
    REQUIRE(rec.completion_round.has_value());
    CHECK(rec.failure == FailureReason::none);
    // Bodies are one combination: 8 coefficient bits plus 16 payload bits.
    CHECK(max_body == 24);
    CHECK(tags.count(Tag::coded_vector_flag));
    // Per node knowledge (rank) never decreases along the trace.
    for (std::size_t i = 1; i < rec.trace.size(); ++i)
        for (std::size_t v = 0; v < rec.trace[i].knowledge.size(); ++v)
            CHECK(rec.trace[i].knowledge[v] >= rec.trace[i - 1].knowledge[v]);
}

TEST_CASE("coded broadcast works over a non-binary field") {
    RunConfig cfg = small_cfg(ProtocolKind::rlnc_broadcast, 5, 5, 3, 16);
    cfg.q = 3;  // 5 coefficient symbols plus 3 payload symbols, 2 bits each
    RunRecord rec = run_trial(cfg);
    REQUIRE(rec.completion_round.has_value());
    CHECK(rec.failure == FailureReason::none);
    CHECK(rec.stats.at("knowledge_min") == 5);
}

TEST_CASE("pipeline geometry scales the marking quota with stability") {
    RunConfig cfg = small_cfg(ProtocolKind::pipeline_flood, 128, 128, 8, 16);
    cfg.adversary.T = 8;
    std::uint64_t epoch8 = 0;
    int quota8 = 0;
    PipelineFlood::geometry(cfg, 15, &epoch8, &quota8);
    CHECK(epoch8 % 8 == 0);
    CHECK(epoch8 == 256);
    CHECK(quota8 >= 2);

    cfg.adversary.T = 1;
    std::uint64_t epoch1 = 0;
    int quota1 = 0;
    PipelineFlood::geometry(cfg, 15, &epoch1, &quota1);
    CHECK(quota1 == 1);  // cap is one token, no pipelining headroom
    CHECK(quota8 > quota1);
}

TEST_CASE("pipelined flooding completes exactly on rotating paths") {
    RunConfig cfg = small_cfg(ProtocolKind::pipeline_flood, 8, 8, 8, 22);
    cfg.adversary.kind = AdversaryKind::rotating_path;
    cfg.adversary.T = 4;
    RunRecord rec = run_trial(cfg);
    REQUIRE(rec.completion_round.has_value());
    CHECK(rec.failure == FailureReason::none);
    CHECK(rec.stats.at("knowledge_min") == 8);
}

TEST_CASE("token streams only carry the scheduled epoch prefix") {
    // With a quota of one token per epoch, every body holds at most one
    // token: the smallest undelivered one. Nothing else may circulate.
    RunConfig cfg = small_cfg(ProtocolKind::pipeline_flood, 6, 6, 8, 11);
    cfg.adversary.kind = AdversaryKind::rotating_path;
    cfg.adversary.T = 1;
    std::size_t max_body = 0;
    EngineHooks hooks;
    hooks.on_message = [&](std::uint64_t, int, const Message& m) {
        max_body = std::max(max_body, m.body.bits());
    };
    RunRecord rec = run_trial(cfg, &hooks);
    REQUIRE(rec.completion_round.has_value());
    CHECK(max_body == 11);  // one 3+8 bit token, never two
}

TEST_CASE("a batch already at the origin broadcasts in one super epoch") {
    RunConfig cfg = small_cfg(ProtocolKind::greedy_forward, 8, 8, 8, 128);
    cfg.placement = Placement::all_at_origin;
    RunRecord rec = run_trial(cfg);
    REQUIRE(rec.completion_round.has_value());
    CHECK(rec.failure == FailureReason::none);
    CHECK(rec.stats.at("super_epochs") == 1);
    CHECK(rec.stats.at("batches_ok") >= 1);
}

TEST_CASE("an empty batch completes immediately and still terminates") {
    for (ProtocolKind p :
         {ProtocolKind::flood_forward, ProtocolKind::rlnc_broadcast}) {
        RunConfig cfg = small_cfg(p, 4, 0, 8, 32);
        RunRecord rec = run_trial(cfg);
        REQUIRE(rec.completion_round.has_value());
        CHECK(*rec.completion_round == 0);
        CHECK(rec.termination_round.has_value());
        CHECK(rec.failure == FailureReason::none);
    }
}

TEST_CASE("a body that cannot hold one token is rejected up front") {
    RunConfig cfg = small_cfg(ProtocolKind::flood_forward, 2, 1, 8, 8);
    // token needs 1 + 8 bits, budget is 8
    CHECK_THROWS_AS(run_trial(cfg), BudgetExceeded);
}
