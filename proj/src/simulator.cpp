#include <algorithm>
#include <cmath>

#include "dynnet/errors.hpp"
#include "dynnet/patch.hpp"
#include "dynnet/simulator.hpp"

namespace dynnet {

namespace {

// Stream domains under (master_seed, trial, domain, id).
constexpr std::uint64_t kDomainSetup = 1;
constexpr std::uint64_t kDomainAdversary = 2;
constexpr std::uint64_t kDomainNode = 3;

}  // namespace

std::string to_string(ProtocolKind k) {
    switch (k) {
        case ProtocolKind::flood_forward: return "flood_forward";
        case ProtocolKind::rlnc_broadcast: return "rlnc_broadcast";
        case ProtocolKind::random_forward: return "random_forward";
        case ProtocolKind::greedy_forward: return "greedy_forward";
        case ProtocolKind::priority_forward: return "priority_forward";
        case ProtocolKind::pipeline_flood: return "pipeline_flood";
        case ProtocolKind::patch_share: return "patch_share";
        case ProtocolKind::tstable: return "tstable";
    }
    return "?";
}

ProtocolKind protocol_from_string(const std::string& s) {
    if (s == "flood_forward") return ProtocolKind::flood_forward;
    if (s == "rlnc_broadcast") return ProtocolKind::rlnc_broadcast;
    if (s == "random_forward") return ProtocolKind::random_forward;
    if (s == "greedy_forward") return ProtocolKind::greedy_forward;
    if (s == "priority_forward") return ProtocolKind::priority_forward;
    if (s == "pipeline_flood") return ProtocolKind::pipeline_flood;
    if (s == "patch_share") return ProtocolKind::patch_share;
    if (s == "tstable") return ProtocolKind::tstable;
    throw ConfigError("unknown protocol: " + s);
}

std::string to_string(Placement p) {
    switch (p) {
        case Placement::one_per_node: return "one_per_node";
        case Placement::all_at_origin: return "all_at_origin";
        case Placement::random_nodes: return "random_nodes";
    }
    return "?";
}

Placement placement_from_string(const std::string& s) {
    if (s == "one_per_node") return Placement::one_per_node;
    if (s == "all_at_origin") return Placement::all_at_origin;
    if (s == "random_nodes") return Placement::random_nodes;
    throw ConfigError("unknown placement: " + s);
}

std::string to_string(FailureReason f) {
    switch (f) {
        case FailureReason::none: return "none";
        case FailureReason::round_cap: return "round_cap";
        case FailureReason::known_exceeded: return "known_exceeded";
    }
    return "?";
}

void TrialContext::id_widths(const RunConfig& c, int* uid_bits, int* seq_bits) {
    int hat = c.hat_n();
    *uid_bits = c.uid_bits_override > 0
                    ? c.uid_bits_override
                    : bit_width_for(static_cast<std::uint64_t>(
                          hat > 0 ? hat - 1 : 0));
    // Sequence width is a pure function of the config so the wire format
    // never depends on a random draw.
    int max_seq = 0;
    switch (c.placement) {
        case Placement::one_per_node:
            max_seq = c.n > 0 ? (c.k - 1) / c.n : 0;
            break;
        case Placement::all_at_origin:
        case Placement::random_nodes:
            max_seq = c.k - 1;
            break;
    }
    if (max_seq < 0) max_seq = 0;
    *seq_bits = max_seq == 0 ? 0 : bit_width_for(static_cast<std::uint64_t>(max_seq));
}

TrialContext::TrialContext(const RunConfig& c) : cfg(c), field(c.q) {
    if (c.n < 1) throw ConfigError("n must be at least 1");
    if (c.k < 0 || c.d < 0) throw ConfigError("k and d must be nonnegative");
    if (c.b < 1) throw ConfigError("b must be at least 1");
    if (c.n_hat < 0) throw ConfigError("bad node count estimate");
    id_widths(c, &uid_bits, &seq_bits);
    if (c.uid_bits_override == 0 && c.n > c.hat_n())
        throw ConfigError("uid width from n_hat cannot address every node");

    Rng setup(Rng::derive(c.master_seed, c.trial, kDomainSetup, 0));
    std::vector<TokenId> ids;
    ids.reserve(c.k);
    switch (c.placement) {
        case Placement::one_per_node:
            for (int i = 0; i < c.k; ++i)
                ids.push_back({static_cast<std::uint32_t>(i % c.n),
                               static_cast<std::uint32_t>(i / c.n)});
            break;
        case Placement::all_at_origin:
            for (int i = 0; i < c.k; ++i)
                ids.push_back({0u, static_cast<std::uint32_t>(i)});
            break;
        case Placement::random_nodes: {
            std::vector<std::uint32_t> seq_at(c.n, 0);
            for (int i = 0; i < c.k; ++i) {
                auto origin = static_cast<std::uint32_t>(setup.next_below(c.n));
                ids.push_back({origin, seq_at[origin]++});
            }
            break;
        }
    }
    std::sort(ids.begin(), ids.end());

    if (c.uid_payload_tokens &&
        c.d < bit_width_for(static_cast<std::uint64_t>(c.n > 1 ? c.n - 1 : 0)))
        throw ConfigError("payload too narrow to carry a uid");

    tokens.reserve(c.k);
    holdings.assign(c.n, {});
    for (int i = 0; i < c.k; ++i) {
        Token t;
        t.id = ids[i];
        if (c.uid_payload_tokens) {
            t.bits.append(static_cast<std::uint64_t>(t.id.origin), c.d);
        } else {
            for (int got = 0; got < c.d; got += 64) {
                int w = c.d - got < 64 ? c.d - got : 64;
                t.bits.append(setup.next_bits(w), w);
            }
        }
        index_of[t.id] = i;
        holdings[t.id.origin].push_back(i);
        tokens.push_back(std::move(t));
    }
}

RunRecord run_trial(const RunConfig& cfg, const EngineHooks* hooks) {
    TrialContext ctx(cfg);
    int n = cfg.n;
    std::uint64_t salt = hooks ? hooks->node_stream_salt : 0;

    std::vector<std::unique_ptr<Node>> nodes;
    nodes.reserve(n);
    for (int i = 0; i < n; ++i) nodes.push_back(make_node(ctx, i));

    std::vector<Rng> node_rng;
    node_rng.reserve(n);
    for (int i = 0; i < n; ++i)
        node_rng.emplace_back(Rng::derive(cfg.master_seed, cfg.trial,
                                          Rng::derive(kDomainNode, salt),
                                          static_cast<std::uint64_t>(i)));

    Adversary adv(cfg.adversary, n,
                  Rng(Rng::derive(cfg.master_seed, cfg.trial, kDomainAdversary, 0)));
    std::uint64_t T = cfg.adversary.T < 1 ? 1 : cfg.adversary.T;

    int patch_D = nodes[0]->patch_diameter();
    int logn = std::max(1, ceil_log2(static_cast<std::uint64_t>(n)));
    int prio_bits = std::min(60, 3 * logn);
    int phase_limit = cfg.consts.mis_phase_mult * logn;
    PatchSet patches;

    std::uint64_t cap = cfg.round_cap ? cfg.round_cap
                                      : nodes[0]->suggested_round_cap();

    RunRecord rec;
    std::vector<Message> emitted(n);
    std::vector<std::vector<const Message*>> inbox(n);
    ObservableState obs(n);
    std::vector<std::vector<int>> adj;

    for (std::uint64_t t = 0;; ++t) {
        if (t >= cap) {
            rec.failure = FailureReason::round_cap;
            break;
        }
        for (int i = 0; i < n; ++i) obs[i] = nodes[i]->observe();
        const Topology& topo = adv.next_topology(t, obs);
        if (t % T == 0) adj = topo.adjacency();
        if (hooks && hooks->on_topology) hooks->on_topology(t, topo);
        if (patch_D > 0 && t % T == 0) {
            patches = build_patches(
                topo, patch_D, phase_limit, prio_bits,
                [&](int u) { return node_rng[u].next_bits(prio_bits); });
            for (int i = 0; i < n; ++i) nodes[i]->set_patches(&patches);
        }

        for (int i = 0; i < n; ++i) {
            emitted[i] = nodes[i]->emit(node_rng[i]);
            if (static_cast<int>(emitted[i].body.bits()) > cfg.b)
                throw BudgetExceeded("emitted body exceeds the bit budget");
            rec.total_bits_sent += emitted[i].wire_bits();
            if (hooks && hooks->on_message) hooks->on_message(t, i, emitted[i]);
        }
        for (int i = 0; i < n; ++i) {
            inbox[i].clear();
            for (int j : adj[i]) inbox[i].push_back(&emitted[j]);
        }
        for (int i = 0; i < n; ++i) nodes[i]->absorb(inbox[i]);
        ++rec.rounds_executed;

        if (cfg.record_trace) {
            TraceRow row;
            row.round = t;
            row.topology_hash = topo.hash();
            row.knowledge.resize(n);
            for (int i = 0; i < n; ++i)
                row.knowledge[i] = nodes[i]->observe().knowledge;
            rec.trace.push_back(std::move(row));
        }

        if (!rec.completion_round) {
            bool all = true;
            for (int i = 0; i < n && all; ++i) all = nodes[i]->complete();
            if (all) {
                rec.completion_round = t;
                for (int i = 0; i < n; ++i) nodes[i]->verify_exact();
            }
        }
        if (cfg.abort_if_known_exceeds > 0) {
            bool over = false;
            for (int i = 0; i < n && !over; ++i)
                over = nodes[i]->observe().knowledge > cfg.abort_if_known_exceeds;
            if (over) {
                rec.failure = FailureReason::known_exceeded;
                break;
            }
        }
        bool all_term = true;
        for (int i = 0; i < n && all_term; ++i) all_term = nodes[i]->terminated();
        if (all_term) {
            rec.termination_round = t;
            break;
        }
    }

    int kmin = nodes[0]->observe().knowledge, kmax = kmin;
    for (int i = 1; i < n; ++i) {
        int kn = nodes[i]->observe().knowledge;
        kmin = std::min(kmin, kn);
        kmax = std::max(kmax, kn);
    }
    rec.stats["knowledge_min"] = kmin;
    rec.stats["knowledge_max"] = kmax;
    nodes[0]->export_stats(rec.stats);
    if (cfg.protocol == ProtocolKind::tstable) {
        TStableChoice ch = choose_tstable(cfg);
        rec.stats["tstable_variant"] = static_cast<double>(ch.variant);
    }
    return rec;
}

SizeEstimateResult run_size_estimate(const RunConfig& base) {
    SizeEstimateResult res;
    int tok = 32;  // 16-bit uid, no sequence field, 16 payload bits
    int B = base.b / tok;
    if (B < 1) throw ConfigError("body too small for the size estimate");
    for (int est = 1; est <= (1 << 26); est *= 2) {
        RunConfig cfg = base;
        cfg.protocol = ProtocolKind::flood_forward;
        cfg.placement = Placement::one_per_node;
        cfg.k = base.n;
        cfg.d = 16;
        cfg.uid_bits_override = 16;
        cfg.uid_payload_tokens = true;
        cfg.n_hat = est;
        cfg.abort_if_known_exceeds = est;
        cfg.record_trace = false;
        cfg.trial = Rng::derive(base.trial, static_cast<std::uint64_t>(est));
        std::uint64_t epoch = static_cast<std::uint64_t>(
            std::ceil(base.consts.c_epoch * est));
        if (epoch < 1) epoch = 1;
        cfg.round_cap = (static_cast<std::uint64_t>((est + B - 1) / B) + 1) * epoch;

        RunRecord r = run_trial(cfg);
        res.budgets.push_back(cfg.round_cap);
        res.rounds_used.push_back(r.rounds_executed);
        res.total_rounds += r.rounds_executed;
        if (r.termination_round && r.failure == FailureReason::none &&
            r.stats["knowledge_min"] == r.stats["knowledge_max"]) {
            res.estimate = est;
            res.count = static_cast<int>(r.stats["knowledge_min"]);
            res.ok = true;
            return res;
        }
    }
    return res;
}

}  // namespace dynnet
