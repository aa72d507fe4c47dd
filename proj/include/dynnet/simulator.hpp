#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dynnet/coding.hpp"
#include "dynnet/dynamics.hpp"
#include "dynnet/finite_field.hpp"
#include "dynnet/message.hpp"
#include "dynnet/rng.hpp"

namespace dynnet {

enum class ProtocolKind {
    flood_forward,
    rlnc_broadcast,
    random_forward,
    greedy_forward,
    priority_forward,
    pipeline_flood,
    patch_share,
    tstable,
};

std::string to_string(ProtocolKind k);
ProtocolKind protocol_from_string(const std::string& s);

enum class Placement {
    one_per_node,      // token i starts at node i mod n
    all_at_origin,     // all k tokens start at node 0
    random_nodes,      // placement drawn from the setup stream
};

std::string to_string(Placement p);
Placement placement_from_string(const std::string& s);

// Tuning constants. Defaults are the values the acceptance suite runs with.
struct Constants {
    double c_epoch = 1.0;      // flood/gather epoch length multiplier (rounds = ceil(c_epoch * n))
    double c_bcast = 1.25;     // coded broadcast stage multiplier (rounds = ceil(c_bcast * (n + m)))
    double c_pipe = 2.0;       // pipeline flood epoch multiplier (rounds/blocks ~ c_pipe * n)
    int c_diam = 4;            // patch diameter divisor: D = max(1, T / (c_diam * ceil(log2 n)))
    int mis_phase_mult = 4;    // max MIS phases = mis_phase_mult * ceil(log2 n)
    int patch_mode = 0;        // 0 auto, 1 force patched, 2 force solo
};

struct RunConfig {
    ProtocolKind protocol = ProtocolKind::flood_forward;
    AdversarySpec adversary;
    int n = 0;          // node count
    int k = 0;          // token / batch item count
    int d = 0;          // token payload bits
    int b = 0;          // per-message body budget in bits (excludes the 8-bit tag)
    std::uint32_t q = 2;
    Placement placement = Placement::one_per_node;
    std::uint64_t master_seed = 0;
    std::uint64_t trial = 0;
    std::uint64_t round_cap = 0;    // 0 = protocol-suggested default
    Constants consts;
    bool record_trace = false;

    int n_hat = 0;       // protocol-side node count estimate; 0 = n
    int uid_bits_override = 0;   // 0 = derive from n_hat
    int abort_if_known_exceeds = 0;  // >0: stop when any node knows more tokens
    bool uid_payload_tokens = false; // token payload = origin uid instead of random bits

    int hat_n() const { return n_hat > 0 ? n_hat : n; }
};

enum class FailureReason {
    none,
    round_cap,
    known_exceeded,
};

std::string to_string(FailureReason f);

struct TraceRow {
    std::uint64_t round;
    std::uint64_t topology_hash;
    std::vector<int> knowledge;   // per node, after the round's deliveries
};

struct RunRecord {
    std::optional<std::uint64_t> completion_round;
    std::optional<std::uint64_t> termination_round;
    std::uint64_t rounds_executed = 0;
    std::uint64_t total_bits_sent = 0;
    FailureReason failure = FailureReason::none;
    std::map<std::string, double> stats;   // protocol extras, small and flat
    std::vector<TraceRow> trace;
};

// Immutable per-trial setup shared by every node.
struct TrialContext {
    RunConfig cfg;
    FieldSpec field;
    int uid_bits = 0;    // width of a node id on the wire
    int seq_bits = 0;    // width of a token sequence number on the wire
    int id_bits() const { return uid_bits + seq_bits; }
    int token_bits() const { return id_bits() + cfg.d; }
    std::vector<Token> tokens;                 // all k, sorted by id
    std::map<TokenId, int> index_of;           // token id -> batch index
    std::vector<std::vector<int>> holdings;    // initial token indices per node

    TrialContext(const RunConfig& c);

    // Wire widths implied by a config, without building the full context.
    static void id_widths(const RunConfig& c, int* uid_bits, int* seq_bits);
};

class Node {
  public:
    Node(const TrialContext& ctx, int uid) : ctx_(&ctx), uid_(uid) {}
    virtual ~Node() = default;

    virtual Message emit(Rng& rng) = 0;
    // Received messages are the emissions of current neighbors, passed by
    // pointer in ascending neighbor uid. Protocols must not depend on the
    // order; it is fixed only to keep replays exact.
    virtual void absorb(const std::vector<const Message*>& received) = 0;

    // True once the node holds everything the run disseminates.
    virtual bool complete() const = 0;
    // True once the node has decided, locally, that the run is over.
    virtual bool terminated() const = 0;
    // Throws if completion is claimed but any payload is not bit-exact.
    virtual void verify_exact() const {}

    virtual ObservableNode observe() const = 0;
    virtual std::uint64_t suggested_round_cap() const = 0;
    virtual void export_stats(std::map<std::string, double>&) const {}

    // Protocols that partition each stable block's topology into low-diameter
    // patches return the patch radius here; the engine then rebuilds patches
    // at every block boundary and installs them before the first emit.
    virtual int patch_diameter() const { return 0; }
    virtual void set_patches(const struct PatchSet*) {}

    int uid() const { return uid_; }

  protected:
    const TrialContext* ctx_;
    int uid_;
};

// Test instrumentation. Every hook is optional.
struct EngineHooks {
    std::function<void(std::uint64_t round, const Topology&)> on_topology;
    std::function<void(std::uint64_t round, int uid, const Message&)> on_message;
    std::uint64_t node_stream_salt = 0;   // perturbs node streams, not the adversary
};

std::unique_ptr<Node> make_node(const TrialContext& ctx, int uid);

RunRecord run_trial(const RunConfig& cfg, const EngineHooks* hooks = nullptr);

// Doubling estimate loop for unknown network size. The inner dissemination
// floods one uid token per node with a fixed 16-bit id width; an estimate
// fails fast when any node sees more tokens than the estimate allows.
struct SizeEstimateResult {
    int estimate = 0;          // first successful power of two
    int count = 0;             // agreed node count
    std::uint64_t total_rounds = 0;
    std::vector<std::uint64_t> budgets;        // per-estimate round budgets
    std::vector<std::uint64_t> rounds_used;    // per-estimate rounds executed
    bool ok = false;
};

SizeEstimateResult run_size_estimate(const RunConfig& base);

}  // namespace dynnet
