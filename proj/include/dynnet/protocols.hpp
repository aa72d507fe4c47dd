#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include "dynnet/simulator.hpp"

namespace dynnet {

// Wire format for token lists: [origin uid][seq][payload d bits] per token.
// A list carries no count field; the body length implies it.
struct TokenCodec {
    int uid_bits = 0;
    int seq_bits = 0;
    int d = 0;

    explicit TokenCodec(const TrialContext& ctx)
        : uid_bits(ctx.uid_bits), seq_bits(ctx.seq_bits), d(ctx.cfg.d) {}

    int token_bits() const { return uid_bits + seq_bits + d; }

    void append(BitVec& out, const Token& t) const {
        out.append(static_cast<std::uint64_t>(t.id.origin), uid_bits);
        out.append(static_cast<std::uint64_t>(t.id.seq), seq_bits);
        for (std::size_t i = 0; i < t.bits.bits(); i += 64) {
            int w = static_cast<int>(t.bits.bits() - i < 64 ? t.bits.bits() - i : 64);
            out.append(t.bits.read(i, w), w);
        }
    }

    Token read(BitReader& in) const {
        Token t;
        t.id.origin = static_cast<int>(in.read(uid_bits));
        t.id.seq = static_cast<int>(in.read(seq_bits));
        for (int i = 0; i < d; i += 64) {
            int w = d - i < 64 ? d - i : 64;
            t.bits.append(in.read(w), w);
        }
        return t;
    }
};

// Known tokens split into undelivered (still being disseminated) and
// delivered (globally marked done by the owning protocol's epoch logic).
struct TokenStore {
    std::map<TokenId, BitVec> known;
    std::set<TokenId> undelivered;

    bool add_known(const Token& t) {
        auto [it, fresh] = known.emplace(t.id, t.bits);
        (void)it;
        if (fresh) undelivered.insert(t.id);
        return fresh;
    }
    void mark_delivered(const TokenId& id) { undelivered.erase(id); }
    void unmark(const TokenId& id) {
        if (known.count(id)) undelivered.insert(id);
    }
};

// Epoch-synchronized flooding: every round each node sends the smallest
// undelivered tokens it knows plus a tokens-remain flag; at each epoch end
// all nodes mark the same smallest tokens delivered. Terminates when the
// flag stays false for a whole epoch.
class FloodForward : public Node {
  public:
    FloodForward(const TrialContext& ctx, int uid);

    Message emit(Rng& rng) override;
    void absorb(const std::vector<const Message*>& received) override;
    bool complete() const override;
    bool terminated() const override { return terminated_; }
    void verify_exact() const override;
    ObservableNode observe() const override;
    std::uint64_t suggested_round_cap() const override;
    void export_stats(std::map<std::string, double>& out) const override;

  private:
    TokenCodec codec_;
    TokenStore store_;
    int cap_ = 0;        // tokens per message
    int epoch_ = 0;      // rounds per epoch
    int round_in_epoch_ = 0;
    bool flag_ = false;
    bool terminated_ = false;
};

// Random linear network coding over the whole batch: every round each node
// sends one fresh random combination of its span plus a not-done flag.
// Terminates when the flag stays false for a whole epoch.
class RlncBroadcast : public Node {
  public:
    RlncBroadcast(const TrialContext& ctx, int uid);

    Message emit(Rng& rng) override;
    void absorb(const std::vector<const Message*>& received) override;
    bool complete() const override;
    bool terminated() const override { return terminated_; }
    void verify_exact() const override;
    ObservableNode observe() const override;
    std::uint64_t suggested_round_cap() const override;
    void export_stats(std::map<std::string, double>& out) const override;

  private:
    KnowledgeBasis basis_;
    int payload_syms_ = 0;
    int epoch_ = 0;
    int round_in_epoch_ = 0;
    bool flag_ = false;
    bool terminated_ = false;
};

// Pipelined flooding for T-stable dynamics: epochs span whole topology
// blocks, each node sends its smallest not-yet-sent-this-epoch undelivered
// tokens, and the per-epoch marking quota grows with T because token trains
// pipeline along edges that stay put for T rounds.
class PipelineFlood : public Node {
  public:
    PipelineFlood(const TrialContext& ctx, int uid);

    Message emit(Rng& rng) override;
    void absorb(const std::vector<const Message*>& received) override;
    bool complete() const override;
    bool terminated() const override { return terminated_; }
    void verify_exact() const override;
    ObservableNode observe() const override;
    std::uint64_t suggested_round_cap() const override;
    void export_stats(std::map<std::string, double>& out) const override;

    // Rounds per epoch and tokens marked per epoch, exposed for cost models.
    static void geometry(const RunConfig& cfg, int token_bits,
                         std::uint64_t* epoch_rounds, int* mark_quota);

  private:
    TokenCodec codec_;
    TokenStore store_;
    std::set<TokenId> sent_block_;   // tokens streamed since the block began
    int cap_ = 0;
    int T_ = 1;
    std::uint64_t epoch_ = 0;
    int mark_quota_ = 0;
    std::uint64_t round_in_epoch_ = 0;
    bool flag_ = false;
    bool terminated_ = false;
};

}  // namespace dynnet
