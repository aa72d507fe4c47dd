#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <vector>

#include "dynnet/protocols.hpp"

namespace dynnet {

// Derived sizes for batched coded broadcast. total_syms is the capacity of
// one transport unit in field symbols; half goes to coefficients, the rest
// carries one block of [count][tokens] padded to blk_bits.
struct BatchGeometry {
    int m_max = 0;      // max blocks per batch (coefficient budget)
    int blk_syms = 0;   // payload symbols per transport unit
    int blk_bits = 0;   // data bits per block payload
    int cnt_bits = 0;   // token count field width inside a block
    int per_block = 0;  // tokens per block
    int batch_cap = 0;  // m_max * per_block

    bool feasible() const { return m_max >= 1 && per_block >= 1; }
};

BatchGeometry batch_geometry(const FieldSpec& f, int total_syms, int token_bits);

enum class GatherMode {
    random_only,  // one gather + max flood, then stop and report
    greedy,       // loop: gather, max flood, descriptor, coded broadcast
    priority,     // greedy until half capacity, then per-node priority blocks
};

// Gathering compositions. Tokens are pushed to random neighbors so copies
// concentrate, a max flood agrees on the best-stocked node, and that node's
// batch is broadcast with network coding, m blocks at a time. A failed
// batch decode raises a retry bit that makes everyone un-mark the batch.
// transport_T > 0 chunks each coded vector over a stable topology block of
// that many rounds instead of sending one vector per round.
class GatherBroadcast : public Node {
  public:
    GatherBroadcast(const TrialContext& ctx, int uid, GatherMode mode,
                    int transport_T);

    Message emit(Rng& rng) override;
    void absorb(const std::vector<const Message*>& received) override;
    bool complete() const override;
    bool terminated() const override { return state_ == State::done; }
    void verify_exact() const override;
    ObservableNode observe() const override;
    std::uint64_t suggested_round_cap() const override;
    void export_stats(std::map<std::string, double>& out) const override;

  private:
    enum class State { fwd, maxf, desc, align, bcast, p_index, done };

    void enter_fwd();
    void enter_maxf();
    void enter_desc();
    void enter_stage(int m);          // build basis, schedule align + bcast
    void enter_p_index();
    void finish_index();              // pick committed triples, build basis
    void finish_stage();              // decode, mark, set retry
    void maxf_epoch_end();
    void index_subepoch_end();
    Message emit_stage(Rng& rng);
    void absorb_stage(const Message& m);

    int vec_syms(int m) const { return m + geo_.blk_syms; }
    int chunks_for(int m) const {
        return transport_T_ ? (vec_syms(m) + chunk_syms_ - 1) / chunk_syms_ : 1;
    }
    BitVec block_payload(const std::vector<TokenId>& ids) const;
    void decode_block(const std::vector<felem>& syms, std::vector<Token>* out) const;

    GatherMode mode_;
    int transport_T_ = 0;
    TokenCodec codec_;
    TokenStore store_;
    BatchGeometry geo_;
    int epoch_ = 0;        // gather / flood phase length
    int fwd_cap_ = 0;      // tokens per forward message
    int cntw_ = 0;         // max-flood count field width
    int chunk_syms_ = 0;   // symbols per stage chunk (transport_T_ > 0)

    State state_ = State::fwd;
    std::uint64_t round_ = 0;   // global round counter
    int rphase_ = 0;            // rounds into the current phase or sub-epoch

    int my_count_ = 0;          // frozen at max-flood start
    int best_count_ = -1;
    int best_uid_ = 0;
    bool retry_ = false;        // own pending retry from the last stage
    bool retry_flood_ = false;  // OR accumulator while a flood phase runs
    bool retry_seen_iter_ = false;
    std::vector<TokenId> last_batch_;

    bool have_desc_ = false;
    int desc_m_ = 0;
    int desc_items_ = 0;
    int identified_uid_ = 0;

    // priority indexing
    int prio_bits_ = 0;
    int seqw_ = 0;
    int triple_bits_ = 0;
    int triples_per_msg_ = 0;
    int subepochs_ = 0;
    int subepoch_no_ = 0;
    bool priority_active_ = false;
    bool pending_draw_ = false;
    std::vector<std::vector<TokenId>> my_blocks_;
    std::vector<std::vector<TokenId>> src_blocks_;  // identified node's batch
    std::set<std::uint64_t> heard_;
    std::set<std::uint64_t> committed_;

    // coded stage
    int stage_m_ = 0;
    std::uint64_t stage_len_ = 0;
    KnowledgeBasis stage_basis_;
    std::map<int, std::pair<std::vector<felem>, std::vector<bool>>> chunk_acc_;
    std::vector<felem> out_vec_;   // chunked encoding of this cycle's vector

    // bookkeeping
    double super_epochs_ = 0;
    double batches_ok_ = 0;
    double retries_ = 0;
};

struct TStableChoice {
    enum class Variant { greedy, pipeline, coded };
    Variant variant = Variant::pipeline;
    double cost_pipeline = 0;  // rounds per delivered token
    double cost_coded = 0;
    bool coded_feasible = false;
    bool greedy_feasible = false;
};

// Deterministic dispatch for the T-stable composed protocol. T == 1 keeps
// the greedy composition whenever its geometry fits; otherwise the cheaper
// of pipelined flooding and block-chunked coded batches wins.
TStableChoice choose_tstable(const RunConfig& cfg);

}  // namespace dynnet
