#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <vector>

#include "dynnet/gather.hpp"
#include "dynnet/simulator.hpp"

namespace dynnet {

// Partition of one topology into rooted trees of depth at most D. Leaders
// form a maximal independent set of the D-th graph power, so patches are
// disjoint, cover every node, and any two leaders are more than D apart.
struct PatchSet {
    std::vector<int> leader;   // per node: leader uid
    std::vector<int> parent;   // per node: parent uid, self for leaders
    std::vector<int> depth;    // per node: hops to the leader
    std::vector<std::vector<int>> children;  // per node, ascending
    std::vector<int> leaders;  // ascending
    int max_depth = 0;
};

// Randomized MIS on the D-th power via priority max-floods (each phase costs
// 2D simulated rounds on the fixed topology), then BFS assignment of every
// node to its nearest leader, ties to the smaller leader uid, parent = the
// smallest-uid neighbor one hop closer. Throws MISFailure if nodes remain
// undecided after phase_limit phases. draw_priority(uid) supplies fresh
// random bits and is called once per still-active node per phase.
PatchSet build_patches(const Topology& topo, int D, int phase_limit,
                       int prio_bits,
                       const std::function<std::uint64_t(int)>& draw_priority);

// Pipelined chunk schedule over a depth-D patch tree, C chunks per vector.
// up_chunk: the chunk index a depth-j node sends toward its parent in round r
// of a share-up window, or -1 if it sends nothing that round. Chunk s leaves
// depth j at round (D - j) + s, so the root finishes accumulating after
// C + D - 1 rounds. down_chunk mirrors it away from the root: the root sends
// chunk r, depth j relays chunk r - j.
int up_chunk(int r, int depth, int C, int D);
int down_chunk(int r, int depth, int C, int D);

// Dissemination over T-stable dynamics by chunked network coding. Each
// stable block either runs the patch meta-round (share up the patch tree,
// share down, pass between neighbors, share again) or, when blocks are too
// short for tree pipelining, a flat schedule where every node streams one
// coded vector in C-round cycles. A 1-bit remainder flag rides every
// message; the run self-terminates when the flag stays false for a whole
// n-block epoch.
class PatchShare : public Node {
  public:
    enum class Mode { patched, solo };

    PatchShare(const TrialContext& ctx, int uid);

    Message emit(Rng& rng) override;
    void absorb(const std::vector<const Message*>& received) override;
    bool complete() const override;
    bool terminated() const override { return terminated_; }
    void verify_exact() const override;
    ObservableNode observe() const override;
    std::uint64_t suggested_round_cap() const override;
    void export_stats(std::map<std::string, double>& out) const override;

    int patch_diameter() const override { return mode_ == Mode::patched ? D_ : 0; }
    void set_patches(const PatchSet* p) override { patches_ = p; }

    Mode mode() const { return mode_; }
    int chunk_count() const { return C_; }
    int diameter() const { return D_; }

  private:
    void draw_contribution(Rng& rng, std::vector<felem>* out) const;
    void append_chunk(Message* m, Tag tag, const std::vector<felem>& vec,
                      int s) const;
    int chunk_lo(int s) const { return s * chunk_syms_; }
    int chunk_hi(int s) const {
        int hi = (s + 1) * chunk_syms_;
        return hi < vec_syms_ ? hi : vec_syms_;
    }
    void add_into(std::vector<felem>* acc, int s, BitReader* in) const;
    void block_end();
    Message emit_patched(Rng& rng, int br);
    void absorb_patched(const Message& m, int br);
    Message emit_solo(Rng& rng, int br);
    void absorb_solo(const Message& m, int br);
    void insert_syms(const std::vector<felem>& vec);

    Mode mode_ = Mode::solo;
    int T_ = 1;
    int D_ = 1;
    int C_ = 1;            // chunks per vector
    int chunk_syms_ = 0;
    int vec_syms_ = 0;
    int payload_syms_ = 0;
    bool solo_uid_ = false;   // solo chunks carry a sender uid iff C_ > 1
    int cycles_ = 1;          // solo cycles per block

    KnowledgeBasis basis_;
    const PatchSet* patches_ = nullptr;

    std::uint64_t round_ = 0;
    std::uint64_t blocks_done_ = 0;
    std::uint64_t epoch_blocks_ = 1;
    bool flag_ = false;
    bool terminated_ = false;

    std::vector<felem> acc_vec_;    // own contribution plus subtree, share-up
    std::vector<felem> patch_vec_;  // the patch's summed vector, share-down
    int down_cnt_ = 0;              // chunks of patch_vec_ received so far
    bool have_patch_vec_ = false;
    std::map<int, std::pair<std::vector<felem>, std::vector<bool>>> pass_acc_;
    std::vector<felem> cycle_vec_;  // solo: this cycle's outgoing vector
};

}  // namespace dynnet
