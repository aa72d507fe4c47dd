#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dynnet/rng.hpp"

namespace dynnet {

// Undirected connected round graph on nodes 0..n-1. Edges are stored as
// ordered pairs (u < v), sorted, no duplicates, no self loops.
struct Topology {
    int n = 0;
    std::vector<std::pair<int, int>> edges;

    std::vector<std::vector<int>> adjacency() const;
    std::uint64_t hash() const;  // FNV-1a over the sorted edge list
};

bool verify_connected(const Topology& t);

// Uniform spanning tree by random walk (Aldous-Broder), then each non-tree
// edge added independently with probability extra_edge_prob.
Topology gen_random_connected(int n, double extra_edge_prob, Rng& rng);

enum class AdversaryKind {
    static_random,    // one random connected graph, held forever
    fresh_random,     // new random connected graph every T-block
    rotating_path,    // path whose node order rotates one step per T-block
    rank_sorted_path, // path sorted by (knowledge, uid) ascending, per T-block
    custom,           // explicit per-block schedule from a file
};

AdversaryKind adversary_kind_from_string(const std::string& s);
std::string to_string(AdversaryKind k);

struct AdversarySpec {
    AdversaryKind kind = AdversaryKind::fresh_random;
    std::uint64_t T = 1;          // stability interval; changes only at multiples of T
    double extra_edge_prob = 0.0; // density knob for the random kinds
    std::vector<std::vector<std::pair<int, int>>> schedule;  // custom blocks
};

// What the adversary may look at: the previous round's per-node knowledge
// level (basis rank or token count) and protocol phase. Never the current
// round's coin flips.
struct ObservableNode {
    int knowledge = 0;
    int phase = 0;
};
using ObservableState = std::vector<ObservableNode>;

// Per-trial topology source. Deterministic given (spec, seed stream): the
// block index alone decides when a new graph is drawn, so Topology(t) ==
// Topology(T * floor(t/T)).
class Adversary {
  public:
    Adversary(const AdversarySpec& spec, int n, Rng rng);

    // Topology for round t (0-based). obs is the state after round t-1.
    const Topology& next_topology(std::uint64_t t, const ObservableState& obs);

  private:
    void build_block(std::uint64_t block, const ObservableState& obs);

    AdversarySpec spec_;
    int n_;
    Rng rng_;
    Topology current_;
    std::uint64_t current_block_ = ~0ull;
    std::vector<int> base_order_;  // rotating_path permutation
};

// Schedule file: first line "n=<int>", line i+1 holds block i's edges as
// space-separated "u-v" pairs. Every block must be connected (checked at
// use time; a disconnected block throws DisconnectedTopology).
std::vector<std::vector<std::pair<int, int>>> load_schedule(const std::string& path,
                                                            int* n_out);

}  // namespace dynnet
