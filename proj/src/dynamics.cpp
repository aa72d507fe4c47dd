#include "dynnet/dynamics.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include "dynnet/bitvec.hpp"
#include "dynnet/errors.hpp"

namespace dynnet {

std::vector<std::vector<int>> Topology::adjacency() const {
    std::vector<std::vector<int>> adj(static_cast<std::size_t>(n));
    for (auto [u, v] : edges) {
        adj[std::size_t(u)].push_back(v);
        adj[std::size_t(v)].push_back(u);
    }
    return adj;
}

std::uint64_t Topology::hash() const {
    // Sorted (u,v) pairs as little-endian u32 pairs.
    std::vector<std::uint32_t> flat;
    flat.reserve(edges.size() * 2 + 1);
    flat.push_back(std::uint32_t(n));
    for (auto [u, v] : edges) {
        flat.push_back(std::uint32_t(u));
        flat.push_back(std::uint32_t(v));
    }
    return fnv1a64(flat.data(), flat.size() * sizeof(std::uint32_t));
}

bool verify_connected(const Topology& t) {
    if (t.n <= 0) return false;
    if (t.n == 1) return true;
    auto adj = t.adjacency();
    std::vector<char> seen(std::size_t(t.n), 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    int count = 1;
    while (!stack.empty()) {
        int u = stack.back();
        stack.pop_back();
        for (int v : adj[std::size_t(u)]) {
            if (!seen[std::size_t(v)]) {
                seen[std::size_t(v)] = 1;
                ++count;
                stack.push_back(v);
            }
        }
    }
    return count == t.n;
}

Topology gen_random_connected(int n, double extra_edge_prob, Rng& rng) {
    Topology t;
    t.n = n;
    if (n <= 1) return t;
    // Aldous-Broder: walk until every node is visited; first-entry edges
    // form a uniform spanning tree.
    std::vector<char> visited(std::size_t(n), 0);
    int at = int(rng.next_below(std::uint64_t(n)));
    visited[std::size_t(at)] = 1;
    int left = n - 1;
    while (left > 0) {
        int nxt = int(rng.next_below(std::uint64_t(n - 1)));
        if (nxt >= at) ++nxt;  // uniform neighbor on the complete graph
        if (!visited[std::size_t(nxt)]) {
            visited[std::size_t(nxt)] = 1;
            --left;
            t.edges.emplace_back(std::min(at, nxt), std::max(at, nxt));
        }
        at = nxt;
    }
    if (extra_edge_prob > 0.0) {
        std::sort(t.edges.begin(), t.edges.end());
        std::vector<std::pair<int, int>> tree = t.edges;
        for (int u = 0; u < n; ++u) {
            for (int v = u + 1; v < n; ++v) {
                if (rng.next_double() < extra_edge_prob &&
                    !std::binary_search(tree.begin(), tree.end(), std::make_pair(u, v))) {
                    t.edges.emplace_back(u, v);
                }
            }
        }
    }
    std::sort(t.edges.begin(), t.edges.end());
    return t;
}

AdversaryKind adversary_kind_from_string(const std::string& s) {
    if (s == "static_random") return AdversaryKind::static_random;
    if (s == "fresh_random") return AdversaryKind::fresh_random;
    if (s == "rotating_path") return AdversaryKind::rotating_path;
    if (s == "rank_sorted_path") return AdversaryKind::rank_sorted_path;
    if (s == "custom") return AdversaryKind::custom;
    throw ConfigError("unknown adversary kind: " + s);
}

std::string to_string(AdversaryKind k) {
    switch (k) {
        case AdversaryKind::static_random: return "static_random";
        case AdversaryKind::fresh_random: return "fresh_random";
        case AdversaryKind::rotating_path: return "rotating_path";
        case AdversaryKind::rank_sorted_path: return "rank_sorted_path";
        case AdversaryKind::custom: return "custom";
    }
    return "?";
}

Adversary::Adversary(const AdversarySpec& spec, int n, Rng rng)
    : spec_(spec), n_(n), rng_(rng) {
    if (spec_.T < 1) throw ConfigError("adversary stability T must be >= 1");
    if (spec_.kind == AdversaryKind::rotating_path) {
        base_order_.resize(std::size_t(n));
        std::iota(base_order_.begin(), base_order_.end(), 0);
        // Fisher-Yates with the adversary stream.
        for (int i = n - 1; i > 0; --i) {
            int j = int(rng_.next_below(std::uint64_t(i) + 1));
            std::swap(base_order_[std::size_t(i)], base_order_[std::size_t(j)]);
        }
    }
}

static Topology path_topology(const std::vector<int>& order) {
    Topology t;
    t.n = int(order.size());
    for (std::size_t i = 0; i + 1 < order.size(); ++i) {
        int u = order[i], v = order[i + 1];
        t.edges.emplace_back(std::min(u, v), std::max(u, v));
    }
    std::sort(t.edges.begin(), t.edges.end());
    return t;
}

void Adversary::build_block(std::uint64_t block, const ObservableState& obs) {
    switch (spec_.kind) {
        case AdversaryKind::static_random:
            if (current_block_ == ~0ull) {
                current_ = gen_random_connected(n_, spec_.extra_edge_prob, rng_);
            }
            break;
        case AdversaryKind::fresh_random:
            current_ = gen_random_connected(n_, spec_.extra_edge_prob, rng_);
            break;
        case AdversaryKind::rotating_path: {
            std::vector<int> order(static_cast<std::size_t>(n_));
            for (int i = 0; i < n_; ++i) {
                order[std::size_t(i)] =
                    base_order_[std::size_t((std::uint64_t(i) + block) % std::uint64_t(n_))];
            }
            current_ = path_topology(order);
            break;
        }
        case AdversaryKind::rank_sorted_path: {
            // Low knowledge first; ties by uid. Keeps the least-informed
            // nodes bunched at one end of the line.
            std::vector<int> order(static_cast<std::size_t>(n_));
            std::iota(order.begin(), order.end(), 0);
            std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
                int ka = obs.empty() ? 0 : obs[std::size_t(a)].knowledge;
                int kb = obs.empty() ? 0 : obs[std::size_t(b)].knowledge;
                if (ka != kb) return ka < kb;
                return a < b;
            });
            current_ = path_topology(order);
            break;
        }
        case AdversaryKind::custom: {
            if (spec_.schedule.empty()) throw ConfigError("custom adversary without schedule");
            std::size_t idx = std::size_t(block) < spec_.schedule.size()
                                  ? std::size_t(block)
                                  : spec_.schedule.size() - 1;  // last block repeats
            current_.n = n_;
            current_.edges = spec_.schedule[idx];
            std::sort(current_.edges.begin(), current_.edges.end());
            if (!verify_connected(current_)) {
                throw DisconnectedTopology("schedule block " + std::to_string(idx) +
                                           " is not connected");
            }
            break;
        }
    }
    current_block_ = block;
}

const Topology& Adversary::next_topology(std::uint64_t t, const ObservableState& obs) {
    std::uint64_t block = t / spec_.T;
    if (block != current_block_) build_block(block, obs);
    return current_;
}

std::vector<std::vector<std::pair<int, int>>> load_schedule(const std::string& path,
                                                            int* n_out) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open schedule file: " + path);
    std::string line;
    if (!std::getline(in, line) || line.rfind("n=", 0) != 0) {
        throw ConfigError("schedule file must start with n=<int>");
    }
    int n = std::stoi(line.substr(2));
    if (n_out) *n_out = n;
    std::vector<std::vector<std::pair<int, int>>> blocks;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::vector<std::pair<int, int>> edges;
        std::string tok;
        while (ss >> tok) {
            auto dash = tok.find('-');
            if (dash == std::string::npos) {
                throw ConfigError("bad edge token '" + tok + "' in schedule");
            }
            int u = std::stoi(tok.substr(0, dash));
            int v = std::stoi(tok.substr(dash + 1));
            if (u == v || u < 0 || v < 0 || u >= n || v >= n) {
                throw ConfigError("edge " + tok + " out of range or a self loop");
            }
            edges.emplace_back(std::min(u, v), std::max(u, v));
        }
        std::sort(edges.begin(), edges.end());
        edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
        blocks.push_back(std::move(edges));
    }
    if (blocks.empty()) throw ConfigError("schedule file has no blocks");
    return blocks;
}

}  // namespace dynnet
