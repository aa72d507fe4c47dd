#include <doctest.h>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <vector>

#include "dynnet/dynamics.hpp"
#include "dynnet/errors.hpp"

using namespace dynnet;

namespace {

bool is_path(const Topology& t) {
    if (t.edges.size() != static_cast<std::size_t>(t.n - 1)) return false;
    std::vector<int> deg(t.n, 0);
    for (auto& [u, v] : t.edges) {
        ++deg[u];
        ++deg[v];
    }
    int ends = 0;
    for (int d : deg) {
        if (d > 2 || d == 0) return false;
        if (d == 1) ++ends;
    }
    return ends == 2 && verify_connected(t);
}

}  // namespace

TEST_CASE("random connected graphs are connected with sorted unique edges") {
    Rng rng(5);
    for (int n : {1, 2, 5, 33}) {
        Topology t = gen_random_connected(n, 0.0, rng);
        CHECK(t.n == n);
        CHECK(verify_connected(t));
        CHECK(t.edges.size() == static_cast<std::size_t>(n - 1 < 0 ? 0 : n - 1));
        CHECK(std::is_sorted(t.edges.begin(), t.edges.end()));
        for (auto& [u, v] : t.edges) {
            CHECK(u < v);
            CHECK(u >= 0);
            CHECK(v < n);
        }
        CHECK(std::adjacent_find(t.edges.begin(), t.edges.end()) ==
              t.edges.end());
    }
    // Probability one adds every non-tree edge: the complete graph.
    Topology full = gen_random_connected(7, 1.0, rng);
    CHECK(full.edges.size() == 21);
}

TEST_CASE("verify_connected rejects a split graph") {
    Topology t;
    t.n = 4;
    t.edges = {{0, 1}, {2, 3}};
    CHECK(!verify_connected(t));
    t.edges = {{0, 1}, {1, 2}, {2, 3}};
    CHECK(verify_connected(t));
}

TEST_CASE("topologies only change at block boundaries") {
    AdversarySpec spec;
    spec.kind = AdversaryKind::fresh_random;
    spec.T = 5;
    Adversary adv(spec, 8, Rng(99));
    ObservableState obs(8);
    std::vector<std::uint64_t> hashes;
    for (std::uint64_t t = 0; t < 20; ++t)
        hashes.push_back(adv.next_topology(t, obs).hash());
    for (std::uint64_t t = 0; t < 20; ++t)
        CHECK(hashes[t] == hashes[5 * (t / 5)]);
    // Across 4 blocks at least two distinct graphs should appear.
    std::set<std::uint64_t> distinct(hashes.begin(), hashes.end());
    CHECK(distinct.size() >= 2);
}

TEST_CASE("rotating adversary always produces a path and rotates it") {
    AdversarySpec spec;
    spec.kind = AdversaryKind::rotating_path;
    spec.T = 1;
    Adversary adv(spec, 6, Rng(7));
    ObservableState obs(6);
    std::vector<std::uint64_t> hashes;
    for (std::uint64_t t = 0; t < 12; ++t) {
        const Topology& topo = adv.next_topology(t, obs);
        CHECK(is_path(topo));
        hashes.push_back(topo.hash());
    }
    // A rotation by one step must change the edge set for n = 6.
    CHECK(hashes[0] != hashes[1]);
    // Rotating n times returns to the start.
    CHECK(hashes[0] == hashes[6]);
}

TEST_CASE("rank sorted adversary lines nodes up by knowledge then uid") {
    AdversarySpec spec;
    spec.kind = AdversaryKind::rank_sorted_path;
    spec.T = 1;
    Adversary adv(spec, 6, Rng(13));
    ObservableState obs(6);
    int knowledge[] = {5, 1, 4, 1, 3, 0};
    for (int i = 0; i < 6; ++i) obs[i].knowledge = knowledge[i];
    const Topology& topo = adv.next_topology(0, obs);
    // Expected order: 5(k0), 1(k1), 3(k1), 4(k3), 2(k4), 0(k5).
    std::vector<int> order = {5, 1, 3, 4, 2, 0};
    std::set<std::pair<int, int>> want;
    for (std::size_t i = 0; i + 1 < order.size(); ++i)
        want.insert({std::min(order[i], order[i + 1]),
                     std::max(order[i], order[i + 1])});
    std::set<std::pair<int, int>> got(topo.edges.begin(), topo.edges.end());
    CHECK(got == want);
}

TEST_CASE("schedule files load and drive the custom adversary") {
    const char* path = "tmp_sched_test.txt";
    {
        std::ofstream out(path);
        out << "n=4\n0-1 1-2 2-3\n0-2 1-3 0-1\n";
    }
    int n = 0;
    auto blocks = load_schedule(path, &n);
    std::remove(path);
    REQUIRE(n == 4);
    REQUIRE(blocks.size() == 2);
    CHECK(blocks[0] ==
          std::vector<std::pair<int, int>>{{0, 1}, {1, 2}, {2, 3}});

    AdversarySpec spec;
    spec.kind = AdversaryKind::custom;
    spec.T = 2;
    spec.schedule = blocks;
    Adversary adv(spec, 4, Rng(0));
    ObservableState obs(4);
    std::uint64_t h0 = adv.next_topology(0, obs).hash();
    CHECK(adv.next_topology(1, obs).hash() == h0);
    std::uint64_t h2 = adv.next_topology(2, obs).hash();
    CHECK(h2 != h0);
    // The last block repeats beyond the schedule's end.
    CHECK(adv.next_topology(9, obs).hash() == h2);
}

TEST_CASE("a disconnected schedule block is a hard error at use time") {
    AdversarySpec spec;
    spec.kind = AdversaryKind::custom;
    spec.T = 1;
    spec.schedule = {{{0, 1}, {2, 3}}};
    Adversary adv(spec, 4, Rng(0));
    ObservableState obs(4);
    CHECK_THROWS_AS(adv.next_topology(0, obs), DisconnectedTopology);
}
