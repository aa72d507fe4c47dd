#include "dynnet/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "dynnet/coding.hpp"
#include "dynnet/dynamics.hpp"
#include "dynnet/errors.hpp"
#include "dynnet/gather.hpp"
#include "dynnet/harness.hpp"
#include "dynnet/patch.hpp"
#include "dynnet/protocols.hpp"
#include "dynnet/simulator.hpp"

namespace dynnet {

namespace {

struct Criterion {
    bool pass = false;
    std::string detail;
};

double median_of(std::vector<std::uint64_t> v) {
    if (v.empty()) return 0;
    std::sort(v.begin(), v.end());
    std::size_t s = v.size();
    if (s % 2) return static_cast<double>(v[s / 2]);
    return (static_cast<double>(v[s / 2 - 1]) + static_cast<double>(v[s / 2])) / 2;
}

// Completion rounds of a trial set; sets *all_done to false when any trial
// missed completion or hit a failure stop.
std::vector<std::uint64_t> completions(const TrialSet& ts, bool* all_done) {
    std::vector<std::uint64_t> out;
    for (const RunRecord& r : ts.records) {
        if (!r.completion_round || r.failure != FailureReason::none) {
            *all_done = false;
            out.push_back(trial_rounds(r));
        } else {
            out.push_back(*r.completion_round);
        }
    }
    return out;
}

CodedVector random_cv(const FieldSpec& f, int k, int dp, Rng& rng) {
    CodedVector v;
    v.coeffs.resize(k);
    v.payload.resize(dp);
    for (felem& c : v.coeffs) c = static_cast<felem>(rng.next_below(f.q()));
    for (felem& p : v.payload) p = static_cast<felem>(rng.next_below(f.q()));
    return v;
}

// w += lambda * v over the field, full coeffs||payload layout.
void add_scaled(const FieldSpec& f, CodedVector* w, felem lambda,
                const CodedVector& v) {
    for (std::size_t i = 0; i < w->coeffs.size(); ++i)
        w->coeffs[i] = f.add(w->coeffs[i], f.mul(lambda, v.coeffs[i]));
    for (std::size_t i = 0; i < w->payload.size(); ++i)
        w->payload[i] = f.add(w->payload[i], f.mul(lambda, v.payload[i]));
}

int first_nonzero(const CodedVector& v) {
    for (std::size_t i = 0; i < v.coeffs.size(); ++i)
        if (v.coeffs[i]) return static_cast<int>(i);
    for (std::size_t i = 0; i < v.payload.size(); ++i)
        if (v.payload[i]) return static_cast<int>(v.coeffs.size() + i);
    return -1;
}

felem entry_at(const CodedVector& v, int pos) {
    int k = static_cast<int>(v.coeffs.size());
    return pos < k ? v.coeffs[pos] : v.payload[pos - k];
}

// ---------------------------------------------------------------- criterion 1

Criterion c01_algebra(std::uint64_t seed) {
    int bad = 0;
    std::ostringstream why;

    // Field axioms, exhaustive for the small primes.
    for (std::uint32_t q : {2u, 3u, 5u, 7u}) {
        FieldSpec f(q);
        for (felem a = 0; a < q; ++a) {
            if (f.add(a, 0) != a || f.mul(a, 1) != a || f.mul(a, 0) != 0) ++bad;
            if (f.add(a, f.neg(a)) != 0) ++bad;
            if (a && f.mul(a, f.inv(a)) != 1) ++bad;
            for (felem b = 0; b < q; ++b) {
                if (f.add(a, b) != f.add(b, a) || f.mul(a, b) != f.mul(b, a)) ++bad;
                if (f.sub(a, b) != f.add(a, f.neg(b))) ++bad;
                for (felem c = 0; c < q; ++c) {
                    if (f.add(f.add(a, b), c) != f.add(a, f.add(b, c))) ++bad;
                    if (f.mul(f.mul(a, b), c) != f.mul(a, f.mul(b, c))) ++bad;
                    if (f.mul(a, f.add(b, c)) != f.add(f.mul(a, b), f.mul(a, c)))
                        ++bad;
                }
            }
        }
        bool threw = false;
        try {
            f.inv(0);
        } catch (const ZeroInverse&) {
            threw = true;
        }
        if (!threw) ++bad;
    }
    // Sampled axioms for a large prime.
    {
        FieldSpec f(65521);
        Rng rng(Rng::derive(seed, 101));
        for (int t = 0; t < 1000; ++t) {
            felem a = static_cast<felem>(rng.next_below(f.q()));
            felem b = static_cast<felem>(rng.next_below(f.q()));
            felem c = static_cast<felem>(rng.next_below(f.q()));
            if (f.mul(a, f.add(b, c)) != f.add(f.mul(a, b), f.mul(a, c))) ++bad;
            if (f.add(a, f.neg(a)) != 0) ++bad;
            if (a && (f.mul(a, f.inv(a)) != 1 || f.inv(f.inv(a)) != a)) ++bad;
        }
    }

    // Pack/unpack round trips, bit for bit.
    {
        Rng rng(Rng::derive(seed, 102));
        for (std::uint32_t q : {2u, 3u, 5u, 7u}) {
            FieldSpec f(q);
            for (int d : {1, 3, 8, 13, 64, 100}) {
                for (int rep = 0; rep < 52; ++rep) {
                    BitVec bv;
                    for (int i = 0; i < d; i += 64) {
                        int w = d - i < 64 ? d - i : 64;
                        std::uint64_t x = rep == 50   ? 0
                                          : rep == 51 ? ~0ull
                                                      : rng.next_u64();
                        bv.append(w >= 64 ? x : (x & ((1ull << w) - 1)), w);
                    }
                    std::vector<felem> syms = f.pack_token(bv);
                    if (static_cast<int>(syms.size()) != f.packed_len(d)) ++bad;
                    for (felem s : syms)
                        if (s >= q) ++bad;
                    if (f.unpack_token(syms, d) != bv) ++bad;
                }
            }
        }
    }

    // Echelon invariants under arbitrary insert sequences.
    {
        Rng rng(Rng::derive(seed, 103));
        for (std::uint32_t q : {2u, 3u, 5u}) {
            FieldSpec f(q);
            int k = 5, dp = f.packed_len(8);
            for (int rep = 0; rep < 20; ++rep) {
                KnowledgeBasis kb(f, k, dp);
                for (int ins = 0; ins < 25; ++ins) {
                    int before = kb.rank();
                    if (ins % 3 == 2 && before > 0) {
                        // A combination of existing rows must never grow rank.
                        CodedVector v = kb.random_combination(rng);
                        if (kb.insert(v)) ++bad;
                        if (kb.rank() != before) ++bad;
                    } else {
                        kb.insert(random_cv(f, k, dp, rng));
                    }
                    std::vector<CodedVector> rows = kb.rows();
                    if (static_cast<int>(rows.size()) != kb.rank()) ++bad;
                    int prev = -1;
                    for (std::size_t i = 0; i < rows.size(); ++i) {
                        int piv = first_nonzero(rows[i]);
                        if (piv <= prev) ++bad;
                        prev = piv;
                        if (entry_at(rows[i], piv) != 1) ++bad;
                        for (std::size_t j = 0; j < rows.size(); ++j)
                            if (j != i && entry_at(rows[j], piv) != 0) ++bad;
                        CodedVector again = rows[i];
                        if (kb.insert(again)) ++bad;
                    }
                }
            }
        }
    }

    // Span equality against an exhaustive closure oracle, q = 2, length 12.
    {
        FieldSpec f(2);
        int k = 6, dp = 6;
        Rng rng(Rng::derive(seed, 104));
        for (int rep = 0; rep < 50; ++rep) {
            KnowledgeBasis kb(f, k, dp);
            std::set<std::uint32_t> closure{0};
            for (int ins = 0; ins < 6; ++ins) {
                std::uint32_t m = static_cast<std::uint32_t>(rng.next_bits(12));
                CodedVector v;
                v.coeffs.resize(k);
                v.payload.resize(dp);
                for (int i = 0; i < 12; ++i) {
                    felem bit = (m >> (11 - i)) & 1;
                    if (i < k)
                        v.coeffs[i] = bit;
                    else
                        v.payload[i - k] = bit;
                }
                std::set<std::uint32_t> grown = closure;
                for (std::uint32_t x : closure) grown.insert(x ^ m);
                closure.swap(grown);
                kb.insert(v);
            }
            if ((1u << kb.rank()) != closure.size()) ++bad;
            std::vector<CodedVector> rows = kb.rows();
            std::vector<std::uint32_t> masks;
            for (const CodedVector& r : rows) {
                std::uint32_t m = 0;
                for (int i = 0; i < k; ++i) m = (m << 1) | r.coeffs[i];
                for (int i = 0; i < dp; ++i) m = (m << 1) | r.payload[i];
                masks.push_back(m);
            }
            std::set<std::uint32_t> span;
            for (std::uint32_t sel = 0; sel < (1u << masks.size()); ++sel) {
                std::uint32_t x = 0;
                for (std::size_t i = 0; i < masks.size(); ++i)
                    if (sel & (1u << i)) x ^= masks[i];
                span.insert(x);
            }
            if (span != closure) ++bad;
        }
    }

    // senses and header_in_span against exhaustive enumeration of the span.
    {
        Rng rng(Rng::derive(seed, 105));
        for (std::uint32_t q : {2u, 3u}) {
            FieldSpec f(q);
            int k = 4, dp = 2;
            for (int rep = 0; rep < 50; ++rep) {
                KnowledgeBasis kb(f, k, dp);
                for (int ins = 0; ins < 3; ++ins)
                    kb.insert(random_cv(f, k, dp, rng));
                std::vector<CodedVector> rows = kb.rows();
                int r = kb.rank();
                std::uint64_t combos = 1;
                for (int i = 0; i < r; ++i) combos *= q;
                for (int t = 0; t < 20; ++t) {
                    std::vector<felem> mu(k);
                    for (felem& m : mu) m = static_cast<felem>(rng.next_below(q));
                    bool any_dot = false, any_eq = false;
                    for (std::uint64_t sel = 0; sel < combos; ++sel) {
                        CodedVector w;
                        w.coeffs.assign(k, 0);
                        w.payload.assign(dp, 0);
                        std::uint64_t s = sel;
                        for (int i = 0; i < r; ++i) {
                            add_scaled(f, &w, static_cast<felem>(s % q), rows[i]);
                            s /= q;
                        }
                        felem dot = 0;
                        bool eq = true;
                        for (int i = 0; i < k; ++i) {
                            dot = f.add(dot, f.mul(w.coeffs[i], mu[i]));
                            if (w.coeffs[i] != mu[i]) eq = false;
                        }
                        if (dot) any_dot = true;
                        if (eq) any_eq = true;
                    }
                    if (kb.senses(mu) != any_dot) ++bad;
                    if (kb.header_in_span(mu) != any_eq) ++bad;
                }
            }
        }
    }

    // Decoding: unit rows decode to their exact payloads, nothing else.
    {
        FieldSpec f(5);
        int k = 6, dp = f.packed_len(8);
        Rng rng(Rng::derive(seed, 106));
        for (int rep = 0; rep < 30; ++rep) {
            std::vector<std::vector<felem>> pay(k);
            for (auto& p : pay) {
                p.resize(dp);
                for (felem& x : p) x = static_cast<felem>(rng.next_below(5));
            }
            std::vector<int> S;
            for (int i = 0; i < k; ++i)
                if (rng.next_bool()) S.push_back(i);
            if (S.empty()) S.push_back(static_cast<int>(rng.next_below(k)));
            KnowledgeBasis kb(f, k, dp);
            auto unit = [&](int i) {
                CodedVector v;
                v.coeffs.assign(k, 0);
                v.coeffs[i] = 1;
                v.payload = pay[i];
                return v;
            };
            for (int i : S) kb.insert(unit(i));
            for (int c = 0; c < 3; ++c) {
                CodedVector w;
                w.coeffs.assign(k, 0);
                w.payload.assign(dp, 0);
                for (int i : S)
                    add_scaled(f, &w, static_cast<felem>(rng.next_below(5)),
                               unit(i));
                kb.insert(w);
            }
            if (kb.decoded_indices() != S) ++bad;
            for (int i = 0; i < k; ++i) {
                auto got = kb.decode_payload(i);
                bool in_s = std::find(S.begin(), S.end(), i) != S.end();
                if (in_s != got.has_value()) ++bad;
                if (got && *got != pay[i]) ++bad;
            }
        }
    }

    // Canonical form: equal spans compare equal whatever the insert order.
    {
        FieldSpec f(3);
        int k = 5, dp = 2;
        Rng rng(Rng::derive(seed, 107));
        for (int rep = 0; rep < 30; ++rep) {
            std::vector<CodedVector> vs;
            for (int i = 0; i < 4; ++i) vs.push_back(random_cv(f, k, dp, rng));
            KnowledgeBasis a(f, k, dp), b(f, k, dp);
            for (const CodedVector& v : vs) a.insert(v);
            for (auto it = vs.rbegin(); it != vs.rend(); ++it) b.insert(*it);
            for (int c = 0; c < 3; ++c) {
                CodedVector w;
                w.coeffs.assign(k, 0);
                w.payload.assign(dp, 0);
                for (const CodedVector& v : vs)
                    add_scaled(f, &w, static_cast<felem>(rng.next_below(3)), v);
                b.insert(w);
            }
            if (!(a == b)) ++bad;
        }
    }

    Criterion c;
    c.pass = bad == 0;
    why << bad << " violations";
    c.detail = why.str();
    return c;
}

// ---------------------------------------------------------------- criterion 2

Criterion c02_sensing(std::uint64_t seed) {
    std::ostringstream why;
    bool ok = true;
    for (std::uint32_t q : {2u, 3u, 5u}) {
        FieldSpec f(q);
        int k = 5, dp = 2;
        Rng rng(Rng::derive(seed, 2, q));
        int succ = 0;
        const int total = 10000;
        for (int t = 0; t < total; ++t) {
            KnowledgeBasis kb(f, k, dp);
            while (kb.rank() < 3) kb.insert(random_cv(f, k, dp, rng));
            std::vector<felem> mu(k);
            do {
                for (felem& m : mu) m = static_cast<felem>(rng.next_below(q));
            } while (!kb.senses(mu));
            if (sensing_transfer_trial(kb, mu, rng)) ++succ;
        }
        double rate = static_cast<double>(succ) / total;
        double need = 1.0 - 1.0 / q - 0.02;
        if (rate < need) ok = false;
        why << "q=" << q << " " << std::fixed << std::setprecision(4) << rate
            << (rate >= need ? ">=" : "<") << need << " ";
    }
    // The precondition is enforced: a basis that does not sense mu throws.
    {
        FieldSpec f(3);
        KnowledgeBasis kb(f, 2, 1);
        CodedVector v;
        v.coeffs = {1, 0};
        v.payload = {2};
        kb.insert(v);
        Rng rng(Rng::derive(seed, 2, 99));
        bool threw = false;
        try {
            sensing_transfer_trial(kb, {0, 1}, rng);
        } catch (const PreconditionViolated&) {
            threw = true;
        }
        if (!threw) {
            ok = false;
            why << "missing precondition throw ";
        }
    }
    Criterion c;
    c.pass = ok;
    c.detail = why.str();
    return c;
}

// ---------------------------------------------------------------- criterion 3

Criterion c03_coded_scaling(std::uint64_t seed, int jobs) {
    const AdversaryKind kinds[] = {
        AdversaryKind::static_random, AdversaryKind::fresh_random,
        AdversaryKind::rotating_path, AdversaryKind::rank_sorted_path};
    std::ostringstream why;
    bool ok = true;
    int late = 0;
    for (AdversaryKind kind : kinds) {
        std::map<int, double> med;
        for (int n : {32, 64, 128}) {
            RunConfig cfg;
            cfg.protocol = ProtocolKind::rlnc_broadcast;
            cfg.adversary.kind = kind;
            cfg.adversary.T = 1;
            cfg.n = n;
            cfg.k = n;
            cfg.d = 1;
            cfg.b = n + 8;
            cfg.q = 2;
            cfg.master_seed = Rng::derive(seed, 3, static_cast<int>(kind), n);
            cfg.round_cap = 32ull * (n + n);
            TrialSet ts = run_trials(cfg, 100, jobs);
            std::uint64_t bound = 16ull * (n + cfg.k);
            std::vector<std::uint64_t> comp;
            for (const RunRecord& r : ts.records) {
                if (!r.completion_round || *r.completion_round > bound) ++late;
                comp.push_back(r.completion_round ? *r.completion_round
                                                  : trial_rounds(r));
            }
            med[n] = median_of(comp);
        }
        double r1 = med[64] / med[32], r2 = med[128] / med[64];
        if (r1 < 1.5 || r1 > 3.0 || r2 < 1.5 || r2 > 3.0) ok = false;
        why << to_string(kind) << " " << std::fixed << std::setprecision(2)
            << r1 << "/" << r2 << " ";
    }
    if (late) {
        ok = false;
        why << late << " trials over 16(n+k)";
    }
    Criterion c;
    c.pass = ok;
    c.detail = why.str() + (late ? "" : "all within 16(n+k)");
    return c;
}

// ---------------------------------------------------------------- criterion 4

Criterion c04_random_gathering(std::uint64_t seed, int jobs) {
    RunConfig cfg;
    cfg.protocol = ProtocolKind::random_forward;
    cfg.adversary.kind = AdversaryKind::fresh_random;
    cfg.n = 100;
    cfg.k = 100;
    cfg.d = 8;
    cfg.b = 64;
    cfg.q = 2;
    cfg.master_seed = Rng::derive(seed, 4);
    TrialSet ts = run_trials(cfg, 100, jobs);
    double want = 0.5 * std::sqrt(static_cast<double>(cfg.b) * cfg.k / cfg.d);
    int good = 0;
    double worst = 1e18;
    for (const RunRecord& r : ts.records) {
        if (r.failure != FailureReason::none) continue;
        auto it = r.stats.find("identified_count");
        if (it == r.stats.end()) continue;
        if (it->second >= want || it->second >= cfg.k) ++good;
        worst = std::min(worst, it->second);
    }
    Criterion c;
    c.pass = good >= 95;
    std::ostringstream why;
    why << good << "/100 trials identified >= " << std::fixed
        << std::setprecision(2) << want << " tokens (min " << worst << ")";
    c.detail = why.str();
    return c;
}

// ---------------------------------------------------------------- criterion 5

Criterion c05_batching(std::uint64_t seed, int jobs) {
    std::ostringstream why;
    bool all_done = true;

    RunConfig flood;
    flood.protocol = ProtocolKind::flood_forward;
    flood.adversary.kind = AdversaryKind::fresh_random;
    flood.n = 64;
    flood.k = 64;
    flood.d = 8;
    flood.b = 128;
    flood.q = 2;
    flood.placement = Placement::all_at_origin;
    flood.master_seed = Rng::derive(seed, 5, 1);
    flood.round_cap = 8192;
    RunConfig greedy = flood;
    greedy.protocol = ProtocolKind::greedy_forward;

    TrialSet tf = run_trials(flood, 20, jobs);
    TrialSet tg = run_trials(greedy, 20, jobs);
    double mf = median_of(completions(tf, &all_done));
    double mg = median_of(completions(tg, &all_done));
    double ratio = mg / mf;
    bool ok_a = all_done && ratio <= 0.5;
    why << "batched/flood " << std::fixed << std::setprecision(3) << ratio
        << " (" << std::setprecision(0) << mg << "/" << mf << ", need <=0.5)";

    // Budget sweep: median completion versus b on log-log axes.
    std::vector<double> xs, ys;
    bool sweep_done = true;
    why << "; sweep";
    for (int b : {32, 64, 128, 256}) {
        RunConfig cfg;
        cfg.protocol = ProtocolKind::greedy_forward;
        cfg.adversary.kind = AdversaryKind::fresh_random;
        cfg.n = 128;
        cfg.k = 128;
        cfg.d = 8;
        cfg.b = b;
        cfg.q = 2;
        cfg.master_seed = Rng::derive(seed, 5, 2, b);
        cfg.round_cap = 60000;
        TrialSet ts = run_trials(cfg, 11, jobs);
        double med = median_of(completions(ts, &sweep_done));
        xs.push_back(b);
        ys.push_back(med);
        why << " b" << b << "=" << std::setprecision(0) << med;
    }
    ScalingFit fit = fit_scaling(xs, ys);
    bool ok_b = sweep_done && fit.slope <= -1.5;
    why << " slope " << std::setprecision(2) << fit.slope << " (need <=-1.5)";

    Criterion c;
    c.pass = ok_a && ok_b;
    c.detail = why.str();
    return c;
}

// ---------------------------------------------------------------- criterion 6

int bfs_limited(const std::vector<std::vector<int>>& adj, int src, int limit,
                std::vector<int>* dist, std::vector<int>* order) {
    dist->assign(adj.size(), -1);
    order->clear();
    std::queue<int> q;
    (*dist)[src] = 0;
    q.push(src);
    while (!q.empty()) {
        int u = q.front();
        q.pop();
        order->push_back(u);
        if ((*dist)[u] == limit) continue;
        for (int v : adj[u])
            if ((*dist)[v] < 0) {
                (*dist)[v] = (*dist)[u] + 1;
                q.push(v);
            }
    }
    return static_cast<int>(order->size());
}

Criterion c06_patches(std::uint64_t seed) {
    const int n = 256, T = 64;
    Constants consts;
    const int D = std::max(1, T / (consts.c_diam * ceil_log2(n)));
    Rng rng(Rng::derive(seed, 6));
    int bad = 0;
    for (int inst = 0; inst < 50; ++inst) {
        Topology topo = gen_random_connected(n, 0.01, rng);
        PatchSet ps =
            build_patches(topo, D, consts.mis_phase_mult * ceil_log2(n), 32,
                          [&](int) { return rng.next_u64(); });
        std::vector<std::vector<int>> adj = topo.adjacency();
        std::map<int, int> size;
        for (int v = 0; v < n; ++v) {
            int L = ps.leader[v];
            if (L < 0 || L >= n || ps.leader[L] != L) ++bad;
            ++size[L];
            if (ps.depth[v] > D) ++bad;
            if (v == L) {
                if (ps.parent[v] != v || ps.depth[v] != 0) ++bad;
                continue;
            }
            // Tree edges are real edges and shrink depth by one toward the
            // leader, so every patch is connected with depth at most D.
            int p = ps.parent[v];
            if (std::find(adj[v].begin(), adj[v].end(), p) == adj[v].end()) ++bad;
            if (ps.depth[p] != ps.depth[v] - 1 || ps.leader[p] != L) ++bad;
            const std::vector<int>& sib = ps.children[p];
            if (std::find(sib.begin(), sib.end(), v) == sib.end()) ++bad;
            int cur = v, steps = 0;
            while (cur != ps.leader[cur] && steps <= D) {
                cur = ps.parent[cur];
                ++steps;
            }
            if (cur != L || steps != ps.depth[v]) ++bad;
        }
        for (int L : ps.leaders)
            if (size[L] < std::max(1, D / 2)) ++bad;
        // Independence in the D-th power: no two leaders within distance D.
        std::set<int> leader_set(ps.leaders.begin(), ps.leaders.end());
        if (static_cast<int>(leader_set.size()) !=
            static_cast<int>(size.size()))
            ++bad;
        std::vector<int> dist, order;
        for (int L : ps.leaders) {
            bfs_limited(adj, L, D, &dist, &order);
            for (int u : order)
                if (u != L && leader_set.count(u)) ++bad;
        }
    }
    Criterion c;
    c.pass = bad == 0;
    std::ostringstream why;
    why << "50 topologies, D=" << D << ", " << bad << " violations";
    c.detail = why.str();
    return c;
}

// ---------------------------------------------------------------- criterion 7

Criterion c07_convergecast(std::uint64_t seed) {
    Rng rng(Rng::derive(seed, 7));
    int bad = 0;
    const std::uint32_t qs[] = {2, 3, 5};
    for (int inst = 0; inst < 1000; ++inst) {
        int n = 4 + static_cast<int>(rng.next_below(29));
        Topology topo = gen_random_connected(n, 0.15, rng);
        int D = 1 + static_cast<int>(rng.next_below(3));
        int C = 1 + static_cast<int>(rng.next_below(4));
        FieldSpec f(qs[rng.next_below(3)]);
        PatchSet ps = build_patches(topo, D, 64, 32,
                                    [&](int) { return rng.next_u64(); });
        std::vector<std::vector<felem>> val(n), acc(n);
        for (int v = 0; v < n; ++v) {
            val[v].resize(C);
            for (felem& x : val[v]) x = static_cast<felem>(rng.next_below(f.q()));
            acc[v] = val[v];
        }
        // Pipelined share-up: all sends in a round read the state before the
        // round, matching the simulator's parallel delivery.
        for (int r = 0; r < C + D - 1; ++r) {
            std::vector<std::tuple<int, int, felem>> sends;
            for (int v = 0; v < n; ++v) {
                if (ps.depth[v] < 1) continue;
                int s = up_chunk(r, ps.depth[v], C, D);
                if (s >= 0)
                    sends.emplace_back(ps.parent[v], s, acc[v][s]);
            }
            for (auto& [p, s, x] : sends) acc[p][s] = f.add(acc[p][s], x);
        }
        std::map<int, std::vector<felem>> direct;
        for (int v = 0; v < n; ++v) {
            auto& sum = direct[ps.leader[v]];
            if (sum.empty()) sum.assign(C, 0);
            for (int s = 0; s < C; ++s) sum[s] = f.add(sum[s], val[v][s]);
        }
        for (int L : ps.leaders)
            if (acc[L] != direct[L]) ++bad;
    }
    Criterion c;
    c.pass = bad == 0;
    std::ostringstream why;
    why << "1000 instances, " << bad << " leader sums off";
    c.detail = why.str();
    return c;
}

// ---------------------------------------------------------------- criterion 8

Criterion c08_stability(std::uint64_t seed, int jobs) {
    std::ostringstream why;

    RunConfig ps;
    ps.protocol = ProtocolKind::patch_share;
    ps.adversary.kind = AdversaryKind::rotating_path;
    ps.adversary.T = 16;
    ps.n = 256;
    ps.k = 12;
    ps.d = 9;
    ps.b = 16;
    ps.q = 2;
    ps.consts.patch_mode = 1;
    ps.master_seed = Rng::derive(seed, 8, 1);
    std::uint64_t bound =
        8ull * (ps.n + ps.b * ps.adversary.T * ps.adversary.T) * ceil_log2(ps.n);
    ps.round_cap = bound;
    TrialSet tp = run_trials(ps, 20, jobs);
    int ok_runs = 0;
    std::uint64_t worst = 0;
    for (const RunRecord& r : tp.records) {
        if (r.completion_round && r.failure == FailureReason::none &&
            *r.completion_round <= bound)
            ++ok_runs;
        worst = std::max(worst, trial_rounds(r));
    }
    bool ok_a = ok_runs == 20;
    why << "patched " << ok_runs << "/20 within " << bound << " (max " << worst
        << ")";

    RunConfig base;
    base.protocol = ProtocolKind::tstable;
    base.adversary.kind = AdversaryKind::fresh_random;
    base.n = 128;
    base.k = 128;
    base.d = 8;
    base.b = 16;
    base.q = 2;
    base.round_cap = 60000;
    RunConfig slow = base, fast = base;
    slow.adversary.T = 1;
    slow.master_seed = Rng::derive(seed, 8, 2);
    fast.adversary.T = 8;
    fast.master_seed = Rng::derive(seed, 8, 3);
    bool all_done = true;
    TrialSet t1 = run_trials(slow, 20, jobs);
    TrialSet t8 = run_trials(fast, 20, jobs);
    double m1 = median_of(completions(t1, &all_done));
    double m8 = median_of(completions(t8, &all_done));
    double ratio = m8 / m1;
    bool ok_b = all_done && ratio <= 0.25;
    why << "; T8/T1 " << std::fixed << std::setprecision(3) << ratio << " ("
        << std::setprecision(0) << m8 << "/" << m1 << ", need <=0.25)";

    Criterion c;
    c.pass = ok_a && ok_b;
    c.detail = why.str();
    return c;
}

// ---------------------------------------------------------------- criterion 9

bool records_equal(const RunRecord& a, const RunRecord& b) {
    if (a.completion_round != b.completion_round) return false;
    if (a.termination_round != b.termination_round) return false;
    if (a.rounds_executed != b.rounds_executed) return false;
    if (a.total_bits_sent != b.total_bits_sent) return false;
    if (a.failure != b.failure) return false;
    if (a.stats != b.stats) return false;
    if (a.trace.size() != b.trace.size()) return false;
    for (std::size_t i = 0; i < a.trace.size(); ++i) {
        if (a.trace[i].round != b.trace[i].round) return false;
        if (a.trace[i].topology_hash != b.trace[i].topology_hash) return false;
        if (a.trace[i].knowledge != b.trace[i].knowledge) return false;
    }
    return true;
}

Criterion c09_replay(std::uint64_t seed, int jobs) {
    std::ostringstream why;
    int mismatch = 0, budget_viol = 0, order_viol = 0, incomplete = 0;

    struct Case {
        ProtocolKind proto;
        AdversaryKind kind;
        std::uint64_t T;
        int n, k, d, b;
        std::uint32_t q;
        Placement pl;
        int patch_mode;
        bool expect_complete;
    };
    const Case cases[] = {
        {ProtocolKind::flood_forward, AdversaryKind::fresh_random, 1, 16, 16, 8,
         64, 2, Placement::one_per_node, 0, true},
        {ProtocolKind::flood_forward, AdversaryKind::static_random, 1, 12, 24,
         4, 48, 3, Placement::one_per_node, 0, true},
        {ProtocolKind::rlnc_broadcast, AdversaryKind::rotating_path, 4, 16, 16,
         8, 32, 2, Placement::one_per_node, 0, true},
        {ProtocolKind::rlnc_broadcast, AdversaryKind::fresh_random, 1, 8, 8, 6,
         40, 5, Placement::one_per_node, 0, true},
        {ProtocolKind::random_forward, AdversaryKind::fresh_random, 1, 32, 32,
         8, 64, 2, Placement::one_per_node, 0, false},
        {ProtocolKind::greedy_forward, AdversaryKind::fresh_random, 1, 24, 24,
         8, 64, 2, Placement::one_per_node, 0, true},
        {ProtocolKind::greedy_forward, AdversaryKind::fresh_random, 1, 16, 16,
         8, 128, 2, Placement::all_at_origin, 0, true},
        {ProtocolKind::pipeline_flood, AdversaryKind::rotating_path, 4, 24, 24,
         8, 24, 2, Placement::one_per_node, 0, true},
        {ProtocolKind::tstable, AdversaryKind::fresh_random, 8, 32, 32, 8, 16,
         2, Placement::one_per_node, 0, true},
        {ProtocolKind::patch_share, AdversaryKind::rotating_path, 16, 48, 8, 9,
         16, 2, Placement::one_per_node, 1, true},
    };
    try {
        int idx = 0;
        for (const Case& cs : cases) {
            RunConfig cfg;
            cfg.protocol = cs.proto;
            cfg.adversary.kind = cs.kind;
            cfg.adversary.T = cs.T;
            cfg.n = cs.n;
            cfg.k = cs.k;
            cfg.d = cs.d;
            cfg.b = cs.b;
            cfg.q = cs.q;
            cfg.placement = cs.pl;
            cfg.consts.patch_mode = cs.patch_mode;
            cfg.record_trace = true;
            cfg.master_seed = Rng::derive(seed, 9, idx++);
            EngineHooks hooks;
            hooks.on_message = [&](std::uint64_t, int, const Message& m) {
                if (m.body.bits() > static_cast<std::size_t>(cfg.b))
                    ++budget_viol;
            };
            RunRecord r1 = run_trial(cfg, &hooks);
            RunRecord r2 = run_trial(cfg, &hooks);
            if (!records_equal(r1, r2)) ++mismatch;
            // Completed runs already passed the engine's exactness check;
            // completion itself is asserted here.
            if (cs.expect_complete &&
                (!r1.completion_round || r1.failure != FailureReason::none))
                ++incomplete;
        }

        // Serial and parallel trial sets agree record for record.
        {
            RunConfig cfg;
            cfg.protocol = ProtocolKind::flood_forward;
            cfg.adversary.kind = AdversaryKind::fresh_random;
            cfg.n = 16;
            cfg.k = 16;
            cfg.d = 8;
            cfg.b = 64;
            cfg.q = 2;
            cfg.record_trace = true;
            cfg.master_seed = Rng::derive(seed, 9, 100);
            TrialSet a = run_trials_serial(cfg, 8);
            TrialSet b = run_trials(cfg, 8, jobs > 1 ? jobs : 4);
            if (a.records.size() != b.records.size()) {
                ++mismatch;
            } else {
                for (std::size_t i = 0; i < a.records.size(); ++i)
                    if (!records_equal(a.records[i], b.records[i])) ++mismatch;
            }
            if (csv_row(summarize(a)) != csv_row(summarize(b))) ++mismatch;
        }

        // Perturbing node coins must never change an oblivious adversary's
        // topology sequence; only the adversary stream may steer it.
        const AdversaryKind obliv[] = {AdversaryKind::static_random,
                                       AdversaryKind::fresh_random,
                                       AdversaryKind::rotating_path};
        int oidx = 0;
        for (AdversaryKind kind : obliv) {
            RunConfig cfg;
            cfg.protocol = ProtocolKind::rlnc_broadcast;
            cfg.adversary.kind = kind;
            cfg.adversary.T = 1 + oidx;
            cfg.n = 24;
            cfg.k = 24;
            cfg.d = 4;
            cfg.b = 32;
            cfg.q = 2;
            cfg.record_trace = true;
            cfg.round_cap = 96;
            cfg.master_seed = Rng::derive(seed, 9, 200 + oidx++);
            EngineHooks h0, h1;
            h0.node_stream_salt = 0;
            h1.node_stream_salt = 1;
            RunRecord r0 = run_trial(cfg, &h0);
            RunRecord r1 = run_trial(cfg, &h1);
            std::size_t common = std::min(r0.trace.size(), r1.trace.size());
            if (common == 0) ++order_viol;
            for (std::size_t i = 0; i < common; ++i)
                if (r0.trace[i].topology_hash != r1.trace[i].topology_hash)
                    ++order_viol;
        }
    } catch (const std::exception& e) {
        Criterion c;
        c.pass = false;
        c.detail = std::string("exception: ") + e.what();
        return c;
    }

    Criterion c;
    c.pass = !mismatch && !budget_viol && !order_viol && !incomplete;
    std::ostringstream s;
    s << mismatch << " replay mismatches, " << budget_viol
      << " budget violations, " << order_viol << " ordering violations, "
      << incomplete << " incomplete runs";
    c.detail = s.str();
    return c;
}

// --------------------------------------------------------------- criterion 10

Criterion c10_size_estimate(std::uint64_t seed) {
    std::ostringstream why;
    bool ok = true;
    for (int hidden : {1, 2, 13, 40}) {
        RunConfig base;
        base.protocol = ProtocolKind::flood_forward;
        base.adversary.kind = AdversaryKind::fresh_random;
        base.n = hidden;
        base.b = 64;
        base.q = 2;
        base.master_seed = Rng::derive(seed, 10, hidden);
        SizeEstimateResult r = run_size_estimate(base);
        std::uint64_t allowed = 0;
        for (std::size_t i = 0; i + 1 < r.budgets.size(); ++i)
            allowed += r.budgets[i];
        if (!r.budgets.empty()) allowed += 2 * r.budgets.back();
        bool good = r.ok && r.count == hidden && r.total_rounds <= allowed;
        if (!good) ok = false;
        why << "n=" << hidden << (good ? " ok" : " BAD") << " (count="
            << r.count << " est=" << r.estimate << " rounds=" << r.total_rounds
            << "/" << allowed << ") ";
    }
    Criterion c;
    c.pass = ok;
    c.detail = why.str();
    return c;
}

}  // namespace

int run_acceptance(std::uint64_t seed, int jobs, std::ostream& out) {
    if (jobs < 1) jobs = 1;
    out << "acceptance suite: seed=" << seed << " jobs=" << jobs << "\n";
    int fails = 0;
    const char* names[] = {
        "algebra_suite",       "sensing_transfer", "coded_broadcast_scaling",
        "random_gathering",    "batching_advantage", "patch_partition",
        "convergecast_exact",  "stability_speedup", "replay_and_budget",
        "size_estimate"};
    Criterion results[10];
    auto timed = [&](int i, auto&& fn) {
        auto t0 = std::chrono::steady_clock::now();
        try {
            results[i] = fn();
        } catch (const std::exception& e) {
            results[i].pass = false;
            results[i].detail = std::string("exception: ") + e.what();
        }
        auto t1 = std::chrono::steady_clock::now();
        double secs =
            std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0)
                .count() /
            1000.0;
        out << (results[i].pass ? "PASS" : "FAIL") << " " << std::setw(2)
            << i + 1 << " " << std::left << std::setw(24) << names[i]
            << std::right << " " << results[i].detail << " [" << std::fixed
            << std::setprecision(1) << secs << "s]\n";
        out.flush();
        if (!results[i].pass) ++fails;
    };
    timed(0, [&] { return c01_algebra(seed); });
    timed(1, [&] { return c02_sensing(seed); });
    timed(2, [&] { return c03_coded_scaling(seed, jobs); });
    timed(3, [&] { return c04_random_gathering(seed, jobs); });
    timed(4, [&] { return c05_batching(seed, jobs); });
    timed(5, [&] { return c06_patches(seed); });
    timed(6, [&] { return c07_convergecast(seed); });
    timed(7, [&] { return c08_stability(seed, jobs); });
    timed(8, [&] { return c09_replay(seed, jobs); });
    timed(9, [&] { return c10_size_estimate(seed); });
    out << "acceptance: " << (10 - fails) << "/10 criteria passed\n";
    return fails;
}

}  // namespace dynnet
