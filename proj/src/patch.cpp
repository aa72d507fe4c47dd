#include <algorithm>
#include <cmath>

#include "dynnet/errors.hpp"
#include "dynnet/patch.hpp"

namespace dynnet {

PatchSet build_patches(const Topology& topo, int D, int phase_limit,
                       int prio_bits,
                       const std::function<std::uint64_t(int)>& draw_priority) {
    int n = topo.n;
    auto adj = topo.adjacency();
    // Priorities are prio_bits wide on the wire; wider draws get truncated so
    // the simulated floods see exactly what the messages could carry.
    std::uint64_t mask =
        prio_bits >= 64 ? ~0ull : ((1ull << prio_bits) - 1);
    std::vector<char> active(n, 1), in_mis(n, 0);
    std::vector<std::pair<std::uint64_t, int>> key(n), best(n), nbest(n);
    std::vector<char> dom(n), ndom(n);

    for (int phase = 0; phase < phase_limit; ++phase) {
        bool any = false;
        for (int i = 0; i < n; ++i) any = any || active[i];
        if (!any) break;
        for (int i = 0; i < n; ++i)
            key[i] = active[i] ? std::make_pair(draw_priority(i) & mask, i)
                               : std::make_pair(std::uint64_t(0), -1);
        best = key;
        for (int r = 0; r < D; ++r) {
            for (int i = 0; i < n; ++i) {
                nbest[i] = best[i];
                for (int j : adj[i]) nbest[i] = std::max(nbest[i], best[j]);
            }
            best.swap(nbest);
        }
        for (int i = 0; i < n; ++i) dom[i] = 0;
        for (int i = 0; i < n; ++i) {
            if (active[i] && best[i] == key[i]) {
                in_mis[i] = 1;
                active[i] = 0;
                dom[i] = 1;
            }
        }
        for (int r = 0; r < D; ++r) {
            for (int i = 0; i < n; ++i) {
                ndom[i] = dom[i];
                if (!ndom[i])
                    for (int j : adj[i])
                        if (dom[j]) {
                            ndom[i] = 1;
                            break;
                        }
            }
            dom.swap(ndom);
        }
        for (int i = 0; i < n; ++i)
            if (active[i] && dom[i]) active[i] = 0;
    }
    for (int i = 0; i < n; ++i)
        if (active[i]) throw MISFailure("patch leaders undecided after phase limit");

    PatchSet ps;
    ps.leader.assign(n, -1);
    ps.parent.assign(n, -1);
    ps.depth.assign(n, 0);
    ps.children.assign(n, {});
    for (int i = 0; i < n; ++i) {
        if (in_mis[i]) {
            ps.leader[i] = i;
            ps.parent[i] = i;
            ps.leaders.push_back(i);
        }
    }
    for (int r = 1; r <= D; ++r) {
        for (int i = 0; i < n; ++i) {
            if (ps.leader[i] != -1) continue;
            int bl = -1, bp = -1;
            for (int j : adj[i]) {
                if (ps.leader[j] == -1 || ps.depth[j] != r - 1) continue;
                if (bl == -1 || ps.leader[j] < bl ||
                    (ps.leader[j] == bl && j < bp)) {
                    bl = ps.leader[j];
                    bp = j;
                }
            }
            if (bl != -1) {
                ps.leader[i] = bl;
                ps.parent[i] = bp;
                ps.depth[i] = r;
                if (r > ps.max_depth) ps.max_depth = r;
            }
        }
    }
    for (int i = 0; i < n; ++i) {
        if (ps.leader[i] == -1)
            throw MISFailure("node unassigned after BFS; leader set not maximal");
        if (ps.parent[i] != i) ps.children[ps.parent[i]].push_back(i);
    }
    return ps;
}

int up_chunk(int r, int depth, int C, int D) {
    if (depth < 1) return -1;
    int s = r - (D - depth);
    return (s >= 0 && s < C) ? s : -1;
}

int down_chunk(int r, int depth, int C, int D) {
    (void)D;
    int s = depth == 0 ? r : r - depth;
    return (s >= 0 && s < C) ? s : -1;
}

PatchShare::PatchShare(const TrialContext& ctx, int uid)
    : Node(ctx, uid), basis_(ctx.field, ctx.cfg.k,
                             ctx.field.packed_len(ctx.cfg.d)) {
    const RunConfig& cfg = ctx.cfg;
    T_ = cfg.adversary.T < 1 ? 1 : static_cast<int>(cfg.adversary.T);
    int logn = std::max(1, ceil_log2(static_cast<std::uint64_t>(cfg.hat_n())));
    D_ = std::max(1, T_ / (cfg.consts.c_diam * logn));
    int sym = ctx.field.sym_bits();
    payload_syms_ = ctx.field.packed_len(cfg.d);
    vec_syms_ = cfg.k + payload_syms_;

    int cmax = (T_ - 4 * (D_ - 1)) / 5;
    int patched_chunk = (cfg.b - ctx.uid_bits - 1) / sym;
    bool patched_ok =
        cmax >= 1 && patched_chunk >= 1 &&
        (vec_syms_ + patched_chunk - 1) / patched_chunk <= cmax;

    int chunk_nouid = (cfg.b - 1) / sym;
    int chunk_uid = (cfg.b - 1 - ctx.uid_bits) / sym;
    bool solo_ok = false;
    int solo_c = 0;
    if (chunk_nouid >= vec_syms_ && chunk_nouid >= 1) {
        solo_ok = true;
        solo_c = 1;
    } else if (chunk_uid >= 1) {
        int C = (vec_syms_ + chunk_uid - 1) / chunk_uid;
        if (C <= T_) {
            solo_ok = true;
            solo_c = C;
        }
    }

    switch (cfg.consts.patch_mode) {
        case 1:
            if (!patched_ok)
                throw BudgetExceeded("patch_share: patched schedule infeasible");
            mode_ = Mode::patched;
            break;
        case 2:
            if (!solo_ok)
                throw BudgetExceeded("patch_share: solo schedule infeasible");
            mode_ = Mode::solo;
            break;
        default:
            if (patched_ok && D_ >= 2)
                mode_ = Mode::patched;
            else if (solo_ok)
                mode_ = Mode::solo;
            else if (patched_ok)
                mode_ = Mode::patched;
            else
                throw BudgetExceeded("patch_share: batch fits neither schedule");
    }
    if (mode_ == Mode::patched) {
        chunk_syms_ = patched_chunk;
        C_ = (vec_syms_ + chunk_syms_ - 1) / chunk_syms_;
        cycles_ = 0;
    } else {
        C_ = solo_c;
        chunk_syms_ = C_ == 1 ? std::max(vec_syms_, 1) : chunk_uid;
        solo_uid_ = C_ > 1;
        cycles_ = T_ / C_;
    }
    epoch_blocks_ = static_cast<std::uint64_t>(cfg.hat_n());

    for (int idx : ctx.holdings[uid]) {
        CodedVector v;
        v.coeffs.assign(cfg.k, 0);
        v.coeffs[idx] = 1;
        v.payload = ctx.field.pack_token(ctx.tokens[idx].bits);
        basis_.insert(v);
    }
    flag_ = basis_.rank() < cfg.k;
    patch_vec_.assign(vec_syms_, 0);
}

void PatchShare::draw_contribution(Rng& rng, std::vector<felem>* out) const {
    out->clear();
    if (basis_.rank() == 0) return;
    CodedVector v = basis_.random_combination(rng);
    out->reserve(vec_syms_);
    out->insert(out->end(), v.coeffs.begin(), v.coeffs.end());
    out->insert(out->end(), v.payload.begin(), v.payload.end());
}

void PatchShare::append_chunk(Message* m, Tag tag, const std::vector<felem>& vec,
                              int s) const {
    m->tag = tag;
    m->body.append(static_cast<std::uint64_t>(uid_), ctx_->uid_bits);
    m->body.append_bit(flag_ ? 1 : 0);
    int sym = ctx_->field.sym_bits();
    for (int i = chunk_lo(s); i < chunk_hi(s); ++i)
        m->body.append(vec[i], sym);
}

void PatchShare::add_into(std::vector<felem>* acc, int s, BitReader* in) const {
    int sym = ctx_->field.sym_bits();
    for (int i = chunk_lo(s); i < chunk_hi(s); ++i)
        (*acc)[i] = ctx_->field.add((*acc)[i],
                                    static_cast<felem>(in->read(sym)));
}

void PatchShare::insert_syms(const std::vector<felem>& vec) {
    CodedVector v;
    v.coeffs.assign(vec.begin(), vec.begin() + ctx_->cfg.k);
    v.payload.assign(vec.begin() + ctx_->cfg.k, vec.end());
    if (!v.is_zero()) basis_.insert(v);
}

Message PatchShare::emit(Rng& rng) {
    int br = static_cast<int>(round_ % T_);
    Message m = mode_ == Mode::patched ? emit_patched(rng, br)
                                       : emit_solo(rng, br);
    if (m.tag == Tag::idle) m.body.append_bit(flag_ ? 1 : 0);
    return m;
}

Message PatchShare::emit_patched(Rng& rng, int br) {
    Message m;
    m.tag = Tag::idle;
    if (!patches_) return m;
    int cd = C_ + D_ - 1;
    int base2 = 2 * cd + C_;
    int j = patches_->depth[uid_];
    bool leaf = patches_->children[uid_].empty();

    auto up = [&](int r) {
        if (r == 0) {
            draw_contribution(rng, &acc_vec_);
            if (acc_vec_.empty()) acc_vec_.assign(vec_syms_, 0);
        }
        int s = up_chunk(r, j, C_, D_);
        if (s >= 0) append_chunk(&m, Tag::chunk_up, acc_vec_, s);
    };
    auto down = [&](int r) {
        if (r == 0) {
            if (j == 0) {
                patch_vec_ = acc_vec_;
                down_cnt_ = C_;
            } else {
                patch_vec_.assign(vec_syms_, 0);
                down_cnt_ = 0;
            }
        }
        if (leaf) return;
        int s = down_chunk(r, j, C_, D_);
        if (s >= 0) append_chunk(&m, Tag::chunk_down, patch_vec_, s);
    };

    if (br < cd) {
        up(br);
    } else if (br < 2 * cd) {
        down(br - cd);
    } else if (br < base2) {
        int p = br - 2 * cd;
        if (have_patch_vec_) append_chunk(&m, Tag::chunk_pass, patch_vec_, p);
    } else if (br < base2 + cd) {
        up(br - base2);
    } else if (br < base2 + 2 * cd) {
        down(br - base2 - cd);
    }
    return m;
}

void PatchShare::absorb_patched(const Message& m, int br) {
    if (m.tag != Tag::chunk_up && m.tag != Tag::chunk_down &&
        m.tag != Tag::chunk_pass)
        return;
    if (!patches_) return;
    BitReader in(m.body);
    int sender = static_cast<int>(in.read(ctx_->uid_bits));
    // Always consume the flag bit; short-circuiting would leave the reader
    // misaligned and shift every chunk symbol by one bit.
    bool fb = in.read_bit() != 0;
    flag_ = flag_ || fb;
    int cd = C_ + D_ - 1;
    int base2 = 2 * cd + C_;
    int j = patches_->depth[uid_];

    auto up_recv = [&](int r) {
        if (m.tag != Tag::chunk_up) return;
        const auto& kids = patches_->children[uid_];
        if (!std::binary_search(kids.begin(), kids.end(), sender)) return;
        int s = up_chunk(r, j + 1, C_, D_);
        if (s >= 0) add_into(&acc_vec_, s, &in);
    };
    auto down_recv = [&](int r) {
        if (m.tag != Tag::chunk_down || j == 0) return;
        if (sender != patches_->parent[uid_]) return;
        int s = down_chunk(r, j - 1, C_, D_);
        if (s < 0) return;
        int sym = ctx_->field.sym_bits();
        for (int i = chunk_lo(s); i < chunk_hi(s); ++i)
            patch_vec_[i] = static_cast<felem>(in.read(sym));
        ++down_cnt_;
    };

    if (br < cd) {
        up_recv(br);
    } else if (br < 2 * cd) {
        down_recv(br - cd);
    } else if (br < base2) {
        if (m.tag != Tag::chunk_pass) return;
        int p = br - 2 * cd;
        auto& acc = pass_acc_[sender];
        if (p == 0) {
            acc.first.assign(vec_syms_, 0);
            acc.second.assign(C_, false);
        }
        if (acc.second.empty()) return;
        int sym = ctx_->field.sym_bits();
        for (int i = chunk_lo(p); i < chunk_hi(p); ++i)
            acc.first[i] = static_cast<felem>(in.read(sym));
        acc.second[p] = true;
        if (p == C_ - 1) {
            bool full = true;
            for (bool seen : acc.second) full = full && seen;
            if (full) insert_syms(acc.first);
            acc.second.clear();
        }
    } else if (br < base2 + cd) {
        up_recv(br - base2);
    } else if (br < base2 + 2 * cd) {
        down_recv(br - base2 - cd);
    }
}

Message PatchShare::emit_solo(Rng& rng, int br) {
    Message m;
    m.tag = Tag::idle;
    int cyc = br / C_;
    int p = br % C_;
    if (cyc >= cycles_) return m;
    if (p == 0) draw_contribution(rng, &cycle_vec_);
    if (cycle_vec_.empty()) return m;
    m.tag = Tag::solo_chunk;
    if (solo_uid_) m.body.append(static_cast<std::uint64_t>(uid_), ctx_->uid_bits);
    m.body.append_bit(flag_ ? 1 : 0);
    int sym = ctx_->field.sym_bits();
    for (int i = chunk_lo(p); i < chunk_hi(p); ++i)
        m.body.append(cycle_vec_[i], sym);
    return m;
}

void PatchShare::absorb_solo(const Message& m, int br) {
    if (m.tag != Tag::solo_chunk) return;
    BitReader in(m.body);
    int sender = 0;
    if (solo_uid_) sender = static_cast<int>(in.read(ctx_->uid_bits));
    bool fb = in.read_bit() != 0;
    flag_ = flag_ || fb;
    int p = br % C_;
    int sym = ctx_->field.sym_bits();
    if (C_ == 1) {
        std::vector<felem> vec(vec_syms_);
        for (int i = 0; i < vec_syms_; ++i)
            vec[i] = static_cast<felem>(in.read(sym));
        insert_syms(vec);
        return;
    }
    auto& acc = pass_acc_[sender];
    if (p == 0) {
        acc.first.assign(vec_syms_, 0);
        acc.second.assign(C_, false);
    }
    if (acc.second.empty()) return;
    for (int i = chunk_lo(p); i < chunk_hi(p); ++i)
        acc.first[i] = static_cast<felem>(in.read(sym));
    acc.second[p] = true;
    if (p == C_ - 1) {
        bool full = true;
        for (bool seen : acc.second) full = full && seen;
        if (full) insert_syms(acc.first);
        acc.second.clear();
    }
}

void PatchShare::absorb(const std::vector<const Message*>& received) {
    int br = static_cast<int>(round_ % T_);
    for (const Message* m : received) {
        if (m->tag == Tag::idle) {
            if (m->body.bits() >= 1)
                flag_ = flag_ || m->body.read_bit(0) != 0;
            continue;
        }
        if (mode_ == Mode::patched)
            absorb_patched(*m, br);
        else
            absorb_solo(*m, br);
    }
    if (mode_ == Mode::patched) {
        int cd = C_ + D_ - 1;
        int base2 = 2 * cd + C_;
        bool down_end = br == 2 * cd - 1 || br == base2 + 2 * cd - 1;
        if (down_end) {
            have_patch_vec_ = down_cnt_ == C_;
            if (have_patch_vec_) insert_syms(patch_vec_);
        }
    }
    ++round_;
    if (br == T_ - 1) block_end();
}

void PatchShare::block_end() {
    ++blocks_done_;
    if (blocks_done_ % epoch_blocks_ == 0) {
        if (!flag_) {
            terminated_ = true;
            return;
        }
        flag_ = basis_.rank() < ctx_->cfg.k;
    }
}

bool PatchShare::complete() const { return basis_.rank() == ctx_->cfg.k; }

void PatchShare::verify_exact() const {
    for (int i = 0; i < ctx_->cfg.k; ++i) {
        auto p = basis_.decode_payload(i);
        if (!p || ctx_->field.unpack_token(*p, ctx_->cfg.d) != ctx_->tokens[i].bits)
            throw PreconditionViolated("patch_share: payload mismatch at completion");
    }
}

ObservableNode PatchShare::observe() const {
    return {basis_.rank(), terminated_ ? 2 : 1};
}

std::uint64_t PatchShare::suggested_round_cap() const {
    std::uint64_t n = ctx_->cfg.hat_n();
    std::uint64_t blocks = 16 * (n / D_ + ctx_->cfg.k + 2 * epoch_blocks_) + 64;
    return blocks * static_cast<std::uint64_t>(T_) + 1024;
}

void PatchShare::export_stats(std::map<std::string, double>& out) const {
    out["patched"] = mode_ == Mode::patched ? 1 : 0;
    out["diameter"] = D_;
    out["chunks"] = C_;
    out["rank_final"] = basis_.rank();
}

}  // namespace dynnet
