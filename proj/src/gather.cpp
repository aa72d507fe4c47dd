#include <algorithm>
#include <cmath>

#include "dynnet/errors.hpp"
#include "dynnet/gather.hpp"

namespace dynnet {

BatchGeometry batch_geometry(const FieldSpec& f, int total_syms, int token_bits) {
    BatchGeometry g;
    g.m_max = total_syms / 2;
    g.blk_syms = total_syms - g.m_max;
    g.blk_bits = g.blk_syms * f.pack_bits();
    // The count field is sized before per_block is known; an upper bound on
    // the count keeps the layout a pure function of (total_syms, token_bits).
    g.cnt_bits = bit_width_for(static_cast<std::uint64_t>(
        g.blk_bits / (token_bits < 1 ? 1 : token_bits)));
    g.per_block = (g.blk_bits - g.cnt_bits) / token_bits;
    if (g.per_block < 0) g.per_block = 0;
    g.batch_cap = g.m_max * g.per_block;
    return g;
}

namespace {

int gather_epoch(const RunConfig& cfg) {
    double e = std::ceil(cfg.consts.c_epoch * cfg.hat_n());
    return e < 1 ? 1 : static_cast<int>(e);
}

std::uint64_t mask_of(int bits) {
    return bits >= 64 ? ~0ull : ((1ull << bits) - 1);
}

}  // namespace

GatherBroadcast::GatherBroadcast(const TrialContext& ctx, int uid,
                                 GatherMode mode, int transport_T)
    : Node(ctx, uid),
      mode_(mode),
      transport_T_(transport_T),
      codec_(ctx),
      stage_basis_(ctx.field, 0, 0) {
    const RunConfig& cfg = ctx.cfg;
    epoch_ = gather_epoch(cfg);
    int tok = codec_.token_bits();
    fwd_cap_ = cfg.b / tok;
    if (fwd_cap_ < 1)
        throw BudgetExceeded("gather: body cannot hold one token");
    cntw_ = bit_width_for(static_cast<std::uint64_t>(cfg.k));
    if (cntw_ + ctx.uid_bits + 1 > cfg.b)
        throw BudgetExceeded("gather: max-flood fields do not fit the body");

    if (mode_ != GatherMode::random_only) {
        int sym = ctx.field.sym_bits();
        int total_syms;
        if (transport_T_ > 0) {
            chunk_syms_ = (cfg.b - ctx.uid_bits) / sym;
            if (chunk_syms_ < 1)
                throw BudgetExceeded("gather: chunk cannot hold one symbol");
            total_syms = transport_T_ * chunk_syms_;
        } else {
            total_syms = cfg.b / sym;
        }
        geo_ = batch_geometry(ctx.field, total_syms, tok);
        if (!geo_.feasible())
            throw BudgetExceeded("gather: body too small for coded batches");
        int descw = 1 + bit_width_for(static_cast<std::uint64_t>(geo_.m_max)) +
                    bit_width_for(static_cast<std::uint64_t>(geo_.batch_cap));
        if (descw > cfg.b)
            throw BudgetExceeded("gather: descriptor does not fit the body");
    }
    if (mode_ == GatherMode::priority) {
        prio_bits_ = 3 * std::max(1, ceil_log2(static_cast<std::uint64_t>(cfg.hat_n())));
        if (prio_bits_ > 40) prio_bits_ = 40;
        int max_blocks = geo_.per_block > 0
                             ? (cfg.k + geo_.per_block - 1) / geo_.per_block
                             : 1;
        seqw_ = bit_width_for(static_cast<std::uint64_t>(
            max_blocks > 0 ? max_blocks - 1 : 0));
        triple_bits_ = prio_bits_ + ctx.uid_bits + seqw_;
        if (triple_bits_ > 62)
            throw ConfigError("gather: priority triple exceeds 62 bits");
        triples_per_msg_ = (cfg.b - 1) / triple_bits_;
        if (triples_per_msg_ < 1)
            throw BudgetExceeded("gather: body cannot hold one priority triple");
        subepochs_ = (geo_.m_max + triples_per_msg_ - 1) / triples_per_msg_;
    }

    for (int idx : ctx.holdings[uid]) store_.add_known(ctx.tokens[idx]);
    enter_fwd();
}

void GatherBroadcast::enter_fwd() {
    state_ = State::fwd;
    rphase_ = 0;
}

void GatherBroadcast::enter_maxf() {
    state_ = State::maxf;
    rphase_ = 0;
    my_count_ = static_cast<int>(store_.undelivered.size());
    best_count_ = my_count_;
    best_uid_ = uid_;
    retry_flood_ = retry_;
}

void GatherBroadcast::enter_desc() {
    state_ = State::desc;
    rphase_ = 0;
    have_desc_ = false;
    desc_m_ = 0;
    desc_items_ = 0;
    src_blocks_.clear();
    if (uid_ != identified_uid_) return;
    std::vector<TokenId> batch;
    for (const TokenId& id : store_.undelivered) {
        if (static_cast<int>(batch.size()) == geo_.batch_cap) break;
        batch.push_back(id);
    }
    for (std::size_t i = 0; i < batch.size(); i += geo_.per_block) {
        std::size_t e = std::min(batch.size(), i + geo_.per_block);
        src_blocks_.emplace_back(batch.begin() + i, batch.begin() + e);
    }
    desc_m_ = static_cast<int>(src_blocks_.size());
    desc_items_ = static_cast<int>(batch.size());
    have_desc_ = true;
}

void GatherBroadcast::enter_stage(int m) {
    stage_m_ = m;
    stage_basis_ = KnowledgeBasis(ctx_->field, m, geo_.blk_syms);
    if (!priority_active_ && uid_ == identified_uid_) {
        for (int j = 0; j < static_cast<int>(src_blocks_.size()); ++j) {
            CodedVector v;
            v.coeffs.assign(m, 0);
            v.coeffs[j] = 1;
            v.payload = ctx_->field.pack_token(block_payload(src_blocks_[j]));
            stage_basis_.insert(v);
        }
    }
    double blocks = std::ceil(ctx_->cfg.consts.c_bcast * (ctx_->cfg.hat_n() + m));
    if (transport_T_ > 0) {
        stage_len_ = static_cast<std::uint64_t>(blocks) * transport_T_;
        state_ = State::align;
    } else {
        stage_len_ = static_cast<std::uint64_t>(blocks);
        state_ = State::bcast;
    }
    rphase_ = 0;
    chunk_acc_.clear();
    out_vec_.clear();
}

void GatherBroadcast::enter_p_index() {
    state_ = State::p_index;
    rphase_ = 0;
    subepoch_no_ = 0;
    heard_.clear();
    committed_.clear();
    retry_seen_iter_ = false;
    retry_flood_ = retry_;
    pending_draw_ = true;
    my_blocks_.clear();
    std::vector<TokenId> mine(store_.undelivered.begin(), store_.undelivered.end());
    for (std::size_t i = 0; i < mine.size(); i += geo_.per_block) {
        std::size_t e = std::min(mine.size(), i + geo_.per_block);
        my_blocks_.emplace_back(mine.begin() + i, mine.begin() + e);
    }
}

BitVec GatherBroadcast::block_payload(const std::vector<TokenId>& ids) const {
    BitVec out;
    out.append(ids.size(), geo_.cnt_bits);
    for (const TokenId& id : ids)
        codec_.append(out, Token{id, store_.known.at(id)});
    while (out.bits() + 64 <= static_cast<std::size_t>(geo_.blk_bits))
        out.append(0, 64);
    if (out.bits() < static_cast<std::size_t>(geo_.blk_bits))
        out.append(0, static_cast<int>(geo_.blk_bits - out.bits()));
    return out;
}

void GatherBroadcast::decode_block(const std::vector<felem>& syms,
                                   std::vector<Token>* out) const {
    BitVec bits = ctx_->field.unpack_token(syms, geo_.blk_bits);
    BitReader in(bits);
    int cnt = static_cast<int>(in.read(geo_.cnt_bits));
    if (cnt > geo_.per_block)
        throw PreconditionViolated("gather: decoded block count out of range");
    for (int i = 0; i < cnt; ++i) out->push_back(codec_.read(in));
}

Message GatherBroadcast::emit(Rng& rng) {
    Message m;
    switch (state_) {
        case State::fwd: {
            m.tag = Tag::forward_tokens;
            std::vector<TokenId> pool(store_.undelivered.begin(),
                                      store_.undelivered.end());
            int s = std::min<int>(fwd_cap_, static_cast<int>(pool.size()));
            for (int i = 0; i < s; ++i) {
                std::size_t j = i + rng.next_below(pool.size() - i);
                std::swap(pool[i], pool[j]);
                codec_.append(m.body, Token{pool[i], store_.known.at(pool[i])});
            }
            break;
        }
        case State::maxf:
            m.tag = Tag::max_flood;
            m.body.append(static_cast<std::uint64_t>(best_count_), cntw_);
            m.body.append(static_cast<std::uint64_t>(best_uid_), ctx_->uid_bits);
            m.body.append_bit(retry_flood_ ? 1 : 0);
            break;
        case State::desc:
            m.tag = Tag::descriptor;
            m.body.append_bit(have_desc_ ? 1 : 0);
            if (have_desc_) {
                m.body.append(static_cast<std::uint64_t>(desc_m_),
                              bit_width_for(static_cast<std::uint64_t>(geo_.m_max)));
                m.body.append(static_cast<std::uint64_t>(desc_items_),
                              bit_width_for(static_cast<std::uint64_t>(geo_.batch_cap)));
            }
            break;
        case State::p_index: {
            if (pending_draw_) {
                pending_draw_ = false;
                for (int seq = 0; seq < static_cast<int>(my_blocks_.size()); ++seq) {
                    std::uint64_t prio = rng.next_bits(prio_bits_);
                    std::uint64_t key = (prio << (ctx_->uid_bits + seqw_)) |
                                        (static_cast<std::uint64_t>(uid_) << seqw_) |
                                        static_cast<std::uint64_t>(seq);
                    heard_.insert(key);
                }
            }
            m.tag = Tag::index_triples;
            m.body.append_bit(retry_flood_ ? 1 : 0);
            int sent = 0;
            for (std::uint64_t key : heard_) {
                if (sent == triples_per_msg_) break;
                if (committed_.count(key)) continue;
                m.body.append(key, triple_bits_);
                ++sent;
            }
            break;
        }
        case State::bcast:
            return emit_stage(rng);
        case State::align:
        case State::done:
            m.tag = Tag::idle;
            break;
    }
    return m;
}

Message GatherBroadcast::emit_stage(Rng& rng) {
    Message m;
    m.tag = Tag::idle;
    if (transport_T_ == 0) {
        if (stage_basis_.rank() == 0) return m;
        CodedVector v = stage_basis_.random_combination(rng);
        m.tag = Tag::coded_vector;
        encode_coded_vector(ctx_->field, v, m.body);
        return m;
    }
    int C = chunks_for(stage_m_);
    int ncyc = transport_T_ / C;
    int p = static_cast<int>(rphase_ % transport_T_);
    int cyc = p / C;
    int within = p % C;
    if (cyc >= ncyc) return m;
    if (within == 0) {
        out_vec_.clear();
        if (stage_basis_.rank() > 0) {
            CodedVector v = stage_basis_.random_combination(rng);
            out_vec_.reserve(vec_syms(stage_m_));
            out_vec_.insert(out_vec_.end(), v.coeffs.begin(), v.coeffs.end());
            out_vec_.insert(out_vec_.end(), v.payload.begin(), v.payload.end());
        }
    }
    if (out_vec_.empty()) return m;
    m.tag = Tag::solo_chunk;
    m.body.append(static_cast<std::uint64_t>(uid_), ctx_->uid_bits);
    int lo = within * chunk_syms_;
    int hi = std::min(vec_syms(stage_m_), lo + chunk_syms_);
    for (int i = lo; i < hi; ++i)
        m.body.append(out_vec_[i], ctx_->field.sym_bits());
    return m;
}

void GatherBroadcast::absorb_stage(const Message& m) {
    if (transport_T_ == 0) {
        int sym = ctx_->field.sym_bits();
        std::size_t want =
            static_cast<std::size_t>(vec_syms(stage_m_)) * sym;
        if (m.tag != Tag::coded_vector || m.body.bits() < want) return;
        BitReader in(m.body);
        stage_basis_.insert(
            decode_coded_vector(ctx_->field, in, stage_m_, geo_.blk_syms));
        return;
    }
    if (m.tag != Tag::solo_chunk) return;
    int C = chunks_for(stage_m_);
    int p = static_cast<int>(rphase_ % transport_T_);
    int within = p % C;
    int lo = within * chunk_syms_;
    int hi = std::min(vec_syms(stage_m_), lo + chunk_syms_);
    int sym = ctx_->field.sym_bits();
    std::size_t want = static_cast<std::size_t>(ctx_->uid_bits) +
                       static_cast<std::size_t>(hi - lo) * sym;
    if (m.body.bits() != want) return;
    BitReader in(m.body);
    int sender = static_cast<int>(in.read(ctx_->uid_bits));
    auto& acc = chunk_acc_[sender];
    if (within == 0) {
        acc.first.assign(vec_syms(stage_m_), 0);
        acc.second.assign(C, false);
    }
    if (acc.second.empty()) return;  // joined mid-cycle, wait for the next one
    for (int i = lo; i < hi; ++i)
        acc.first[i] = static_cast<felem>(in.read(sym));
    acc.second[within] = true;
    if (within == C - 1) {
        bool full = true;
        for (bool seen : acc.second) full = full && seen;
        if (full) {
            CodedVector v;
            v.coeffs.assign(acc.first.begin(), acc.first.begin() + stage_m_);
            v.payload.assign(acc.first.begin() + stage_m_, acc.first.end());
            stage_basis_.insert(v);
        }
        acc.second.clear();
    }
}

void GatherBroadcast::absorb(const std::vector<const Message*>& received) {
    for (const Message* m : received) {
        switch (state_) {
            case State::fwd:
                if (m->tag == Tag::forward_tokens) {
                    BitReader in(m->body);
                    while (in.remaining() >=
                           static_cast<std::size_t>(codec_.token_bits()))
                        store_.add_known(codec_.read(in));
                }
                break;
            case State::maxf:
                if (m->tag == Tag::max_flood) {
                    BitReader in(m->body);
                    int c = static_cast<int>(in.read(cntw_));
                    int u = static_cast<int>(in.read(ctx_->uid_bits));
                    bool rb = in.read_bit() != 0;
                    retry_flood_ = retry_flood_ || rb;
                    if (c > best_count_ || (c == best_count_ && u < best_uid_)) {
                        best_count_ = c;
                        best_uid_ = u;
                    }
                }
                break;
            case State::desc:
                if (m->tag == Tag::descriptor && m->body.bits() > 1) {
                    BitReader in(m->body);
                    if (in.read_bit() != 0 && !have_desc_) {
                        desc_m_ = static_cast<int>(in.read(
                            bit_width_for(static_cast<std::uint64_t>(geo_.m_max))));
                        desc_items_ = static_cast<int>(in.read(bit_width_for(
                            static_cast<std::uint64_t>(geo_.batch_cap))));
                        have_desc_ = true;
                    }
                }
                break;
            case State::p_index:
                if (m->tag == Tag::index_triples) {
                    BitReader in(m->body);
                    // Consume the retry bit before the triples even when the
                    // flag is already set, or every triple parses shifted.
                    bool rb = in.read_bit() != 0;
                    retry_flood_ = retry_flood_ || rb;
                    while (in.remaining() >=
                           static_cast<std::size_t>(triple_bits_))
                        heard_.insert(in.read(triple_bits_));
                }
                break;
            case State::bcast:
                absorb_stage(*m);
                break;
            case State::align:
            case State::done:
                break;
        }
    }

    ++round_;
    ++rphase_;
    switch (state_) {
        case State::fwd:
            if (rphase_ == epoch_) enter_maxf();
            break;
        case State::maxf:
            if (rphase_ == epoch_) maxf_epoch_end();
            break;
        case State::desc:
            if (rphase_ == epoch_) {
                if (!have_desc_)
                    throw PreconditionViolated("gather: descriptor flood failed");
                if (desc_m_ == 0)
                    enter_fwd();
                else
                    enter_stage(desc_m_);
            }
            break;
        case State::align:
            if (round_ % transport_T_ == 0) {
                state_ = State::bcast;
                rphase_ = 0;
            }
            break;
        case State::bcast:
            if (static_cast<std::uint64_t>(rphase_) == stage_len_) {
                finish_stage();
                if (state_ != State::done)
                    priority_active_ ? enter_p_index() : enter_fwd();
            }
            break;
        case State::p_index:
            if (rphase_ == epoch_) index_subepoch_end();
            break;
        case State::done:
            break;
    }
}

void GatherBroadcast::maxf_epoch_end() {
    bool had_retry = retry_flood_;
    if (had_retry) {
        for (const TokenId& id : last_batch_) store_.unmark(id);
        last_batch_.clear();
        retry_ = false;
        retry_flood_ = false;
    }
    if (mode_ == GatherMode::random_only) {
        state_ = State::done;
        return;
    }
    if (best_count_ == 0) {
        if (had_retry)
            enter_fwd();
        else
            state_ = State::done;
        return;
    }
    if (mode_ == GatherMode::priority && 2 * best_count_ < geo_.batch_cap) {
        priority_active_ = true;
        enter_p_index();
        return;
    }
    identified_uid_ = best_uid_;
    ++super_epochs_;
    enter_desc();
}

void GatherBroadcast::index_subepoch_end() {
    int quota = triples_per_msg_;
    for (std::uint64_t key : heard_) {
        if (quota == 0) break;
        if (committed_.insert(key).second) --quota;
    }
    if (subepoch_no_ == 0) {
        retry_seen_iter_ = retry_flood_;
        if (retry_flood_) {
            for (const TokenId& id : last_batch_) store_.unmark(id);
            last_batch_.clear();
            retry_ = false;
            retry_flood_ = false;
        }
    }
    rphase_ = 0;
    if (++subepoch_no_ == subepochs_) finish_index();
}

void GatherBroadcast::finish_index() {
    int m = std::min<int>(geo_.m_max, static_cast<int>(committed_.size()));
    if (m == 0) {
        if (retry_seen_iter_)
            enter_p_index();
        else
            state_ = State::done;
        return;
    }
    ++super_epochs_;
    stage_m_ = m;
    stage_basis_ = KnowledgeBasis(ctx_->field, m, geo_.blk_syms);
    int j = 0;
    for (std::uint64_t key : committed_) {
        if (j == m) break;
        int u = static_cast<int>((key >> seqw_) & mask_of(ctx_->uid_bits));
        if (u == uid_) {
            int seq = static_cast<int>(key & mask_of(seqw_));
            CodedVector v;
            v.coeffs.assign(m, 0);
            v.coeffs[j] = 1;
            v.payload = ctx_->field.pack_token(
                block_payload(my_blocks_.at(static_cast<std::size_t>(seq))));
            stage_basis_.insert(v);
        }
        ++j;
    }
    double blocks =
        std::ceil(ctx_->cfg.consts.c_bcast * (ctx_->cfg.hat_n() + m));
    if (transport_T_ > 0) {
        stage_len_ = static_cast<std::uint64_t>(blocks) * transport_T_;
        state_ = State::align;
    } else {
        stage_len_ = static_cast<std::uint64_t>(blocks);
        state_ = State::bcast;
    }
    rphase_ = 0;
    chunk_acc_.clear();
    out_vec_.clear();
}

void GatherBroadcast::finish_stage() {
    std::vector<Token> batch;
    bool all = true;
    for (int j = 0; j < stage_m_ && all; ++j) {
        auto syms = stage_basis_.decode_payload(j);
        if (!syms)
            all = false;
        else
            decode_block(*syms, &batch);
    }
    if (all) {
        last_batch_.clear();
        for (const Token& t : batch) {
            store_.add_known(t);
            store_.mark_delivered(t.id);
            last_batch_.push_back(t.id);
        }
        retry_ = false;
        ++batches_ok_;
    } else {
        retry_ = true;
        ++retries_;
        last_batch_.clear();
    }
}

bool GatherBroadcast::complete() const {
    return store_.known.size() == static_cast<std::size_t>(ctx_->cfg.k);
}

void GatherBroadcast::verify_exact() const {
    for (const Token& t : ctx_->tokens) {
        auto it = store_.known.find(t.id);
        if (it == store_.known.end() || it->second != t.bits)
            throw PreconditionViolated("gather: payload mismatch at completion");
    }
}

ObservableNode GatherBroadcast::observe() const {
    return {static_cast<int>(store_.known.size()), static_cast<int>(state_) + 1};
}

std::uint64_t GatherBroadcast::suggested_round_cap() const {
    std::uint64_t e = static_cast<std::uint64_t>(epoch_);
    if (mode_ == GatherMode::random_only) return 2 * e + 8;
    std::uint64_t per_batch = static_cast<std::uint64_t>(std::ceil(
        ctx_->cfg.consts.c_bcast * (ctx_->cfg.hat_n() + geo_.m_max)));
    if (transport_T_ > 0) per_batch = (per_batch + 1) * transport_T_;
    std::uint64_t per_se = 3 * e + per_batch;
    if (mode_ == GatherMode::priority)
        per_se += static_cast<std::uint64_t>(subepochs_) * e;
    std::uint64_t ses =
        geo_.batch_cap > 0
            ? static_cast<std::uint64_t>(ctx_->cfg.k / geo_.batch_cap) + 3
            : 3;
    return 16 * ses * per_se + 512;
}

void GatherBroadcast::export_stats(std::map<std::string, double>& out) const {
    out["identified_uid"] = best_uid_;
    out["identified_count"] = best_count_ < 0 ? 0 : best_count_;
    out["epoch_rounds"] = epoch_;
    out["fwd_cap"] = fwd_cap_;
    out["known_final"] = static_cast<double>(store_.known.size());
    if (mode_ != GatherMode::random_only) {
        out["batch_cap"] = geo_.batch_cap;
        out["m_max"] = geo_.m_max;
        out["per_block"] = geo_.per_block;
        out["super_epochs"] = super_epochs_;
        out["batches_ok"] = batches_ok_;
        out["retries"] = retries_;
    }
}

namespace {

// Mirrors the GatherBroadcast constructor checks without building a node.
bool gather_fits(const RunConfig& cfg, int uid_bits, int tok, int transport_T,
                 BatchGeometry* geo_out) {
    FieldSpec f(cfg.q);
    int sym = f.sym_bits();
    if (cfg.b / tok < 1) return false;
    int cntw = bit_width_for(static_cast<std::uint64_t>(cfg.k));
    if (cntw + uid_bits + 1 > cfg.b) return false;
    int total_syms;
    if (transport_T > 0) {
        int chunk = (cfg.b - uid_bits) / sym;
        if (chunk < 1) return false;
        total_syms = transport_T * chunk;
    } else {
        total_syms = cfg.b / sym;
    }
    BatchGeometry g = batch_geometry(f, total_syms, tok);
    if (!g.feasible()) return false;
    int descw = 1 + bit_width_for(static_cast<std::uint64_t>(g.m_max)) +
                bit_width_for(static_cast<std::uint64_t>(g.batch_cap));
    if (descw > cfg.b) return false;
    if (geo_out) *geo_out = g;
    return true;
}

}  // namespace

TStableChoice choose_tstable(const RunConfig& cfg) {
    TStableChoice ch;
    int T = cfg.adversary.T < 1 ? 1 : static_cast<int>(cfg.adversary.T);
    int uid_bits = 0, seq_bits = 0;
    TrialContext::id_widths(cfg, &uid_bits, &seq_bits);
    int tok = uid_bits + seq_bits + cfg.d;

    if (cfg.b / tok >= 1) {
        std::uint64_t ep = 0;
        int quota = 0;
        PipelineFlood::geometry(cfg, tok, &ep, &quota);
        if (quota > 0) ch.cost_pipeline = double(ep) / double(quota);
    }
    bool have_pipeline = ch.cost_pipeline > 0;

    if (T == 1) {
        ch.greedy_feasible = gather_fits(cfg, uid_bits, tok, 0, nullptr);
        ch.variant = ch.greedy_feasible ? TStableChoice::Variant::greedy
                                        : TStableChoice::Variant::pipeline;
        return ch;
    }

    BatchGeometry g;
    ch.coded_feasible = gather_fits(cfg, uid_bits, tok, T, &g);
    if (ch.coded_feasible) {
        double e = std::ceil(cfg.consts.c_epoch * cfg.hat_n());
        if (e < 1) e = 1;
        double stage_blocks =
            std::ceil(cfg.consts.c_bcast * (cfg.hat_n() + g.m_max));
        ch.cost_coded = (3 * e + (stage_blocks + 1) * T) / g.batch_cap;
    }
    if (ch.coded_feasible &&
        (!have_pipeline || ch.cost_coded < ch.cost_pipeline))
        ch.variant = TStableChoice::Variant::coded;
    else
        ch.variant = TStableChoice::Variant::pipeline;
    return ch;
}

}  // namespace dynnet
