#include <algorithm>
#include <cmath>

#include "dynnet/errors.hpp"
#include "dynnet/protocols.hpp"

namespace dynnet {

namespace {

int epoch_rounds(const RunConfig& cfg) {
    double e = std::ceil(cfg.consts.c_epoch * cfg.hat_n());
    return e < 1 ? 1 : static_cast<int>(e);
}

}  // namespace

FloodForward::FloodForward(const TrialContext& ctx, int uid)
    : Node(ctx, uid), codec_(ctx) {
    cap_ = ctx.cfg.b / codec_.token_bits();
    if (cap_ < 1)
        throw BudgetExceeded("flood_forward: body cannot hold one token");
    epoch_ = epoch_rounds(ctx.cfg);
    for (int idx : ctx.holdings[uid]) store_.add_known(ctx.tokens[idx]);
    flag_ = !store_.undelivered.empty();
}

Message FloodForward::emit(Rng&) {
    Message m;
    // The remainder flag rides the tag so the body can hold exactly
    // floor(b / token_bits) tokens even when that fills the budget.
    m.tag = flag_ ? Tag::flood_tokens_flag : Tag::flood_tokens;
    int sent = 0;
    for (const TokenId& id : store_.undelivered) {
        if (sent == cap_) break;
        codec_.append(m.body, Token{id, store_.known.at(id)});
        ++sent;
    }
    return m;
}

void FloodForward::absorb(const std::vector<const Message*>& received) {
    for (const Message* m : received) {
        if (m->tag != Tag::flood_tokens && m->tag != Tag::flood_tokens_flag) continue;
        flag_ = flag_ || m->tag == Tag::flood_tokens_flag;
        BitReader in(m->body);
        while (in.remaining() >= static_cast<std::size_t>(codec_.token_bits()))
            store_.add_known(codec_.read(in));
    }
    if (++round_in_epoch_ == epoch_) {
        round_in_epoch_ = 0;
        if (!flag_) {
            terminated_ = true;
            return;
        }
        int quota = cap_;
        while (quota-- > 0 && !store_.undelivered.empty())
            store_.undelivered.erase(store_.undelivered.begin());
        flag_ = !store_.undelivered.empty();
    }
}

bool FloodForward::complete() const {
    return store_.known.size() == static_cast<std::size_t>(ctx_->cfg.k);
}

void FloodForward::verify_exact() const {
    for (const Token& t : ctx_->tokens) {
        auto it = store_.known.find(t.id);
        if (it == store_.known.end() || it->second != t.bits)
            throw PreconditionViolated("flood_forward: payload mismatch at completion");
    }
}

ObservableNode FloodForward::observe() const {
    return {static_cast<int>(store_.known.size()), terminated_ ? 2 : 1};
}

std::uint64_t FloodForward::suggested_round_cap() const {
    std::uint64_t epochs = (ctx_->cfg.k + cap_ - 1) / cap_ + 2;
    return 4 * epochs * static_cast<std::uint64_t>(epoch_) + 64;
}

void FloodForward::export_stats(std::map<std::string, double>& out) const {
    out["tokens_per_message"] = cap_;
    out["epoch_rounds"] = epoch_;
    out["known_final"] = static_cast<double>(store_.known.size());
}

PipelineFlood::PipelineFlood(const TrialContext& ctx, int uid)
    : Node(ctx, uid), codec_(ctx) {
    cap_ = ctx.cfg.b / codec_.token_bits();
    if (cap_ < 1)
        throw BudgetExceeded("pipeline_flood: body cannot hold one token");
    T_ = ctx.cfg.adversary.T < 1 ? 1 : static_cast<int>(ctx.cfg.adversary.T);
    geometry(ctx.cfg, codec_.token_bits(), &epoch_, &mark_quota_);
    for (int idx : ctx.holdings[uid]) store_.add_known(ctx.tokens[idx]);
    flag_ = !store_.undelivered.empty();
}

void PipelineFlood::geometry(const RunConfig& cfg, int token_bits,
                             std::uint64_t* out_epoch, int* out_quota) {
    int cap = cfg.b / token_bits;
    int T = cfg.adversary.T < 1 ? 1 : cfg.adversary.T;
    int n = cfg.hat_n();
    double blocks = std::ceil(cfg.consts.c_pipe * cfg.consts.c_epoch * n / T);
    std::uint64_t epoch = static_cast<std::uint64_t>(blocks < 1 ? 1 : blocks) *
                          static_cast<std::uint64_t>(T);
    // Token train j advances at least T-j+1 hops per stable block, so the j
    // smallest tokens provably reach everyone within the epoch iff
    // ceil((n-1)/(T-j+1)) blocks fit.
    int jmax = 1;
    for (int j = 1; j <= T; ++j) {
        std::uint64_t need =
            n <= 1 ? 0
                   : static_cast<std::uint64_t>((n - 2) / (T - j + 1) + 1) *
                         static_cast<std::uint64_t>(T);
        if (need <= epoch) jmax = j;
    }
    *out_epoch = epoch;
    *out_quota = cap * jmax;
}

Message PipelineFlood::emit(Rng&) {
    Message m;
    m.tag = flag_ ? Tag::pipeline_tokens_flag : Tag::pipeline_tokens;
    // Only the epoch's scheduled tokens (the quota smallest undelivered) may
    // travel; anything beyond the quota waits for a later epoch so the
    // marking schedule stays the sole clock. Each stable block every holder
    // streams the schedule smallest-first, one body at a time; restarting the
    // stream when the topology changes is what lets train j advance T - j + 1
    // hops per block.
    int sched = std::min<int>(mark_quota_,
                              static_cast<int>(store_.undelivered.size()));
    int sent = 0, seen = 0;
    for (const TokenId& id : store_.undelivered) {
        if (seen++ == sched || sent == cap_) break;
        if (sent_block_.count(id)) continue;
        codec_.append(m.body, Token{id, store_.known.at(id)});
        sent_block_.insert(id);
        ++sent;
    }
    if (sent == 0) {
        // Schedule fully streamed this block; keep its head circulating.
        for (const TokenId& id : store_.undelivered) {
            if (sent == cap_ || sent == sched) break;
            codec_.append(m.body, Token{id, store_.known.at(id)});
            ++sent;
        }
    }
    return m;
}

void PipelineFlood::absorb(const std::vector<const Message*>& received) {
    for (const Message* m : received) {
        if (m->tag != Tag::pipeline_tokens && m->tag != Tag::pipeline_tokens_flag)
            continue;
        flag_ = flag_ || m->tag == Tag::pipeline_tokens_flag;
        BitReader in(m->body);
        while (in.remaining() >= static_cast<std::size_t>(codec_.token_bits()))
            store_.add_known(codec_.read(in));
    }
    ++round_in_epoch_;
    if (round_in_epoch_ % static_cast<std::uint64_t>(T_) == 0)
        sent_block_.clear();
    if (round_in_epoch_ == epoch_) {
        round_in_epoch_ = 0;
        if (!flag_) {
            terminated_ = true;
            return;
        }
        int quota = mark_quota_;
        while (quota-- > 0 && !store_.undelivered.empty())
            store_.undelivered.erase(store_.undelivered.begin());
        flag_ = !store_.undelivered.empty();
    }
}

bool PipelineFlood::complete() const {
    return store_.known.size() == static_cast<std::size_t>(ctx_->cfg.k);
}

void PipelineFlood::verify_exact() const {
    for (const Token& t : ctx_->tokens) {
        auto it = store_.known.find(t.id);
        if (it == store_.known.end() || it->second != t.bits)
            throw PreconditionViolated("pipeline_flood: payload mismatch at completion");
    }
}

ObservableNode PipelineFlood::observe() const {
    return {static_cast<int>(store_.known.size()), terminated_ ? 2 : 1};
}

std::uint64_t PipelineFlood::suggested_round_cap() const {
    std::uint64_t epochs =
        (ctx_->cfg.k + mark_quota_ - 1) / (mark_quota_ < 1 ? 1 : mark_quota_) + 2;
    return 4 * epochs * epoch_ + 64;
}

void PipelineFlood::export_stats(std::map<std::string, double>& out) const {
    out["tokens_per_message"] = cap_;
    out["epoch_rounds"] = static_cast<double>(epoch_);
    out["mark_quota"] = mark_quota_;
    out["known_final"] = static_cast<double>(store_.known.size());
}

}  // namespace dynnet
