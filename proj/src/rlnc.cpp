#include <cmath>

#include "dynnet/errors.hpp"
#include "dynnet/protocols.hpp"

namespace dynnet {

RlncBroadcast::RlncBroadcast(const TrialContext& ctx, int uid)
    : Node(ctx, uid),
      basis_(ctx.field, ctx.cfg.k, ctx.field.packed_len(ctx.cfg.d)) {
    payload_syms_ = ctx.field.packed_len(ctx.cfg.d);
    int sym = ctx.field.sym_bits();
    std::size_t vec_bits =
        static_cast<std::size_t>(ctx.cfg.k + payload_syms_) * sym;
    if (vec_bits > static_cast<std::size_t>(ctx.cfg.b))
        throw BudgetExceeded("rlnc_broadcast: coded vector does not fit the body");
    double e = std::ceil(ctx.cfg.consts.c_epoch * ctx.cfg.hat_n());
    epoch_ = e < 1 ? 1 : static_cast<int>(e);
    for (int idx : ctx.holdings[uid]) {
        CodedVector v;
        v.coeffs.assign(ctx.cfg.k, 0);
        v.coeffs[idx] = 1;
        v.payload = ctx.field.pack_token(ctx.tokens[idx].bits);
        basis_.insert(v);
    }
    flag_ = basis_.rank() < ctx.cfg.k;
}

Message RlncBroadcast::emit(Rng& rng) {
    Message m;
    m.tag = flag_ ? Tag::coded_vector_flag : Tag::coded_vector;
    if (basis_.rank() > 0) {
        CodedVector v = basis_.random_combination(rng);
        encode_coded_vector(ctx_->field, v, m.body);
    }
    return m;
}

void RlncBroadcast::absorb(const std::vector<const Message*>& received) {
    int k = ctx_->cfg.k;
    int sym = ctx_->field.sym_bits();
    std::size_t vec_bits = static_cast<std::size_t>(k + payload_syms_) * sym;
    for (const Message* m : received) {
        if (m->tag != Tag::coded_vector && m->tag != Tag::coded_vector_flag)
            continue;
        flag_ = flag_ || m->tag == Tag::coded_vector_flag;
        BitReader in(m->body);
        if (in.remaining() >= vec_bits)
            basis_.insert(decode_coded_vector(ctx_->field, in, k, payload_syms_));
    }
    if (++round_in_epoch_ == epoch_) {
        round_in_epoch_ = 0;
        if (!flag_) {
            terminated_ = true;
            return;
        }
        flag_ = basis_.rank() < k;
    }
}

// Rank k means the reduced basis is the identity, so every token decodes.
bool RlncBroadcast::complete() const { return basis_.rank() == ctx_->cfg.k; }

void RlncBroadcast::verify_exact() const {
    for (int i = 0; i < ctx_->cfg.k; ++i) {
        auto p = basis_.decode_payload(i);
        if (!p || ctx_->field.unpack_token(*p, ctx_->cfg.d) != ctx_->tokens[i].bits)
            throw PreconditionViolated("rlnc_broadcast: payload mismatch at completion");
    }
}

ObservableNode RlncBroadcast::observe() const {
    return {basis_.rank(), terminated_ ? 2 : 1};
}

std::uint64_t RlncBroadcast::suggested_round_cap() const {
    return 16ull * (ctx_->cfg.hat_n() + ctx_->cfg.k) + 64;
}

void RlncBroadcast::export_stats(std::map<std::string, double>& out) const {
    out["epoch_rounds"] = epoch_;
    out["rank_final"] = basis_.rank();
}

}  // namespace dynnet
