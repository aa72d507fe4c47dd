#include "dynnet/errors.hpp"
#include "dynnet/gather.hpp"
#include "dynnet/patch.hpp"
#include "dynnet/protocols.hpp"
#include "dynnet/simulator.hpp"

namespace dynnet {

std::unique_ptr<Node> make_node(const TrialContext& ctx, int uid) {
    const RunConfig& cfg = ctx.cfg;
    switch (cfg.protocol) {
        case ProtocolKind::flood_forward:
            return std::make_unique<FloodForward>(ctx, uid);
        case ProtocolKind::rlnc_broadcast:
            return std::make_unique<RlncBroadcast>(ctx, uid);
        case ProtocolKind::random_forward:
            return std::make_unique<GatherBroadcast>(ctx, uid,
                                                     GatherMode::random_only, 0);
        case ProtocolKind::greedy_forward:
            return std::make_unique<GatherBroadcast>(ctx, uid, GatherMode::greedy,
                                                     0);
        case ProtocolKind::priority_forward:
            return std::make_unique<GatherBroadcast>(ctx, uid,
                                                     GatherMode::priority, 0);
        case ProtocolKind::pipeline_flood:
            return std::make_unique<PipelineFlood>(ctx, uid);
        case ProtocolKind::patch_share:
            return std::make_unique<PatchShare>(ctx, uid);
        case ProtocolKind::tstable: {
            TStableChoice ch = choose_tstable(cfg);
            int T = cfg.adversary.T < 1 ? 1 : static_cast<int>(cfg.adversary.T);
            switch (ch.variant) {
                case TStableChoice::Variant::greedy:
                    return std::make_unique<GatherBroadcast>(
                        ctx, uid, GatherMode::greedy, 0);
                case TStableChoice::Variant::coded:
                    return std::make_unique<GatherBroadcast>(
                        ctx, uid, GatherMode::greedy, T);
                case TStableChoice::Variant::pipeline:
                    break;
            }
            return std::make_unique<PipelineFlood>(ctx, uid);
        }
    }
    throw ConfigError("unknown protocol kind");
}

}  // namespace dynnet
