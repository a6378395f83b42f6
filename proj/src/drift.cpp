#include "dali/drift.hpp"

#include <cmath>

namespace dali::agent {

const char* to_string(DriftKind k) {
    switch (k) {
        case DriftKind::AbruptDrop: return "AbruptDrop";
        case DriftKind::SustainedDecline: return "SustainedDecline";
        case DriftKind::Deadlock: return "Deadlock";
    }
    return "?";
}

void TriggerConfig::validate() const {
    if (abrupt_drop_threshold <= 0 || sustained_decline_threshold <= 0 ||
        sustained_epochs <= 0 || user_stagnation_threshold <= 0 ||
        loss_jump_threshold <= 0 || loss_drop_threshold <= 0 || user_rollback_threshold <= 0)
        throw Error("trigger thresholds must be positive");
}

std::optional<DriftEvent> detect_drift(std::span<const repo::PerfRecord> log,
                                       const TriggerConfig& cfg) {
    if (log.empty()) throw Error("detect_drift: empty perf log");
    if (log.size() < 2) return std::nullopt;

    const auto& prev = log[log.size() - 2];
    const auto& cur = log[log.size() - 1];
    const double dg = cur.group_ndcg10 - prev.group_ndcg10;
    const double du = cur.user_ndcg10 - prev.user_ndcg10;
    const double dl = cur.loss - prev.loss;

    DriftEvent ev;
    ev.epoch = cur.epoch;
    ev.group_delta = dg;
    ev.user_delta = du;
    ev.loss_delta = dl;

    const bool group_dropped = dg < -cfg.abrupt_drop_threshold;
    const bool user_stagnant = std::abs(du) < cfg.user_stagnation_threshold;
    const bool loss_anomaly =
        dl < -cfg.loss_drop_threshold || std::abs(dl) > cfg.loss_jump_threshold;

    if (group_dropped && user_stagnant && loss_anomaly) {
        ev.kind = DriftKind::Deadlock;
        ev.evidence = {prev, cur};
        return ev;
    }
    if (std::abs(dg) > cfg.abrupt_drop_threshold) {
        ev.kind = DriftKind::AbruptDrop;
        ev.evidence = {prev, cur};
        return ev;
    }
    if ((int)log.size() >= cfg.sustained_epochs + 1) {
        bool sustained = true;
        const std::size_t last = log.size() - 1;
        for (int k = 0; k < cfg.sustained_epochs; ++k) {
            const double step = log[last - k].group_ndcg10 - log[last - k - 1].group_ndcg10;
            if (!(step < -cfg.sustained_decline_threshold)) {
                sustained = false;
                break;
            }
        }
        if (sustained) {
            ev.kind = DriftKind::SustainedDecline;
            ev.evidence.assign(log.end() - (cfg.sustained_epochs + 1), log.end());
            return ev;
        }
    }
    return std::nullopt;
}

}  // namespace dali::agent
