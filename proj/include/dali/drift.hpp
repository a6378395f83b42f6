#pragma once

#include <optional>
#include <span>
#include <vector>

#include "dali/rule_repo.hpp"

namespace dali::agent {

enum class DriftKind { AbruptDrop, SustainedDecline, Deadlock };

const char* to_string(DriftKind k);

struct TriggerConfig {
    double abrupt_drop_threshold = 0.01;
    double sustained_decline_threshold = 0.005;
    int sustained_epochs = 3;
    double user_stagnation_threshold = 0.001;
    double loss_jump_threshold = 0.01;
    double loss_drop_threshold = 0.4;
    double user_rollback_threshold = 0.005;  // mutable at runtime

    void validate() const;
};

struct DriftEvent {
    DriftKind kind = DriftKind::AbruptDrop;
    long long epoch = 0;
    std::vector<repo::PerfRecord> evidence;
    double group_delta = 0.0;
    double user_delta = 0.0;
    double loss_delta = 0.0;
};

// Examines the latest epoch transition (and the trailing decline window).
// Deadlock's compound pattern is tested before the plain abrupt-drop check
// so the more specific trigger wins when both match.
std::optional<DriftEvent> detect_drift(std::span<const repo::PerfRecord> log,
                                       const TriggerConfig& cfg);

}  // namespace dali::agent
