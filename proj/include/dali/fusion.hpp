#pragma once

#include <span>
#include <vector>

#include "dali/model.hpp"
#include "dali/rule_dsl.hpp"

namespace dali::fusion {

struct FusionSchedule {
    long long t = 0;      // current epoch, 0-based
    long long t_max = 1;  // maximum training epoch
};

// max(0, 1 - t/t_max); throws when t_max is 0
double gamma(const FusionSchedule& sched);

struct GroupDecision {
    int group_id = -1;
    rules::SymbolicDecision symbolic;
    ProbPair neural;
    double gamma_used = 0.0;
    ProbPair fused;
    GroupLabel final_label = GroupLabel::Collaborative;
    enum class Path { Consistent, Fused } path = Path::Consistent;
};

// Agreement adopts the shared label with the mean of both pairs; conflicts
// blend gamma * symbolic + (1 - gamma) * neural and take the argmax.
GroupDecision fuse(int group_id, const rules::SymbolicDecision& sym, ProbPair neural,
                   const FusionSchedule& sched);
GroupDecision fuse_with_gamma(int group_id, const rules::SymbolicDecision& sym,
                              ProbPair neural, double gamma_value);

// Leadership takes the top-weight member's embedding (ties to the lowest
// index); Collaborative keeps the attention-weighted sum.
std::vector<double> aggregate_by_type(GroupLabel label,
                                      const std::vector<std::span<const double>>& member_embs,
                                      const model::MemberWeightVector& weights);

std::size_t argmax_weight(std::span<const double> weights);

}  // namespace dali::fusion
