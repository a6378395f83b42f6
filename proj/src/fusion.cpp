#include "dali/fusion.hpp"

#include <algorithm>

namespace dali::fusion {

double gamma(const FusionSchedule& sched) {
    if (sched.t_max < 1) throw Error("gamma: t_max must be >= 1");
    if (sched.t < 0) throw Error("gamma: negative epoch");
    return std::max(0.0, 1.0 - (double)sched.t / (double)sched.t_max);
}

GroupDecision fuse(int group_id, const rules::SymbolicDecision& sym, ProbPair neural,
                   const FusionSchedule& sched) {
    return fuse_with_gamma(group_id, sym, neural, gamma(sched));
}

GroupDecision fuse_with_gamma(int group_id, const rules::SymbolicDecision& sym,
                              ProbPair neural, double gamma_value) {
    GroupDecision d;
    d.group_id = group_id;
    d.symbolic = sym;
    d.neural = neural;
    d.gamma_used = gamma_value;

    if (sym.label == neural.argmax()) {
        d.path = GroupDecision::Path::Consistent;
        d.final_label = sym.label;
        d.fused = {(sym.prob.leadership + neural.leadership) / 2.0,
                   (sym.prob.collaborative + neural.collaborative) / 2.0};
    } else {
        d.path = GroupDecision::Path::Fused;
        d.fused = {gamma_value * sym.prob.leadership + (1.0 - gamma_value) * neural.leadership,
                   gamma_value * sym.prob.collaborative +
                       (1.0 - gamma_value) * neural.collaborative};
        d.final_label = d.fused.argmax();
    }
    return d;
}

std::size_t argmax_weight(std::span<const double> weights) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < weights.size(); ++j)
        if (weights[j] > weights[best]) best = j;
    return best;
}

std::vector<double> aggregate_by_type(GroupLabel label,
                                      const std::vector<std::span<const double>>& member_embs,
                                      const model::MemberWeightVector& weights) {
    if (member_embs.size() != weights.weights.size())
        throw Error("aggregate_by_type: weight/embedding length mismatch");
    if (member_embs.empty()) throw Error("aggregate_by_type: empty group");
    if (label == GroupLabel::Leadership) {
        const auto src = member_embs[argmax_weight(weights.weights)];
        return {src.begin(), src.end()};
    }
    return model::aggregate_group(member_embs, weights);
}

}  // namespace dali::fusion
