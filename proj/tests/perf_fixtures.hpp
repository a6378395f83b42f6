#pragma once

#include <vector>

#include "dali/rule_repo.hpp"

// Hand-entered validation trajectory reproducing the three reported drift
// patterns: a one-epoch group NDCG@10 drop of 0.039 with moving user metrics
// (abrupt), three consecutive 0.006 declines (sustained), and a 0.110 loss
// increase under a stagnant user metric (deadlock).
inline std::vector<dali::repo::PerfRecord> case_study_log() {
    using dali::repo::PerfRecord;
    auto rec = [](long long e, double g, double u, double l) {
        PerfRecord p;
        p.epoch = e;
        p.group_ndcg10 = g;
        p.group_hr10 = g + 0.1;
        p.user_ndcg10 = u;
        p.loss = l;
        return p;
    };
    return {
        rec(1, 0.500, 0.300, 1.000),
        rec(2, 0.461, 0.320, 0.995),  // group -0.039, user moves, loss calm
        rec(3, 0.470, 0.321, 0.950),
        rec(4, 0.464, 0.322, 0.940),  // decline 1 (0.006)
        rec(5, 0.458, 0.324, 0.930),  // decline 2
        rec(6, 0.452, 0.326, 0.920),  // decline 3
        rec(7, 0.460, 0.330, 0.900),  // small recovery, below every trigger
        rec(8, 0.421, 0.3305, 1.010),  // group -0.039, user <0.001, loss +0.110
    };
}

inline std::vector<dali::repo::PerfRecord> flat_log(int n = 8) {
    std::vector<dali::repo::PerfRecord> out;
    for (int e = 1; e <= n; ++e) {
        dali::repo::PerfRecord p;
        p.epoch = e;
        p.group_ndcg10 = 0.5;
        p.group_hr10 = 0.6;
        p.user_ndcg10 = 0.3;
        p.loss = 1.0;
        out.push_back(p);
    }
    return out;
}
