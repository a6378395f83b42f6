#pragma once

#include <span>
#include <vector>

#include "dali/common.hpp"

namespace dali::train {

// 1 iff truth appears within the first k entries of the ranked list.
int hit_ratio(std::span<const int> ranked, int truth, int k);

// 1/log2(rank+1) for 1-based rank <= k, else 0; single relevant item.
double ndcg_at_k(std::span<const int> ranked, int truth, int k);

struct MetricsReport {
    long long epoch = 0;
    double hr5 = 0, hr10 = 0, ndcg5 = 0, ndcg10 = 0;              // group level
    double user_hr5 = 0, user_hr10 = 0, user_ndcg5 = 0, user_ndcg10 = 0;
    double loss = 0;
    double weight_loss = 0;
    int skipped_groups = 0;  // groups with no interaction to hold out
};

}  // namespace dali::train
