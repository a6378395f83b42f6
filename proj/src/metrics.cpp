#include "dali/metrics.hpp"

#include <cmath>

namespace dali::train {

int hit_ratio(std::span<const int> ranked, int truth, int k) {
    if (k < 1) throw Error("hit_ratio: k must be >= 1");
    const std::size_t top = std::min<std::size_t>((std::size_t)k, ranked.size());
    for (std::size_t r = 0; r < top; ++r)
        if (ranked[r] == truth) return 1;
    return 0;
}

double ndcg_at_k(std::span<const int> ranked, int truth, int k) {
    if (k < 1) throw Error("ndcg_at_k: k must be >= 1");
    const std::size_t top = std::min<std::size_t>((std::size_t)k, ranked.size());
    for (std::size_t r = 0; r < top; ++r)
        if (ranked[r] == truth) return 1.0 / std::log2((double)(r + 1) + 1.0);
    return 0.0;
}

}  // namespace dali::train
