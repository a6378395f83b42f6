#pragma once

#include <cstdint>

#include "dali/dataset.hpp"

namespace dali::data {

struct SynthConfig {
    int num_groups = 100;
    int num_users = 0;  // 0 -> 5 * num_groups
    int num_items = 0;  // 0 -> 4 * num_groups
    double leadership_fraction = 0.5;
    int group_size_min = 3;
    int group_size_max = 5;
    int items_per_entity_min = 10;
    int items_per_entity_max = 20;

    void resolve_defaults();
    void validate() const;  // throws Error on infeasible settings
};

// Leadership groups draw every group-item interaction from the planted
// leader's personal pool; collaborative groups draw from the union of member
// pools. Every group gets a planted label. Deterministic in seed.
Dataset generate_synthetic(SynthConfig cfg, std::uint64_t seed);

}  // namespace dali::data
