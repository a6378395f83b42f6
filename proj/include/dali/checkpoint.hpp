#pragma once

#include <filesystem>

#include "dali/features.hpp"
#include "dali/mlp.hpp"
#include "dali/model.hpp"

namespace dali::train {

// Single JSON checkpoint carrying dims, seed and all flattened parameter
// blocks; guarded by a magic header and a format version.
struct Checkpoint {
    model::Model model;
    neural::MlpParams mlp;
    rules::FeatureStats stats;
    std::uint64_t seed = 0;
};

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace dali::train
