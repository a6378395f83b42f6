#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <unordered_set>
#include <vector>

#include "dali/common.hpp"

namespace dali::data {

// Planted classification carried by synthetic groups. leader_id is a dense
// user id and must be a member of the group.
struct PlantedLabel {
    GroupLabel label = GroupLabel::Collaborative;
    int leader_id = -1;
};

struct Group {
    int id = -1;
    std::vector<int> members;  // distinct dense user ids, n >= 1
    std::optional<PlantedLabel> planted;
};

// Implicit-feedback log: presence of (entity, item) means r = 1.
struct InteractionLog {
    std::vector<std::pair<int, int>> entries;

    bool contains(int entity, int item) const;
    std::vector<int> items_of(int entity) const;
};

struct Dataset {
    int num_users = 0;
    int num_items = 0;
    std::vector<Group> groups;
    InteractionLog user_item;
    InteractionLog group_item;
    // dense id -> id as it appeared in the source files
    std::vector<std::int64_t> user_origin;
    std::vector<std::int64_t> item_origin;
    std::vector<std::int64_t> group_origin;

    std::vector<std::vector<int>> items_by_user() const;
    std::vector<std::vector<int>> items_by_group() const;
};

struct DatasetSplit {
    std::vector<int> train_groups;
    std::vector<int> valid_groups;
    std::vector<int> test_groups;
};

// Reads groups.tsv, user_item.tsv, group_item.tsv (and planted_labels.tsv if
// present) from dir and remaps all ids to dense 0-based ranges.
Dataset load_dataset(const std::filesystem::path& dir);

void save_dataset(const Dataset& ds, const std::filesystem::path& dir);

// Floor-based sizes, remainder goes to train. Deterministic in seed.
DatasetSplit split_groups(const Dataset& ds, double train_ratio,
                          double valid_ratio, double test_ratio,
                          std::uint64_t seed);

// k distinct items the entity has not interacted with, deterministic in seed.
std::vector<int> negative_sample(const Dataset& ds, int entity, bool group_entity,
                                 std::size_t k, std::uint64_t seed);

}  // namespace dali::data
