#include "dali/synthetic.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <set>

namespace dali::data {

void SynthConfig::resolve_defaults() {
    if (num_users <= 0) num_users = 5 * num_groups;
    if (num_items <= 0) num_items = 4 * num_groups;
}

void SynthConfig::validate() const {
    if (num_groups < 1) throw Error("synthetic: num_groups must be >= 1");
    if (num_users < 1 || num_items < 1) throw Error("synthetic: empty user or item space");
    if (leadership_fraction < 0.0 || leadership_fraction > 1.0)
        throw Error("synthetic: leadership_fraction must lie in [0,1]");
    if (group_size_min < 1 || group_size_min > group_size_max)
        throw Error("synthetic: bad group size range");
    if (group_size_max > num_users)
        throw Error("synthetic: group size exceeds number of users");
    if (items_per_entity_min < 1 || items_per_entity_min > items_per_entity_max)
        throw Error("synthetic: bad items-per-entity range");
    if (items_per_entity_max > num_items)
        throw Error("synthetic: items-per-entity exceeds number of items");
}

namespace {

// k distinct values taken from pool, order deterministic in rng state
std::vector<int> sample_distinct(std::vector<int> pool, std::size_t k, std::mt19937_64& rng) {
    for (std::size_t j = 0; j < k; ++j) {
        std::uniform_int_distribution<std::size_t> pick(j, pool.size() - 1);
        std::swap(pool[j], pool[pick(rng)]);
    }
    pool.resize(k);
    return pool;
}

}  // namespace

Dataset generate_synthetic(SynthConfig cfg, std::uint64_t seed) {
    cfg.resolve_defaults();
    cfg.validate();
    std::mt19937_64 rng(seed);

    Dataset ds;
    ds.num_users = cfg.num_users;
    ds.num_items = cfg.num_items;
    ds.user_origin.resize(cfg.num_users);
    std::iota(ds.user_origin.begin(), ds.user_origin.end(), 0);
    ds.item_origin.resize(cfg.num_items);
    std::iota(ds.item_origin.begin(), ds.item_origin.end(), 0);
    ds.group_origin.resize(cfg.num_groups);
    std::iota(ds.group_origin.begin(), ds.group_origin.end(), 0);

    std::vector<int> all_items(cfg.num_items);
    std::iota(all_items.begin(), all_items.end(), 0);
    std::vector<int> all_users(cfg.num_users);
    std::iota(all_users.begin(), all_users.end(), 0);

    // personal pools
    std::uniform_int_distribution<int> pool_size(cfg.items_per_entity_min,
                                                 cfg.items_per_entity_max);
    std::vector<std::vector<int>> pools(cfg.num_users);
    for (int u = 0; u < cfg.num_users; ++u) {
        pools[u] = sample_distinct(all_items, (std::size_t)pool_size(rng), rng);
        std::sort(pools[u].begin(), pools[u].end());
        for (int i : pools[u]) ds.user_item.entries.emplace_back(u, i);
    }

    // exact leadership count, positions shuffled
    const int n_lead = (int)std::llround(cfg.leadership_fraction * cfg.num_groups);
    std::vector<char> is_lead(cfg.num_groups, 0);
    std::fill(is_lead.begin(), is_lead.begin() + n_lead, 1);
    std::shuffle(is_lead.begin(), is_lead.end(), rng);

    std::uniform_int_distribution<int> gsize(cfg.group_size_min, cfg.group_size_max);
    for (int gid = 0; gid < cfg.num_groups; ++gid) {
        Group g;
        g.id = gid;
        g.members = sample_distinct(all_users, (std::size_t)gsize(rng), rng);
        std::sort(g.members.begin(), g.members.end());

        PlantedLabel pl;
        std::vector<int> source;
        if (is_lead[gid]) {
            std::uniform_int_distribution<std::size_t> pick(0, g.members.size() - 1);
            pl.label = GroupLabel::Leadership;
            pl.leader_id = g.members[pick(rng)];
            source = pools[pl.leader_id];
        } else {
            pl.label = GroupLabel::Collaborative;
            std::set<int> uni;
            for (int m : g.members) uni.insert(pools[m].begin(), pools[m].end());
            source.assign(uni.begin(), uni.end());
        }
        std::size_t want = (std::size_t)pool_size(rng);
        want = std::min(want, source.size());
        auto chosen = sample_distinct(source, want, rng);
        std::sort(chosen.begin(), chosen.end());
        for (int i : chosen) ds.group_item.entries.emplace_back(gid, i);

        g.planted = pl;
        ds.groups.push_back(std::move(g));
    }
    return ds;
}

}  // namespace dali::data
