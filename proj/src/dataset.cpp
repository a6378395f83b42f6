#include "dali/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

namespace dali::data {

bool InteractionLog::contains(int entity, int item) const {
    for (const auto& [e, i] : entries)
        if (e == entity && i == item) return true;
    return false;
}

std::vector<int> InteractionLog::items_of(int entity) const {
    std::vector<int> out;
    for (const auto& [e, i] : entries)
        if (e == entity) out.push_back(i);
    return out;
}

std::vector<std::vector<int>> Dataset::items_by_user() const {
    std::vector<std::vector<int>> out(num_users);
    for (const auto& [u, i] : user_item.entries) out[u].push_back(i);
    return out;
}

std::vector<std::vector<int>> Dataset::items_by_group() const {
    std::vector<std::vector<int>> out(groups.size());
    for (const auto& [g, i] : group_item.entries) out[g].push_back(i);
    return out;
}

namespace {

std::int64_t parse_id(const std::string& tok, const std::string& file, int line) {
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc{} || p != tok.data() + tok.size() || v < 0)
        throw Error(file + ":" + std::to_string(line) + ": malformed id '" + tok + "'");
    return v;
}

std::vector<std::string> read_lines(const std::filesystem::path& p) {
    std::ifstream in(p);
    if (!in) throw Error("missing file: " + p.string());
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(line);
    }
    return lines;
}

// id remapper: dense index by ascending original id
struct Remap {
    std::map<std::int64_t, int> to_dense;
    std::vector<std::int64_t> origin;

    void insert(std::int64_t id) { to_dense.emplace(id, 0); }
    void finalize() {
        int next = 0;
        origin.reserve(to_dense.size());
        for (auto& [id, dense] : to_dense) {
            dense = next++;
            origin.push_back(id);
        }
    }
    int at(std::int64_t id, const std::string& what) const {
        auto it = to_dense.find(id);
        if (it == to_dense.end())
            throw Error(what + " references unknown id " + std::to_string(id));
        return it->second;
    }
};

}  // namespace

Dataset load_dataset(const std::filesystem::path& dir) {
    const auto groups_path = dir / "groups.tsv";
    const auto ui_path = dir / "user_item.tsv";
    const auto gi_path = dir / "group_item.tsv";

    auto group_lines = read_lines(groups_path);
    auto ui_lines = read_lines(ui_path);
    auto gi_lines = read_lines(gi_path);

    // raw parse
    struct RawGroup {
        std::int64_t id;
        std::vector<std::int64_t> members;
        int line;
    };
    std::vector<RawGroup> raw_groups;
    for (int ln = 0; ln < (int)group_lines.size(); ++ln) {
        const std::string& line = group_lines[ln];
        if (line.empty()) continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos)
            throw Error("groups.tsv:" + std::to_string(ln + 1) + ": malformed line");
        RawGroup g;
        g.id = parse_id(line.substr(0, tab), "groups.tsv", ln + 1);
        g.line = ln + 1;
        std::stringstream ss(line.substr(tab + 1));
        std::string tok;
        while (std::getline(ss, tok, ','))
            g.members.push_back(parse_id(tok, "groups.tsv", ln + 1));
        if (g.members.empty())
            throw Error("groups.tsv:" + std::to_string(ln + 1) + ": group has no members");
        std::set<std::int64_t> uniq(g.members.begin(), g.members.end());
        if (uniq.size() != g.members.size())
            throw Error("groups.tsv:" + std::to_string(ln + 1) + ": duplicate member in group " +
                        std::to_string(g.id));
        raw_groups.push_back(std::move(g));
    }

    auto parse_pairs = [](const std::vector<std::string>& lines, const std::string& file) {
        std::vector<std::pair<std::int64_t, std::int64_t>> out;
        for (int ln = 0; ln < (int)lines.size(); ++ln) {
            const std::string& line = lines[ln];
            if (line.empty()) continue;
            auto tab = line.find('\t');
            if (tab == std::string::npos)
                throw Error(file + ":" + std::to_string(ln + 1) + ": malformed line");
            out.emplace_back(parse_id(line.substr(0, tab), file, ln + 1),
                             parse_id(line.substr(tab + 1), file, ln + 1));
        }
        return out;
    };
    auto raw_ui = parse_pairs(ui_lines, "user_item.tsv");
    auto raw_gi = parse_pairs(gi_lines, "group_item.tsv");

    // users come from the user-item log; members must reference them
    Remap users, items, groups;
    for (const auto& [u, i] : raw_ui) {
        users.insert(u);
        items.insert(i);
    }
    for (const auto& [g, i] : raw_gi) items.insert(i);
    for (const auto& g : raw_groups) groups.insert(g.id);
    users.finalize();
    items.finalize();
    groups.finalize();

    Dataset ds;
    ds.num_users = (int)users.origin.size();
    ds.num_items = (int)items.origin.size();
    ds.user_origin = users.origin;
    ds.item_origin = items.origin;
    ds.group_origin = groups.origin;

    ds.groups.resize(raw_groups.size());
    for (const auto& rg : raw_groups) {
        Group g;
        g.id = groups.at(rg.id, "group");
        for (auto m : rg.members) {
            auto it = users.to_dense.find(m);
            if (it == users.to_dense.end())
                throw Error("groups.tsv:" + std::to_string(rg.line) + ": member id " +
                            std::to_string(m) + " references unknown user");
            g.members.push_back(it->second);
        }
        ds.groups[g.id] = std::move(g);
    }

    std::set<std::pair<int, int>> seen;
    for (std::size_t n = 0; n < raw_ui.size(); ++n) {
        int u = users.at(raw_ui[n].first, "user_item");
        int i = items.at(raw_ui[n].second, "user_item");
        if (!seen.insert({u, i}).second)
            throw Error("user_item.tsv: duplicate interaction (" +
                        std::to_string(raw_ui[n].first) + ", " +
                        std::to_string(raw_ui[n].second) + ")");
        ds.user_item.entries.emplace_back(u, i);
    }
    seen.clear();
    for (std::size_t n = 0; n < raw_gi.size(); ++n) {
        int g = groups.at(raw_gi[n].first, "group_item");
        int i = items.at(raw_gi[n].second, "group_item");
        if (!seen.insert({g, i}).second)
            throw Error("group_item.tsv: duplicate interaction (" +
                        std::to_string(raw_gi[n].first) + ", " +
                        std::to_string(raw_gi[n].second) + ")");
        ds.group_item.entries.emplace_back(g, i);
    }

    // optional planted ground truth (written by the synthetic generator)
    const auto planted_path = dir / "planted_labels.tsv";
    if (std::filesystem::exists(planted_path)) {
        auto lines = read_lines(planted_path);
        for (int ln = 0; ln < (int)lines.size(); ++ln) {
            const std::string& line = lines[ln];
            if (line.empty()) continue;
            auto tab = line.find('\t');
            if (tab == std::string::npos)
                throw Error("planted_labels.tsv:" + std::to_string(ln + 1) + ": malformed line");
            int g = groups.at(parse_id(line.substr(0, tab), "planted_labels.tsv", ln + 1),
                              "planted_labels");
            std::string rhs = line.substr(tab + 1);
            PlantedLabel pl;
            if (rhs == "collab") {
                pl.label = GroupLabel::Collaborative;
            } else if (rhs.rfind("leader:", 0) == 0) {
                pl.label = GroupLabel::Leadership;
                pl.leader_id = users.at(parse_id(rhs.substr(7), "planted_labels.tsv", ln + 1),
                                        "planted leader");
                const auto& mem = ds.groups[g].members;
                if (std::find(mem.begin(), mem.end(), pl.leader_id) == mem.end())
                    throw Error("planted_labels.tsv:" + std::to_string(ln + 1) +
                                ": leader is not a member of group");
            } else {
                throw Error("planted_labels.tsv:" + std::to_string(ln + 1) +
                            ": malformed label '" + rhs + "'");
            }
            ds.groups[g].planted = pl;
        }
    }
    return ds;
}

void save_dataset(const Dataset& ds, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    auto write = [&](const std::string& name, auto&& body) {
        std::ofstream out(dir / name, std::ios::trunc);
        if (!out) throw Error("cannot write " + (dir / name).string());
        body(out);
    };
    write("groups.tsv", [&](std::ofstream& out) {
        for (const auto& g : ds.groups) {
            out << g.id << '\t';
            for (std::size_t k = 0; k < g.members.size(); ++k)
                out << (k ? "," : "") << g.members[k];
            out << '\n';
        }
    });
    write("user_item.tsv", [&](std::ofstream& out) {
        for (const auto& [u, i] : ds.user_item.entries) out << u << '\t' << i << '\n';
    });
    write("group_item.tsv", [&](std::ofstream& out) {
        for (const auto& [g, i] : ds.group_item.entries) out << g << '\t' << i << '\n';
    });
    bool any_planted = std::any_of(ds.groups.begin(), ds.groups.end(),
                                   [](const Group& g) { return g.planted.has_value(); });
    if (any_planted) {
        write("planted_labels.tsv", [&](std::ofstream& out) {
            for (const auto& g : ds.groups) {
                if (!g.planted) continue;
                out << g.id << '\t';
                if (g.planted->label == GroupLabel::Leadership)
                    out << "leader:" << g.planted->leader_id << '\n';
                else
                    out << "collab" << '\n';
            }
        });
    }
}

DatasetSplit split_groups(const Dataset& ds, double train_ratio, double valid_ratio,
                          double test_ratio, std::uint64_t seed) {
    const double sum = train_ratio + valid_ratio + test_ratio;
    if (std::abs(sum - 1.0) > 1e-9)
        throw Error("split ratios must sum to 1, got " + std::to_string(sum));
    const std::size_t n = ds.groups.size();
    if (n < 3) throw Error("need at least 3 groups to split");

    std::vector<int> ids(n);
    for (std::size_t k = 0; k < n; ++k) ids[k] = (int)k;
    std::mt19937_64 rng(seed);
    std::shuffle(ids.begin(), ids.end(), rng);

    const std::size_t n_valid = (std::size_t)(valid_ratio * (double)n);
    const std::size_t n_test = (std::size_t)(test_ratio * (double)n);
    const std::size_t n_train = n - n_valid - n_test;  // remainder to train

    DatasetSplit sp;
    sp.train_groups.assign(ids.begin(), ids.begin() + n_train);
    sp.valid_groups.assign(ids.begin() + n_train, ids.begin() + n_train + n_valid);
    sp.test_groups.assign(ids.begin() + n_train + n_valid, ids.end());
    return sp;
}

std::vector<int> negative_sample(const Dataset& ds, int entity, bool group_entity,
                                 std::size_t k, std::uint64_t seed) {
    const InteractionLog& log = group_entity ? ds.group_item : ds.user_item;
    std::vector<char> pos(ds.num_items, 0);
    for (const auto& [e, i] : log.entries)
        if (e == entity) pos[i] = 1;

    std::vector<int> pool;
    pool.reserve(ds.num_items);
    for (int i = 0; i < ds.num_items; ++i)
        if (!pos[i]) pool.push_back(i);
    if (k > pool.size())
        throw Error("insufficient negative pool for entity " + std::to_string(entity) +
                    ": need " + std::to_string(k) + ", have " + std::to_string(pool.size()));

    std::mt19937_64 rng(seed);
    std::vector<int> out;
    out.reserve(k);
    for (std::size_t j = 0; j < k; ++j) {
        std::uniform_int_distribution<std::size_t> pick(j, pool.size() - 1);
        std::swap(pool[j], pool[pick(rng)]);
        out.push_back(pool[j]);
    }
    return out;
}

}  // namespace dali::data
