#include "dali/checkpoint.hpp"

#include <fstream>

#include "json.hpp"

namespace dali::train {

using nlohmann::json;

namespace {
constexpr const char* kMagic = "dali-checkpoint";
constexpr int kFormatVersion = 1;
}  // namespace

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
    json j;
    j["magic"] = kMagic;
    j["format_version"] = kFormatVersion;
    j["seed"] = ck.seed;
    j["model"] = {{"num_users", ck.model.emb.num_users},
                  {"num_items", ck.model.emb.num_items},
                  {"dim", ck.model.emb.dim},
                  {"user_mat", ck.model.emb.user_mat},
                  {"item_mat", ck.model.emb.item_mat},
                  {"attn", ck.model.attn.theta}};
    j["mlp"] = {{"in", ck.mlp.in}, {"h1", ck.mlp.h1}, {"h2", ck.mlp.h2},
                {"theta", ck.mlp.theta}};
    j["feature_stats"] = {
        {"mean", std::vector<double>(ck.stats.mean.begin(), ck.stats.mean.end())},
        {"stdev", std::vector<double>(ck.stats.stdev.begin(), ck.stats.stdev.end())},
        {"frozen", ck.stats.frozen}};

    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) throw Error("cannot write checkpoint " + path.string());
        out << j.dump();
    }
    std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("missing checkpoint " + path.string());
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.contains("magic") || j["magic"] != kMagic)
        throw Error("not a model checkpoint: " + path.string());
    if (j.at("format_version").get<int>() != kFormatVersion)
        throw Error("unsupported checkpoint format version");

    Checkpoint ck;
    ck.seed = j.at("seed").get<std::uint64_t>();
    const auto& m = j.at("model");
    ck.model.emb.num_users = m.at("num_users").get<std::size_t>();
    ck.model.emb.num_items = m.at("num_items").get<std::size_t>();
    ck.model.emb.dim = m.at("dim").get<std::size_t>();
    ck.model.emb.user_mat = m.at("user_mat").get<std::vector<double>>();
    ck.model.emb.item_mat = m.at("item_mat").get<std::vector<double>>();
    ck.model.attn.dim = ck.model.emb.dim;
    ck.model.attn.theta = m.at("attn").get<std::vector<double>>();

    const auto& n = j.at("mlp");
    ck.mlp.in = n.at("in").get<std::size_t>();
    ck.mlp.h1 = n.at("h1").get<std::size_t>();
    ck.mlp.h2 = n.at("h2").get<std::size_t>();
    ck.mlp.theta = n.at("theta").get<std::vector<double>>();

    const auto& s = j.at("feature_stats");
    auto mean = s.at("mean").get<std::vector<double>>();
    auto stdev = s.at("stdev").get<std::vector<double>>();
    if (mean.size() != ck.stats.mean.size() || stdev.size() != ck.stats.stdev.size())
        throw Error("checkpoint feature-stats width mismatch");
    std::copy(mean.begin(), mean.end(), ck.stats.mean.begin());
    std::copy(stdev.begin(), stdev.end(), ck.stats.stdev.begin());
    ck.stats.frozen = s.at("frozen").get<bool>();

    if (ck.model.emb.user_mat.size() != ck.model.emb.num_users * ck.model.emb.dim ||
        ck.model.emb.item_mat.size() != ck.model.emb.num_items * ck.model.emb.dim ||
        ck.model.attn.theta.size() != 2 * ck.model.emb.dim + 2 ||
        ck.mlp.theta.size() != ck.mlp.size())
        throw Error("checkpoint parameter shapes are inconsistent");
    return ck;
}

}  // namespace dali::train
