#include "dali/rule_repo.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "dali/sha256.hpp"
#include "json.hpp"

namespace dali::repo {

using nlohmann::json;

std::string SemVer::str() const {
    return std::to_string(major) + "." + std::to_string(minor) + "." + std::to_string(patch);
}

SemVer SemVer::parse(const std::string& s) {
    SemVer v;
    char dot1 = 0, dot2 = 0;
    std::istringstream in(s);
    if (!(in >> v.major >> dot1 >> v.minor >> dot2 >> v.patch) || dot1 != '.' || dot2 != '.' ||
        v.major < 0 || v.minor < 0 || v.patch < 0 || !in.eof())
        throw Error("malformed version '" + s + "'");
    return v;
}

std::string fingerprint(const rules::RuleSet& rs) {
    return sha256_hex(rules::canonical_text(rs));
}

rules::RuleSet RuleRepository::seed_rules() {
    return rules::parse_rules(
        "RULE seed_max_weight: IF max_weight > 0.5 THEN Leadership CONF 0.9 PRI 100\n"
        "RULE seed_dominance: IF dominance > 3 THEN Leadership CONF 0.8 PRI 50\n");
}

RuleRepository RuleRepository::with_seed_rules() {
    RuleRepository repo;
    repo.commit(seed_rules(), Bump::Minor, "initial rule repository", "seed", 0);
    return repo;
}

const RuleVersion& RuleRepository::active() const {
    if (versions_.empty()) throw Error("rule repository has no versions");
    return versions_.back();
}

const RuleVersion* RuleRepository::find(const SemVer& v) const {
    for (const auto& rv : versions_)
        if (rv.version == v) return &rv;
    return nullptr;
}

const RuleVersion& RuleRepository::commit(const rules::RuleSet& rs, Bump bump,
                                          const std::string& change_context,
                                          const std::string& author, long long epoch) {
    RuleVersion rv;
    rv.rules = rs;
    rv.fingerprint = fingerprint(rs);
    rv.author = author;
    rv.created_at = epoch;
    rv.change_context = change_context;

    SemVer base;
    if (!versions_.empty()) {
        const auto& act = versions_.back();
        if (act.fingerprint == rv.fingerprint)
            throw Error("commit rejected: rules identical to active version " +
                        act.version.str());
        base = act.version;
        rv.parent = act.version;
    }
    switch (bump) {
        case Bump::Major: rv.version = {base.major + 1, 0, 0}; break;
        case Bump::Minor: rv.version = {base.major, base.minor + 1, 0}; break;
        case Bump::Patch: rv.version = {base.major, base.minor, base.patch + 1}; break;
    }
    versions_.push_back(std::move(rv));
    return versions_.back();
}

RollbackLog RuleRepository::rollback(SemVer to, const std::string& trigger, long long epoch,
                                     const std::string& author) {
    const RuleVersion* target = find(to);
    if (!target) throw Error("rollback: unknown version " + to.str());
    const SemVer from = active().version;

    RuleVersion rv;
    rv.rules = target->rules;
    rv.fingerprint = target->fingerprint;
    rv.author = author;
    rv.created_at = epoch;
    rv.change_context = "rollback to " + to.str() + ": " + trigger;
    rv.parent = from;
    rv.version = {from.major, from.minor, from.patch + 1};
    versions_.push_back(std::move(rv));

    RollbackLog log;
    log.from_version = from;
    log.to_version = to;
    log.trigger = trigger;
    const std::size_t ctx = std::min<std::size_t>(perf_.size(), 5);
    log.preserved_context.assign(perf_.end() - ctx, perf_.end());
    rollbacks_.push_back(log);
    return log;
}

void RuleRepository::append_perf(const PerfRecord& rec) {
    if (!perf_.empty() && rec.epoch <= perf_.back().epoch)
        throw Error("perf log: non-monotone epoch " + std::to_string(rec.epoch) +
                    " after " + std::to_string(perf_.back().epoch));
    perf_.push_back(rec);
}

void RuleRepository::add_case(const CaseRecord& rec) {
    cases_.push_back(rec);
    if (cases_.size() > kCaseBankCapacity) cases_.pop_front();
}

std::vector<CaseRecord> RuleRepository::query_cases(const rules::FeatureVector& probe,
                                                    std::size_t k) const {
    if (cases_.empty()) throw Error("query_cases: empty case bank");
    const std::size_t m = rules::FeatureVector::kCount;

    std::array<double, rules::FeatureVector::kCount> mean{}, stdev{};
    for (const auto& c : cases_) {
        auto a = c.features.as_array();
        for (std::size_t j = 0; j < m; ++j) mean[j] += a[j];
    }
    for (double& x : mean) x /= (double)cases_.size();
    for (const auto& c : cases_) {
        auto a = c.features.as_array();
        for (std::size_t j = 0; j < m; ++j) {
            const double d = a[j] - mean[j];
            stdev[j] += d * d;
        }
    }
    for (double& x : stdev) x = std::max(std::sqrt(x / (double)cases_.size()), 1e-12);

    auto z = [&](const rules::FeatureVector& f) {
        auto a = f.as_array();
        for (std::size_t j = 0; j < m; ++j) a[j] = (a[j] - mean[j]) / stdev[j];
        return a;
    };
    const auto zp = z(probe);

    std::vector<std::pair<double, std::size_t>> ranked;
    ranked.reserve(cases_.size());
    for (std::size_t idx = 0; idx < cases_.size(); ++idx) {
        auto a = z(cases_[idx].features);
        double d2 = 0.0;
        for (std::size_t j = 0; j < m; ++j) d2 += (a[j] - zp[j]) * (a[j] - zp[j]);
        ranked.emplace_back(d2, idx);
    }
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });

    std::vector<CaseRecord> out;
    for (std::size_t j = 0; j < std::min(k, ranked.size()); ++j)
        out.push_back(cases_[ranked[j].second]);
    return out;
}

// ---------------------------------------------------------------------------
// persistence: one JSON record per line, atomic rewrite per file
// ---------------------------------------------------------------------------

namespace {

json feature_json(const rules::FeatureVector& f) {
    json j;
    auto a = f.as_array();
    const auto& names = rules::FeatureVector::names();
    for (std::size_t k = 0; k < a.size(); ++k) j[std::string(names[k])] = a[k];
    return j;
}

rules::FeatureVector feature_from_json(const json& j) {
    std::array<double, rules::FeatureVector::kCount> a{};
    const auto& names = rules::FeatureVector::names();
    for (std::size_t k = 0; k < a.size(); ++k) a[k] = j.at(std::string(names[k])).get<double>();
    return rules::FeatureVector::from_array(a);
}

json perf_json(const PerfRecord& p) {
    return json{{"epoch", p.epoch},
                {"group_ndcg10", p.group_ndcg10},
                {"group_hr10", p.group_hr10},
                {"user_ndcg10", p.user_ndcg10},
                {"loss", p.loss},
                {"active_version", p.active_version.str()}};
}

PerfRecord perf_from_json(const json& j) {
    PerfRecord p;
    p.epoch = j.at("epoch").get<long long>();
    p.group_ndcg10 = j.at("group_ndcg10").get<double>();
    p.group_hr10 = j.at("group_hr10").get<double>();
    p.user_ndcg10 = j.at("user_ndcg10").get<double>();
    p.loss = j.at("loss").get<double>();
    p.active_version = SemVer::parse(j.at("active_version").get<std::string>());
    return p;
}

void write_atomic(const std::filesystem::path& path, const std::string& body) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc | std::ios::binary);
        if (!out) throw Error("cannot write " + tmp.string());
        out << body;
    }
    std::filesystem::rename(tmp, path);
}

std::vector<json> read_jsonl(const std::filesystem::path& path) {
    std::vector<json> out;
    std::ifstream in(path);
    if (!in) return out;
    std::string line;
    int ln = 0;
    while (std::getline(in, line)) {
        ++ln;
        if (line.empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded())
            throw Error(path.string() + ":" + std::to_string(ln) + ": malformed JSON");
        out.push_back(std::move(j));
    }
    return out;
}

}  // namespace

void RuleRepository::save(const std::filesystem::path& dir) const {
    std::filesystem::create_directories(dir);

    std::string versions;
    for (const auto& v : versions_) {
        json j{{"version", v.version.str()},
               {"rules", rules::canonical_text(v.rules)},
               {"fingerprint", v.fingerprint},
               {"author", v.author},
               {"created_at", v.created_at},
               {"change_context", v.change_context}};
        if (v.parent) j["parent"] = v.parent->str();
        versions += j.dump() + "\n";
    }
    write_atomic(dir / "versions.jsonl", versions);

    std::string perf;
    for (const auto& p : perf_) perf += perf_json(p).dump() + "\n";
    write_atomic(dir / "perf_log.jsonl", perf);

    std::string cases;
    for (const auto& c : cases_) {
        json j{{"features", feature_json(c.features)},
               {"label", to_string(c.label)},
               {"source", c.source},
               {"epoch", c.epoch}};
        cases += j.dump() + "\n";
    }
    write_atomic(dir / "cases.jsonl", cases);

    std::string rb;
    for (const auto& r : rollbacks_) {
        json ctx = json::array();
        for (const auto& p : r.preserved_context) ctx.push_back(perf_json(p));
        json j{{"from_version", r.from_version.str()},
               {"to_version", r.to_version.str()},
               {"trigger", r.trigger},
               {"preserved_context", ctx}};
        rb += j.dump() + "\n";
    }
    write_atomic(dir / "rollbacks.jsonl", rb);
}

RuleRepository RuleRepository::load(const std::filesystem::path& dir) {
    if (!std::filesystem::exists(dir / "versions.jsonl"))
        throw Error("no rule repository at " + dir.string());
    RuleRepository repo;
    for (const auto& j : read_jsonl(dir / "versions.jsonl")) {
        RuleVersion v;
        v.version = SemVer::parse(j.at("version").get<std::string>());
        v.rules = rules::parse_rules(j.at("rules").get<std::string>());
        v.fingerprint = j.at("fingerprint").get<std::string>();
        v.author = j.at("author").get<std::string>();
        v.created_at = j.at("created_at").get<long long>();
        v.change_context = j.at("change_context").get<std::string>();
        if (j.contains("parent")) v.parent = SemVer::parse(j["parent"].get<std::string>());
        if (fingerprint(v.rules) != v.fingerprint)
            throw Error("fingerprint mismatch in stored version " + v.version.str());
        repo.versions_.push_back(std::move(v));
    }
    for (const auto& j : read_jsonl(dir / "perf_log.jsonl"))
        repo.perf_.push_back(perf_from_json(j));
    for (const auto& j : read_jsonl(dir / "cases.jsonl")) {
        CaseRecord c;
        c.features = feature_from_json(j.at("features"));
        c.label = j.at("label").get<std::string>() == "leadership" ? GroupLabel::Leadership
                                                                   : GroupLabel::Collaborative;
        c.source = j.at("source").get<std::string>();
        c.epoch = j.at("epoch").get<long long>();
        repo.cases_.push_back(std::move(c));
    }
    for (const auto& j : read_jsonl(dir / "rollbacks.jsonl")) {
        RollbackLog r;
        r.from_version = SemVer::parse(j.at("from_version").get<std::string>());
        r.to_version = SemVer::parse(j.at("to_version").get<std::string>());
        r.trigger = j.at("trigger").get<std::string>();
        for (const auto& p : j.at("preserved_context"))
            r.preserved_context.push_back(perf_from_json(p));
        repo.rollbacks_.push_back(std::move(r));
    }
    return repo;
}

}  // namespace dali::repo
