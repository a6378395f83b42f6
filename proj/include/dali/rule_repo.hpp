#pragma once

#include <compare>
#include <deque>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dali/rule_dsl.hpp"

namespace dali::repo {

struct SemVer {
    int major = 0;
    int minor = 0;
    int patch = 0;

    auto operator<=>(const SemVer&) const = default;
    std::string str() const;
    static SemVer parse(const std::string& s);
};

enum class Bump { Major, Minor, Patch };

struct RuleVersion {
    SemVer version;
    rules::RuleSet rules;
    std::string fingerprint;  // sha256 of canonical rule text
    std::string author;       // agent | human | seed
    long long created_at = 0;  // epoch index
    std::string change_context;
    std::optional<SemVer> parent;
};

struct PerfRecord {
    long long epoch = 0;
    double group_ndcg10 = 0.0;
    double group_hr10 = 0.0;
    double user_ndcg10 = 0.0;
    double loss = 0.0;
    SemVer active_version;
};

struct CaseRecord {
    rules::FeatureVector features;
    GroupLabel label = GroupLabel::Collaborative;
    std::string source;  // synthetic-truth | fused-decision
    long long epoch = 0;
};

struct RollbackLog {
    SemVer from_version;
    SemVer to_version;
    std::string trigger;
    std::vector<PerfRecord> preserved_context;
};

inline constexpr std::size_t kCaseBankCapacity = 10000;

// Memory module: versioned rule repository, case feature bank and
// append-only performance log. Single writer; snapshots are value types.
class RuleRepository {
public:
    // version 0.1.0 with the default leadership triggers
    static RuleRepository with_seed_rules();
    static rules::RuleSet seed_rules();

    const RuleVersion& active() const;
    const std::vector<RuleVersion>& versions() const { return versions_; }
    const RuleVersion* find(const SemVer& v) const;

    // Appends a new active version; rejects byte-identical rule content.
    const RuleVersion& commit(const rules::RuleSet& rs, Bump bump,
                              const std::string& change_context,
                              const std::string& author, long long epoch);

    // Restores the content of `to` as a new patch version and records why.
    RollbackLog rollback(SemVer to, const std::string& trigger, long long epoch,
                         const std::string& author = "agent");

    void append_perf(const PerfRecord& rec);
    const std::vector<PerfRecord>& perf_log() const { return perf_; }

    void add_case(const CaseRecord& rec);
    const std::deque<CaseRecord>& case_bank() const { return cases_; }
    // k nearest by Euclidean distance on bank-standardized features,
    // ties by insertion order; clamps k to the bank size.
    std::vector<CaseRecord> query_cases(const rules::FeatureVector& probe,
                                        std::size_t k) const;

    const std::vector<RollbackLog>& rollbacks() const { return rollbacks_; }

    void save(const std::filesystem::path& dir) const;
    static RuleRepository load(const std::filesystem::path& dir);

private:
    std::vector<RuleVersion> versions_;
    std::vector<PerfRecord> perf_;
    std::deque<CaseRecord> cases_;
    std::vector<RollbackLog> rollbacks_;
};

std::string fingerprint(const rules::RuleSet& rs);

}  // namespace dali::repo
