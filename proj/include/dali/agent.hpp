#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "dali/drift.hpp"
#include "dali/rule_repo.hpp"

namespace dali::agent {

class TransportError : public Error {
public:
    explicit TransportError(const std::string& what) : Error(what) {}
};

struct AgentContext {
    std::vector<repo::PerfRecord> recent;  // trailing window, capped
    std::string active_version;
    std::string active_rules_text;
    std::vector<repo::CaseRecord> leadership_exemplars;
    std::vector<repo::CaseRecord> collaborative_exemplars;
    DriftEvent event;
};

inline constexpr std::size_t kContextWindow = 10;
inline constexpr std::size_t kExemplarsPerClass = 3;

AgentContext build_context(const repo::RuleRepository& repo, const DriftEvent& event);

// One request/response exchange. Implementations may not consult anything
// beyond the prompts they are given.
class AgentClient {
public:
    virtual ~AgentClient() = default;
    virtual std::string name() const = 0;
    // Returns raw reply text; throws TransportError when unreachable.
    virtual std::string request(const std::string& role_prompt,
                                const std::string& user_prompt) = 0;
};

// Deterministic offline stand-in: maps drift kinds to templated rule edits.
// Replies use the same wire format the LLM is instructed to produce.
class ScriptedAgent : public AgentClient {
public:
    std::string name() const override { return "scripted"; }
    std::string request(const std::string& role_prompt,
                        const std::string& user_prompt) override;
};

// HTTP chat client configured from DALI_LLM_ENDPOINT / DALI_LLM_MODEL /
// DALI_LLM_KEY (and DALI_LLM_TIMEOUT_MS, default 30000).
class LlmAgent : public AgentClient {
public:
    LlmAgent();  // throws Error when DALI_LLM_ENDPOINT is unset
    std::string name() const override { return "llm"; }
    std::string request(const std::string& role_prompt,
                        const std::string& user_prompt) override;

private:
    std::string endpoint_;
    std::string model_;
    std::string key_;
    long timeout_ms_ = 30000;
};

// Scripted when DALI_LLM_ENDPOINT is absent or kind == "scripted".
std::unique_ptr<AgentClient> make_agent(const std::string& kind);

// Prompts and raw replies, one JSON record per line.
class AgentJournal {
public:
    AgentJournal() = default;
    explicit AgentJournal(std::filesystem::path path) : path_(std::move(path)) {}
    void log(const std::string& phase, const std::string& detail, long long epoch);
    bool enabled() const { return !path_.empty(); }

private:
    std::filesystem::path path_;
};

struct Proposal {
    std::optional<rules::RuleSet> candidate;  // empty after persistent parse failure
    std::string change_context;
    std::string raw_reply;
    int parse_retries = 0;
    std::string parse_error;
};

// Builds the prompts, applies SET directives from the reply to cfg, and
// retries up to twice with the parse error appended.
Proposal propose_rules(AgentClient& agent, const AgentContext& ctx, TriggerConfig& cfg,
                       AgentJournal* journal);

struct ValidationReport {
    std::string candidate_fingerprint;
    bool parse_ok = false;
    double sandbox_accuracy = 0.0;
    double active_accuracy = 0.0;
    double metric_delta = 0.0;
    enum class Verdict { Commit, Reject } verdict = Verdict::Reject;
};

using ReplayFn = std::function<double(const rules::RuleSet&)>;

// Commit iff the candidate parses, does not lose sandbox accuracy against
// the active rules, and costs at most 0.001 replay NDCG@10.
ValidationReport validate_candidate(const std::optional<rules::RuleSet>& candidate,
                                    const std::deque<repo::CaseRecord>& sandbox,
                                    const rules::RuleSet& active_rules,
                                    const ReplayFn& replay);

enum class EvolveOutcome { Committed, RolledBack, NoChange };

struct EvolveResult {
    EvolveOutcome outcome = EvolveOutcome::NoChange;
    std::optional<repo::SemVer> version;
    std::optional<repo::RollbackLog> rollback;
    std::optional<ValidationReport> report;
    std::string detail;
};

// propose -> validate -> commit (minor bump), or roll back to the last
// version committed before the drift window. Transport failure degrades to
// NoChange with the error logged.
EvolveResult evolve(repo::RuleRepository& repo, const DriftEvent& event, AgentClient& agent,
                    TriggerConfig& cfg, const ReplayFn& replay, long long epoch,
                    AgentJournal* journal);

}  // namespace dali::agent
