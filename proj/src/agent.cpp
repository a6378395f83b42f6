#include "dali/agent.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "httplib.h"
#include "json.hpp"

namespace dali::agent {

using nlohmann::json;

namespace {

// Role texts the design fixes for both agent identities.
const char* kRolePrompt =
    "As a dynamic rule governance expert, identify leadership patterns by extracting "
    "weight distribution features and matching discrimination rules for real-time group "
    "classification. "
    "As a rule evolution engine, upgrade the rule system by detecting obsolete rules and "
    "proposing quantifiable new rules with computable conditions via version-controlled "
    "iteration.";

std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, end);
}

json case_json(const repo::CaseRecord& c) {
    json j;
    auto a = c.features.as_array();
    const auto& names = rules::FeatureVector::names();
    for (std::size_t k = 0; k < a.size(); ++k) j[std::string(names[k])] = a[k];
    j["label"] = to_string(c.label);
    return j;
}

json context_json(const AgentContext& ctx) {
    json j;
    j["event"] = {{"kind", to_string(ctx.event.kind)},
                  {"epoch", ctx.event.epoch},
                  {"group_delta", ctx.event.group_delta},
                  {"user_delta", ctx.event.user_delta},
                  {"loss_delta", ctx.event.loss_delta}};
    j["active_version"] = ctx.active_version;
    j["active_rules"] = ctx.active_rules_text;
    json recent = json::array();
    for (const auto& p : ctx.recent)
        recent.push_back({{"epoch", p.epoch},
                          {"group_ndcg10", p.group_ndcg10},
                          {"group_hr10", p.group_hr10},
                          {"user_ndcg10", p.user_ndcg10},
                          {"loss", p.loss}});
    j["recent"] = recent;
    json lead = json::array(), collab = json::array();
    for (const auto& c : ctx.leadership_exemplars) lead.push_back(case_json(c));
    for (const auto& c : ctx.collaborative_exemplars) collab.push_back(case_json(c));
    j["leadership_exemplars"] = lead;
    j["collaborative_exemplars"] = collab;
    return j;
}

std::string feature_name_list() {
    std::string out;
    for (auto n : rules::FeatureVector::names()) {
        if (!out.empty()) out += ", ";
        out += std::string(n);
    }
    return out;
}

std::string build_user_prompt(const AgentContext& ctx, const std::string& parse_error) {
    std::string p =
        "Performance drift was detected. Review the context and reply with the complete "
        "replacement rule set, one rule per line, inside a single fenced code block. "
        "Each line must match: RULE name: IF <condition> THEN <Leadership|Collaborative> "
        "CONF <number in (0.5,1]> PRI <integer>. Conditions may use the features " +
        feature_name_list() +
        " with comparisons (< <= > >= ==), arithmetic (+ - * /), AND, OR, NOT and "
        "parentheses. A line 'SET user_rollback_threshold <value>' outside the block "
        "adjusts that trigger threshold.\n\nCONTEXT:\n```json\n" +
        context_json(ctx).dump(2) + "\n```\n";
    if (!parse_error.empty())
        p += "\nYour previous reply failed to parse; fix it. Parser said: " + parse_error + "\n";
    return p;
}

std::optional<std::string> extract_fenced_block(const std::string& text) {
    auto first = text.find("```");
    if (first == std::string::npos) return std::nullopt;
    auto body_start = text.find('\n', first);
    if (body_start == std::string::npos) return std::nullopt;
    ++body_start;
    auto second = text.find("```", body_start);
    if (second == std::string::npos) return std::nullopt;
    return text.substr(body_start, second - body_start);
}

double median(std::vector<double> v, double fallback) {
    if (v.empty()) return fallback;
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

// raise RHS numeric bounds of > / >= comparisons by 10%
rules::ExprPtr tighten(const rules::Expr& e) {
    using rules::Expr;
    Expr out = e;
    if (e.kind == Expr::Kind::Compare && (e.cmp == ">" || e.cmp == ">=") &&
        e.rhs->kind == Expr::Kind::Number) {
        Expr num = *e.rhs;
        num.number *= 1.1;
        out.rhs = std::make_shared<const Expr>(std::move(num));
        return std::make_shared<const Expr>(std::move(out));
    }
    if (e.lhs) out.lhs = tighten(*e.lhs);
    if (e.rhs) out.rhs = tighten(*e.rhs);
    return std::make_shared<const Expr>(std::move(out));
}

}  // namespace

AgentContext build_context(const repo::RuleRepository& repo, const DriftEvent& event) {
    AgentContext ctx;
    const auto& perf = repo.perf_log();
    const std::size_t w = std::min(perf.size(), kContextWindow);
    ctx.recent.assign(perf.end() - w, perf.end());
    ctx.active_version = repo.active().version.str();
    ctx.active_rules_text = rules::canonical_text(repo.active().rules);
    ctx.event = event;

    const auto& bank = repo.case_bank();
    for (GroupLabel cls : {GroupLabel::Leadership, GroupLabel::Collaborative}) {
        std::vector<repo::CaseRecord> of_class;
        for (const auto& c : bank)
            if (c.label == cls) of_class.push_back(c);
        if (of_class.empty()) continue;
        std::array<double, rules::FeatureVector::kCount> centroid{};
        for (const auto& c : of_class) {
            auto a = c.features.as_array();
            for (std::size_t k = 0; k < a.size(); ++k) centroid[k] += a[k];
        }
        for (double& x : centroid) x /= (double)of_class.size();
        auto probe = rules::FeatureVector::from_array(centroid);
        auto ranked = repo.query_cases(probe, bank.size());
        auto& dst = cls == GroupLabel::Leadership ? ctx.leadership_exemplars
                                                  : ctx.collaborative_exemplars;
        for (const auto& c : ranked) {
            if (c.label == cls) dst.push_back(c);
            if (dst.size() >= kExemplarsPerClass) break;
        }
    }
    return ctx;
}

std::string ScriptedAgent::request(const std::string&, const std::string& user_prompt) {
    auto block = extract_fenced_block(user_prompt);
    if (!block) throw Error("scripted agent: no context block in prompt");
    json ctx = json::parse(*block);
    const std::string kind = ctx.at("event").at("kind").get<std::string>();
    const long long epoch = ctx.at("event").at("epoch").get<long long>();
    rules::RuleSet active = rules::parse_rules(ctx.at("active_rules").get<std::string>());

    auto lead_values = [&](const char* feature) {
        std::vector<double> v;
        for (const auto& c : ctx.at("leadership_exemplars"))
            v.push_back(c.at(feature).get<double>());
        return v;
    };
    auto has_name = [&](const std::string& n) {
        return std::any_of(active.rules.begin(), active.rules.end(),
                           [&](const rules::Rule& r) { return r.name == n; });
    };

    std::string directives;
    if (kind == "AbruptDrop") {
        const double gap = median(lead_values("top2_gap"), 0.3);
        std::string name = "auto_gap_e" + std::to_string(epoch);
        while (has_name(name)) name += "x";
        active.rules.push_back(rules::parse_rule(
            "RULE " + name + ": IF top2_gap > " + format_double(gap) +
            " THEN Leadership CONF 0.85 PRI 60"));
    } else if (kind == "SustainedDecline") {
        directives = "SET user_rollback_threshold 0.001\n";
        rules::Rule* lowest = nullptr;
        for (auto& r : active.rules)
            if (r.label == GroupLabel::Leadership && (!lowest || r.priority < lowest->priority))
                lowest = &r;
        if (lowest) lowest->condition = tighten(*lowest->condition);
    } else {  // Deadlock
        const double dom = median(lead_values("dominance"), 2.0);
        std::string name = "auto_dom_e" + std::to_string(epoch);
        while (has_name(name)) name += "x";
        active.rules.push_back(rules::parse_rule(
            "RULE " + name + ": IF dominance > " + format_double(dom) +
            " THEN Leadership CONF 0.8 PRI 55"));
    }

    std::string body;
    for (const auto& r : active.rules) body += rules::format_rule(r) + "\n";
    return directives + "```\n" + body + "```\n";
}

LlmAgent::LlmAgent() {
    const char* ep = std::getenv("DALI_LLM_ENDPOINT");
    if (!ep || !*ep) throw Error("DALI_LLM_ENDPOINT is not set");
    endpoint_ = ep;
    const char* model = std::getenv("DALI_LLM_MODEL");
    model_ = model && *model ? model : "default";
    const char* key = std::getenv("DALI_LLM_KEY");
    key_ = key ? key : "";
    if (const char* t = std::getenv("DALI_LLM_TIMEOUT_MS")) timeout_ms_ = std::atol(t);
}

std::string LlmAgent::request(const std::string& role_prompt, const std::string& user_prompt) {
    // split endpoint into base and path
    std::string base = endpoint_, path = "/";
    auto scheme = endpoint_.find("://");
    if (scheme != std::string::npos) {
        auto slash = endpoint_.find('/', scheme + 3);
        if (slash != std::string::npos) {
            base = endpoint_.substr(0, slash);
            path = endpoint_.substr(slash);
        }
    }
    httplib::Client cli(base);
    cli.set_connection_timeout(timeout_ms_ / 1000, (timeout_ms_ % 1000) * 1000);
    cli.set_read_timeout(timeout_ms_ / 1000, (timeout_ms_ % 1000) * 1000);
    cli.set_write_timeout(timeout_ms_ / 1000, (timeout_ms_ % 1000) * 1000);

    json body{{"model", model_},
              {"messages", json::array({json{{"role", "system"}, {"content", role_prompt}},
                                        json{{"role", "user"}, {"content", user_prompt}}})}};
    httplib::Headers headers;
    if (!key_.empty()) headers.emplace("Authorization", "Bearer " + key_);

    auto res = cli.Post(path, headers, body.dump(), "application/json");
    if (!res)
        throw TransportError("agent transport failure: " + httplib::to_string(res.error()));
    if (res->status != 200)
        throw TransportError("agent endpoint returned HTTP " + std::to_string(res->status));

    json reply = json::parse(res->body, nullptr, false);
    if (!reply.is_discarded() && reply.contains("choices") && !reply["choices"].empty()) {
        const auto& choice = reply["choices"][0];
        if (choice.contains("message") && choice["message"].contains("content"))
            return choice["message"]["content"].get<std::string>();
    }
    return res->body;
}

std::unique_ptr<AgentClient> make_agent(const std::string& kind) {
    if (kind == "scripted") return std::make_unique<ScriptedAgent>();
    // absence of the endpoint variable selects the scripted agent
    const char* ep = std::getenv("DALI_LLM_ENDPOINT");
    if (ep && *ep) return std::make_unique<LlmAgent>();
    return std::make_unique<ScriptedAgent>();
}

void AgentJournal::log(const std::string& phase, const std::string& detail, long long epoch) {
    if (path_.empty()) return;
    std::ofstream out(path_, std::ios::app);
    if (!out) return;
    out << json{{"epoch", epoch}, {"phase", phase}, {"detail", detail}}.dump() << "\n";
}

Proposal propose_rules(AgentClient& agent, const AgentContext& ctx, TriggerConfig& cfg,
                       AgentJournal* journal) {
    Proposal prop;
    std::string parse_error;
    for (int attempt = 0; attempt < 3; ++attempt) {
        const std::string user_prompt = build_user_prompt(ctx, parse_error);
        if (journal) journal->log("prompt", user_prompt, ctx.event.epoch);
        const std::string reply = agent.request(kRolePrompt, user_prompt);
        if (journal) journal->log("reply", reply, ctx.event.epoch);
        prop.raw_reply = reply;
        prop.parse_retries = attempt;

        // SET directives live outside the fenced block
        std::istringstream lines(reply);
        std::string line;
        bool in_block = false;
        while (std::getline(lines, line)) {
            if (line.rfind("```", 0) == 0) {
                in_block = !in_block;
                continue;
            }
            if (!in_block && line.rfind("SET user_rollback_threshold ", 0) == 0) {
                const double v = std::strtod(line.c_str() + 28, nullptr);
                if (v > 0) {
                    cfg.user_rollback_threshold = v;
                    if (journal)
                        journal->log("directive", "user_rollback_threshold=" + format_double(v),
                                     ctx.event.epoch);
                }
            }
        }

        const std::string dsl = extract_fenced_block(reply).value_or(reply);
        try {
            prop.candidate = rules::parse_rules(dsl);
            if (prop.candidate->empty()) throw Error("reply contained no rules");
            prop.change_context = std::string("agent ") + agent.name() + " on " +
                                  to_string(ctx.event.kind) + " at epoch " +
                                  std::to_string(ctx.event.epoch) +
                                  (attempt ? " (retries " + std::to_string(attempt) + ")" : "");
            return prop;
        } catch (const Error& e) {
            parse_error = e.what();
            prop.parse_error = parse_error;
            if (journal) journal->log("parse_error", parse_error, ctx.event.epoch);
        }
    }
    prop.candidate.reset();
    prop.change_context = "unparsable agent output after 2 retries";
    return prop;
}

ValidationReport validate_candidate(const std::optional<rules::RuleSet>& candidate,
                                    const std::deque<repo::CaseRecord>& sandbox,
                                    const rules::RuleSet& active_rules,
                                    const ReplayFn& replay) {
    std::size_t lead = 0, collab = 0;
    for (const auto& c : sandbox)
        (c.label == GroupLabel::Leadership ? lead : collab)++;
    if (lead == 0 || collab == 0)
        throw Error("validate_candidate: sandbox needs at least one case per class");

    ValidationReport rep;
    rep.parse_ok = candidate.has_value();
    if (!rep.parse_ok) {
        rep.verdict = ValidationReport::Verdict::Reject;
        return rep;
    }
    rep.candidate_fingerprint = repo::fingerprint(*candidate);

    auto accuracy = [&](const rules::RuleSet& rs) {
        std::size_t hit = 0;
        for (const auto& c : sandbox)
            if (rules::classify_features(rs, c.features).label == c.label) ++hit;
        return (double)hit / (double)sandbox.size();
    };
    rep.sandbox_accuracy = accuracy(*candidate);
    rep.active_accuracy = accuracy(active_rules);
    rep.metric_delta = replay(*candidate) - replay(active_rules);

    const bool pass = rep.sandbox_accuracy >= rep.active_accuracy &&
                      rep.metric_delta >= -0.001;
    rep.verdict = pass ? ValidationReport::Verdict::Commit : ValidationReport::Verdict::Reject;
    return rep;
}

EvolveResult evolve(repo::RuleRepository& repo, const DriftEvent& event, AgentClient& agent,
                    TriggerConfig& cfg, const ReplayFn& replay, long long epoch,
                    AgentJournal* journal) {
    EvolveResult result;
    AgentContext ctx = build_context(repo, event);

    Proposal prop;
    try {
        prop = propose_rules(agent, ctx, cfg, journal);
    } catch (const TransportError& e) {
        result.outcome = EvolveOutcome::NoChange;
        result.detail = e.what();
        if (journal) journal->log("transport_error", e.what(), epoch);
        return result;
    }

    ValidationReport rep =
        validate_candidate(prop.candidate, repo.case_bank(), repo.active().rules, replay);
    result.report = rep;
    if (journal) {
        json j{{"candidate_fingerprint", rep.candidate_fingerprint},
               {"parse_ok", rep.parse_ok},
               {"sandbox_accuracy", rep.sandbox_accuracy},
               {"active_accuracy", rep.active_accuracy},
               {"metric_delta", rep.metric_delta},
               {"verdict", rep.verdict == ValidationReport::Verdict::Commit ? "Commit"
                                                                            : "Reject"}};
        journal->log("validate", j.dump(), epoch);
    }

    if (rep.verdict == ValidationReport::Verdict::Commit) {
        // identical content would be a no-op commit; treat as nothing to do
        if (repo.active().fingerprint == rep.candidate_fingerprint) {
            result.outcome = EvolveOutcome::NoChange;
            result.detail = "candidate identical to active rules";
            if (journal) journal->log("outcome", result.detail, epoch);
            return result;
        }
        const auto& v =
            repo.commit(*prop.candidate, repo::Bump::Minor, prop.change_context, "agent", epoch);
        result.outcome = EvolveOutcome::Committed;
        result.version = v.version;
        result.detail = "committed " + v.version.str();
        if (journal) journal->log("outcome", result.detail, epoch);
        return result;
    }

    // failed validation: restore the last version from before the drift window
    const long long window_start = event.evidence.front().epoch;
    const repo::RuleVersion* target = nullptr;
    for (const auto& v : repo.versions())
        if (v.created_at < window_start) target = &v;
    if (!target || target->fingerprint == repo.active().fingerprint) {
        result.outcome = EvolveOutcome::NoChange;
        result.detail = "validation failed; no earlier version to restore";
        if (journal) journal->log("outcome", result.detail, epoch);
        return result;
    }
    const repo::SemVer target_version = target->version;  // rollback reallocates
    std::string trigger = std::string(to_string(event.kind)) + " at epoch " +
                          std::to_string(event.epoch) + "; candidate rejected";
    result.rollback = repo.rollback(target_version, trigger, epoch);
    result.outcome = EvolveOutcome::RolledBack;
    result.detail = "rolled back to " + target_version.str();
    if (journal) journal->log("outcome", result.detail, epoch);
    return result;
}

}  // namespace dali::agent
