#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "dali/features.hpp"

namespace dali::rules {

// Parse failure with 1-based line/column position.
class ParseError : public Error {
public:
    ParseError(const std::string& msg, int line, int col)
        : Error(std::to_string(line) + ":" + std::to_string(col) + ": " + msg),
          line(line),
          col(col) {}
    int line;
    int col;
};

// Condition AST. Numeric and boolean nodes share one type; the parser
// enforces that operators see the kinds they expect.
struct Expr {
    enum class Kind { Number, Feature, Arith, Compare, And, Or, Not };
    Kind kind = Kind::Number;
    double number = 0.0;       // Number
    std::size_t feature = 0;   // Feature: index into FeatureVector::names()
    char op = 0;               // Arith: + - * /
    std::string cmp;           // Compare: < <= > >= ==
    std::shared_ptr<const Expr> lhs, rhs;  // binary ops; Not uses lhs

    bool is_boolean() const {
        return kind == Kind::Compare || kind == Kind::And || kind == Kind::Or ||
               kind == Kind::Not;
    }
};

using ExprPtr = std::shared_ptr<const Expr>;

struct Rule {
    std::string name;
    ExprPtr condition;
    GroupLabel label = GroupLabel::Collaborative;
    double confidence = 0.6;  // (0.5, 1.0]
    int priority = 0;
};

struct RuleSet {
    std::vector<Rule> rules;

    bool empty() const { return rules.empty(); }
    // rules ordered by descending priority, ties by ascending name
    std::vector<const Rule*> by_priority() const;
};

bool equal(const Expr& a, const Expr& b);
bool equal(const Rule& a, const Rule& b);
bool equal(const RuleSet& a, const RuleSet& b);

// `RULE name: IF expr THEN label CONF number PRI integer`
Rule parse_rule(const std::string& text);
// one rule per line, '#' comments, blank lines ignored
RuleSet parse_rules(const std::string& text);

std::string format_rule(const Rule& r);
// priority-then-name ordering, normalized whitespace; fingerprint input
std::string canonical_text(const RuleSet& rs);

// Total condition evaluation. Division by zero anywhere in the condition
// makes the rule non-matching and sets the flag.
struct EvalOutcome {
    bool matched = false;
    bool div_by_zero = false;
};
EvalOutcome evaluate_condition(const Expr& e, const FeatureVector& f);

std::optional<std::pair<GroupLabel, double>> evaluate_rule(const Rule& r,
                                                           const FeatureVector& f);

struct TraceEntry {
    std::string rule;
    bool matched = false;
    bool div_by_zero = false;
};

struct SymbolicDecision {
    GroupLabel label = GroupLabel::Collaborative;
    ProbPair prob;
    std::optional<std::string> matched_rule;
    std::vector<TraceEntry> trace;
    bool singleton_bypass = false;
};

inline constexpr double kDefaultConfidence = 0.6;

// Highest-priority match decides; every rule's outcome lands in the trace.
SymbolicDecision classify_features(const RuleSet& rs, const FeatureVector& f);
// Extracts features first; single-member groups bypass the rules and are
// Leadership with confidence 1.
SymbolicDecision classify_symbolic(const RuleSet& rs, const model::MemberWeightVector& w);

}  // namespace dali::rules
