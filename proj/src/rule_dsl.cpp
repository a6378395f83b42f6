#include "dali/rule_dsl.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <sstream>

namespace dali::rules {

std::vector<const Rule*> RuleSet::by_priority() const {
    std::vector<const Rule*> out;
    out.reserve(rules.size());
    for (const auto& r : rules) out.push_back(&r);
    std::sort(out.begin(), out.end(), [](const Rule* a, const Rule* b) {
        if (a->priority != b->priority) return a->priority > b->priority;
        return a->name < b->name;
    });
    return out;
}

bool equal(const Expr& a, const Expr& b) {
    if (a.kind != b.kind) return false;
    switch (a.kind) {
        case Expr::Kind::Number: return a.number == b.number;
        case Expr::Kind::Feature: return a.feature == b.feature;
        case Expr::Kind::Arith:
            return a.op == b.op && equal(*a.lhs, *b.lhs) && equal(*a.rhs, *b.rhs);
        case Expr::Kind::Compare:
            return a.cmp == b.cmp && equal(*a.lhs, *b.lhs) && equal(*a.rhs, *b.rhs);
        case Expr::Kind::And:
        case Expr::Kind::Or:
            return equal(*a.lhs, *b.lhs) && equal(*a.rhs, *b.rhs);
        case Expr::Kind::Not: return equal(*a.lhs, *b.lhs);
    }
    return false;
}

bool equal(const Rule& a, const Rule& b) {
    return a.name == b.name && a.label == b.label && a.confidence == b.confidence &&
           a.priority == b.priority && equal(*a.condition, *b.condition);
}

bool equal(const RuleSet& a, const RuleSet& b) {
    if (a.rules.size() != b.rules.size()) return false;
    for (std::size_t k = 0; k < a.rules.size(); ++k)
        if (!equal(a.rules[k], b.rules[k])) return false;
    return true;
}

// ---------------------------------------------------------------------------
// lexer
// ---------------------------------------------------------------------------

namespace {

enum class Tok {
    KwRule, KwIf, KwThen, KwConf, KwPri, KwAnd, KwOr, KwNot,
    Ident, Number, Label,
    Lt, Le, Gt, Ge, Eq,
    Plus, Minus, Star, Slash,
    LParen, RParen, Colon,
    End
};

struct Token {
    Tok kind;
    std::string text;
    double number = 0.0;
    int col = 0;
};

struct Lexer {
    const std::string& src;
    int line;
    std::size_t pos = 0;

    Lexer(const std::string& s, int line) : src(s), line(line) {}

    [[noreturn]] void fail(const std::string& msg, int col) const {
        throw ParseError(msg, line, col);
    }

    std::vector<Token> run() {
        std::vector<Token> out;
        while (pos < src.size()) {
            char c = src[pos];
            int col = (int)pos + 1;
            if (c == ' ' || c == '\t') { ++pos; continue; }
            if (c == '#') break;
            if (std::isdigit((unsigned char)c) ||
                (c == '.' && pos + 1 < src.size() && std::isdigit((unsigned char)src[pos + 1]))) {
                std::size_t start = pos;
                while (pos < src.size() &&
                       (std::isdigit((unsigned char)src[pos]) || src[pos] == '.'))
                    ++pos;
                if (pos < src.size() && (src[pos] == 'e' || src[pos] == 'E')) {
                    ++pos;
                    if (pos < src.size() && (src[pos] == '+' || src[pos] == '-')) ++pos;
                    while (pos < src.size() && std::isdigit((unsigned char)src[pos])) ++pos;
                }
                std::string text = src.substr(start, pos - start);
                errno = 0;
                char* end = nullptr;
                double v = std::strtod(text.c_str(), &end);
                if (errno != 0 || end != text.c_str() + text.size())
                    fail("malformed number '" + text + "'", col);
                out.push_back({Tok::Number, text, v, col});
                continue;
            }
            if (std::isalpha((unsigned char)c) || c == '_') {
                std::size_t start = pos;
                while (pos < src.size() &&
                       (std::isalnum((unsigned char)src[pos]) || src[pos] == '_'))
                    ++pos;
                std::string text = src.substr(start, pos - start);
                Tok kind = Tok::Ident;
                if (text == "RULE") kind = Tok::KwRule;
                else if (text == "IF") kind = Tok::KwIf;
                else if (text == "THEN") kind = Tok::KwThen;
                else if (text == "CONF") kind = Tok::KwConf;
                else if (text == "PRI") kind = Tok::KwPri;
                else if (text == "AND") kind = Tok::KwAnd;
                else if (text == "OR") kind = Tok::KwOr;
                else if (text == "NOT") kind = Tok::KwNot;
                else if (text == "Leadership" || text == "Collaborative") kind = Tok::Label;
                out.push_back({kind, text, 0.0, col});
                continue;
            }
            auto two = [&](char a, char b) {
                return c == a && pos + 1 < src.size() && src[pos + 1] == b;
            };
            if (two('<', '=')) { out.push_back({Tok::Le, "<=", 0, col}); pos += 2; continue; }
            if (two('>', '=')) { out.push_back({Tok::Ge, ">=", 0, col}); pos += 2; continue; }
            if (two('=', '=')) { out.push_back({Tok::Eq, "==", 0, col}); pos += 2; continue; }
            switch (c) {
                case '<': out.push_back({Tok::Lt, "<", 0, col}); break;
                case '>': out.push_back({Tok::Gt, ">", 0, col}); break;
                case '+': out.push_back({Tok::Plus, "+", 0, col}); break;
                case '-': out.push_back({Tok::Minus, "-", 0, col}); break;
                case '*': out.push_back({Tok::Star, "*", 0, col}); break;
                case '/': out.push_back({Tok::Slash, "/", 0, col}); break;
                case '(': out.push_back({Tok::LParen, "(", 0, col}); break;
                case ')': out.push_back({Tok::RParen, ")", 0, col}); break;
                case ':': out.push_back({Tok::Colon, ":", 0, col}); break;
                default: fail(std::string("unexpected character '") + c + "'", col);
            }
            ++pos;
        }
        out.push_back({Tok::End, "", 0.0, (int)src.size() + 1});
        return out;
    }
};

// ---------------------------------------------------------------------------
// recursive-descent parser
// ---------------------------------------------------------------------------

struct Parser {
    std::vector<Token> toks;
    std::size_t at = 0;
    int line;

    const Token& peek() const { return toks[at]; }
    Token take() { return toks[at++]; }

    [[noreturn]] void fail(const std::string& msg) const {
        throw ParseError(msg, line, peek().col);
    }

    Token expect(Tok kind, const std::string& what) {
        if (peek().kind != kind) fail("expected " + what + ", got '" + peek().text + "'");
        return take();
    }

    static ExprPtr mk(Expr e) { return std::make_shared<const Expr>(std::move(e)); }

    ExprPtr parse_expr() { return parse_or(); }

    ExprPtr parse_or() {
        ExprPtr lhs = parse_and();
        while (peek().kind == Tok::KwOr) {
            take();
            ExprPtr rhs = parse_and();
            require_bool(lhs, "OR");
            require_bool(rhs, "OR");
            Expr e;
            e.kind = Expr::Kind::Or;
            e.lhs = lhs;
            e.rhs = rhs;
            lhs = mk(std::move(e));
        }
        return lhs;
    }

    ExprPtr parse_and() {
        ExprPtr lhs = parse_not();
        while (peek().kind == Tok::KwAnd) {
            take();
            ExprPtr rhs = parse_not();
            require_bool(lhs, "AND");
            require_bool(rhs, "AND");
            Expr e;
            e.kind = Expr::Kind::And;
            e.lhs = lhs;
            e.rhs = rhs;
            lhs = mk(std::move(e));
        }
        return lhs;
    }

    ExprPtr parse_not() {
        if (peek().kind == Tok::KwNot) {
            take();
            ExprPtr inner = parse_cmp();
            require_bool(inner, "NOT");
            Expr e;
            e.kind = Expr::Kind::Not;
            e.lhs = inner;
            return mk(std::move(e));
        }
        return parse_cmp();
    }

    ExprPtr parse_cmp() {
        ExprPtr lhs = parse_sum();
        Tok k = peek().kind;
        if (k == Tok::Lt || k == Tok::Le || k == Tok::Gt || k == Tok::Ge || k == Tok::Eq) {
            Token op = take();
            ExprPtr rhs = parse_sum();
            require_num(lhs, op.text);
            require_num(rhs, op.text);
            Expr e;
            e.kind = Expr::Kind::Compare;
            e.cmp = op.text;
            e.lhs = lhs;
            e.rhs = rhs;
            return mk(std::move(e));
        }
        return lhs;
    }

    ExprPtr parse_sum() {
        ExprPtr lhs = parse_prod();
        while (peek().kind == Tok::Plus || peek().kind == Tok::Minus) {
            Token op = take();
            ExprPtr rhs = parse_prod();
            require_num(lhs, op.text);
            require_num(rhs, op.text);
            Expr e;
            e.kind = Expr::Kind::Arith;
            e.op = op.text[0];
            e.lhs = lhs;
            e.rhs = rhs;
            lhs = mk(std::move(e));
        }
        return lhs;
    }

    ExprPtr parse_prod() {
        ExprPtr lhs = parse_atom();
        while (peek().kind == Tok::Star || peek().kind == Tok::Slash) {
            Token op = take();
            ExprPtr rhs = parse_atom();
            require_num(lhs, op.text);
            require_num(rhs, op.text);
            Expr e;
            e.kind = Expr::Kind::Arith;
            e.op = op.text[0];
            e.lhs = lhs;
            e.rhs = rhs;
            lhs = mk(std::move(e));
        }
        return lhs;
    }

    ExprPtr parse_atom() {
        const Token& t = peek();
        if (t.kind == Tok::Number) {
            Token n = take();
            Expr e;
            e.kind = Expr::Kind::Number;
            e.number = n.number;
            return mk(std::move(e));
        }
        if (t.kind == Tok::Ident) {
            Token id = take();
            std::size_t idx = feature_index(id.text);
            if (idx == (std::size_t)-1)
                throw ParseError("unknown feature name '" + id.text + "'", line, id.col);
            Expr e;
            e.kind = Expr::Kind::Feature;
            e.feature = idx;
            return mk(std::move(e));
        }
        if (t.kind == Tok::LParen) {
            take();
            ExprPtr inner = parse_expr();
            expect(Tok::RParen, "')'");
            return inner;
        }
        fail("expected number, feature or '(', got '" + t.text + "'");
    }

    void require_bool(const ExprPtr& e, const std::string& ctx) const {
        if (!e->is_boolean())
            fail("type error: " + ctx + " needs a boolean operand");
    }
    void require_num(const ExprPtr& e, const std::string& ctx) const {
        if (e->is_boolean())
            fail("type error: '" + ctx + "' needs numeric operands");
    }

    Rule parse_rule_line() {
        expect(Tok::KwRule, "'RULE'");
        Token name = expect(Tok::Ident, "rule name");
        expect(Tok::Colon, "':'");
        expect(Tok::KwIf, "'IF'");
        ExprPtr cond = parse_expr();
        if (!cond->is_boolean()) fail("type error: rule condition must be boolean");
        expect(Tok::KwThen, "'THEN'");
        Token label = expect(Tok::Label, "label Leadership or Collaborative");
        expect(Tok::KwConf, "'CONF'");
        Token conf = expect(Tok::Number, "confidence");
        if (!(conf.number > 0.5 && conf.number <= 1.0))
            throw ParseError("confidence must lie in (0.5, 1.0]", line, conf.col);
        expect(Tok::KwPri, "'PRI'");
        Token pri = expect(Tok::Number, "priority");
        if (pri.number != std::floor(pri.number))
            throw ParseError("priority must be an integer", line, pri.col);
        expect(Tok::End, "end of line");

        Rule r;
        r.name = name.text;
        r.condition = cond;
        r.label = label.text == "Leadership" ? GroupLabel::Leadership
                                             : GroupLabel::Collaborative;
        r.confidence = conf.number;
        r.priority = (int)pri.number;
        return r;
    }
};

Rule parse_rule_at(const std::string& text, int line) {
    Parser p{Lexer(text, line).run(), 0, line};
    return p.parse_rule_line();
}

std::string format_number(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    (void)ec;
    return std::string(buf, end);
}

int precedence(const Expr& e) {
    switch (e.kind) {
        case Expr::Kind::Or: return 1;
        case Expr::Kind::And: return 2;
        case Expr::Kind::Not: return 3;
        case Expr::Kind::Compare: return 4;
        case Expr::Kind::Arith: return e.op == '+' || e.op == '-' ? 5 : 6;
        default: return 7;
    }
}

void format_expr(const Expr& e, std::string& out);

void format_child(const Expr& child, int min_prec, bool strict, std::string& out) {
    const int p = precedence(child);
    const bool parens = strict ? p <= min_prec : p < min_prec;
    if (parens) out += '(';
    format_expr(child, out);
    if (parens) out += ')';
}

void format_expr(const Expr& e, std::string& out) {
    switch (e.kind) {
        case Expr::Kind::Number: out += format_number(e.number); break;
        case Expr::Kind::Feature: out += FeatureVector::names()[e.feature]; break;
        case Expr::Kind::Arith: {
            const int p = precedence(e);
            format_child(*e.lhs, p, false, out);
            out += ' ';
            out += e.op;
            out += ' ';
            format_child(*e.rhs, p, true, out);
            break;
        }
        case Expr::Kind::Compare: {
            format_child(*e.lhs, 4, true, out);
            out += ' ' + e.cmp + ' ';
            format_child(*e.rhs, 4, true, out);
            break;
        }
        case Expr::Kind::And: {
            format_child(*e.lhs, 2, false, out);
            out += " AND ";
            format_child(*e.rhs, 2, true, out);
            break;
        }
        case Expr::Kind::Or: {
            format_child(*e.lhs, 1, false, out);
            out += " OR ";
            format_child(*e.rhs, 1, true, out);
            break;
        }
        case Expr::Kind::Not: {
            out += "NOT ";
            format_child(*e.lhs, 3, true, out);
            break;
        }
    }
}

}  // namespace

Rule parse_rule(const std::string& text) { return parse_rule_at(text, 1); }

RuleSet parse_rules(const std::string& text) {
    RuleSet rs;
    std::istringstream in(text);
    std::string line;
    int ln = 0;
    while (std::getline(in, line)) {
        ++ln;
        std::string stripped = line;
        auto hash = stripped.find('#');
        if (hash != std::string::npos) stripped.resize(hash);
        if (stripped.find_first_not_of(" \t\r") == std::string::npos) continue;
        if (!stripped.empty() && stripped.back() == '\r') stripped.pop_back();
        rs.rules.push_back(parse_rule_at(stripped, ln));
    }
    return rs;
}

std::string format_rule(const Rule& r) {
    std::string out = "RULE " + r.name + ": IF ";
    format_expr(*r.condition, out);
    out += " THEN ";
    out += r.label == GroupLabel::Leadership ? "Leadership" : "Collaborative";
    out += " CONF " + format_number(r.confidence);
    out += " PRI " + std::to_string(r.priority);
    return out;
}

std::string canonical_text(const RuleSet& rs) {
    std::string out;
    for (const Rule* r : rs.by_priority()) {
        out += format_rule(*r);
        out += '\n';
    }
    return out;
}

// ---------------------------------------------------------------------------
// evaluation
// ---------------------------------------------------------------------------

namespace {

struct EvalState {
    const FeatureVector& f;
    bool div_by_zero = false;
};

double eval_num(const Expr& e, EvalState& st);

bool eval_bool(const Expr& e, EvalState& st) {
    switch (e.kind) {
        case Expr::Kind::And: return eval_bool(*e.lhs, st) && eval_bool(*e.rhs, st);
        case Expr::Kind::Or: return eval_bool(*e.lhs, st) || eval_bool(*e.rhs, st);
        case Expr::Kind::Not: return !eval_bool(*e.lhs, st);
        case Expr::Kind::Compare: {
            double a = eval_num(*e.lhs, st);
            double b = eval_num(*e.rhs, st);
            if (e.cmp == "<") return a < b;
            if (e.cmp == "<=") return a <= b;
            if (e.cmp == ">") return a > b;
            if (e.cmp == ">=") return a >= b;
            return a == b;
        }
        default: return false;
    }
}

double eval_num(const Expr& e, EvalState& st) {
    switch (e.kind) {
        case Expr::Kind::Number: return e.number;
        case Expr::Kind::Feature: return st.f.by_index(e.feature);
        case Expr::Kind::Arith: {
            double a = eval_num(*e.lhs, st);
            double b = eval_num(*e.rhs, st);
            switch (e.op) {
                case '+': return a + b;
                case '-': return a - b;
                case '*': return a * b;
                default:
                    if (b == 0.0) {
                        st.div_by_zero = true;
                        return 0.0;
                    }
                    return a / b;
            }
        }
        default: return 0.0;
    }
}

}  // namespace

EvalOutcome evaluate_condition(const Expr& e, const FeatureVector& f) {
    EvalState st{f};
    bool matched = eval_bool(e, st);
    if (st.div_by_zero) matched = false;
    return {matched, st.div_by_zero};
}

std::optional<std::pair<GroupLabel, double>> evaluate_rule(const Rule& r,
                                                           const FeatureVector& f) {
    auto out = evaluate_condition(*r.condition, f);
    if (!out.matched) return std::nullopt;
    return std::make_pair(r.label, r.confidence);
}

SymbolicDecision classify_features(const RuleSet& rs, const FeatureVector& f) {
    if (rs.empty()) throw Error("classify_symbolic: empty rule set");
    SymbolicDecision d;
    bool decided = false;
    for (const Rule* r : rs.by_priority()) {
        auto out = evaluate_condition(*r->condition, f);
        d.trace.push_back({r->name, out.matched, out.div_by_zero});
        if (out.matched && !decided) {
            decided = true;
            d.matched_rule = r->name;
            d.label = r->label;
            if (r->label == GroupLabel::Leadership)
                d.prob = {r->confidence, 1.0 - r->confidence};
            else
                d.prob = {1.0 - r->confidence, r->confidence};
        }
    }
    if (!decided) {
        d.label = GroupLabel::Collaborative;
        d.prob = {1.0 - kDefaultConfidence, kDefaultConfidence};
    }
    return d;
}

SymbolicDecision classify_symbolic(const RuleSet& rs, const model::MemberWeightVector& w) {
    if (rs.empty()) throw Error("classify_symbolic: empty rule set");
    if (w.weights.size() == 1) {
        SymbolicDecision d;
        d.label = GroupLabel::Leadership;
        d.prob = {1.0, 0.0};
        d.singleton_bypass = true;
        return d;
    }
    return classify_features(rs, extract_features(w));
}

}  // namespace dali::rules
