#include "tmpbsp/pddl.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <memory>
#include <sstream>

namespace tmpbsp {

namespace {

// ---------------------------------------------------------------------------
// S-expression layer
// ---------------------------------------------------------------------------

struct Sexp {
    bool is_atom = false;
    std::string atom;
    std::vector<Sexp> items;
    int line = 0;
    int col = 0;

    const std::string& head() const {
        static const std::string empty;
        if (is_atom) return atom;
        if (items.empty() || !items.front().is_atom) return empty;
        return items.front().atom;
    }
};

class Tokenizer {
public:
    explicit Tokenizer(const std::string& text) : text_(text) {}

    Sexp parse_single() {
        skip_ws();
        if (eof()) throw ParseError("empty input", line_, col_);
        Sexp e = parse_expr();
        skip_ws();
        if (!eof()) throw ParseError("trailing content after top-level form", line_, col_);
        return e;
    }

    bool eof() {
        return pos_ >= text_.size();
    }
    void skip_ws() {
        while (pos_ < text_.size()) {
            const char c = text_[pos_];
            if (c == ';') {
                while (pos_ < text_.size() && text_[pos_] != '\n') advance();
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                advance();
            } else {
                break;
            }
        }
    }
    int line() const { return line_; }
    int col() const { return col_; }

private:
    void advance() {
        if (text_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }

    Sexp parse_expr() {
        skip_ws();
        if (eof()) throw ParseError("unexpected end of input", line_, col_);
        Sexp e;
        e.line = line_;
        e.col = col_;
        if (text_[pos_] == '(') {
            advance();
            while (true) {
                skip_ws();
                if (eof()) throw ParseError("unbalanced parentheses", e.line, e.col);
                if (text_[pos_] == ')') {
                    advance();
                    return e;
                }
                e.items.push_back(parse_expr());
            }
        }
        if (text_[pos_] == ')') throw ParseError("unexpected ')'", line_, col_);
        e.is_atom = true;
        while (!eof() && !std::isspace(static_cast<unsigned char>(text_[pos_])) &&
               text_[pos_] != '(' && text_[pos_] != ')' && text_[pos_] != ';') {
            e.atom += text_[pos_];
            advance();
        }
        return e;
    }

    const std::string& text_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
};

[[noreturn]] void fail(const Sexp& at, const std::string& msg) {
    throw ParseError(msg, at.line, at.col);
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return s;
}

/// Parses a typed list: x y - t z - u ... (missing type defaults to "object").
std::vector<Parameter> parse_typed_list(const std::vector<Sexp>& items, std::size_t begin) {
    std::vector<Parameter> out;
    std::vector<std::string> pending;
    for (std::size_t i = begin; i < items.size(); ++i) {
        if (!items[i].is_atom) fail(items[i], "expected symbol in typed list");
        if (items[i].atom == "-") {
            if (i + 1 >= items.size() || !items[i + 1].is_atom) {
                fail(items[i], "expected type after '-'");
            }
            for (auto& name : pending) out.push_back({name, lower(items[i + 1].atom)});
            pending.clear();
            ++i;
        } else {
            pending.push_back(items[i].atom);
        }
    }
    for (auto& name : pending) out.push_back({name, "object"});
    return out;
}

Proposition parse_literal(const Sexp& e) {
    if (e.is_atom || e.items.empty() || !e.items.front().is_atom) {
        fail(e, "expected proposition");
    }
    Proposition p;
    p.predicate = lower(e.items.front().atom);
    for (std::size_t i = 1; i < e.items.size(); ++i) {
        if (!e.items[i].is_atom) fail(e.items[i], "expected symbol argument");
        p.args.push_back(e.items[i].atom);
    }
    return p;
}

/// Strips `at start` / `at end` / `over all` wrappers.
const Sexp& strip_temporal(const Sexp& e) {
    if (!e.is_atom && e.items.size() == 3 && e.items[0].is_atom &&
        (lower(e.items[0].atom) == "at" || lower(e.items[0].atom) == "over")) {
        return e.items[2];
    }
    return e;
}

void collect_conjuncts(const Sexp& e, std::vector<const Sexp*>& out) {
    if (!e.is_atom && !e.items.empty() && e.items.front().is_atom &&
        lower(e.items.front().atom) == "and") {
        for (std::size_t i = 1; i < e.items.size(); ++i) collect_conjuncts(e.items[i], out);
    } else {
        out.push_back(&e);
    }
}

struct DeclTable {
    const Domain* domain;

    void check_prop(const Proposition& p, const Sexp& at) const {
        const PredicateDecl* d = domain->find_predicate(p.predicate);
        if (d == nullptr) fail(at, "undeclared predicate '" + p.predicate + "'");
        if (d->params.size() != p.args.size()) {
            fail(at, "predicate '" + p.predicate + "' expects " +
                         std::to_string(d->params.size()) + " arguments");
        }
    }
    bool is_function(const std::string& name) const {
        return std::any_of(domain->functions.begin(), domain->functions.end(),
                           [&](const PredicateDecl& f) { return f.name == name; });
    }
};

void parse_condition(const Sexp& cond, const DeclTable& decls, ActionSchema& schema) {
    std::vector<const Sexp*> parts;
    collect_conjuncts(cond, parts);
    for (const Sexp* raw : parts) {
        const Sexp& e = strip_temporal(*raw);
        if (!e.is_atom && !e.items.empty() && lower(e.head()) == "not") {
            if (e.items.size() != 2) fail(e, "'not' takes one literal");
            Proposition p = parse_literal(strip_temporal(e.items[1]));
            decls.check_prop(p, e);
            schema.pre_neg.push_back(std::move(p));
        } else {
            Proposition p = parse_literal(e);
            decls.check_prop(p, *raw);
            schema.pre_pos.push_back(std::move(p));
        }
    }
}

void parse_effect(const Sexp& eff, const DeclTable& decls, ActionSchema& schema) {
    std::vector<const Sexp*> parts;
    collect_conjuncts(eff, parts);
    for (const Sexp* raw : parts) {
        const Sexp& e = strip_temporal(*raw);
        if (e.is_atom || e.items.empty()) fail(*raw, "expected effect");
        const std::string op = lower(e.head());
        if (op == "not") {
            if (e.items.size() != 2) fail(e, "'not' takes one literal");
            Proposition p = parse_literal(strip_temporal(e.items[1]));
            decls.check_prop(p, e);
            schema.eff_del.push_back(std::move(p));
        } else if (op == "increase" || op == "assign") {
            if (e.items.size() != 3) fail(e, "'" + op + "' takes a function and a value");
            Proposition fn = parse_literal(e.items[1]);
            if (!decls.is_function(fn.predicate)) {
                fail(e.items[1], "undeclared function '" + fn.predicate + "'");
            }
            if (fn.predicate == "triggered" && op == "increase") {
                schema.triggered_args = fn.args;
            } else if (fn.predicate == "act-cost" && op == "increase" &&
                       !e.items[2].is_atom && e.items[2].items.size() == 1 &&
                       lower(e.items[2].head()) == "external") {
                // The semantic-attachment marker: the indirect variable
                // `external` feeds the direct variable `act-cost`.
                schema.external_cost = true;
            }
            // Other function writes (including the triggered reset) carry no
            // retained numeric state.
        } else {
            Proposition p = parse_literal(e);
            decls.check_prop(p, *raw);
            schema.eff_add.push_back(std::move(p));
        }
    }
}

ActionSchema parse_action(const Sexp& e, const DeclTable& decls, bool durative) {
    ActionSchema schema;
    if (e.items.size() < 2 || !e.items[1].is_atom) fail(e, "action needs a name");
    schema.name = lower(e.items[1].atom);
    for (std::size_t i = 2; i < e.items.size(); i += 2) {
        if (!e.items[i].is_atom) fail(e.items[i], "expected action keyword");
        if (i + 1 >= e.items.size()) fail(e.items[i], "keyword without value");
        const std::string key = lower(e.items[i].atom);
        const Sexp& val = e.items[i + 1];
        if (key == ":parameters") {
            if (val.is_atom) fail(val, "expected parameter list");
            schema.parameters = parse_typed_list(val.items, 0);
        } else if (key == ":duration") {
            // (= ?duration <constant>)
            if (val.is_atom || val.items.size() != 3 || !val.items[2].is_atom) {
                fail(val, "expected (= ?duration <number>)");
            }
            schema.duration = std::stod(val.items[2].atom);
        } else if (key == ":condition" || key == ":precondition") {
            parse_condition(val, decls, schema);
        } else if (key == ":effect") {
            parse_effect(val, decls, schema);
        } else {
            fail(e.items[i], "unsupported action keyword '" + key + "'");
        }
    }
    if (durative && schema.duration == 0.0) {
        // durations are recorded but never contribute to cost
    }
    // Every effect variable must be bound by a parameter.
    auto check_vars = [&](const std::vector<Proposition>& props) {
        for (const auto& p : props) {
            for (const auto& a : p.args) {
                if (a.starts_with("?") &&
                    std::none_of(schema.parameters.begin(), schema.parameters.end(),
                                 [&](const Parameter& q) { return q.name == a; })) {
                    fail(e, "effect variable '" + a + "' not in parameters of '" + schema.name + "'");
                }
            }
        }
    };
    check_vars(schema.eff_add);
    check_vars(schema.eff_del);
    return schema;
}

}  // namespace

std::string Proposition::str() const {
    std::string s = "(" + predicate;
    for (const auto& a : args) s += " " + a;
    return s + ")";
}

std::string GroundAction::str() const {
    std::string s = "(" + schema;
    for (const auto& [var, value] : bindings) {
        (void)var;
        s += " " + value;
    }
    return s + ")";
}

const PredicateDecl* Domain::find_predicate(const std::string& name) const {
    for (const auto& p : predicates) {
        if (p.name == name) return &p;
    }
    return nullptr;
}

Domain parse_domain(const std::string& text) {
    Tokenizer tok(text);
    const Sexp root = tok.parse_single();
    if (root.is_atom || lower(root.head()) != "define") fail(root, "expected (define (domain ...))");

    Domain domain;
    DeclTable decls{&domain};
    for (std::size_t i = 1; i < root.items.size(); ++i) {
        const Sexp& sec = root.items[i];
        if (sec.is_atom || sec.items.empty()) fail(sec, "expected domain section");
        const std::string head = lower(sec.head());
        if (head == "domain") {
            if (sec.items.size() != 2) fail(sec, "expected (domain <name>)");
            domain.name = lower(sec.items[1].atom);
        } else if (head == ":requirements") {
            // accepted and ignored
        } else if (head == ":types") {
            for (const auto& p : parse_typed_list(sec.items, 1)) domain.types.push_back(p.name);
        } else if (head == ":predicates") {
            for (std::size_t j = 1; j < sec.items.size(); ++j) {
                const Sexp& pd = sec.items[j];
                if (pd.is_atom || pd.items.empty()) fail(pd, "expected predicate declaration");
                PredicateDecl d;
                d.name = lower(pd.items.front().atom);
                d.params = parse_typed_list(pd.items, 1);
                for (const auto& q : d.params) {
                    if (q.type != "object" &&
                        std::find(domain.types.begin(), domain.types.end(), q.type) ==
                            domain.types.end()) {
                        fail(pd, "undeclared type '" + q.type + "'");
                    }
                }
                domain.predicates.push_back(std::move(d));
            }
        } else if (head == ":functions") {
            for (std::size_t j = 1; j < sec.items.size(); ++j) {
                const Sexp& fd = sec.items[j];
                if (fd.is_atom || fd.items.empty()) fail(fd, "expected function declaration");
                PredicateDecl d;
                d.name = lower(fd.items.front().atom);
                d.params = parse_typed_list(fd.items, 1);
                domain.functions.push_back(std::move(d));
            }
        } else if (head == ":durative-action" || head == ":action") {
            domain.actions.push_back(parse_action(sec, decls, head == ":durative-action"));
        } else {
            fail(sec, "unsupported construct '" + head + "'");
        }
    }
    return domain;
}

Problem parse_problem(const std::string& text, const Domain& domain) {
    Tokenizer tok(text);
    const Sexp root = tok.parse_single();
    if (root.is_atom || lower(root.head()) != "define") fail(root, "expected (define (problem ...))");

    Problem problem;
    auto check_ground_prop = [&](const Proposition& p, const Sexp& at) {
        const PredicateDecl* d = domain.find_predicate(p.predicate);
        if (d == nullptr) throw SemanticError("unknown predicate '" + p.predicate + "'");
        if (d->params.size() != p.args.size()) {
            throw SemanticError("wrong arity for predicate '" + p.predicate + "'");
        }
        (void)at;
        for (const auto& a : p.args) {
            if (!problem.objects.contains(a)) {
                throw SemanticError("unknown object '" + a + "' in " + p.str());
            }
        }
    };

    for (std::size_t i = 1; i < root.items.size(); ++i) {
        const Sexp& sec = root.items[i];
        if (sec.is_atom || sec.items.empty()) fail(sec, "expected problem section");
        const std::string head = lower(sec.head());
        if (head == "problem") {
            problem.name = lower(sec.items[1].atom);
        } else if (head == ":domain") {
            problem.domain_name = lower(sec.items[1].atom);
        } else if (head == ":objects") {
            for (const auto& p : parse_typed_list(sec.items, 1)) {
                if (p.type != "object" &&
                    std::find(domain.types.begin(), domain.types.end(), p.type) ==
                        domain.types.end()) {
                    throw SemanticError("undeclared object type '" + p.type + "'");
                }
                problem.objects[p.name] = p.type;
            }
        } else if (head == ":init") {
            for (std::size_t j = 1; j < sec.items.size(); ++j) {
                const Sexp& fact = sec.items[j];
                if (!fact.is_atom && fact.head() == "=") continue;  // numeric init, ignored
                Proposition p = parse_literal(fact);
                check_ground_prop(p, fact);
                problem.init.insert(std::move(p));
            }
        } else if (head == ":goal") {
            std::vector<const Sexp*> parts;
            if (sec.items.size() > 1) collect_conjuncts(sec.items[1], parts);
            for (const Sexp* g : parts) {
                Proposition p = parse_literal(*g);
                check_ground_prop(p, *g);
                problem.goal.push_back(std::move(p));
            }
        } else {
            fail(sec, "unsupported construct '" + head + "'");
        }
    }
    return problem;
}

namespace {

Proposition substitute(const Proposition& p, const std::map<std::string, std::string>& bindings) {
    Proposition out;
    out.predicate = p.predicate;
    for (const auto& a : p.args) {
        auto it = bindings.find(a);
        out.args.push_back(it != bindings.end() ? it->second : a);
    }
    return out;
}

}  // namespace

std::vector<GroundAction> ground(const Domain& domain,
                                 const std::map<std::string, std::string>& objects,
                                 bool prune_static, const TaskState& static_facts,
                                 const GroundFilter& filter) {
    // Predicates written by some effect are fluent; the rest are static.
    std::set<std::string> fluent;
    for (const auto& schema : domain.actions) {
        for (const auto& p : schema.eff_add) fluent.insert(p.predicate);
        for (const auto& p : schema.eff_del) fluent.insert(p.predicate);
    }

    std::map<std::string, std::vector<std::string>> by_type;
    for (const auto& [name, type] : objects) by_type[type].push_back(name);

    std::vector<GroundAction> out;
    for (const auto& schema : domain.actions) {
        // Depth-first over parameter bindings with a single scratch map, so
        // pruned bindings are never materialized.
        std::map<std::string, std::string> binding;
        std::function<void(std::size_t)> enumerate = [&](std::size_t depth) {
            if (depth == schema.parameters.size()) {
                if (filter && !filter(schema, binding)) return;
                GroundAction ga;
                ga.schema = schema.name;
                for (const auto& p : schema.pre_pos) ga.pre_pos.push_back(substitute(p, binding));
                if (prune_static) {
                    for (const auto& p : ga.pre_pos) {
                        if (!fluent.contains(p.predicate) && !static_facts.contains(p)) return;
                    }
                }
                for (const auto& p : schema.pre_neg) ga.pre_neg.push_back(substitute(p, binding));
                for (const auto& p : schema.eff_add) ga.eff_add.push_back(substitute(p, binding));
                for (const auto& p : schema.eff_del) ga.eff_del.push_back(substitute(p, binding));
                ga.external_cost = schema.external_cost;
                for (const auto& v : schema.triggered_args) {
                    auto it = binding.find(v);
                    ga.triggered.push_back(it != binding.end() ? it->second : v);
                }
                ga.bindings = binding;
                out.push_back(std::move(ga));
                return;
            }
            const auto& param = schema.parameters[depth];
            for (const auto& obj : by_type[param.type]) {
                binding[param.name] = obj;
                enumerate(depth + 1);
            }
            binding.erase(param.name);
        };
        enumerate(0);
    }
    return out;
}

bool applicable(const TaskState& s, const GroundAction& a) {
    for (const auto& p : a.pre_pos) {
        if (!s.contains(p)) return false;
    }
    for (const auto& p : a.pre_neg) {
        if (s.contains(p)) return false;
    }
    return true;
}

TaskState apply(const TaskState& s, const GroundAction& a) {
    if (!applicable(s, a)) {
        throw SemanticError("action " + a.str() + " not applicable");
    }
    TaskState out = s;
    for (const auto& p : a.eff_del) out.erase(p);
    for (const auto& p : a.eff_add) out.insert(p);
    return out;
}

bool goal_satisfied(const TaskState& s, const std::vector<Proposition>& goal) {
    return std::all_of(goal.begin(), goal.end(),
                       [&](const Proposition& g) { return s.contains(g); });
}

}  // namespace tmpbsp
