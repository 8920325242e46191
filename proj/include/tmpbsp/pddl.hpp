#pragma once

#include <functional>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace tmpbsp {

struct ParseError : std::runtime_error {
    ParseError(const std::string& msg, int line, int col)
        : std::runtime_error(msg + " (line " + std::to_string(line) + ", column " +
                             std::to_string(col) + ")"),
          line(line),
          column(col) {}
    int line;
    int column;
};

struct SemanticError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Ground or lifted proposition: predicate name plus argument symbols.
struct Proposition {
    std::string predicate;
    std::vector<std::string> args;

    auto operator<=>(const Proposition&) const = default;
    std::string str() const;
};

/// Conjunction-of-propositions state with set semantics.
using TaskState = std::set<Proposition>;

struct Parameter {
    std::string name;  // includes the leading '?'
    std::string type;
};

struct PredicateDecl {
    std::string name;
    std::vector<Parameter> params;
};

/// Lifted action. Temporal annotations are parsed but collapsed: the action
/// is applied atomically with delete-then-add semantics.
struct ActionSchema {
    std::string name;
    std::vector<Parameter> parameters;
    double duration = 0.0;
    std::vector<Proposition> pre_pos;
    std::vector<Proposition> pre_neg;
    std::vector<Proposition> eff_add;
    std::vector<Proposition> eff_del;
    bool external_cost = false;               // carries (increase (act-cost) (external))
    std::vector<std::string> triggered_args;  // variables of the triggered payload, in order
};

struct Domain {
    std::string name;
    std::vector<std::string> types;
    std::vector<PredicateDecl> predicates;
    std::vector<PredicateDecl> functions;
    std::vector<ActionSchema> actions;

    const PredicateDecl* find_predicate(const std::string& name) const;
};

struct Problem {
    std::string name;
    std::string domain_name;
    std::map<std::string, std::string> objects;  // object -> type
    TaskState init;
    std::vector<Proposition> goal;
};

struct GroundAction {
    std::string schema;
    std::map<std::string, std::string> bindings;  // ?var -> constant
    std::vector<Proposition> pre_pos;
    std::vector<Proposition> pre_neg;
    std::vector<Proposition> eff_add;
    std::vector<Proposition> eff_del;
    bool external_cost = false;
    std::vector<std::string> triggered;  // bound payload tuple

    std::string str() const;
};

Domain parse_domain(const std::string& text);
Problem parse_problem(const std::string& text, const Domain& domain);

/// Binding-level veto applied before a ground action is materialized.
using GroundFilter =
    std::function<bool(const ActionSchema&, const std::map<std::string, std::string>&)>;

/// All type-consistent bindings of every schema. When prune_static is true,
/// bindings whose static precondition facts (predicates never touched by any
/// effect) are absent from static_facts are dropped.
std::vector<GroundAction> ground(const Domain& domain,
                                 const std::map<std::string, std::string>& objects,
                                 bool prune_static = false, const TaskState& static_facts = {},
                                 const GroundFilter& filter = {});

bool applicable(const TaskState& s, const GroundAction& a);

/// Delete-then-add transition; throws when a is not applicable in s.
TaskState apply(const TaskState& s, const GroundAction& a);

bool goal_satisfied(const TaskState& s, const std::vector<Proposition>& goal);

}  // namespace tmpbsp
