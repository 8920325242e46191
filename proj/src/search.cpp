#include "tmpbsp/search.hpp"

#include <algorithm>
#include <map>
#include <queue>
#include <set>
#include <unordered_map>

namespace tmpbsp {

namespace {

using FluentState = std::vector<int>;  // sorted interned proposition ids

struct FlatAction {
    int index = -1;  // into the caller's action list
    std::vector<int> pre_pos, pre_neg, add, del;
};

struct StateKey {
    FluentState state;
    OracleContext context;
    bool operator==(const StateKey&) const = default;
};

struct StateKeyHash {
    std::size_t operator()(const StateKey& k) const {
        std::size_t h = 0x9e3779b97f4a7c15ULL;
        for (int v : k.state) h = h * 1099511628211ULL ^ static_cast<std::size_t>(v + 1);
        h ^= 0x517cc1b727220a95ULL;
        for (int v : k.context) h = h * 1099511628211ULL ^ static_cast<std::size_t>(v + 2);
        return h;
    }
};

bool sorted_contains(const FluentState& s, int id) {
    return std::binary_search(s.begin(), s.end(), id);
}

FluentState flat_apply(const FluentState& s, const FlatAction& a) {
    FluentState out;
    out.reserve(s.size() + a.add.size());
    std::set_difference(s.begin(), s.end(), a.del.begin(), a.del.end(), std::back_inserter(out));
    FluentState merged;
    merged.reserve(out.size() + a.add.size());
    std::set_union(out.begin(), out.end(), a.add.begin(), a.add.end(), std::back_inserter(merged));
    return merged;
}

}  // namespace

TaskPlan search_optimal_plan(const TaskState& init, const std::vector<Proposition>& goal,
                             const std::vector<GroundAction>& actions, const CostOracle& oracle,
                             const OracleContext& initial_context, const SearchOptions& options) {
    // --- Intern fluent propositions (those any effect can change). ---
    std::map<Proposition, int> ids;
    std::set<std::string> fluent_preds;
    for (const auto& a : actions) {
        for (const auto& p : a.eff_add) fluent_preds.insert(p.predicate);
        for (const auto& p : a.eff_del) fluent_preds.insert(p.predicate);
    }
    auto intern = [&](const Proposition& p) {
        auto [it, inserted] = ids.emplace(p, static_cast<int>(ids.size()));
        return it->second;
    };
    std::vector<Proposition> by_id;
    auto is_fluent = [&](const Proposition& p) { return fluent_preds.contains(p.predicate); };

    TaskState static_init;
    FluentState start;
    for (const auto& p : init) {
        if (is_fluent(p)) {
            start.push_back(intern(p));
        } else {
            static_init.insert(p);
        }
    }
    std::sort(start.begin(), start.end());

    // --- Flatten actions, discarding those whose static preconditions fail. ---
    std::vector<FlatAction> flat;
    for (std::size_t i = 0; i < actions.size(); ++i) {
        const auto& a = actions[i];
        bool statically_ok = true;
        FlatAction fa;
        fa.index = static_cast<int>(i);
        for (const auto& p : a.pre_pos) {
            if (is_fluent(p)) {
                fa.pre_pos.push_back(intern(p));
            } else if (!static_init.contains(p)) {
                statically_ok = false;
                break;
            }
        }
        if (!statically_ok) continue;
        for (const auto& p : a.pre_neg) {
            if (is_fluent(p)) {
                fa.pre_neg.push_back(intern(p));
            } else if (static_init.contains(p)) {
                statically_ok = false;
                break;
            }
        }
        if (!statically_ok) continue;
        for (const auto& p : a.eff_add) fa.add.push_back(intern(p));
        for (const auto& p : a.eff_del) fa.del.push_back(intern(p));
        for (auto* v : {&fa.pre_pos, &fa.pre_neg, &fa.add, &fa.del}) {
            // Degenerate groundings can repeat a proposition; the set-based
            // semantics collapse duplicates, so the flat form must too.
            std::sort(v->begin(), v->end());
            v->erase(std::unique(v->begin(), v->end()), v->end());
        }
        flat.push_back(std::move(fa));
    }

    // --- Goal in interned form. ---
    FluentState fluent_goal;
    for (const auto& g : goal) {
        if (is_fluent(g)) {
            fluent_goal.push_back(intern(g));
        } else if (!static_init.contains(g)) {
            throw NoPlanError("goal proposition " + g.str() + " is statically unreachable");
        }
    }
    std::sort(fluent_goal.begin(), fluent_goal.end());
    fluent_goal.erase(std::unique(fluent_goal.begin(), fluent_goal.end()), fluent_goal.end());
    auto goal_reached = [&](const FluentState& s) {
        return std::includes(s.begin(), s.end(), fluent_goal.begin(), fluent_goal.end());
    };

    // --- Successor generator: index actions by their first positive fluent
    // precondition; actions without one are always candidates. ---
    std::unordered_map<int, std::vector<int>> by_first_pre;
    std::vector<int> unconditional;
    for (std::size_t i = 0; i < flat.size(); ++i) {
        if (flat[i].pre_pos.empty()) {
            unconditional.push_back(static_cast<int>(i));
        } else {
            by_first_pre[flat[i].pre_pos.front()].push_back(static_cast<int>(i));
        }
    }
    auto candidates_for = [&](const FluentState& s, std::vector<int>& out) {
        out = unconditional;
        for (int id : s) {
            auto it = by_first_pre.find(id);
            if (it != by_first_pre.end()) out.insert(out.end(), it->second.begin(), it->second.end());
        }
    };

    by_id.resize(ids.size());
    for (const auto& [p, id] : ids) by_id[id] = p;
    auto to_task_state = [&](const FluentState& s) {
        TaskState out = static_init;
        for (int id : s) out.insert(by_id[id]);
        return out;
    };

    // --- Best-first search over (state, context). ---
    struct Node {
        StateKey key;
        double g = 0.0;
        int parent = -1;
        int via_flat = -1;
        double via_cost = 0.0;
        bool closed = false;
    };
    std::vector<Node> nodes;
    std::unordered_map<StateKey, int, StateKeyHash> seen;
    using QItem = std::pair<double, int>;  // (f, node)
    std::priority_queue<QItem, std::vector<QItem>, std::greater<>> open;

    TaskPlan plan;
    std::map<std::pair<int, OracleContext>, std::optional<OracleOutcome>> memo;
    auto query_oracle = [&](const FlatAction& fa, const FluentState& s, const OracleContext& ctx)
        -> std::optional<OracleOutcome> {
        const auto key = std::make_pair(fa.index, ctx);
        if (options.memoize) {
            auto it = memo.find(key);
            if (it != memo.end()) return it->second;
        }
        ++plan.oracle_calls;
        auto outcome = oracle(actions[fa.index], to_task_state(s), ctx);
        if (outcome && outcome->cost < 0.0) {
            throw std::logic_error("cost oracle returned a negative cost");
        }
        if (options.memoize) memo.emplace(key, outcome);
        return outcome;
    };
    auto h_of = [&](const FluentState& s) {
        return options.heuristic ? options.heuristic(to_task_state(s)) : 0.0;
    };

    nodes.push_back({{start, initial_context}, 0.0, -1, -1, 0.0, false});
    seen.emplace(nodes[0].key, 0);
    open.emplace(h_of(start), 0);

    int goal_node = -1;
    std::vector<int> cand;
    while (!open.empty()) {
        auto [f, ni] = open.top();
        open.pop();
        if (nodes[ni].closed) continue;
        nodes[ni].closed = true;
        ++plan.expanded_states;
        if (goal_reached(nodes[ni].key.state)) {
            goal_node = ni;
            break;
        }
        const FluentState state = nodes[ni].key.state;
        const OracleContext ctx = nodes[ni].key.context;
        const double g = nodes[ni].g;
        candidates_for(state, cand);
        for (int fi : cand) {
            const FlatAction& fa = flat[fi];
            if (!std::includes(state.begin(), state.end(), fa.pre_pos.begin(), fa.pre_pos.end()))
                continue;
            bool blocked = false;
            for (int id : fa.pre_neg) {
                if (sorted_contains(state, id)) {
                    blocked = true;
                    break;
                }
            }
            if (blocked) continue;
            auto outcome = query_oracle(fa, state, ctx);
            if (!outcome) continue;  // infeasible motion, planner routes around
            StateKey next{flat_apply(state, fa), outcome->next_context};
            const double ng = g + outcome->cost;
            auto [it, inserted] = seen.emplace(next, static_cast<int>(nodes.size()));
            if (inserted) {
                nodes.push_back({std::move(next), ng, ni, fi, outcome->cost, false});
                open.emplace(ng + h_of(nodes.back().key.state), it->second);
            } else if (ng < nodes[it->second].g && !nodes[it->second].closed) {
                Node& n = nodes[it->second];
                n.g = ng;
                n.parent = ni;
                n.via_flat = fi;
                n.via_cost = outcome->cost;
                open.emplace(ng + h_of(n.key.state), it->second);
            }
        }
    }

    if (goal_node < 0) {
        throw NoPlanError("goal is unreachable");
    }
    std::vector<PlanStep> steps;
    for (int v = goal_node; nodes[v].parent != -1; v = nodes[v].parent) {
        steps.push_back({flat[nodes[v].via_flat].index, nodes[v].via_cost});
    }
    std::reverse(steps.begin(), steps.end());
    plan.steps = std::move(steps);
    plan.total_cost = nodes[goal_node].g;
    return plan;
}

}  // namespace tmpbsp
