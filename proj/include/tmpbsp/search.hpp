#pragma once

#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "tmpbsp/pddl.hpp"

namespace tmpbsp {

struct NoPlanError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Opaque refinement of the symbolic state carried through the search (the
/// motion oracle stores the pose instantiations each robot is pinned to).
using OracleContext = std::vector<int>;

struct OracleOutcome {
    double cost = 0.0;
    OracleContext next_context;
};

/// Action cost supplied by an external module. Must be deterministic for a
/// fixed planning session; nullopt marks the action infeasible.
using CostOracle =
    std::function<std::optional<OracleOutcome>(const GroundAction&, const TaskState&,
                                               const OracleContext&)>;

/// Optional admissible lower bound on the remaining cost; nullptr disables.
using Heuristic = std::function<double(const TaskState&)>;

struct PlanStep {
    int action_index = -1;
    double cost = 0.0;
};

struct TaskPlan {
    std::vector<PlanStep> steps;
    double total_cost = 0.0;
    std::size_t expanded_states = 0;
    std::size_t oracle_calls = 0;
};

struct SearchOptions {
    bool memoize = true;   // cache oracle results on (action, context)
    Heuristic heuristic;   // admissible estimate; empty means plain Dijkstra
};

/// Cost-optimal forward search over reachable (state, context) pairs.
/// Uniform-cost by default; with an admissible heuristic it becomes A* and
/// remains optimal. Oracle calls are lazy and (optionally) memoized.
TaskPlan search_optimal_plan(const TaskState& init, const std::vector<Proposition>& goal,
                             const std::vector<GroundAction>& actions, const CostOracle& oracle,
                             const OracleContext& initial_context = {},
                             const SearchOptions& options = {});

}  // namespace tmpbsp
