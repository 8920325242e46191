#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tmpbsp/pddl.hpp"
#include "tmpbsp/roadmap.hpp"
#include "tmpbsp/search.hpp"

namespace tmpbsp {

struct DomainModelError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Per-robot pinned pose instantiation: the roadmap node the robot's
/// symbolic state currently refers to. Doubles as the search OracleContext.
using StateMapping = std::vector<int>;

/// Maps a symbolic state to configuration-space node sets: the pinned node
/// for each robot's current `robot_in` region. Robots are identified by the
/// order of `robot_names`.
std::vector<std::vector<int>> phi(const TaskState& state, const StateMapping& mapping,
                                  const Roadmap& roadmap,
                                  const std::vector<std::string>& robot_names);

/// Node sets for a goal region: every instantiation.
std::vector<int> phi_region(const Roadmap& roadmap, const std::string& region_id);

struct RobotSpec {
    std::string name;
    Belief initial;
};

struct TmpStep {
    GroundAction action;
    double cost = 0.0;
    std::vector<int> robot_indices;  // the acting pair, in triggered order
    MotionResult motion;
};

struct TMPPlan {
    std::vector<TmpStep> steps;
    double total_cost = 0.0;
    std::size_t oracle_calls = 0;
    std::size_t expanded_states = 0;
};

/// One planning session: owns the oracle memo and the rng stream derivation.
/// Costs are keyed by (triggered tuple, start nodes) so they are independent
/// of the planner's expansion order.
class TmpSession {
public:
    TmpSession(const WorldMap& map, const Roadmap& roadmap, const Domain& domain,
               const Problem& problem, std::vector<RobotSpec> robots, NoiseModel noise,
               CostWeights weights, double mutual_range, std::uint64_t session_seed,
               double step = 0.5);

    /// External-cost hook for a single ground action (the semantic
    /// attachment). nullopt when the motion is infeasible.
    std::optional<OracleOutcome> external_cost(const GroundAction& action,
                                               const StateMapping& mapping);

    /// Cached motion result from a previous external_cost evaluation.
    const MotionResult* cached_motion(const GroundAction& action, const StateMapping& mapping) const;

    /// Full pipeline: optimal task search plus plan assembly.
    TMPPlan plan(bool use_heuristic = true, bool memoize = true);

    const StateMapping& initial_mapping() const { return initial_mapping_; }
    const Roadmap& roadmap() const { return roadmap_; }
    const std::vector<RobotSpec>& robots() const { return robots_; }
    int robot_index(const std::string& name) const;

    /// Admissible remaining-cost bound from unvisited goal rooms.
    double heuristic(const TaskState& state) const;

private:
    struct MemoKey {
        std::vector<std::string> triggered;
        std::vector<int> starts;
        auto operator<=>(const MemoKey&) const = default;
    };
    struct MemoValue {
        bool feasible = false;
        double cost = 0.0;
        MotionResult motion;
    };

    const WorldMap& map_;
    Roadmap roadmap_;  // session copy, extended with the robot start nodes
    const Domain& domain_;
    const Problem& problem_;
    std::vector<RobotSpec> robots_;
    NoiseModel noise_;
    CostWeights weights_;
    double mutual_range_;
    std::uint64_t session_seed_;
    double step_;
    StateMapping initial_mapping_;
    std::vector<std::pair<int, int>> designated_pairs_;
    std::map<MemoKey, MemoValue> memo_;
    double min_room_hop_ = 0.0;  // lower bound on any room-to-room path length
    // Per region, the cheapest way to enter it from any other region's
    // instantiation; summed over unvisited goal rooms this bounds the
    // remaining cost from below.
    std::map<std::string, double> region_entry_;
    // Per robot_in goal, symbolic hop counts from every room to the goal room
    // over the static connected graph.
    std::map<std::string, std::map<std::string, int>> goal_hops_;

    std::optional<MemoKey> memo_key(const GroundAction& action, const StateMapping& mapping,
                                    std::vector<int>* indices) const;
};

/// Replays the task plan against the cached motion results, checking the
/// motion-continuity invariant (each path starts where the previous ended).
TMPPlan assemble_plan(TmpSession& session, const TaskPlan& task_plan,
                      const std::vector<GroundAction>& actions);

}  // namespace tmpbsp
