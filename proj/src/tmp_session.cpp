#include "tmpbsp/tmp_session.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tmpbsp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Extends a roadmap with one extra node connected to its k nearest
/// collision-free neighbours.
int add_connected_node(Roadmap& rm, const WorldMap& map, const Pose& pose,
                       const std::string& region_id, int k) {
    const int id = static_cast<int>(rm.nodes.size());
    rm.nodes.push_back({id, pose, region_id});
    rm.adjacency.emplace_back();
    if (!region_id.empty()) rm.region_index[region_id].push_back(id);
    std::vector<std::pair<double, int>> by_dist;
    for (int j = 0; j + 1 < static_cast<int>(rm.nodes.size()); ++j) {
        by_dist.emplace_back(distance_xy(pose, rm.nodes[j].pose), j);
    }
    std::sort(by_dist.begin(), by_dist.end());
    int linked = 0;
    for (const auto& [d, j] : by_dist) {
        if (linked >= k) break;
        ++linked;
        if (!map.collision_free_segment(pose, rm.nodes[j].pose)) continue;
        rm.adjacency[id].push_back({j, d});
        rm.adjacency[j].push_back({id, d});
    }
    return id;
}

std::string robot_in_region(const TaskState& state, const std::string& robot) {
    std::string found;
    for (const auto& p : state) {
        if (p.predicate == "robot_in" && p.args.size() == 2 && p.args[0] == robot) {
            if (!found.empty()) {
                throw DomainModelError("robot '" + robot + "' has multiple robot_in facts");
            }
            found = p.args[1];
        }
    }
    if (found.empty()) {
        throw DomainModelError("robot '" + robot + "' has no robot_in fact");
    }
    return found;
}

}  // namespace

std::vector<std::vector<int>> phi(const TaskState& state, const StateMapping& mapping,
                                  const Roadmap& roadmap,
                                  const std::vector<std::string>& robot_names) {
    std::vector<std::vector<int>> out;
    for (std::size_t i = 0; i < robot_names.size(); ++i) {
        const std::string region = robot_in_region(state, robot_names[i]);
        const int pinned = mapping.at(i);
        if (roadmap.node(pinned).region_id != region) {
            throw DomainModelError("robot '" + robot_names[i] + "' pinned to node outside region '" +
                                   region + "'");
        }
        out.push_back({pinned});
    }
    return out;
}

std::vector<int> phi_region(const Roadmap& roadmap, const std::string& region_id) {
    auto it = roadmap.region_index.find(region_id);
    if (it == roadmap.region_index.end()) return {};
    return it->second;
}

TmpSession::TmpSession(const WorldMap& map, const Roadmap& roadmap, const Domain& domain,
                       const Problem& problem, std::vector<RobotSpec> robots, NoiseModel noise,
                       CostWeights weights, double mutual_range, std::uint64_t session_seed,
                       double step)
    : map_(map),
      roadmap_(roadmap),
      domain_(domain),
      problem_(problem),
      robots_(std::move(robots)),
      noise_(noise),
      weights_(weights),
      mutual_range_(mutual_range),
      session_seed_(session_seed),
      step_(step) {
    // Pin each robot's initial belief mean as a dedicated roadmap node in
    // its start region.
    for (const auto& spec : robots_) {
        const std::string region = robot_in_region(problem_.init, spec.name);
        const int id = add_connected_node(roadmap_, map_, spec.initial.mean, region, 8);
        initial_mapping_.push_back(id);
    }
    for (std::size_t i = 0; i + 1 < robots_.size(); i += 2) {
        designated_pairs_.emplace_back(static_cast<int>(i), static_cast<int>(i + 1));
    }

    // Room-to-room entry bounds for the admissible heuristic: the cheapest
    // hop overall, and per region the cheapest path into it from any other
    // region's instantiation.
    min_room_hop_ = kInf;
    for (const auto& [region, ids] : roadmap_.region_index) {
        for (int id : ids) {
            const auto dist = roadmap_.shortest_distances(id);
            for (const auto& [other, oids] : roadmap_.region_index) {
                if (other == region) continue;
                double& entry = region_entry_.try_emplace(other, kInf).first->second;
                for (int oid : oids) {
                    entry = std::min(entry, dist[oid]);
                    min_room_hop_ = std::min(min_room_hop_, dist[oid]);
                }
            }
        }
    }
    if (!std::isfinite(min_room_hop_)) min_room_hop_ = 0.0;
    for (auto& [region, entry] : region_entry_) {
        if (!std::isfinite(entry)) entry = 0.0;
    }

    // Symbolic hop counts toward robot_in goals, over the static connected
    // graph; each hop costs at least min_room_hop_.
    std::map<std::string, std::vector<std::string>> room_adj;
    for (const auto& p : problem_.init) {
        if (p.predicate == "connected" && p.args.size() == 2) {
            // reversed: BFS runs from the goal room against travel direction
            room_adj[p.args[1]].push_back(p.args[0]);
        }
    }
    for (const auto& g : problem_.goal) {
        if (g.predicate != "robot_in" || g.args.size() != 2) continue;
        std::map<std::string, int>& hops = goal_hops_[g.args[0]];
        std::vector<std::string> frontier = {g.args[1]};
        hops[g.args[1]] = 0;
        while (!frontier.empty()) {
            std::vector<std::string> next;
            for (const auto& room : frontier) {
                for (const auto& nb : room_adj[room]) {
                    if (hops.emplace(nb, hops[room] + 1).second) next.push_back(nb);
                }
            }
            frontier = std::move(next);
        }
    }
}

int TmpSession::robot_index(const std::string& name) const {
    for (std::size_t i = 0; i < robots_.size(); ++i) {
        if (robots_[i].name == name) return static_cast<int>(i);
    }
    return -1;
}

std::optional<TmpSession::MemoKey> TmpSession::memo_key(const GroundAction& action,
                                                        const StateMapping& mapping,
                                                        std::vector<int>* indices) const {
    if (action.triggered.size() != 6) return std::nullopt;
    const int i1 = robot_index(action.triggered[0]);
    const int i2 = robot_index(action.triggered[3]);
    if (i1 < 0 || i2 < 0 || i1 == i2) return std::nullopt;
    // Joint beliefs are maintained pairwise; only statically designated
    // pairs are plannable.
    const auto pair = std::minmax(i1, i2);
    if (std::find(designated_pairs_.begin(), designated_pairs_.end(),
                  std::make_pair(pair.first, pair.second)) == designated_pairs_.end()) {
        return std::nullopt;
    }
    if (indices) *indices = {i1, i2};
    MemoKey key;
    key.triggered = action.triggered;
    key.starts = {mapping.at(i1), mapping.at(i2)};
    return key;
}

std::optional<OracleOutcome> TmpSession::external_cost(const GroundAction& action,
                                                       const StateMapping& mapping) {
    if (!action.external_cost) {
        // Actions without the semantic-attachment marker cost nothing.
        return OracleOutcome{0.0, mapping};
    }
    std::vector<int> indices;
    auto key = memo_key(action, mapping, &indices);
    if (!key) return std::nullopt;

    auto it = memo_.find(*key);
    if (it == memo_.end()) {
        MemoValue val;
        PathQuery query;
        query.start_nodes = key->starts;
        query.goal_regions = {action.triggered[2], action.triggered[5]};
        std::uint64_t salt = 0;
        for (const auto& s : key->triggered) {
            for (char c : s) salt = mix64(salt ^ static_cast<std::uint64_t>(static_cast<unsigned char>(c)));
        }
        query.seed = derive_seed(session_seed_, salt);
        query.mutual_range = mutual_range_;
        std::vector<Belief> pair;
        for (std::size_t k = 0; k < 2; ++k) {
            Belief b = robots_[indices[k]].initial;
            b.mean = roadmap_.node(key->starts[k]).pose;
            pair.push_back(b);
        }
        try {
            val.motion = evaluate_goto_cost(roadmap_, map_, query, make_joint(pair), noise_,
                                            weights_, step_);
            val.cost = val.motion.total;
            val.feasible = true;
        } catch (const InfeasibleMotion&) {
            val.feasible = false;
        }
        it = memo_.emplace(*key, std::move(val)).first;
    }
    if (!it->second.feasible) return std::nullopt;
    OracleOutcome out;
    out.cost = it->second.cost;
    out.next_context = mapping;
    out.next_context[indices[0]] = it->second.motion.goal_nodes[0];
    out.next_context[indices[1]] = it->second.motion.goal_nodes[1];
    return out;
}

const MotionResult* TmpSession::cached_motion(const GroundAction& action,
                                              const StateMapping& mapping) const {
    auto key = memo_key(action, mapping, nullptr);
    if (!key) return nullptr;
    auto it = memo_.find(*key);
    if (it == memo_.end() || !it->second.feasible) return nullptr;
    return &it->second.motion;
}

double TmpSession::heuristic(const TaskState& state) const {
    int unvisited = 0;
    double entry_sum = 0.0;
    for (const auto& g : problem_.goal) {
        if (g.predicate == "visited" && !state.contains(g)) {
            ++unvisited;
            auto it = region_entry_.find(g.args.at(0));
            if (it != region_entry_.end()) entry_sum += it->second;
        }
    }
    // Admissible bounds: every unvisited goal room must still be entered
    // from another room; each action moves a pair of robots between distinct
    // rooms (two minimal hops, at most two new rooms); and every robot_in
    // goal needs at least its symbolic hop count of minimal hops.
    const double pair_bound = std::ceil(unvisited / 2.0) * 2.0 * min_room_hop_;
    double hop_bound = 0.0;
    for (const auto& [robot, hops] : goal_hops_) {
        auto it = hops.find(robot_in_region(state, robot));
        if (it != hops.end()) hop_bound += it->second * min_room_hop_;
    }
    return weights_.M_u * std::max({entry_sum, pair_bound, hop_bound});
}

TMPPlan TmpSession::plan(bool use_heuristic, bool memoize) {
    // Pair actions over robots that are not a designated pair would be
    // rejected by the oracle anyway; vetoing them at grounding time keeps
    // the ground action set linear (not quadratic) in the robot count.
    GroundFilter designated = [this](const ActionSchema& schema,
                                     const std::map<std::string, std::string>& binding) {
        if (!schema.external_cost || schema.triggered_args.size() != 6) return true;
        auto bound = [&](const std::string& v) {
            auto it = binding.find(v);
            return it == binding.end() ? std::string() : it->second;
        };
        const int i1 = robot_index(bound(schema.triggered_args[0]));
        const int i2 = robot_index(bound(schema.triggered_args[3]));
        if (i1 < 0 || i2 < 0 || i1 == i2) return false;
        const auto pair = std::minmax(i1, i2);
        return std::find(designated_pairs_.begin(), designated_pairs_.end(),
                         std::make_pair(pair.first, pair.second)) != designated_pairs_.end();
    };
    const auto actions =
        ground(domain_, problem_.objects, /*prune_static=*/true, problem_.init, designated);
    CostOracle oracle = [this](const GroundAction& a, const TaskState&, const OracleContext& ctx) {
        return external_cost(a, ctx);
    };
    SearchOptions options;
    options.memoize = memoize;
    if (use_heuristic) {
        options.heuristic = [this](const TaskState& s) { return heuristic(s); };
    }
    const TaskPlan task_plan = search_optimal_plan(problem_.init, problem_.goal, actions, oracle,
                                                   initial_mapping_, options);
    TMPPlan out = assemble_plan(*this, task_plan, actions);
    out.oracle_calls = task_plan.oracle_calls;
    out.expanded_states = task_plan.expanded_states;
    return out;
}

TMPPlan assemble_plan(TmpSession& session, const TaskPlan& task_plan,
                      const std::vector<GroundAction>& actions) {
    TMPPlan out;
    StateMapping mapping = session.initial_mapping();
    for (const auto& step : task_plan.steps) {
        const GroundAction& action = actions.at(step.action_index);
        TmpStep ts;
        ts.action = action;
        ts.cost = step.cost;
        if (action.external_cost) {
            const MotionResult* motion = session.cached_motion(action, mapping);
            if (motion == nullptr) {
                throw std::logic_error("assemble_plan: missing cached motion for " + action.str());
            }
            ts.motion = *motion;
            ts.robot_indices = {session.robot_index(action.triggered[0]),
                                session.robot_index(action.triggered[3])};
            // Motion continuity: this action's paths must start at the nodes
            // where the robots were pinned.
            for (std::size_t k = 0; k < 2; ++k) {
                const auto& path = motion->node_paths[k];
                if (!path.empty() && path.front() != mapping.at(ts.robot_indices[k])) {
                    throw std::logic_error("assemble_plan: motion continuity violated");
                }
                mapping[ts.robot_indices[k]] = motion->goal_nodes[k];
            }
        }
        out.total_cost += step.cost;
        out.steps.push_back(std::move(ts));
    }
    return out;
}

}  // namespace tmpbsp
