#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tmpbsp/belief.hpp"
#include "tmpbsp/worldmodel.hpp"

namespace tmpbsp {

struct InfeasibleMotion : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct RoadmapNode {
    int id = -1;
    Pose pose;
    std::string region_id;  // empty for free-space samples
};

struct RoadmapEdge {
    int to = -1;
    double length = 0.0;
};

/// Probabilistic roadmap over the free configuration space. Region-tagged
/// nodes are the pose instantiations of the symbolic rooms. Immutable after
/// build.
struct Roadmap {
    std::vector<RoadmapNode> nodes;
    std::vector<std::vector<RoadmapEdge>> adjacency;
    std::map<std::string, std::vector<int>> region_index;
    bool connectivity_warning = false;

    const RoadmapNode& node(int id) const { return nodes.at(id); }

    /// Shortest path by Euclidean edge length; nullopt when disconnected.
    std::optional<std::vector<int>> shortest_path(int start, int goal) const;

    /// Shortest-path distances from a start node to every node (infinity
    /// when unreachable).
    std::vector<double> shortest_distances(int start) const;
};

Roadmap build_roadmap(const WorldMap& map, int samples_per_region, int free_samples, int k,
                      RandomStream& rng);

/// Piecewise controls that compose noiselessly from a onto b exactly.
/// Heading change toward the travel direction rides on the first control,
/// alignment with b's heading on the last; ceil(distance/step) controls.
std::vector<Control> edge_controls(const Pose& a, const Pose& b, double step);

struct PathQuery {
    std::vector<int> start_nodes;             // one per robot in the pair
    std::vector<std::string> goal_regions;    // one per robot in the pair
    std::uint64_t seed = 0;
    double mutual_range = 4.0;
};

struct CostWeights {
    double M_u = 1.0;
    double M_G = 1.0;
    double M_sigma = 1.0;
};

struct MotionResult {
    std::vector<std::vector<int>> node_paths;           // per robot
    std::vector<int> goal_nodes;                        // chosen instantiation per robot
    std::vector<JointBelief> belief_trajectory;         // one entry per tick (incl. initial)
    std::vector<std::vector<Pose>> true_trajectory;     // simulated ground truth per robot, per tick
    std::vector<std::vector<int>> node_arrival_ticks;   // per robot, tick index of each path node
    double c_u = 0.0;
    double c_G = 0.0;
    double c_sigma = 0.0;
    double total = 0.0;
};

struct PropagationOptions {
    double step = 0.5;                      // control discretization along edges
    double mutual_range = 4.0;              // ground-truth trigger distance; 0 disables
    std::optional<std::vector<Pose>> true_start;  // defaults to the initial belief means
    /// When false, only the initial and final trajectory entries are kept
    /// (costs are unaffected); used for cheap candidate screening.
    bool record = true;
};

/// Lockstep pair simulation along fixed node paths: per tick joint predict,
/// noisy landmark updates for every visible landmark, and a mutual update
/// whenever the true poses are within mutual_range.
MotionResult propagate_pair(const Roadmap& roadmap, const WorldMap& map,
                            const std::vector<std::vector<int>>& paths, const JointBelief& initial,
                            const NoiseModel& noise, const PropagationOptions& opt,
                            RandomStream& rng);

/// Evaluates the pairwise goto cost: for every pair of goal instantiations,
/// simulates the graph-shortest paths and returns the minimum-total-cost
/// candidate (ties broken lexicographically by goal node ids). Throws
/// InfeasibleMotion when no instantiation is reachable.
MotionResult evaluate_goto_cost(const Roadmap& roadmap, const WorldMap& map, const PathQuery& query,
                                const JointBelief& initial, const NoiseModel& noise,
                                const CostWeights& weights, double step = 0.5);

/// Weighted sum M_u*c_u + M_G*c_G + M_sigma*c_sigma.
double total_cost(double c_u, double c_G, double c_sigma, const CostWeights& w);

}  // namespace tmpbsp
