#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "tmpbsp/tmp_session.hpp"

namespace tmpbsp {

struct PrmConfig {
    int samples_per_region = 5;
    int free_samples = 80;
    int k_nearest = 8;
    double step = 0.5;
};

/// Full scenario configuration: environment, noise, weights, roadmap
/// parameters, robots, and the task files.
struct Scenario {
    WorldMap map;
    NoiseModel noise;
    CostWeights weights;
    PrmConfig prm;
    double mutual_range = 4.0;
    std::vector<RobotSpec> robots;
    std::string domain_text;
    std::string problem_text;
};

Scenario load_scenario(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});
Scenario load_scenario_file(const std::filesystem::path& path);

struct ActionSummary {
    std::string action;
    double cost = 0.0;
};

struct SessionReport {
    std::uint64_t seed = 0;
    bool mutual = true;
    bool plan_found = false;
    double total_cost = 0.0;
    std::vector<ActionSummary> plan;
    /// Position error ||truth - mean|| at each visited roadmap node, per robot.
    std::vector<std::vector<double>> node_errors;
    double planning_seconds = 0.0;
    std::size_t oracle_calls = 0;
    std::size_t expanded_states = 0;

    /// Full replay trajectory rows for CSV output:
    /// tick, robot, truth pose, mean pose, covariance (row-major 3x3).
    struct TrajectoryRow {
        int tick = 0;
        int robot = 0;
        Pose truth;
        Pose mean;
        double sigma[9] = {0};
    };
    std::vector<TrajectoryRow> trajectory;
};

struct AggregateReport {
    std::size_t sessions = 0;
    std::size_t failures = 0;
    bool mutual = true;
    std::vector<std::vector<double>> mean_node_errors;  // per robot, per node index
    double mean_planning_seconds = 0.0;
    double max_planning_seconds = 0.0;
};

nlohmann::json to_json(const SessionReport& report);
SessionReport session_report_from_json(const nlohmann::json& j);
nlohmann::json to_json(const AggregateReport& report);
AggregateReport aggregate_report_from_json(const nlohmann::json& j);

/// Runs the full pipeline for one seed: roadmap build, task-motion planning,
/// and a replay of the plan against freshly sampled ground truth.
/// mutual = false forces mutual_range = 0 in planning and replay.
SessionReport run_session(const Scenario& scenario, std::uint64_t seed, bool mutual);

AggregateReport monte_carlo(const Scenario& scenario, int sessions, bool mutual,
                            std::uint64_t base_seed);

struct ScalingRow {
    int size = 0;
    double mean_planning_seconds = 0.0;
    int solved = 0;
    int sessions = 0;
};

enum class ScalingMode { Rooms, Robots };

/// Timing study over problem sizes; rooms to visit are drawn randomly per
/// run from the scenario's regions.
std::vector<ScalingRow> scaling_study(const Scenario& scenario, ScalingMode mode,
                                      const std::vector<int>& sizes, int sessions,
                                      std::uint64_t base_seed);

void write_trajectory_csv(const SessionReport& report, const std::filesystem::path& path);
void write_metrics_csv(const AggregateReport& report, const std::filesystem::path& path);

}  // namespace tmpbsp
