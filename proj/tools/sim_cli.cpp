// Command-line front end: single planning runs, Monte-Carlo evaluation, and
// scaling studies over a scenario file.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "tmpbsp/sim.hpp"

namespace fs = std::filesystem;
using namespace tmpbsp;

namespace {

constexpr int kExitNoPlan = 2;
constexpr int kExitValidation = 3;

void ensure_dir(const fs::path& dir) {
    if (!dir.empty()) fs::create_directories(dir);
}

int cmd_plan(const std::string& scenario_path, std::uint64_t seed, bool no_mutual,
             const fs::path& out_dir) {
    const Scenario scenario = load_scenario_file(scenario_path);
    const SessionReport report = run_session(scenario, seed, !no_mutual);
    ensure_dir(out_dir);
    std::ofstream(out_dir / "report.json") << to_json(report).dump(2) << "\n";
    write_trajectory_csv(report, out_dir / "trajectory.csv");
    if (!report.plan_found) {
        std::cerr << "no plan found for seed " << seed << "\n";
        return kExitNoPlan;
    }
    std::cout << "plan with " << report.plan.size() << " action(s), total cost "
              << report.total_cost << ", planning time " << report.planning_seconds << " s\n";
    for (const auto& step : report.plan) {
        std::cout << "  " << step.action << "  cost " << step.cost << "\n";
    }
    return 0;
}

int cmd_montecarlo(const std::string& scenario_path, int sessions, bool no_mutual,
                   std::uint64_t base_seed, const fs::path& out_dir) {
    const Scenario scenario = load_scenario_file(scenario_path);
    AggregateReport agg;
    try {
        agg = monte_carlo(scenario, sessions, !no_mutual, base_seed);
    } catch (const NoPlanError& e) {
        std::cerr << e.what() << "\n";
        return kExitNoPlan;
    }
    ensure_dir(out_dir);
    std::ofstream(out_dir / "report.json") << to_json(agg).dump(2) << "\n";
    write_metrics_csv(agg, out_dir / "metrics.csv");
    std::cout << agg.sessions << " sessions (" << agg.failures << " failed), mean planning time "
              << agg.mean_planning_seconds << " s, max " << agg.max_planning_seconds << " s\n";
    return 0;
}

int cmd_scale(const std::string& scenario_path, const std::string& mode, int sessions,
              std::uint64_t base_seed, const fs::path& out_dir) {
    const Scenario scenario = load_scenario_file(scenario_path);
    const ScalingMode m = mode == "robots" ? ScalingMode::Robots : ScalingMode::Rooms;
    const std::vector<int> sizes =
        m == ScalingMode::Robots ? std::vector<int>{2, 4, 6} : std::vector<int>{2, 4, 6, 8, 10};
    const auto rows = scaling_study(scenario, m, sizes, sessions, base_seed);
    ensure_dir(out_dir);
    nlohmann::json j = nlohmann::json::array();
    std::cout << "size,mean_planning_seconds,solved,sessions\n";
    for (const auto& row : rows) {
        std::cout << row.size << ',' << row.mean_planning_seconds << ',' << row.solved << ','
                  << row.sessions << "\n";
        j.push_back({{"size", row.size},
                     {"mean_planning_seconds", row.mean_planning_seconds},
                     {"solved", row.solved},
                     {"sessions", row.sessions}});
    }
    std::ofstream(out_dir / "report.json") << j.dump(2) << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-robot task-motion planning simulator"};
    app.require_subcommand(1);

    std::string scenario_path, mode = "rooms";
    std::uint64_t seed = 1, base_seed = 1;
    int sessions = 25;
    bool no_mutual = false;
    std::string out_dir = "out";

    auto* plan = app.add_subcommand("plan", "Run one planning session");
    plan->add_option("--scenario", scenario_path, "Scenario JSON file")->required();
    plan->add_option("--seed", seed, "Session seed");
    plan->add_flag("--no-mutual", no_mutual, "Disable mutual observations");
    plan->add_option("--out", out_dir, "Output directory");

    auto* mc = app.add_subcommand("montecarlo", "Aggregate over many sessions");
    mc->add_option("--scenario", scenario_path, "Scenario JSON file")->required();
    mc->add_option("--sessions", sessions, "Number of sessions");
    mc->add_flag("--no-mutual", no_mutual, "Disable mutual observations");
    mc->add_option("--base-seed", base_seed, "First session seed");
    mc->add_option("--out", out_dir, "Output directory");

    auto* scale = app.add_subcommand("scale", "Planning-time scaling study");
    scale->add_option("--mode", mode, "rooms or robots")
        ->check(CLI::IsMember({"rooms", "robots"}));
    scale->add_option("--scenario", scenario_path, "Scenario JSON file")->required();
    scale->add_option("--sessions", sessions, "Sessions per size");
    scale->add_option("--base-seed", base_seed, "Base seed");
    scale->add_option("--out", out_dir, "Output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (plan->parsed()) return cmd_plan(scenario_path, seed, no_mutual, out_dir);
        if (mc->parsed()) return cmd_montecarlo(scenario_path, sessions, no_mutual, base_seed, out_dir);
        if (scale->parsed()) return cmd_scale(scenario_path, mode, sessions, base_seed, out_dir);
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const ParseError& e) {
        std::cerr << "task file parse error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const SemanticError& e) {
        std::cerr << "task file error: " << e.what() << "\n";
        return kExitValidation;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
