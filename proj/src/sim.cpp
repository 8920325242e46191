#include "tmpbsp/sim.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <numeric>
#include <sstream>

#include <nlohmann/json.hpp>

namespace tmpbsp {

namespace {

Eigen::Matrix3d diag3(const std::vector<double>& d) {
    if (d.size() != 3) throw ValidationError("expected 3 diagonal entries");
    return Eigen::Vector3d(d[0], d[1], d[2]).asDiagonal();
}

Eigen::Matrix2d diag2(const std::vector<double>& d) {
    if (d.size() != 2) throw ValidationError("expected 2 diagonal entries");
    return Eigen::Vector2d(d[0], d[1]).asDiagonal();
}

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot read file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Swaps the two robots of a pair joint belief (means and 3x3 blocks).
JointBelief swapped(const JointBelief& jb) {
    JointBelief out = jb;
    std::swap(out.means[0], out.means[1]);
    Eigen::MatrixXd c(6, 6);
    c.block<3, 3>(0, 0) = jb.covariance.block<3, 3>(3, 3);
    c.block<3, 3>(3, 3) = jb.covariance.block<3, 3>(0, 0);
    c.block<3, 3>(0, 3) = jb.covariance.block<3, 3>(3, 0);
    c.block<3, 3>(3, 0) = jb.covariance.block<3, 3>(0, 3);
    out.covariance = std::move(c);
    return out;
}

struct PairState {
    JointBelief belief;       // ordered (low robot index, high robot index)
    std::vector<Pose> truth;  // same order
    std::vector<int> next_node_error_index;  // per member, how many nodes recorded
};

}  // namespace

Scenario load_scenario(const nlohmann::json& doc, const std::filesystem::path& base_dir) {
    Scenario sc;
    sc.map = load_worldmap(doc);
    if (!doc.contains("noise")) throw ValidationError("scenario: missing 'noise'");
    const auto& n = doc.at("noise");
    sc.noise.W = diag3(n.at("W").get<std::vector<double>>());
    sc.noise.Q_landmark = diag2(n.at("Q").get<std::vector<double>>());
    sc.noise.Q_mutual = diag2(n.at("Q_mutual").get<std::vector<double>>());
    if (!doc.contains("weights")) throw ValidationError("scenario: missing 'weights'");
    const auto& w = doc.at("weights");
    sc.weights.M_u = w.at("M_u").get<double>();
    sc.weights.M_G = w.at("M_G").get<double>();
    sc.weights.M_sigma = w.at("M_sigma").get<double>();
    if (doc.contains("prm")) {
        const auto& p = doc.at("prm");
        sc.prm.samples_per_region = p.value("samples_per_region", 5);
        sc.prm.free_samples = p.value("free_samples", 80);
        sc.prm.k_nearest = p.value("k_nearest", 8);
        sc.prm.step = p.value("step", 0.5);
    }
    sc.mutual_range = doc.value("mutual_range", 4.0);
    if (!doc.contains("robots")) throw ValidationError("scenario: missing 'robots'");
    for (const auto& rj : doc.at("robots")) {
        RobotSpec spec;
        spec.name = rj.at("id").get<std::string>();
        const auto mean = rj.at("mean").get<std::vector<double>>();
        if (mean.size() != 3) throw ValidationError("robot mean needs 3 entries");
        spec.initial.mean = Pose(mean[0], mean[1], mean[2]);
        spec.initial.covariance = diag3(rj.at("cov").get<std::vector<double>>());
        sc.robots.push_back(std::move(spec));
    }
    if (doc.contains("task")) {
        const auto& t = doc.at("task");
        sc.domain_text = slurp(base_dir / t.at("domain").get<std::string>());
        sc.problem_text = slurp(base_dir / t.at("problem").get<std::string>());
    }
    return sc;
}

Scenario load_scenario_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot read scenario: " + path.string());
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("scenario parse error: ") + e.what());
    }
    return load_scenario(doc, path.parent_path());
}

SessionReport run_session(const Scenario& scenario, std::uint64_t seed, bool mutual) {
    SessionReport report;
    report.seed = seed;
    report.mutual = mutual;

    const Domain domain = parse_domain(scenario.domain_text);
    const Problem problem = parse_problem(scenario.problem_text, domain);

    const auto t0 = std::chrono::steady_clock::now();
    RandomStream roadmap_rng(derive_seed(seed, 0xA11));
    const Roadmap roadmap = build_roadmap(scenario.map, scenario.prm.samples_per_region,
                                          scenario.prm.free_samples, scenario.prm.k_nearest,
                                          roadmap_rng);
    TmpSession session(scenario.map, roadmap, domain, problem, scenario.robots, scenario.noise,
                       scenario.weights, mutual ? scenario.mutual_range : 0.0,
                       derive_seed(seed, 0xB22), scenario.prm.step);
    TMPPlan plan;
    try {
        plan = session.plan();
    } catch (const NoPlanError&) {
        report.plan_found = false;
        report.planning_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return report;
    }
    report.planning_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report.plan_found = true;
    report.total_cost = plan.total_cost;
    report.oracle_calls = plan.oracle_calls;
    report.expanded_states = plan.expanded_states;
    for (const auto& step : plan.steps) {
        report.plan.push_back({step.action.str(), step.cost});
    }

    // --- Replay against freshly sampled ground truth. ---
    const int R = static_cast<int>(scenario.robots.size());
    report.node_errors.assign(R, {});
    RandomStream init_rng(derive_seed(seed, 0xC33));
    std::vector<Pose> truth0(R);
    for (int i = 0; i < R; ++i) {
        const Belief& b = session.robots()[i].initial;
        truth0[i] = Pose(b.mean.x + init_rng.gaussian_var(b.covariance(0, 0)),
                         b.mean.y + init_rng.gaussian_var(b.covariance(1, 1)),
                         b.mean.theta + init_rng.gaussian_var(b.covariance(2, 2)));
    }
    RandomStream replay_rng(derive_seed(seed, 0xD44));
    std::map<std::pair<int, int>, PairState> pairs;
    int tick_base = 0;
    for (const auto& step : plan.steps) {
        if (!step.action.external_cost) continue;
        const int i1 = step.robot_indices[0], i2 = step.robot_indices[1];
        const auto key = std::minmax(i1, i2);
        auto it = pairs.find(key);
        if (it == pairs.end()) {
            PairState ps;
            ps.belief = make_joint(
                {session.robots()[key.first].initial, session.robots()[key.second].initial});
            ps.truth = {truth0[key.first], truth0[key.second]};
            ps.next_node_error_index = {0, 0};
            it = pairs.emplace(key, std::move(ps)).first;
        }
        PairState& ps = it->second;
        const bool ordered = (i1 == key.first);
        JointBelief jb = ordered ? ps.belief : swapped(ps.belief);
        PropagationOptions opt;
        opt.step = scenario.prm.step;
        opt.mutual_range = mutual ? scenario.mutual_range : 0.0;
        opt.true_start = ordered ? ps.truth : std::vector<Pose>{ps.truth[1], ps.truth[0]};
        const MotionResult replay = propagate_pair(session.roadmap(), scenario.map,
                                                   step.motion.node_paths, jb, scenario.noise, opt,
                                                   replay_rng);
        // Errors at node arrivals; skip the duplicate start node after the
        // first action of a pair member.
        for (int k = 0; k < 2; ++k) {
            const int robot = (k == 0) ? i1 : i2;
            const int member = (robot == key.first) ? 0 : 1;
            bool first = ps.next_node_error_index[member] == 0;
            for (std::size_t a = first ? 0 : 1; a < replay.node_arrival_ticks[k].size(); ++a) {
                const int t = replay.node_arrival_ticks[k][a];
                const double err =
                    distance_xy(replay.true_trajectory[k][t], replay.belief_trajectory[t].means[k]);
                report.node_errors[robot].push_back(err);
                ++ps.next_node_error_index[member];
            }
        }
        for (std::size_t t = 0; t < replay.belief_trajectory.size(); ++t) {
            for (int k = 0; k < 2; ++k) {
                const int robot = (k == 0) ? i1 : i2;
                SessionReport::TrajectoryRow row;
                row.tick = tick_base + static_cast<int>(t);
                row.robot = robot;
                row.truth = replay.true_trajectory[k][t];
                row.mean = replay.belief_trajectory[t].means[k];
                const auto block = replay.belief_trajectory[t].block(k, k);
                for (int r = 0; r < 3; ++r)
                    for (int c = 0; c < 3; ++c) row.sigma[3 * r + c] = block(r, c);
                report.trajectory.push_back(row);
            }
        }
        tick_base += static_cast<int>(replay.belief_trajectory.size());
        // Carry the pair state forward.
        const JointBelief final_jb = replay.belief_trajectory.back();
        ps.belief = ordered ? final_jb : swapped(final_jb);
        std::vector<Pose> final_truth = {replay.true_trajectory[0].back(),
                                         replay.true_trajectory[1].back()};
        ps.truth = ordered ? final_truth : std::vector<Pose>{final_truth[1], final_truth[0]};
    }
    return report;
}

AggregateReport monte_carlo(const Scenario& scenario, int sessions, bool mutual,
                            std::uint64_t base_seed) {
    if (sessions < 1) throw std::invalid_argument("monte_carlo: sessions must be >= 1");
    AggregateReport agg;
    agg.mutual = mutual;
    std::vector<SessionReport> reports;
    for (int i = 0; i < sessions; ++i) {
        reports.push_back(run_session(scenario, base_seed + static_cast<std::uint64_t>(i), mutual));
    }
    agg.sessions = reports.size();
    double time_sum = 0.0;
    std::size_t solved = 0;
    std::size_t robots = 0;
    for (const auto& r : reports) {
        time_sum += r.planning_seconds;
        agg.max_planning_seconds = std::max(agg.max_planning_seconds, r.planning_seconds);
        if (r.plan_found) {
            ++solved;
            robots = std::max(robots, r.node_errors.size());
        } else {
            ++agg.failures;
        }
    }
    if (solved == 0) throw NoPlanError("all Monte Carlo sessions failed to find a plan");
    agg.mean_planning_seconds = time_sum / static_cast<double>(reports.size());
    agg.mean_node_errors.assign(robots, {});
    for (std::size_t rb = 0; rb < robots; ++rb) {
        std::size_t max_nodes = 0;
        for (const auto& r : reports) {
            if (r.plan_found && rb < r.node_errors.size()) {
                max_nodes = std::max(max_nodes, r.node_errors[rb].size());
            }
        }
        for (std::size_t node = 0; node < max_nodes; ++node) {
            double sum = 0.0;
            int count = 0;
            for (const auto& r : reports) {
                if (r.plan_found && rb < r.node_errors.size() && node < r.node_errors[rb].size()) {
                    sum += r.node_errors[rb][node];
                    ++count;
                }
            }
            agg.mean_node_errors[rb].push_back(sum / count);
        }
    }
    return agg;
}

namespace {

Problem make_visit_problem(const Domain& domain, const std::vector<std::string>& rooms,
                           const std::vector<std::string>& robot_names,
                           const std::vector<std::string>& start_rooms,
                           const std::vector<std::string>& goal_rooms) {
    Problem p;
    p.name = "generated";
    p.domain_name = domain.name;
    for (const auto& r : rooms) p.objects[r] = "room";
    for (const auto& r : robot_names) p.objects[r] = "robot";
    for (std::size_t i = 0; i < robot_names.size(); ++i) {
        p.init.insert({"robot_in", {robot_names[i], start_rooms[i]}});
    }
    for (const auto& a : rooms) {
        for (const auto& b : rooms) {
            if (a != b) p.init.insert({"connected", {a, b}});
        }
    }
    for (const auto& g : goal_rooms) p.goal.push_back({"visited", {g}});
    return p;
}

}  // namespace

std::vector<ScalingRow> scaling_study(const Scenario& scenario, ScalingMode mode,
                                      const std::vector<int>& sizes, int sessions,
                                      std::uint64_t base_seed) {
    const Domain domain = parse_domain(scenario.domain_text);
    std::vector<std::string> rooms;
    for (const auto& r : scenario.map.regions) rooms.push_back(r.id);

    std::vector<ScalingRow> rows;
    for (int size : sizes) {
        ScalingRow row;
        row.size = size;
        row.sessions = sessions;
        double time_sum = 0.0;
        for (int s = 0; s < sessions; ++s) {
            const std::uint64_t seed = derive_seed(base_seed, 10007ULL * size + s);
            RandomStream pick(derive_seed(seed, 0xF55));
            auto shuffled = rooms;
            for (std::size_t i = shuffled.size(); i > 1; --i) {
                std::swap(shuffled[i - 1],
                          shuffled[static_cast<std::size_t>(pick.uniform(0.0, 1.0) * i)]);
            }
            Scenario run_scenario = scenario;
            std::vector<std::string> goal_rooms, start_rooms, names;
            if (mode == ScalingMode::Rooms) {
                goal_rooms.assign(shuffled.begin(), shuffled.begin() + std::min<std::size_t>(size, shuffled.size()));
                const Problem base = parse_problem(scenario.problem_text, domain);
                for (const auto& spec : scenario.robots) {
                    names.push_back(spec.name);
                    for (const auto& fact : base.init) {
                        if (fact.predicate == "robot_in" && fact.args[0] == spec.name) {
                            start_rooms.push_back(fact.args[1]);
                        }
                    }
                }
            } else {
                goal_rooms.assign(shuffled.begin(),
                                  shuffled.begin() + std::min<std::size_t>(8, shuffled.size()));
                run_scenario.robots.clear();
                for (int i = 0; i < size; ++i) {
                    names.push_back("r" + std::to_string(i + 1));
                    const auto& room = rooms[(2 * i) % rooms.size()];
                    start_rooms.push_back(room);
                    RobotSpec spec;
                    spec.name = names.back();
                    const Rect& poly = scenario.map.region(room).polygon;
                    spec.initial.mean = Pose(poly.cx(), poly.cy(), 0.0);
                    spec.initial.covariance = scenario.robots.front().initial.covariance;
                    run_scenario.robots.push_back(std::move(spec));
                }
            }
            const Problem problem =
                make_visit_problem(domain, rooms, names, start_rooms, goal_rooms);

            const auto t0 = std::chrono::steady_clock::now();
            RandomStream roadmap_rng(derive_seed(seed, 0xA11));
            const Roadmap roadmap =
                build_roadmap(run_scenario.map, run_scenario.prm.samples_per_region,
                              run_scenario.prm.free_samples, run_scenario.prm.k_nearest,
                              roadmap_rng);
            TmpSession session(run_scenario.map, roadmap, domain, problem, run_scenario.robots,
                               run_scenario.noise, run_scenario.weights, run_scenario.mutual_range,
                               derive_seed(seed, 0xB22), run_scenario.prm.step);
            try {
                session.plan();
                ++row.solved;
            } catch (const NoPlanError&) {
            }
            time_sum +=
                std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        }
        row.mean_planning_seconds = time_sum / sessions;
        rows.push_back(row);
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

nlohmann::json to_json(const SessionReport& r) {
    nlohmann::json j;
    j["seed"] = r.seed;
    j["mutual"] = r.mutual;
    j["plan_found"] = r.plan_found;
    j["total_cost"] = r.total_cost;
    j["planning_seconds"] = r.planning_seconds;
    j["oracle_calls"] = r.oracle_calls;
    j["expanded_states"] = r.expanded_states;
    j["plan"] = nlohmann::json::array();
    for (const auto& a : r.plan) j["plan"].push_back({{"action", a.action}, {"cost", a.cost}});
    j["node_errors"] = r.node_errors;
    return j;
}

SessionReport session_report_from_json(const nlohmann::json& j) {
    SessionReport r;
    r.seed = j.at("seed").get<std::uint64_t>();
    r.mutual = j.at("mutual").get<bool>();
    r.plan_found = j.at("plan_found").get<bool>();
    r.total_cost = j.at("total_cost").get<double>();
    r.planning_seconds = j.at("planning_seconds").get<double>();
    r.oracle_calls = j.at("oracle_calls").get<std::size_t>();
    r.expanded_states = j.at("expanded_states").get<std::size_t>();
    for (const auto& a : j.at("plan")) {
        r.plan.push_back({a.at("action").get<std::string>(), a.at("cost").get<double>()});
    }
    r.node_errors = j.at("node_errors").get<std::vector<std::vector<double>>>();
    return r;
}

nlohmann::json to_json(const AggregateReport& r) {
    nlohmann::json j;
    j["sessions"] = r.sessions;
    j["failures"] = r.failures;
    j["mutual"] = r.mutual;
    j["mean_node_errors"] = r.mean_node_errors;
    j["mean_planning_seconds"] = r.mean_planning_seconds;
    j["max_planning_seconds"] = r.max_planning_seconds;
    return j;
}

AggregateReport aggregate_report_from_json(const nlohmann::json& j) {
    AggregateReport r;
    r.sessions = j.at("sessions").get<std::size_t>();
    r.failures = j.at("failures").get<std::size_t>();
    r.mutual = j.at("mutual").get<bool>();
    r.mean_node_errors = j.at("mean_node_errors").get<std::vector<std::vector<double>>>();
    r.mean_planning_seconds = j.at("mean_planning_seconds").get<double>();
    r.max_planning_seconds = j.at("max_planning_seconds").get<double>();
    return r;
}

void write_trajectory_csv(const SessionReport& report, const std::filesystem::path& path) {
    std::ofstream out(path);
    out << "tick,robot,true_x,true_y,true_theta,mean_x,mean_y,mean_theta";
    for (int r = 1; r <= 3; ++r)
        for (int c = 1; c <= 3; ++c) out << ",sigma_" << r << c;
    out << "\n";
    for (const auto& row : report.trajectory) {
        out << row.tick << ',' << row.robot << ',' << row.truth.x << ',' << row.truth.y << ','
            << row.truth.theta << ',' << row.mean.x << ',' << row.mean.y << ',' << row.mean.theta;
        for (double s : row.sigma) out << ',' << s;
        out << "\n";
    }
}

void write_metrics_csv(const AggregateReport& report, const std::filesystem::path& path) {
    std::ofstream out(path);
    out << "robot,node,mean_error\n";
    for (std::size_t rb = 0; rb < report.mean_node_errors.size(); ++rb) {
        for (std::size_t node = 0; node < report.mean_node_errors[rb].size(); ++node) {
            out << rb << ',' << node << ',' << report.mean_node_errors[rb][node] << "\n";
        }
    }
}

}  // namespace tmpbsp
