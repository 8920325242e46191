#include "tmpbsp/roadmap.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <queue>

namespace tmpbsp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct DijkstraResult {
    std::vector<double> dist;
    std::vector<int> prev;
};

DijkstraResult dijkstra(const Roadmap& rm, int start) {
    const int n = static_cast<int>(rm.nodes.size());
    DijkstraResult res{std::vector<double>(n, kInf), std::vector<int>(n, -1)};
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    res.dist[start] = 0.0;
    pq.emplace(0.0, start);
    while (!pq.empty()) {
        auto [d, u] = pq.top();
        pq.pop();
        if (d > res.dist[u]) continue;
        for (const auto& e : rm.adjacency[u]) {
            const double nd = d + e.length;
            if (nd < res.dist[e.to]) {
                res.dist[e.to] = nd;
                res.prev[e.to] = u;
                pq.emplace(nd, e.to);
            }
        }
    }
    return res;
}

}  // namespace

std::optional<std::vector<int>> Roadmap::shortest_path(int start, int goal) const {
    const auto res = dijkstra(*this, start);
    if (res.dist[goal] == kInf) return std::nullopt;
    std::vector<int> path;
    for (int v = goal; v != -1; v = res.prev[v]) path.push_back(v);
    std::reverse(path.begin(), path.end());
    return path;
}

std::vector<double> Roadmap::shortest_distances(int start) const {
    return dijkstra(*this, start).dist;
}

Roadmap build_roadmap(const WorldMap& map, int samples_per_region, int free_samples, int k,
                      RandomStream& rng) {
    if (samples_per_region < 1 || free_samples < 0 || k < 1) {
        throw std::invalid_argument("build_roadmap: counts must be positive");
    }
    Roadmap rm;
    // Each region (and the free-space pass) draws from its own child stream,
    // so raising one sampling budget extends the other sample sets instead of
    // reshuffling them.
    const std::uint64_t base = rng.fork_seed();
    // Region instantiations first, shared by all robots.
    for (std::size_t ri = 0; ri < map.regions.size(); ++ri) {
        const auto& region = map.regions[ri];
        RandomStream region_rng(derive_seed(base, ri + 1));
        auto poses = map.sample_region_poses(region, samples_per_region, region_rng);
        for (const auto& p : poses) {
            const int id = static_cast<int>(rm.nodes.size());
            rm.nodes.push_back({id, p, region.id});
            rm.region_index[region.id].push_back(id);
        }
    }
    // Free-space samples cover the connective tissue between regions.
    RandomStream free_rng(derive_seed(base, 0));
    int placed = 0;
    long attempts = 0;
    const long max_attempts = 1000L * std::max(1, free_samples);
    while (placed < free_samples && attempts++ < max_attempts) {
        const double x = free_rng.uniform(map.bounds.xmin, map.bounds.xmax);
        const double y = free_rng.uniform(map.bounds.ymin, map.bounds.ymax);
        const double theta = free_rng.uniform(-M_PI, M_PI);
        Pose p(x, y, theta);
        if (!map.collision_free_pose(p)) continue;
        const int id = static_cast<int>(rm.nodes.size());
        rm.nodes.push_back({id, p, ""});
        ++placed;
    }
    const int n = static_cast<int>(rm.nodes.size());
    rm.adjacency.assign(n, {});

    // k-nearest connection, keeping only collision-free segments.
    std::vector<std::vector<bool>> connected(n, std::vector<bool>(n, false));
    for (int i = 0; i < n; ++i) {
        std::vector<std::pair<double, int>> by_dist;
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            by_dist.emplace_back(distance_xy(rm.nodes[i].pose, rm.nodes[j].pose), j);
        }
        std::sort(by_dist.begin(), by_dist.end());
        int linked = 0;
        for (const auto& [d, j] : by_dist) {
            if (linked >= k) break;
            ++linked;
            if (connected[i][j]) continue;
            if (!map.collision_free_segment(rm.nodes[i].pose, rm.nodes[j].pose)) continue;
            connected[i][j] = connected[j][i] = true;
            rm.adjacency[i].push_back({j, d});
            rm.adjacency[j].push_back({i, d});
        }
    }

    // Kruskal-style repair pass: the k-nearest graph can leave rooms as
    // islands, so bridge components with the shortest collision-free links.
    std::vector<int> parent(n);
    for (int i = 0; i < n; ++i) parent[i] = i;
    std::function<int(int)> find = [&](int v) {
        return parent[v] == v ? v : parent[v] = find(parent[v]);
    };
    for (int i = 0; i < n; ++i) {
        for (const auto& e : rm.adjacency[i]) parent[find(i)] = find(e.to);
    }
    std::vector<std::tuple<double, int, int>> cross;
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            if (find(i) != find(j))
                cross.emplace_back(distance_xy(rm.nodes[i].pose, rm.nodes[j].pose), i, j);
        }
    }
    std::sort(cross.begin(), cross.end());
    for (const auto& [d, i, j] : cross) {
        if (find(i) == find(j)) continue;
        if (!map.collision_free_segment(rm.nodes[i].pose, rm.nodes[j].pose)) continue;
        parent[find(i)] = find(j);
        rm.adjacency[i].push_back({j, d});
        rm.adjacency[j].push_back({i, d});
    }

    // Flag region instantiations that remain unreachable.
    for (const auto& [region, ids] : rm.region_index) {
        for (int id : ids) {
            if (rm.adjacency[id].empty() || find(id) != find(0)) {
                rm.connectivity_warning = true;
            }
        }
    }
    return rm;
}

std::vector<Control> edge_controls(const Pose& a, const Pose& b, double step) {
    if (step <= 0.0) {
        throw std::invalid_argument("edge_controls: step must be positive");
    }
    std::vector<Control> out;
    const double len = distance_xy(a, b);
    if (len < 1e-12) {
        if (std::abs(wrap_angle(b.theta - a.theta)) > 1e-12) {
            out.push_back({0.0, 0.0, wrap_angle(b.theta - a.theta)});
        }
        return out;
    }
    const double heading = std::atan2(b.y - a.y, b.x - a.x);
    const int n = static_cast<int>(std::ceil(len / step));
    double travelled = 0.0;
    Pose cur = a;
    for (int i = 0; i < n; ++i) {
        const double seg = std::min(step, len - travelled);
        travelled += seg;
        Control u;
        // Displacement expressed in the robot's current frame; the heading
        // turn rides on the previous control's dtheta (or here, on dx/dy for
        // the first step), the goal-heading alignment on the last.
        const double rel = wrap_angle(heading - cur.theta);
        u.dx = seg * std::cos(rel);
        u.dy = seg * std::sin(rel);
        u.dtheta = (i == 0 && n > 1) ? wrap_angle(heading - cur.theta)
                 : (i == n - 1) ? wrap_angle(b.theta - cur.theta)
                 : 0.0;
        if (n == 1) u.dtheta = wrap_angle(b.theta - cur.theta);
        cur = motion_mean(cur, u);
        out.push_back(u);
    }
    return out;
}

MotionResult propagate_pair(const Roadmap& roadmap, const WorldMap& map,
                            const std::vector<std::vector<int>>& paths, const JointBelief& initial,
                            const NoiseModel& noise, const PropagationOptions& opt,
                            RandomStream& rng) {
    const int R = initial.robots();
    if (static_cast<int>(paths.size()) != R) {
        throw std::invalid_argument("propagate_pair: one path per robot required");
    }

    // Pre-expand each path into a control tape plus node arrival ticks.
    std::vector<std::vector<Control>> tapes(R);
    std::vector<std::vector<int>> arrivals(R);
    for (int r = 0; r < R; ++r) {
        arrivals[r].push_back(0);
        Pose cur = paths[r].empty() ? initial.means[r] : roadmap.node(paths[r].front()).pose;
        for (std::size_t i = 0; i + 1 < paths[r].size(); ++i) {
            const Pose& next = roadmap.node(paths[r][i + 1]).pose;
            auto controls = edge_controls(cur, next, opt.step);
            tapes[r].insert(tapes[r].end(), controls.begin(), controls.end());
            arrivals[r].push_back(static_cast<int>(tapes[r].size()));
            cur = next;
        }
    }
    std::size_t ticks = 0;
    for (const auto& t : tapes) ticks = std::max(ticks, t.size());

    MotionResult res;
    res.node_paths = paths;
    res.node_arrival_ticks = arrivals;

    JointBelief jb = initial;
    std::vector<Pose> truth = opt.true_start ? *opt.true_start : initial.means;
    res.belief_trajectory.push_back(jb);
    res.true_trajectory.assign(R, {});
    for (int r = 0; r < R; ++r) res.true_trajectory[r].push_back(truth[r]);

    const Eigen::Matrix3d zeroW = Eigen::Matrix3d::Zero();
    for (std::size_t t = 0; t < ticks; ++t) {
        std::vector<Control> controls(R);
        std::vector<Eigen::Matrix3d> Ws(R, zeroW);
        for (int r = 0; r < R; ++r) {
            if (t < tapes[r].size()) {
                controls[r] = tapes[r][t];
                Ws[r] = noise.W;  // finished robots hold position, noise-free
                res.c_u += controls[r].translation_norm();
            }
        }
        jb = joint_predict(jb, controls, Ws);
        // Ground truth advances with process noise sampled on the control.
        for (int r = 0; r < R; ++r) {
            Control noisy = controls[r];
            if (t < tapes[r].size()) {
                noisy.dx += rng.gaussian_var(noise.W(0, 0));
                noisy.dy += rng.gaussian_var(noise.W(1, 1));
                noisy.dtheta += rng.gaussian_var(noise.W(2, 2));
            }
            truth[r] = motion_mean(truth[r], noisy);
        }
        // Landmark updates from the true poses.
        for (int r = 0; r < R; ++r) {
            for (const auto& lm : map.visible_landmarks(truth[r])) {
                Eigen::Matrix<double, 2, 3> H;
                const Measurement nominal = landmark_model(truth[r], lm, H);
                const Measurement z = simulate_noisy_observation(nominal, noise.Q_landmark, rng);
                jb = joint_update_landmark(jb, r, z, lm, noise.Q_landmark);
            }
        }
        // Mutual constraint when the pair is within range in ground truth.
        // The predicted measurement is formed at the belief means, so both the
        // true and the estimated separation must be non-singular.
        if (R >= 2 && opt.mutual_range > 0.0 &&
            distance_xy(truth[0], truth[1]) <= opt.mutual_range &&
            distance_xy(truth[0], truth[1]) > 1e-6 &&
            distance_xy(jb.means[0], jb.means[1]) > 1e-6) {
            Eigen::Matrix<double, 2, 6> H;
            const Measurement nominal = mutual_model(truth[0], truth[1], H);
            const Measurement z = simulate_noisy_observation(nominal, noise.Q_mutual, rng);
            jb = joint_update_mutual(jb, 0, 1, z, noise.Q_mutual);
        }
        if (jb.covariance.diagonal().minCoeff() < -1e-8) {
            throw NumericalFailure("propagated covariance lost positive semidefiniteness");
        }
        if (opt.record || t + 1 == ticks) {
            res.belief_trajectory.push_back(jb);
            for (int r = 0; r < R; ++r) res.true_trajectory[r].push_back(truth[r]);
        }
    }

    for (int r = 0; r < R; ++r) {
        res.goal_nodes.push_back(paths[r].empty() ? -1 : paths[r].back());
        const Pose goal = paths[r].empty() ? initial.means[r] : roadmap.node(paths[r].back()).pose;
        res.c_G += distance_xy(jb.means[r], goal);
    }
    res.c_sigma = jb.covariance.trace();
    return res;
}

double total_cost(double c_u, double c_G, double c_sigma, const CostWeights& w) {
    if (w.M_u == 0.0 && w.M_G == 0.0 && w.M_sigma == 0.0) {
        throw std::invalid_argument("cost weights must not all be zero");
    }
    if (w.M_u < 0.0 || w.M_G < 0.0 || w.M_sigma < 0.0) {
        throw std::invalid_argument("cost weights must be nonnegative");
    }
    return w.M_u * c_u + w.M_G * c_G + w.M_sigma * c_sigma;
}

MotionResult evaluate_goto_cost(const Roadmap& roadmap, const WorldMap& map, const PathQuery& query,
                                const JointBelief& initial, const NoiseModel& noise,
                                const CostWeights& weights, double step) {
    const int R = static_cast<int>(query.start_nodes.size());
    if (R != initial.robots() || static_cast<int>(query.goal_regions.size()) != R) {
        throw std::invalid_argument("evaluate_goto_cost: start/goal/belief arity mismatch");
    }
    std::vector<DijkstraResult> sp;
    std::vector<std::vector<int>> candidates(R);
    for (int r = 0; r < R; ++r) {
        sp.push_back(dijkstra(roadmap, query.start_nodes[r]));
        auto it = roadmap.region_index.find(query.goal_regions[r]);
        if (it == roadmap.region_index.end() || it->second.empty()) {
            throw InfeasibleMotion("goal region '" + query.goal_regions[r] +
                                   "' has no instantiation");
        }
        for (int id : it->second) {
            if (sp[r].dist[id] < kInf) candidates[r].push_back(id);
        }
        std::sort(candidates[r].begin(), candidates[r].end());
        if (candidates[r].empty()) {
            throw InfeasibleMotion("no path from node " + std::to_string(query.start_nodes[r]) +
                                   " to region '" + query.goal_regions[r] + "'");
        }
    }

    auto extract_path = [&](int r, int goal) {
        std::vector<int> path;
        for (int v = goal; v != -1; v = sp[r].prev[v]) path.push_back(v);
        std::reverse(path.begin(), path.end());
        return path;
    };

    // Exhaustive pair-of-instantiations enumeration; the joint belief cost
    // couples the robots, so the minimum is taken over the product set.
    // Candidates are screened without trajectory recording; the winner is
    // re-propagated on its own seed-derived stream to produce identical
    // results with the full trajectory.
    auto run = [&](const std::vector<int>& goals, bool record) {
        std::vector<std::vector<int>> paths;
        std::uint64_t salt = 0;
        for (int g : goals) salt = mix64(salt ^ static_cast<std::uint64_t>(g + 1));
        for (int r = 0; r < R; ++r) paths.push_back(extract_path(r, goals[r]));
        RandomStream stream(derive_seed(query.seed, salt));
        PropagationOptions opt;
        opt.step = step;
        opt.mutual_range = query.mutual_range;
        opt.record = record;
        MotionResult mr = propagate_pair(roadmap, map, paths, initial, noise, opt, stream);
        mr.total = total_cost(mr.c_u, mr.c_G, mr.c_sigma, weights);
        return mr;
    };

    double best_total = kInf;
    std::vector<int> best_pair;
    auto consider = [&](const std::vector<int>& goals) {
        const MotionResult mr = run(goals, /*record=*/false);
        if (best_pair.empty() || mr.total < best_total ||
            (mr.total == best_total && goals < best_pair)) {
            best_total = mr.total;
            best_pair = goals;
        }
    };

    if (R == 1) {
        for (int g : candidates[0]) consider({g});
    } else {
        for (int g0 : candidates[0]) {
            for (int g1 : candidates[1]) consider({g0, g1});
        }
    }
    return run(best_pair, /*record=*/true);
}

}  // namespace tmpbsp
