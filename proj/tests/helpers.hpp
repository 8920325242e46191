#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "tmpbsp/pddl.hpp"
#include "tmpbsp/worldmodel.hpp"

namespace testutil {

inline std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::string scenario_path(const std::string& name) {
    return std::string(TMPBSP_SCENARIO_DIR) + "/" + name;
}

/// Obstacle-free map with n 3x3 rooms in a row (room i at x in [4i, 4i+3],
/// y in [0, 3]) under an open strip, fully connected pairwise.
inline tmpbsp::WorldMap strip_map(int n, bool with_landmarks = false) {
    tmpbsp::WorldMap map;
    map.bounds = {-1.0, -1.0, 4.0 * n + 0.0, 6.0};
    std::vector<std::string> ids;
    for (int i = 0; i < n; ++i) ids.push_back("l" + std::to_string(i + 1));
    for (int i = 0; i < n; ++i) {
        tmpbsp::Region r;
        r.id = ids[i];
        r.polygon = {4.0 * i, 0.0, 4.0 * i + 3.0, 3.0};
        for (const auto& other : ids) {
            if (other != r.id) r.connected_to.push_back(other);
        }
        map.regions.push_back(std::move(r));
    }
    if (with_landmarks) {
        for (int i = 0; i < n; ++i) {
            map.landmarks.push_back({"lm" + std::to_string(i + 1), 4.0 * i + 1.5, 4.5});
        }
    }
    map.sensor_range = 4.0;
    map.validate();
    return map;
}

/// Problem over the given rooms: each robot starts in start_rooms[i], every
/// ordered distinct room pair is connected, goal is visiting goal_rooms.
inline tmpbsp::Problem visit_problem(const tmpbsp::Domain& domain,
                                     const std::vector<std::string>& rooms,
                                     const std::vector<std::string>& robots,
                                     const std::vector<std::string>& start_rooms,
                                     const std::vector<std::string>& goal_rooms) {
    tmpbsp::Problem p;
    p.name = "generated";
    p.domain_name = domain.name;
    for (const auto& r : rooms) p.objects[r] = "room";
    for (const auto& r : robots) p.objects[r] = "robot";
    for (std::size_t i = 0; i < robots.size(); ++i) {
        p.init.insert({"robot_in", {robots[i], start_rooms[i]}});
    }
    for (const auto& a : rooms) {
        for (const auto& b : rooms) {
            if (a != b) p.init.insert({"connected", {a, b}});
        }
    }
    for (const auto& g : goal_rooms) p.goal.push_back({"visited", {g}});
    return p;
}

}  // namespace testutil
