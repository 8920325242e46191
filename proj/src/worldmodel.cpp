#include "tmpbsp/worldmodel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <nlohmann/json.hpp>

namespace tmpbsp {

namespace {

Rect parse_rect(const nlohmann::json& j, const std::string& what) {
    for (const char* key : {"xmin", "ymin", "xmax", "ymax"}) {
        if (!j.contains(key)) {
            throw ValidationError(what + ": missing field '" + key + "'");
        }
    }
    Rect r{j.at("xmin").get<double>(), j.at("ymin").get<double>(),
           j.at("xmax").get<double>(), j.at("ymax").get<double>()};
    if (!(r.xmax > r.xmin) || !(r.ymax > r.ymin)) {
        throw ValidationError(what + ": degenerate rectangle");
    }
    return r;
}

}  // namespace

void WorldMap::validate() const {
    if (regions.empty()) {
        throw ValidationError("map has no regions");
    }
    for (const auto& lm : landmarks) {
        if (!bounds.contains(lm.x, lm.y)) {
            throw ValidationError("landmark '" + lm.id + "' lies outside map bounds");
        }
    }
    for (std::size_t i = 0; i < landmarks.size(); ++i) {
        for (std::size_t j = i + 1; j < landmarks.size(); ++j) {
            if (landmarks[i].id == landmarks[j].id) {
                throw ValidationError("duplicate landmark id '" + landmarks[i].id + "'");
            }
        }
    }
    for (std::size_t i = 0; i < regions.size(); ++i) {
        if (regions[i].polygon.area() <= 0.0) {
            throw ValidationError("region '" + regions[i].id + "' has non-positive area");
        }
        for (std::size_t j = i + 1; j < regions.size(); ++j) {
            if (regions[i].id == regions[j].id) {
                throw ValidationError("duplicate region id '" + regions[i].id + "'");
            }
            if (regions[i].polygon.interior_overlaps(regions[j].polygon)) {
                throw ValidationError("regions '" + regions[i].id + "' and '" + regions[j].id +
                                      "' overlap");
            }
        }
    }
    // Symmetric connectivity, declared targets exist.
    for (const auto& r : regions) {
        for (const auto& other : r.connected_to) {
            if (!has_region(other)) {
                throw ValidationError("region '" + r.id + "' connected to unknown region '" + other +
                                      "'");
            }
            const auto& back = region(other).connected_to;
            if (std::find(back.begin(), back.end(), r.id) == back.end()) {
                throw ValidationError("connectivity between '" + r.id + "' and '" + other +
                                      "' is not symmetric");
            }
        }
    }
    // Every region reachable from the first through declared connectivity.
    std::vector<std::string> stack{regions.front().id};
    std::vector<std::string> seen{regions.front().id};
    while (!stack.empty()) {
        const auto& cur = region(stack.back());
        stack.pop_back();
        for (const auto& next : cur.connected_to) {
            if (std::find(seen.begin(), seen.end(), next) == seen.end()) {
                seen.push_back(next);
                stack.push_back(next);
            }
        }
    }
    if (seen.size() != regions.size()) {
        throw ValidationError("region connectivity graph is not connected");
    }
    if (sensor_range < 0.0) {
        throw ValidationError("sensor_range must be nonnegative");
    }
}

const Region& WorldMap::region(const std::string& id) const {
    for (const auto& r : regions) {
        if (r.id == id) return r;
    }
    throw ValidationError("unknown region '" + id + "'");
}

bool WorldMap::has_region(const std::string& id) const {
    return std::any_of(regions.begin(), regions.end(), [&](const Region& r) { return r.id == id; });
}

bool WorldMap::collision_free_pose(const Pose& p) const {
    if (!bounds.strictly_contains(p.x, p.y)) return false;
    for (const auto& ob : obstacles) {
        if (ob.contains(p.x, p.y)) return false;  // boundary counts as collision
    }
    return true;
}

bool WorldMap::collision_free_segment(const Pose& a, const Pose& b, double spacing) const {
    const double len = distance_xy(a, b);
    const int steps = std::max(1, static_cast<int>(std::ceil(len / spacing)));
    for (int i = 0; i <= steps; ++i) {
        const double t = static_cast<double>(i) / steps;
        Pose q(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y), a.theta);
        if (!collision_free_pose(q)) return false;
    }
    return true;
}

std::vector<Pose> WorldMap::sample_region_poses(const Region& region, int n, RandomStream& rng) const {
    if (n < 1) {
        throw std::invalid_argument("sample_region_poses: n must be >= 1");
    }
    std::vector<Pose> out;
    out.reserve(n);
    const long max_attempts = 1000L * n;
    long attempts = 0;
    while (static_cast<int>(out.size()) < n) {
        if (attempts++ >= max_attempts) {
            throw SamplingExhausted("region '" + region.id + "' sampling exhausted after " +
                                    std::to_string(max_attempts) + " attempts");
        }
        const double x = rng.uniform(region.polygon.xmin, region.polygon.xmax);
        const double y = rng.uniform(region.polygon.ymin, region.polygon.ymax);
        const double theta = rng.uniform(-std::numbers::pi, std::numbers::pi);
        Pose p(x, y, theta);
        if (collision_free_pose(p)) out.push_back(p);
    }
    return out;
}

std::vector<Landmark> WorldMap::visible_landmarks(const Pose& p) const {
    return visible_landmarks(p, sensor_range);
}

std::vector<Landmark> WorldMap::visible_landmarks(const Pose& p, double range) const {
    std::vector<Landmark> out;
    for (const auto& lm : landmarks) {
        if (std::hypot(lm.x - p.x, lm.y - p.y) <= range) out.push_back(lm);
    }
    std::sort(out.begin(), out.end(), [](const Landmark& a, const Landmark& b) { return a.id < b.id; });
    return out;
}

WorldMap load_worldmap(const nlohmann::json& doc) {
    if (!doc.contains("map")) {
        throw ValidationError("scenario: missing 'map'");
    }
    const auto& m = doc.at("map");
    WorldMap map;
    if (!m.contains("bounds")) throw ValidationError("map: missing 'bounds'");
    map.bounds = parse_rect(m.at("bounds"), "bounds");
    for (const auto& ob : m.value("obstacles", nlohmann::json::array())) {
        map.obstacles.push_back(parse_rect(ob, "obstacle"));
    }
    if (!m.contains("regions")) throw ValidationError("map: missing 'regions'");
    for (const auto& rj : m.at("regions")) {
        Region r;
        if (!rj.contains("id")) throw ValidationError("region: missing 'id'");
        r.id = rj.at("id").get<std::string>();
        r.polygon = parse_rect(rj, "region '" + r.id + "'");
        for (const auto& c : rj.value("connected_to", nlohmann::json::array())) {
            r.connected_to.push_back(c.get<std::string>());
        }
        map.regions.push_back(std::move(r));
    }
    for (const auto& lj : m.value("landmarks", nlohmann::json::array())) {
        Landmark lm;
        if (!lj.contains("id")) throw ValidationError("landmark: missing 'id'");
        lm.id = lj.at("id").get<std::string>();
        lm.x = lj.at("x").get<double>();
        lm.y = lj.at("y").get<double>();
        map.landmarks.push_back(std::move(lm));
    }
    map.sensor_range = m.value("sensor_range", 4.0);
    map.validate();
    return map;
}

}  // namespace tmpbsp
