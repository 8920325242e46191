#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "tmpbsp/geometry.hpp"
#include "tmpbsp/rng.hpp"

namespace tmpbsp {

struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SamplingExhausted : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Region {
    std::string id;
    Rect polygon;
    std::vector<std::string> connected_to;
};

struct Landmark {
    std::string id;
    double x = 0.0;
    double y = 0.0;
};

/// Known 2-D environment: rooms connected through free space, plus point
/// landmarks the robots can range-bearing sense. Immutable after load.
class WorldMap {
public:
    Rect bounds;
    std::vector<Rect> obstacles;
    std::vector<Region> regions;
    std::vector<Landmark> landmarks;
    double sensor_range = 4.0;

    /// Validates all map invariants; throws ValidationError on violation.
    void validate() const;

    const Region& region(const std::string& id) const;
    bool has_region(const std::string& id) const;

    /// True iff (p.x, p.y) is strictly inside bounds and outside every
    /// obstacle. Obstacle boundaries count as collision.
    bool collision_free_pose(const Pose& p) const;

    /// Dense check along the segment a->b at the given sample spacing.
    bool collision_free_segment(const Pose& a, const Pose& b, double spacing = 0.1) const;

    /// Exactly n collision-free poses uniform in the region rectangle,
    /// headings uniform in (-pi, pi]. Rejection-sampled; throws
    /// SamplingExhausted after 1000*n failed attempts.
    std::vector<Pose> sample_region_poses(const Region& region, int n, RandomStream& rng) const;

    /// Landmarks within sensor_range of p, sorted by id.
    std::vector<Landmark> visible_landmarks(const Pose& p) const;
    std::vector<Landmark> visible_landmarks(const Pose& p, double range) const;
};

/// Full scenario configuration as loaded from a JSON document.
struct Scenario;

/// Parses and validates the `map` subtree of a scenario document.
WorldMap load_worldmap(const nlohmann::json& doc);

}  // namespace tmpbsp
