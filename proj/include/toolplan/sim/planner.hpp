#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "toolplan/geometry.hpp"

namespace toolplan::sim {

struct PlannerParams {
    std::uint64_t seed = 1;
    double step = 0.05;              // extension step, meters
    double neighbor_radius = 0.3;    // rewiring / goal-connect radius
    double goal_tolerance = 0.02;    // a node this close counts as the goal
    double goal_bias = 0.05;         // fraction of samples drawn at the goal
    double collision_resolution = 0.01;
    int budget = 2000;               // fixed iteration budget
};

struct Bounds2 {
    double min_x = 0, min_y = 0, max_x = 0, max_y = 0;
    bool contains(const Vec2& p) const {
        return p.x >= min_x && p.x <= max_x && p.y >= min_y && p.y <= max_y;
    }
};

struct PathPlan {
    bool found = false;
    std::vector<Vec2> waypoints;  // first = start, last = goal
    double cost = 0.0;            // meters
    int iterations = 0;
    std::uint64_t seed = 0;
};

// Deterministic PRNG (splitmix64); identical sequences on every platform.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}
    std::uint64_t next() {
        state_ += 0x9e3779b97f4a7c15ull;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30u)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27u)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31u);
    }
    double uniform01() { return static_cast<double>(next() >> 11u) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  private:
    std::uint64_t state_;
};

using FreePredicate = std::function<bool(const Vec2&)>;

// Informed RRT*: uniform sampling until the first solution, then sampling
// restricted to the prolate ellipsoid with foci start/goal and transverse
// diameter equal to the best cost; rewiring within neighbor_radius; runs the
// fixed iteration budget; deterministic given the seed.
PathPlan informed_rrt_star(const Vec2& start, const Vec2& goal, const Bounds2& bounds,
                           const FreePredicate& is_free, const PlannerParams& params);

// Convenience wrapper over inflated axis-aligned obstacles.
struct Obstacle2 {
    double min_x, min_y, max_x, max_y;
    bool contains(const Vec2& p) const {
        return p.x >= min_x && p.x <= max_x && p.y >= min_y && p.y <= max_y;
    }
};

PathPlan plan_path(const Vec2& start, const Vec2& goal, const std::vector<Obstacle2>& obstacles,
                   const Bounds2& bounds, const PlannerParams& params);

}  // namespace toolplan::sim
