#include "toolplan/sim/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace toolplan::sim {

namespace {

struct Node {
    Vec2 p;
    int parent = -1;
    double cost = 0.0;
    std::vector<int> children;
};

class Search {
  public:
    Search(const Vec2& start, const Vec2& goal, const Bounds2& bounds, const FreePredicate& is_free,
           const PlannerParams& params)
        : start_(start), goal_(goal), bounds_(bounds), is_free_(is_free), params_(params),
          rng_(params.seed) {
        nodes_.push_back({start_, -1, 0.0, {}});
        c_min_ = distance(start_, goal_);
        ellipse_cos_ = c_min_ > 1e-12 ? (goal_.x - start_.x) / c_min_ : 1.0;
        ellipse_sin_ = c_min_ > 1e-12 ? (goal_.y - start_.y) / c_min_ : 0.0;
    }

    PathPlan run() {
        PathPlan plan;
        plan.seed = params_.seed;
        if (!is_free_(start_) || !is_free_(goal_)) {
            return plan;
        }
        if (segment_free(start_, goal_) && c_min_ <= params_.neighbor_radius) {
            // Degenerate short query; connect directly.
            goal_parent_ = 0;
            best_cost_ = c_min_;
        }
        while (expansions_ < params_.budget) {
            iterate();
        }
        plan.iterations = expansions_;
        if (goal_parent_ < 0) return plan;
        plan.found = true;
        std::vector<Vec2> rev;
        rev.push_back(goal_);
        for (int idx = goal_parent_; idx >= 0; idx = nodes_[idx].parent) {
            rev.push_back(nodes_[idx].p);
        }
        plan.waypoints.assign(rev.rbegin(), rev.rend());
        plan.cost = 0.0;
        for (size_t i = 1; i < plan.waypoints.size(); ++i) {
            plan.cost += distance(plan.waypoints[i - 1], plan.waypoints[i]);
        }
        return plan;
    }

  private:
    void iterate() {
        Vec2 sample = draw_sample();
        int cur = nearest_node(sample);
        // Greedy extension: walk toward the sample in `step` increments,
        // treating each added node with the usual choose-parent and rewire.
        // Every added node consumes one unit of the expansion budget.
        while (expansions_ < params_.budget) {
            ++expansions_;
            Vec2 q = steer(nodes_[cur].p, sample);
            if (distance(q, nodes_[cur].p) < 1e-12) break;
            if (!bounds_.contains(q) || !is_free_(q)) break;
            if (!segment_free(nodes_[cur].p, q)) break;

            std::vector<int> near = near_nodes(q);
            int parent = cur;
            double best = nodes_[cur].cost + distance(nodes_[cur].p, q);
            for (int idx : near) {
                double c = nodes_[idx].cost + distance(nodes_[idx].p, q);
                if (c < best && segment_free(nodes_[idx].p, q)) {
                    best = c;
                    parent = idx;
                }
            }
            int self = static_cast<int>(nodes_.size());
            nodes_.push_back({q, parent, best, {}});
            nodes_[parent].children.push_back(self);

            for (int idx : near) {
                double through = best + distance(q, nodes_[idx].p);
                if (through + 1e-12 < nodes_[idx].cost && segment_free(q, nodes_[idx].p)) {
                    int old_parent = nodes_[idx].parent;
                    if (old_parent >= 0) {
                        auto& ch = nodes_[old_parent].children;
                        ch.erase(std::remove(ch.begin(), ch.end(), idx), ch.end());
                    }
                    nodes_[idx].parent = self;
                    nodes_[self].children.push_back(idx);
                    propagate_cost(idx, through);
                }
            }

            try_goal(self);
            cur = self;
            if (distance(q, sample) < 1e-12) break;
        }
    }

    Vec2 draw_sample() {
        if (goal_parent_ < 0 && rng_.uniform01() < params_.goal_bias) return goal_;
        if (goal_parent_ >= 0) {
            // Informed phase: sample the ellipse that can contain improving paths.
            double a = best_cost_ * 0.5;
            double c = c_min_ * 0.5;
            double b = std::sqrt(std::max(a * a - c * c, 0.0));
            Vec2 center{(start_.x + goal_.x) * 0.5, (start_.y + goal_.y) * 0.5};
            for (int tries = 0; tries < 20; ++tries) {
                double r = std::sqrt(rng_.uniform01());
                double theta = rng_.uniform(0.0, 2.0 * M_PI);
                double ex = a * r * std::cos(theta);
                double ey = b * r * std::sin(theta);
                Vec2 p{center.x + ellipse_cos_ * ex - ellipse_sin_ * ey,
                       center.y + ellipse_sin_ * ex + ellipse_cos_ * ey};
                if (bounds_.contains(p)) return p;
            }
        }
        return {rng_.uniform(bounds_.min_x, bounds_.max_x),
                rng_.uniform(bounds_.min_y, bounds_.max_y)};
    }

    int nearest_node(const Vec2& p) const {
        int best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (size_t i = 0; i < nodes_.size(); ++i) {
            double d = distance(nodes_[i].p, p);
            if (d < best_d) {
                best_d = d;
                best = static_cast<int>(i);
            }
        }
        return best;
    }

    std::vector<int> near_nodes(const Vec2& p) const {
        std::vector<int> out;
        for (size_t i = 0; i < nodes_.size(); ++i) {
            if (distance(nodes_[i].p, p) <= params_.neighbor_radius) out.push_back(static_cast<int>(i));
        }
        return out;
    }

    Vec2 steer(const Vec2& from, const Vec2& to) const {
        double d = distance(from, to);
        if (d <= params_.step || d < 1e-12) return to;
        double s = params_.step / d;
        return {from.x + (to.x - from.x) * s, from.y + (to.y - from.y) * s};
    }

    bool segment_free(const Vec2& a, const Vec2& b) const {
        double d = distance(a, b);
        int steps = std::max(1, static_cast<int>(std::ceil(d / params_.collision_resolution)));
        for (int i = 0; i <= steps; ++i) {
            double t = static_cast<double>(i) / steps;
            Vec2 p{a.x + (b.x - a.x) * t, a.y + (b.y - a.y) * t};
            if (!is_free_(p)) return false;
        }
        return true;
    }

    void propagate_cost(int idx, double new_cost) {
        double delta = new_cost - nodes_[idx].cost;
        nodes_[idx].cost = new_cost;
        for (int child : nodes_[idx].children) propagate_cost(child, nodes_[child].cost + delta);
        if (idx == goal_parent_) best_cost_ = nodes_[idx].cost + distance(nodes_[idx].p, goal_);
    }

    void try_goal(int idx) {
        double d = distance(nodes_[idx].p, goal_);
        if (d > params_.neighbor_radius && d > params_.goal_tolerance) return;
        if (!segment_free(nodes_[idx].p, goal_)) return;
        double cost = nodes_[idx].cost + d;
        if (goal_parent_ < 0 || cost < best_cost_) {
            goal_parent_ = idx;
            best_cost_ = cost;
        }
    }

    Vec2 start_;
    Vec2 goal_;
    Bounds2 bounds_;
    const FreePredicate& is_free_;
    PlannerParams params_;
    Rng rng_;
    std::vector<Node> nodes_;
    double c_min_;
    double ellipse_cos_;
    double ellipse_sin_;
    int expansions_ = 0;
    int goal_parent_ = -1;
    double best_cost_ = std::numeric_limits<double>::infinity();
};

}  // namespace

PathPlan informed_rrt_star(const Vec2& start, const Vec2& goal, const Bounds2& bounds,
                           const FreePredicate& is_free, const PlannerParams& params) {
    Search search(start, goal, bounds, is_free, params);
    return search.run();
}

PathPlan plan_path(const Vec2& start, const Vec2& goal, const std::vector<Obstacle2>& obstacles,
                   const Bounds2& bounds, const PlannerParams& params) {
    FreePredicate is_free = [&](const Vec2& p) {
        if (!bounds.contains(p)) return false;
        for (const auto& o : obstacles) {
            if (o.contains(p)) return false;
        }
        return true;
    };
    return informed_rrt_star(start, goal, bounds, is_free, params);
}

}  // namespace toolplan::sim
