#include "toolplan/sim/world.hpp"

#include <algorithm>
#include <cmath>

namespace toolplan::sim {

using script::ParamKind;
using script::SkillError;
using script::SkillErrorKind;
using script::SkillResult;
using script::Value;

namespace {

std::string pair_key(const std::string& a, const std::string& b) {
    return a < b ? a + "|" + b : b + "|" + a;
}

SkillError make_error(SkillErrorKind kind, std::string detail,
                      std::vector<std::pair<std::string, double>> values = {}) {
    return SkillError{kind, std::move(detail), std::move(values)};
}

double deg2rad(double d) { return d * M_PI / 180.0; }

}  // namespace

World::World(const SceneConfig& scene, const SimConfig& config, std::string motion_order)
    : scene_(scene), config_(config), motion_order_(std::move(motion_order)) {
    for (const auto& obj : scene_.objects) {
        states_[obj.name] = ObjState{obj.position, normalize_yaw(obj.yaw)};
        supports_[obj.name] = scene_.floor_name;
    }
    for (const auto& obj : scene_.objects) snap_to_support(obj.name);

    if (scene_.robot.embodiment == Embodiment::arm) {
        robot_.position = scene_.robot.workspace_center;
        robot_.yaw = scene_.robot.base_yaw;
        robot_.support = "";
    } else {
        Surface s = surface_at(scene_.robot.base_position.x, scene_.robot.base_position.y);
        robot_.position = {scene_.robot.base_position.x, scene_.robot.base_position.y, s.top};
        robot_.yaw = scene_.robot.base_yaw;
        robot_.support = s.id;
    }

    // The lever's "far end" is fixed from the supporting object's initial pose.
    for (const auto& rule : scene_.mechanisms) {
        if (rule.kind != MechanismRule::Kind::lever) continue;
        auto lever_it = rule.participants.find("lever");
        auto support_it = rule.participants.find("support");
        if (lever_it == rule.participants.end() || support_it == rule.participants.end()) continue;
        const ObjectSpec* lever = spec(lever_it->second);
        const ObjectSpec* support = spec(support_it->second);
        if (!lever || !support) continue;
        Aabb box = lever->world_aabb();
        Aabb half = box;
        if (box.extent().x >= box.extent().y) {
            double mid = (box.lo.x + box.hi.x) * 0.5;
            if (support->position.x <= mid) half.hi.x = mid; else half.lo.x = mid;
        } else {
            double mid = (box.lo.y + box.hi.y) * 0.5;
            if (support->position.y <= mid) half.hi.y = mid; else half.lo.y = mid;
        }
        lever_far_half_ = half;
        break;
    }

    apply_mechanisms();
}

World World::for_task(const TaskSpec& task, const SimConfig& config) {
    return World(task.scene, config, config.motion_order_for(task.id));
}

const ObjState& World::object_state(const std::string& name) const { return states_.at(name); }

std::set<std::string> World::group_of(const std::string& name) const {
    for (const auto& g : merged_) {
        if (g.count(name)) return g;
    }
    return {name};
}

Aabb World::object_aabb(const std::string& name) const {
    const ObjectSpec* sp = spec(name);
    const ObjState& st = state(name);
    return box_world_aabb(st.position, sp->size, st.yaw);
}

Aabb World::group_aabb(const std::string& name) const {
    auto members = group_of(name);
    Aabb box = object_aabb(*members.begin());
    for (const auto& m : members) box = box.united(object_aabb(m));
    return box;
}

std::string World::support_of(const std::string& name) const {
    auto it = supports_.find(name);
    return it == supports_.end() ? "" : it->second;
}

std::set<std::string> World::supportees_of(const std::string& name) const {
    std::set<std::string> out;
    for (const auto& [obj, sup] : supports_) {
        if (sup == name) out.insert(obj);
    }
    return out;
}

void World::translate_rigid(const std::string& name, const Vec3& delta,
                            std::set<std::string>& moved) {
    if (!moved.insert(name).second) return;
    states_.at(name).position = states_.at(name).position + delta;
    for (const auto& s : supportees_of(name)) translate_rigid(s, delta, moved);
}

void World::rotate_group_about(const std::set<std::string>& members, const Vec3& pivot,
                               double dyaw) {
    std::set<std::string> all = members;
    for (const auto& m : members) {
        for (const auto& s : supportees_of(m)) all.insert(s);
    }
    for (const auto& name : all) {
        ObjState& st = states_.at(name);
        Vec3 rel = st.position - pivot;
        st.position = pivot + rotate_yaw(rel, dyaw);
        st.yaw = normalize_yaw(st.yaw + dyaw);
    }
}

void World::snap_to_support(const std::string& name) {
    const std::set<std::string> group = group_of(name);
    std::set<std::string> exclude = group;
    for (const auto& m : group) {
        // Transitive supportees ride on top; they cannot support their carrier.
        std::set<std::string> direct = supportees_of(m);
        std::vector<std::string> stack(direct.begin(), direct.end());
        while (!stack.empty()) {
            std::string s = stack.back();
            stack.pop_back();
            if (!exclude.insert(s).second) continue;
            for (const auto& t : supportees_of(s)) stack.push_back(t);
        }
    }

    Aabb box = group_aabb(name);
    double bottom = box.lo.z;
    std::string supporter = scene_.floor_name;
    double top = 0.0;
    for (const auto& obj : scene_.objects) {
        if (exclude.count(obj.name)) continue;
        Aabb ob = object_aabb(obj.name);
        // Footprint overlap beyond tolerance, so a spanning object stays up
        // even when its center hangs over a gap.
        if (ob.overlap_x(box) <= 1e-3 || ob.overlap_y(box) <= 1e-3) continue;
        if (ob.hi.z <= bottom + 0.05 && ob.hi.z > top) {
            top = ob.hi.z;
            supporter = obj.name;
        }
    }
    double dz = top - bottom;
    if (std::abs(dz) > 1e-12) {
        std::set<std::string> moved;
        for (const auto& m : group) translate_rigid(m, {0, 0, dz}, moved);
    }
    for (const auto& m : group) supports_[m] = supporter;
}

std::vector<Surface> World::surfaces() const {
    std::vector<Surface> out;
    Surface floor;
    floor.id = scene_.floor_name;
    floor.top = 0.0;
    floor.footprint = {{scene_.floor_extent.min_x, scene_.floor_extent.min_y, 0},
                       {scene_.floor_extent.max_x, scene_.floor_extent.max_y, 0}};
    out.push_back(floor);
    for (const auto& obj : scene_.objects) {
        if (!obj.is_support_surface || is_held(obj.name)) continue;
        Aabb box = object_aabb(obj.name);
        out.push_back({obj.name, box.hi.z, box});
    }
    return out;
}

Surface World::surface_at(double x, double y) const {
    Surface best;
    best.id = scene_.floor_name;
    best.top = -1.0;
    for (const auto& s : surfaces()) {
        if (s.footprint.contains_xy(x, y) && s.top > best.top) best = s;
    }
    if (best.top < 0) {
        best.top = 0.0;
        best.footprint = {{scene_.floor_extent.min_x, scene_.floor_extent.min_y, 0},
                          {scene_.floor_extent.max_x, scene_.floor_extent.max_y, 0}};
    }
    return best;
}

std::optional<Surface> World::surface_by_id(const std::string& id) const {
    for (const auto& s : surfaces()) {
        if (s.id == id) return s;
    }
    return std::nullopt;
}

double World::surface_gap(const Surface& a, const Surface& b) const {
    double dx = std::max({a.footprint.lo.x - b.footprint.hi.x,
                          b.footprint.lo.x - a.footprint.hi.x, 0.0});
    double dy = std::max({a.footprint.lo.y - b.footprint.hi.y,
                          b.footprint.lo.y - a.footprint.hi.y, 0.0});
    if (dx > 0 && dy > 0) return std::hypot(dx, dy);
    return std::max(dx, dy);
}

bool World::crossing_allowed(const Surface& a, const Surface& b, double* gap_out) const {
    double gap = surface_gap(a, b);
    if (gap_out) *gap_out = gap;
    if (std::abs(a.top - b.top) > config_.walk_step) return false;
    if (gap <= scene_.robot.gap_limit) return true;
    auto it = flags_.gap_spanned_by.find(pair_key(a.id, b.id));
    return it != flags_.gap_spanned_by.end();
}

std::vector<Surface> World::walkable_region() const {
    std::vector<Surface> all = surfaces();
    std::set<std::string> in_region;
    std::vector<Surface> region;
    std::vector<Surface> frontier;
    for (const auto& s : all) {
        if (s.id == robot_.support) {
            frontier.push_back(s);
            in_region.insert(s.id);
            region.push_back(s);
            break;
        }
    }
    while (!frontier.empty()) {
        Surface cur = frontier.back();
        frontier.pop_back();
        for (const auto& s : all) {
            if (in_region.count(s.id)) continue;
            if (crossing_allowed(cur, s)) {
                in_region.insert(s.id);
                region.push_back(s);
                frontier.push_back(s);
            }
        }
    }
    return region;
}

PathPlan World::plan_walk_path(const Vec2& start, const Vec2& goal,
                               const std::set<std::string>& extra_obstacle_excludes) const {
    std::vector<Surface> region = walkable_region();

    // Connector bands over legal gaps so paths may cross between surfaces.
    std::vector<Aabb> bands;
    for (size_t i = 0; i < region.size(); ++i) {
        for (size_t j = i + 1; j < region.size(); ++j) {
            double gap = 0.0;
            if (!crossing_allowed(region[i], region[j], &gap) || gap <= 0) continue;
            const Aabb& a = region[i].footprint;
            const Aabb& b = region[j].footprint;
            if (a.hi.x <= b.lo.x || b.hi.x <= a.lo.x) {
                double x0 = std::min(a.hi.x, b.hi.x);
                double x1 = std::max(a.lo.x, b.lo.x);
                double y0 = std::max(a.lo.y, b.lo.y);
                double y1 = std::min(a.hi.y, b.hi.y);
                if (y1 > y0) bands.push_back({{x0, y0, 0}, {x1, y1, 0}});
            } else if (a.hi.y <= b.lo.y || b.hi.y <= a.lo.y) {
                double y0 = std::min(a.hi.y, b.hi.y);
                double y1 = std::max(a.lo.y, b.lo.y);
                double x0 = std::max(a.lo.x, b.lo.x);
                double x1 = std::min(a.hi.x, b.hi.x);
                if (x1 > x0) bands.push_back({{x0, y0, 0}, {x1, y1, 0}});
            }
        }
    }

    std::set<std::string> spanning;
    for (const auto& [key, name] : flags_.gap_spanned_by) spanning.insert(name);
    std::set<std::string> region_ids;
    for (const auto& s : region) region_ids.insert(s.id);

    std::vector<Aabb> obstacles;
    for (const auto& obj : scene_.objects) {
        if (is_held(obj.name) || spanning.count(obj.name) ||
            extra_obstacle_excludes.count(obj.name) || region_ids.count(obj.name)) {
            continue;  // surfaces the robot can walk on are not obstacles
        }
        Aabb box = object_aabb(obj.name);
        auto sup = surface_by_id(support_of(obj.name));
        double base = sup ? sup->top : 0.0;
        if (box.hi.z <= base + config_.walk_step) continue;  // low enough to walk over
        double r = config_.robot_half_width;
        obstacles.push_back({{box.lo.x - r, box.lo.y - r, 0}, {box.hi.x + r, box.hi.y + r, 0}});
    }

    Bounds2 bounds{scene_.floor_extent.min_x, scene_.floor_extent.min_y,
                   scene_.floor_extent.max_x, scene_.floor_extent.max_y};
    // The robot's own footprint is free even when obstacle inflation has
    // crept over its current pose (e.g. after rotating a pushed object).
    double start_pocket = config_.robot_half_width;
    FreePredicate is_free = [&, region, bands, obstacles, start, start_pocket](const Vec2& p) {
        if (!bounds.contains(p)) return false;
        bool near_start = distance(p, start) <= start_pocket;
        for (const auto& o : obstacles) {
            if (!near_start && o.contains_xy(p.x, p.y)) return false;
        }
        for (const auto& s : region) {
            if (s.footprint.contains_xy(p.x, p.y)) return true;
        }
        for (const auto& b : bands) {
            if (b.contains_xy(p.x, p.y)) return true;
        }
        return false;
    };

    PlannerParams params = config_.planner;
    params.seed = next_plan_seed();
    return informed_rrt_star(start, goal, bounds, is_free, params);
}

std::uint64_t World::next_plan_seed() const {
    return config_.planner.seed ^ (static_cast<std::uint64_t>(step_ + 1) * 0x9e3779b97f4a7c15ull);
}

// --- skills ------------------------------------------------------------------

script::SkillResult World::get_position(const std::string& name) const {
    if (!spec(name)) return SkillResult::fail(make_error(SkillErrorKind::unknown_object,
                                                         "no object named '" + name + "'"));
    return SkillResult::ok(Value::vector(state(name).position));
}

script::SkillResult World::get_size(const std::string& name) const {
    if (!spec(name)) return SkillResult::fail(make_error(SkillErrorKind::unknown_object,
                                                         "no object named '" + name + "'"));
    return SkillResult::ok(Value::vector(group_aabb(name).extent()));
}

Aabb World::gripper_aabb(const Vec3& at) const {
    double g = config_.gripper_half_width;
    return {{at.x - g, at.y - g, at.z - g}, {at.x + g, at.y + g, at.z + g}};
}

void World::couple_swept(const Vec3& from, const Vec3& to) {
    Vec3 delta = to - from;
    Vec3 horizontal{delta.x, delta.y, 0.0};
    if (horizontal.norm() < 1e-12) return;

    Aabb swept = gripper_aabb(from).united(gripper_aabb(to));
    for (const auto& m : held_) {
        Aabb now = object_aabb(m);
        Aabb then{now.lo + delta, now.hi + delta};
        swept = swept.united(now).united(then);
    }

    std::set<std::string> exclude = held_;
    for (const auto& m : held_) {
        std::set<std::string> direct = supportees_of(m);
        std::vector<std::string> stack(direct.begin(), direct.end());
        while (!stack.empty()) {
            std::string s = stack.back();
            stack.pop_back();
            if (!exclude.insert(s).second) continue;
            for (const auto& t : supportees_of(s)) stack.push_back(t);
        }
    }

    std::vector<std::string> coupled;
    for (const auto& obj : scene_.objects) {
        if (exclude.count(obj.name)) continue;
        if (object_aabb(obj.name).intersects(swept, 1e-9)) coupled.push_back(obj.name);
    }
    std::set<std::string> moved;
    for (const auto& name : coupled) translate_rigid(name, horizontal, moved);
    for (const auto& name : coupled) snap_to_support(name);
}

script::SkillResult World::move_to_position(const Vec3& target) {
    if (scene_.robot.embodiment != Embodiment::arm) {
        return SkillResult::fail(make_error(SkillErrorKind::invalid_target,
                                            "move_to_position is an arm skill"));
    }
    if (!target.finite()) {
        return SkillResult::fail(make_error(SkillErrorKind::invalid_target, "non-finite target"));
    }
    double dist = distance(target, scene_.robot.workspace_center);
    if (dist > scene_.robot.workspace_radius + 1e-9) {
        return SkillResult::fail(make_error(
            SkillErrorKind::out_of_workspace,
            "target is " + fmt2(dist) + " m from the workspace center, radius is " +
                fmt2(scene_.robot.workspace_radius) + " m",
            {{"distance", dist}, {"workspace_radius", scene_.robot.workspace_radius}}));
    }
    for (const auto& m : held_) {
        if (spec(m)->has_tag("not_liftable") && target.z - robot_.position.z > 0.02) {
            return SkillResult::fail(make_error(SkillErrorKind::invalid_target,
                                                "'" + m + "' cannot be lifted"));
        }
    }

    std::vector<Vec3> waypoints;
    const Vec3 start = robot_.position;
    if (motion_order_ == "yxz") {
        waypoints.push_back({start.x, target.y, start.z});
        waypoints.push_back({target.x, target.y, start.z});
        waypoints.push_back(target);
    } else if (motion_order_ == "zyx") {
        waypoints.push_back({start.x, start.y, target.z});
        waypoints.push_back({start.x, target.y, target.z});
        waypoints.push_back(target);
    } else {
        waypoints.push_back(target);
    }

    for (const Vec3& wp : waypoints) {
        Vec3 from = robot_.position;
        if (distance(from, wp) < 1e-12) continue;
        couple_swept(from, wp);
        Vec3 delta = wp - from;
        std::set<std::string> moved;
        for (const auto& m : held_) translate_rigid(m, delta, moved);
        robot_.position = wp;
    }
    ++step_;
    apply_mechanisms();
    return SkillResult::ok(Value::unit_value());
}

script::SkillResult World::close_gripper() {
    if (scene_.robot.embodiment != Embodiment::arm) {
        return SkillResult::fail(make_error(SkillErrorKind::invalid_target,
                                            "close_gripper is an arm skill"));
    }
    SkillResult res = SkillResult::ok(Value::unit_value());
    if (gripper_closed_) return res;
    gripper_closed_ = true;

    std::string best;
    double best_dist = config_.grasp_radius;
    for (const auto& obj : scene_.objects) {
        if (is_held(obj.name)) continue;
        Vec3 gp = states_.at(obj.name).position +
                  rotate_yaw(obj.graspable_offset, states_.at(obj.name).yaw);
        double d = distance(gp, robot_.position);
        if (d < best_dist || (d == best_dist && !best.empty() && obj.name < best)) {
            if (d <= config_.grasp_radius) {
                best_dist = d;
                best = obj.name;
            }
        }
    }
    if (!best.empty()) {
        for (const auto& m : group_of(best)) {
            held_.insert(m);
            held_offsets_[m] = states_.at(m).position - robot_.position;
            supports_[m] = "";
        }
        res.notes.push_back("grasped '" + best + "'");
    }
    ++step_;
    apply_mechanisms();
    return res;
}

script::SkillResult World::open_gripper() {
    if (scene_.robot.embodiment != Embodiment::arm) {
        return SkillResult::fail(make_error(SkillErrorKind::invalid_target,
                                            "open_gripper is an arm skill"));
    }
    SkillResult res = SkillResult::ok(Value::unit_value());
    if (!gripper_closed_) return res;
    gripper_closed_ = false;
    if (!held_.empty()) {
        std::set<std::string> released = held_;
        held_.clear();
        held_offsets_.clear();
        std::set<std::string> done;
        for (const auto& m : released) {
            if (done.count(m)) continue;
            for (const auto& g : group_of(m)) done.insert(g);
            snap_to_support(m);  // snaps the whole rigid group
        }
        res.notes.push_back("released");
    }
    ++step_;
    apply_mechanisms();
    return res;
}

script::SkillResult World::walk_to_position(const Vec3& target) {
    if (scene_.robot.embodiment != Embodiment::quadruped) {
        return SkillResult::fail(make_error(SkillErrorKind::invalid_target,
                                            "walk_to_position is a quadruped skill"));
    }
    if (!target.finite()) {
        return SkillResult::fail(make_error(SkillErrorKind::invalid_target, "non-finite target"));
    }
    if (!scene_.floor_extent.contains(target.x, target.y)) {
        return SkillResult::fail(make_error(SkillErrorKind::invalid_target,
                                            "target outside the floor extent"));
    }
    Surface ts = surface_at(target.x, target.y);
    std::vector<Surface> region = walkable_region();
    bool reachable = false;
    for (const auto& s : region) {
        if (s.id == ts.id) { reachable = true; break; }
    }
    if (!reachable) {
        // Report the narrowest gap at matching height, else the height step.
        double min_gap = -1.0;
        double min_rise = -1.0;
        for (const auto& s : region) {
            double gap = surface_gap(s, ts);
            double rise = std::abs(ts.top - s.top);
            if (rise <= config_.walk_step) {
                if (min_gap < 0 || gap < min_gap) min_gap = gap;
            }
            if (min_rise < 0 || rise < min_rise) min_rise = rise;
        }
        if (min_gap >= 0) {
            return SkillResult::fail(make_error(
                SkillErrorKind::gap_too_wide,
                "gap to '" + ts.id + "' is " + fmt2(min_gap) + " m, walkable limit is " +
                    fmt2(scene_.robot.gap_limit) + " m",
                {{"gap_width", min_gap}, {"gap_limit", scene_.robot.gap_limit}}));
        }
        return SkillResult::fail(make_error(
            SkillErrorKind::step_too_high,
            "height difference to '" + ts.id + "' is " + fmt2(min_rise) +
                " m, walking tolerates " + fmt2(config_.walk_step) + " m",
            {{"rise", min_rise}, {"limit", config_.walk_step}}));
    }

    PathPlan plan = plan_walk_path({robot_.position.x, robot_.position.y}, {target.x, target.y});
    if (!plan.found) {
        return SkillResult::fail(make_error(SkillErrorKind::path_not_found,
                                            "no collision-free path to the target"));
    }
    if (plan.waypoints.size() >= 2) {
        const Vec2& a = plan.waypoints[plan.waypoints.size() - 2];
        const Vec2& b = plan.waypoints.back();
        if (distance(a, b) > 1e-9) robot_.yaw = normalize_yaw(std::atan2(b.y - a.y, b.x - a.x));
    }
    robot_.position = {target.x, target.y, ts.top};
    robot_.support = ts.id;
    ++step_;
    apply_mechanisms();
    SkillResult res = SkillResult::ok(Value::unit_value());
    res.notes.push_back("walked to '" + ts.id + "', path cost " + fmt2(plan.cost) + " m");
    return res;
}

script::SkillResult World::climb_to_position(const Vec3& target) {
    if (scene_.robot.embodiment != Embodiment::quadruped) {
        return SkillResult::fail(make_error(SkillErrorKind::invalid_target,
                                            "climb_to_position is a quadruped skill"));
    }
    if (!target.finite()) {
        return SkillResult::fail(make_error(SkillErrorKind::invalid_target, "non-finite target"));
    }
    if (!scene_.floor_extent.contains(target.x, target.y)) {
        return SkillResult::fail(make_error(SkillErrorKind::invalid_target,
                                            "target outside the floor extent"));
    }
    // Straight-line move with no path planning; only the surface chain's
    // upward rises are checked.
    Vec2 start{robot_.position.x, robot_.position.y};
    Vec2 goal{target.x, target.y};
    double dist = distance(start, goal);
    int steps = std::max(1, static_cast<int>(std::ceil(dist / 0.01)));
    Surface prev = surface_at(start.x, start.y);
    for (int i = 1; i <= steps; ++i) {
        double t = static_cast<double>(i) / steps;
        Vec2 p{start.x + (goal.x - start.x) * t, start.y + (goal.y - start.y) * t};
        Surface cur = surface_at(p.x, p.y);
        if (cur.id == prev.id) continue;
        double rise = cur.top - prev.top;
        if (rise > scene_.robot.climb_step_limit + 1e-9) {
            return SkillResult::fail(make_error(
                SkillErrorKind::step_too_high,
                "rise from '" + prev.id + "' to '" + cur.id + "' is " + fmt2(rise) +
                    " m, climb limit is " + fmt2(scene_.robot.climb_step_limit) + " m",
                {{"rise", rise}, {"limit", scene_.robot.climb_step_limit}}));
        }
        prev = cur;
    }
    robot_.position = {target.x, target.y, prev.top};
    robot_.support = prev.id;
    if (dist > 1e-9) robot_.yaw = normalize_yaw(std::atan2(goal.y - start.y, goal.x - start.x));
    ++step_;
    apply_mechanisms();
    SkillResult res = SkillResult::ok(Value::unit_value());
    res.notes.push_back("climbed to '" + prev.id + "'");
    return res;
}

script::SkillResult World::push_to_position(const std::string& name, const Vec3& target,
                                            double target_yaw) {
    if (scene_.robot.embodiment != Embodiment::quadruped) {
        return SkillResult::fail(make_error(SkillErrorKind::invalid_target,
                                            "push_to_position is a quadruped skill"));
    }
    const ObjectSpec* sp = spec(name);
    if (!sp) {
        return SkillResult::fail(make_error(SkillErrorKind::unknown_object,
                                            "no object named '" + name + "'"));
    }
    double mass = 0.0;
    for (const auto& m : group_of(name)) mass += spec(m)->mass;
    if (mass > scene_.robot.push_mass_limit) {
        return SkillResult::fail(make_error(
            SkillErrorKind::over_mass_limit,
            "'" + name + "' weighs " + fmt2(mass) + " kg, push limit is " +
                fmt2(scene_.robot.push_mass_limit) + " kg",
            {{"mass", mass}, {"push_mass_limit", scene_.robot.push_mass_limit}}));
    }
    if (!target.finite() || !std::isfinite(target_yaw)) {
        return SkillResult::fail(make_error(SkillErrorKind::invalid_target, "non-finite target"));
    }
    if (!scene_.floor_extent.contains(target.x, target.y)) {
        return SkillResult::fail(make_error(SkillErrorKind::invalid_target,
                                            "target outside the floor extent"));
    }

    SkillResult res = SkillResult::ok(Value::unit_value());
    const std::set<std::string> group = group_of(name);
    auto exclude_for_planning = std::set<std::string>{};  // pushed object stays an obstacle

    struct Phase {
        const char* label;
        Vec3 axis;       // push direction unit axis (zero for rotate)
        double amount;   // displacement (or yaw delta for rotate)
    };

    double dyaw = normalize_yaw(target_yaw - state(name).yaw);
    std::vector<Phase> phases;
    phases.push_back({"rotate", {0, 0, 0}, dyaw});
    phases.push_back({"push_y", {0, 1, 0}, 0.0});  // amounts computed per-phase below
    phases.push_back({"push_x", {1, 0, 0}, 0.0});

    for (auto& phase : phases) {
        std::string label = phase.label;
        double amount;
        if (label == "rotate") {
            amount = phase.amount;
        } else if (label == "push_y") {
            amount = target.y - state(name).position.y;
        } else {
            amount = target.x - state(name).position.x;
        }
        res.notes.push_back("phase " + label + " delta " + fmt2(amount));
        if (std::abs(amount) < 1e-9) continue;

        // A reachable, collision-free standing pose adjacent to the push face.
        Aabb box = object_aabb(name);
        if (label == "rotate") {
            // Stand clear of the footprint swept by the rotation.
            const ObjectSpec* osp = spec(name);
            box = box.united(box_world_aabb(state(name).position, osp->size,
                                            normalize_yaw(state(name).yaw + amount)));
        }
        Vec3 c = box.center();
        double hx = box.extent().x * 0.5 + config_.robot_half_width + config_.push_clearance;
        double hy = box.extent().y * 0.5 + config_.robot_half_width + config_.push_clearance;
        std::vector<Vec2> candidates;
        if (label == "rotate") {
            candidates = {{c.x - hx, c.y}, {c.x + hx, c.y}, {c.x, c.y - hy}, {c.x, c.y + hy}};
            std::stable_sort(candidates.begin(), candidates.end(), [&](const Vec2& a, const Vec2& b) {
                Vec2 r{robot_.position.x, robot_.position.y};
                return distance(a, r) < distance(b, r);
            });
        } else if (label == "push_y") {
            candidates = {{c.x, amount > 0 ? c.y - hy : c.y + hy}};
        } else {
            candidates = {{amount > 0 ? c.x - hx : c.x + hx, c.y}};
        }

        // Crossing a legal gap band keeps the robot at its walking level even
        // though no surface lies directly underneath.
        auto place_robot = [&](const Vec2& p) {
            Surface s = surface_at(p.x, p.y);
            auto cur = surface_by_id(robot_.support);
            if (cur && std::abs(s.top - cur->top) > config_.walk_step) {
                robot_.position = {p.x, p.y, cur->top};
            } else {
                robot_.position = {p.x, p.y, s.top};
                robot_.support = s.id;
            }
        };

        bool placed = false;
        for (const Vec2& cand : candidates) {
            PathPlan plan = plan_walk_path({robot_.position.x, robot_.position.y}, cand,
                                           exclude_for_planning);
            if (!plan.found) continue;
            place_robot(cand);
            placed = true;
            break;
        }
        if (!placed) {
            res.error = make_error(SkillErrorKind::path_not_found,
                                   "no reachable standing pose for push phase '" + label + "'");
            return res;
        }

        if (label == "rotate") {
            rotate_group_about(group, state(name).position, amount);
        } else {
            Vec3 delta = phase.axis * amount;
            std::set<std::string> moved;
            for (const auto& m : group) translate_rigid(m, delta, moved);
            for (const auto& m : group) snap_to_support(m);
            place_robot({robot_.position.x + delta.x, robot_.position.y + delta.y});
        }
    }

    // Final pose interpenetration check against bystanders (1 mm bound).
    std::set<std::string> exclude = group;
    for (const auto& m : group) {
        for (const auto& s : supportees_of(m)) exclude.insert(s);
    }
    for (const auto& obj : scene_.objects) {
        if (exclude.count(obj.name)) continue;
        if (object_aabb(obj.name).intersects(group_aabb(name), config_.penetration)) {
            res.error = make_error(SkillErrorKind::invalid_target,
                                   "target pose overlaps '" + obj.name + "'");
            return res;
        }
    }

    ++step_;
    apply_mechanisms();
    return res;
}

// --- mechanisms ----------------------------------------------------------------

void World::merge_groups(const std::string& a, const std::string& b) {
    std::set<std::string> ga = group_of(a);
    std::set<std::string> gb = group_of(b);
    std::set<std::string> merged;
    merged.insert(ga.begin(), ga.end());
    merged.insert(gb.begin(), gb.end());
    merged_.erase(std::remove_if(merged_.begin(), merged_.end(),
                                 [&](const std::set<std::string>& g) {
                                     return g.count(a) || g.count(b);
                                 }),
                  merged_.end());
    merged_.push_back(merged);
    std::sort(merged_.begin(), merged_.end());

    // If part of the composite is held, the whole composite is held.
    bool any_held = false;
    for (const auto& m : merged) {
        if (held_.count(m)) any_held = true;
    }
    if (any_held) {
        for (const auto& m : merged) {
            if (held_.insert(m).second) {
                held_offsets_[m] = states_.at(m).position - robot_.position;
                supports_[m] = "";
            }
        }
    }
}

void World::apply_mechanisms() {
    for (int pass = 0; pass < 4; ++pass) {
        bool changed = false;
        for (const auto& rule : scene_.mechanisms) {
            if (rule.kind == MechanismRule::Kind::lever) {
                if (flags_.cube_lifted || !lever_far_half_) continue;
                const std::string& lever = rule.participants.at("lever");
                const std::string& support = rule.participants.at("support");
                Aabb chair = object_aabb(support);
                const Aabb& far = *lever_far_half_;
                bool chair_clear = !(chair.overlap_x(far) > 0 && chair.overlap_y(far) > 0);
                bool robot_on_end = robot_.support == lever &&
                                    far.contains_xy(robot_.position.x, robot_.position.y);
                if (chair_clear && robot_on_end) {
                    flags_.cube_lifted = true;
                    changed = true;
                }
            } else if (rule.kind == MechanismRule::Kind::magnetic_attach) {
                const std::string& a = rule.participants.at("member_a");
                const std::string& b = rule.participants.at("member_b");
                if (!spec(a) || !spec(b) || group_of(a).count(b)) continue;
                double d = yaw_difference(state(a).yaw, state(b).yaw);
                double align = std::min(d, M_PI - d);
                if (align > deg2rad(config_.magnet_align_deg)) continue;
                Aabb ba = object_aabb(a);
                Aabb bb = object_aabb(b);
                if (ba.overlap_z(bb) <= 0) continue;
                double gx = std::max(bb.lo.x - ba.hi.x, ba.lo.x - bb.hi.x);
                double gy = std::max(bb.lo.y - ba.hi.y, ba.lo.y - bb.hi.y);
                Vec3 snap{0, 0, 0};
                bool mergeable = false;
                if (gx >= -config_.penetration && gx <= config_.magnet_gap &&
                    ba.overlap_y(bb) >= 0.5 * std::min(ba.extent().y, bb.extent().y)) {
                    mergeable = true;
                    snap.x = (bb.lo.x >= ba.hi.x ? -gx : gx);
                } else if (gy >= -config_.penetration && gy <= config_.magnet_gap &&
                           ba.overlap_x(bb) >= 0.5 * std::min(ba.extent().x, bb.extent().x)) {
                    mergeable = true;
                    snap.y = (bb.lo.y >= ba.hi.y ? -gy : gy);
                }
                if (!mergeable) continue;
                // Snap flush so the composite extent equals the summed lengths.
                if (snap.norm() > 1e-12) {
                    std::set<std::string> moved;
                    const std::string& free_member = is_held(b) ? a : b;
                    Vec3 delta = is_held(b) ? snap * -1.0 : snap;
                    for (const auto& m : group_of(free_member)) translate_rigid(m, delta, moved);
                }
                merge_groups(a, b);
                changed = true;
            } else if (rule.kind == MechanismRule::Kind::bridge) {
                const std::string& span = rule.participants.at("span");
                const std::string& edge_a = rule.participants.at("edge_a");
                const std::string& edge_b = rule.participants.at("edge_b");
                std::string key = pair_key(edge_a, edge_b);
                if (flags_.gap_spanned_by.count(key)) continue;
                Aabb s = object_aabb(span);
                Aabb a = object_aabb(edge_a);
                Aabb b = object_aabb(edge_b);
                bool x_gap = a.hi.x <= b.lo.x || b.hi.x <= a.lo.x;
                double oa = x_gap ? s.overlap_x(a) : s.overlap_y(a);
                double ob = x_gap ? s.overlap_x(b) : s.overlap_y(b);
                double ca = x_gap ? s.overlap_y(a) : s.overlap_x(a);
                double cb = x_gap ? s.overlap_y(b) : s.overlap_x(b);
                double rest = std::abs(s.lo.z - std::max(a.hi.z, b.hi.z));
                if (oa >= config_.bridge_overlap && ob >= config_.bridge_overlap && ca > 0 &&
                    cb > 0 && rest <= 0.03) {
                    flags_.gap_spanned_by[key] = span;
                    changed = true;
                }
            }
        }
        // Built-in press detection for the object tagged "button".
        if (scene_.robot.embodiment == Embodiment::arm && !flags_.button_pressed) {
            for (const auto& obj : scene_.objects) {
                if (!obj.has_tag("button")) continue;
                Aabb button = object_aabb(obj.name);
                double d = button.gap_to(gripper_aabb(robot_.position));
                for (const auto& m : held_) d = std::min(d, button.gap_to(object_aabb(m)));
                if (d <= config_.button_distance) {
                    flags_.button_pressed = true;
                    changed = true;
                }
            }
        }
        if (!changed) break;
    }
}

// --- dispatch / snapshot ---------------------------------------------------

script::SkillResult World::call_skill(const std::string& name, const std::vector<Value>& args) {
    const script::SkillSignature* sig = script::find_skill(name);
    if (!sig || !scene_.robot.has_skill(name)) {
        return SkillResult::fail(make_error(SkillErrorKind::invalid_target,
                                            "skill '" + name + "' is not available"));
    }
    if (sig->params.size() != args.size()) {
        return SkillResult::fail(make_error(SkillErrorKind::invalid_target,
                                            "skill '" + name + "' arity mismatch"));
    }
    auto name_arg = [&](int i) { return args[i].text; };
    auto vec_arg = [&](int i) { return args[i].vec; };
    if (name == "get_position") return get_position(name_arg(0));
    if (name == "get_size") return get_size(name_arg(0));
    if (name == "open_gripper") return open_gripper();
    if (name == "close_gripper") return close_gripper();
    if (name == "move_to_position") return move_to_position(vec_arg(0));
    if (name == "walk_to_position") return walk_to_position(vec_arg(0));
    if (name == "climb_to_position") return climb_to_position(vec_arg(0));
    if (name == "push_to_position") return push_to_position(name_arg(0), vec_arg(1), args[2].num);
    return SkillResult::fail(make_error(SkillErrorKind::invalid_target,
                                        "skill '" + name + "' is not implemented"));
}

nlohmann::json World::snapshot_json() const {
    nlohmann::json j;
    j["step"] = step_;
    j["robot"] = {{"position", {robot_.position.x, robot_.position.y, robot_.position.z}},
                  {"yaw", robot_.yaw},
                  {"support", robot_.support}};
    j["gripper"] = gripper_closed_ ? "closed" : "open";
    nlohmann::json objs = nlohmann::json::object();
    for (const auto& [name, st] : states_) {
        objs[name] = {{"position", {st.position.x, st.position.y, st.position.z}},
                      {"yaw", st.yaw},
                      {"support", support_of(name)},
                      {"held", is_held(name)}};
    }
    j["objects"] = std::move(objs);
    nlohmann::json groups = nlohmann::json::array();
    for (const auto& g : merged_) groups.push_back(g);
    j["merged"] = std::move(groups);
    j["flags"] = {{"cube_lifted", flags_.cube_lifted},
                  {"button_pressed", flags_.button_pressed},
                  {"gap_spanned", flags_.gap_spanned_by}};
    return j;
}

bool is_success(const std::string& task_id, const World& world) {
    if (task_id == "milk-reaching") {
        return world.gripper_closed() && world.held().count("milk") > 0;
    }
    if (task_id == "can-grasping") {
        return world.gripper_closed() && world.held().count("can") > 0;
    }
    if (task_id == "button-pressing") return world.flags().button_pressed;
    if (task_id == "sofa-traversing") return world.robot().support == "sofa_b";
    if (task_id == "sofa-climbing") return world.robot().support == "sofa";
    if (task_id == "cube-lifting") return world.flags().cube_lifted;
    throw std::invalid_argument("unknown task id '" + task_id + "'");
}

}  // namespace toolplan::sim
