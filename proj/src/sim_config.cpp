#include "toolplan/sim/config.hpp"

#include <fstream>

#include "json_util.hpp"

namespace toolplan::sim {

using nlohmann::json;
using jsonutil::expect_fields;

json SimConfig::to_json() const {
    json j;
    j["schema_version"] = 1;
    j["planner"] = {{"seed", planner.seed},
                    {"step", planner.step},
                    {"neighbor_radius", planner.neighbor_radius},
                    {"goal_tolerance", planner.goal_tolerance},
                    {"goal_bias", planner.goal_bias},
                    {"collision_resolution", planner.collision_resolution},
                    {"budget", planner.budget}};
    j["tolerances"] = {{"position", position_tolerance},
                       {"yaw_deg", yaw_tolerance_deg},
                       {"grasp_radius", grasp_radius},
                       {"walk_step", walk_step},
                       {"bridge_overlap", bridge_overlap},
                       {"magnet_gap", magnet_gap},
                       {"magnet_align_deg", magnet_align_deg},
                       {"button_distance", button_distance},
                       {"penetration", penetration}};
    j["robot_half_width"] = robot_half_width;
    j["gripper_half_width"] = gripper_half_width;
    j["push_clearance"] = push_clearance;
    j["limits"] = {{"max_statements", limits.max_statements}};
    j["motion_orders"] = motion_orders;
    return j;
}

SimConfig SimConfig::from_json(const json& j) {
    expect_fields(j, "simulator config", {"schema_version"},
                  {"planner", "tolerances", "robot_half_width", "gripper_half_width",
                   "push_clearance", "limits", "motion_orders"});
    SimConfig c;
    if (j.contains("planner")) {
        const json& p = j.at("planner");
        expect_fields(p, "planner", {},
                      {"seed", "step", "neighbor_radius", "goal_tolerance", "goal_bias",
                       "collision_resolution", "budget"});
        c.planner.seed = p.value("seed", c.planner.seed);
        c.planner.step = p.value("step", c.planner.step);
        c.planner.neighbor_radius = p.value("neighbor_radius", c.planner.neighbor_radius);
        c.planner.goal_tolerance = p.value("goal_tolerance", c.planner.goal_tolerance);
        c.planner.goal_bias = p.value("goal_bias", c.planner.goal_bias);
        c.planner.collision_resolution = p.value("collision_resolution", c.planner.collision_resolution);
        c.planner.budget = p.value("budget", c.planner.budget);
    }
    if (j.contains("tolerances")) {
        const json& t = j.at("tolerances");
        expect_fields(t, "tolerances", {},
                      {"position", "yaw_deg", "grasp_radius", "walk_step", "bridge_overlap",
                       "magnet_gap", "magnet_align_deg", "button_distance", "penetration"});
        c.position_tolerance = t.value("position", c.position_tolerance);
        c.yaw_tolerance_deg = t.value("yaw_deg", c.yaw_tolerance_deg);
        c.grasp_radius = t.value("grasp_radius", c.grasp_radius);
        c.walk_step = t.value("walk_step", c.walk_step);
        c.bridge_overlap = t.value("bridge_overlap", c.bridge_overlap);
        c.magnet_gap = t.value("magnet_gap", c.magnet_gap);
        c.magnet_align_deg = t.value("magnet_align_deg", c.magnet_align_deg);
        c.button_distance = t.value("button_distance", c.button_distance);
        c.penetration = t.value("penetration", c.penetration);
    }
    c.robot_half_width = j.value("robot_half_width", c.robot_half_width);
    c.gripper_half_width = j.value("gripper_half_width", c.gripper_half_width);
    c.push_clearance = j.value("push_clearance", c.push_clearance);
    if (j.contains("limits")) {
        c.limits.max_statements = j.at("limits").value("max_statements", c.limits.max_statements);
    }
    if (j.contains("motion_orders")) {
        c.motion_orders.clear();
        for (auto it = j.at("motion_orders").begin(); it != j.at("motion_orders").end(); ++it) {
            c.motion_orders[it.key()] = it.value().get<std::string>();
        }
    }
    return c;
}

SimConfig SimConfig::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open simulator config '" + path + "'");
    json j;
    in >> j;
    return from_json(j);
}

}  // namespace toolplan::sim
