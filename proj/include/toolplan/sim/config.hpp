#pragma once

#include <map>
#include <string>

#include <json.hpp>

#include "toolplan/script/interp.hpp"
#include "toolplan/sim/planner.hpp"

namespace toolplan::sim {

// All simulator tolerances and the planner seed live here; config/simulator.json
// mirrors the defaults and can be loaded to override them.
struct SimConfig {
    PlannerParams planner;

    double position_tolerance = 0.02;   // meters
    double yaw_tolerance_deg = 5.0;
    double grasp_radius = 0.04;         // meters
    double walk_step = 0.02;            // max height difference walking tolerates
    double bridge_overlap = 0.05;       // spanning object overlap per gap edge
    double magnet_gap = 0.01;           // face distance that triggers a merge
    double magnet_align_deg = 10.0;
    double button_distance = 0.01;      // press proximity
    double penetration = 0.001;         // interpenetration bound (1 mm)
    double robot_half_width = 0.15;     // obstacle inflation
    double gripper_half_width = 0.02;
    double push_clearance = 0.02;       // standing-pose clearance beyond inflation

    script::InterpretLimits limits;

    // task id -> per-axis motion order for move_to_position ("yxz", "zyx"),
    // anything absent uses a single straight-line segment.
    std::map<std::string, std::string> motion_orders = {
        {"can-grasping", "yxz"},
        {"button-pressing", "zyx"},
    };

    std::string motion_order_for(const std::string& task_id) const {
        auto it = motion_orders.find(task_id);
        return it == motion_orders.end() ? "straight" : it->second;
    }

    nlohmann::json to_json() const;
    static SimConfig from_json(const nlohmann::json& j);
    static SimConfig load_file(const std::string& path);
};

}  // namespace toolplan::sim
