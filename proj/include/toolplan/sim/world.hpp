#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "toolplan/scene.hpp"
#include "toolplan/script/env.hpp"
#include "toolplan/sim/config.hpp"
#include "toolplan/sim/planner.hpp"

namespace toolplan::sim {

struct ObjState {
    Vec3 position;
    double yaw = 0.0;
};

struct RobotState {
    Vec3 position;
    double yaw = 0.0;
    std::string support;  // surface id ("floor" or object name); empty for the arm
};

struct MechanismFlags {
    bool cube_lifted = false;
    bool button_pressed = false;
    // "a|b" (sorted pair) -> spanning object name. Monotone within a trial.
    std::map<std::string, std::string> gap_spanned_by;
};

// Walkable surface: the floor or the top face of a support-surface object.
struct Surface {
    std::string id;
    double top = 0.0;
    Aabb footprint;  // z range collapsed; use contains_xy
};

// Deterministic 2.5D kinematic world. Implements both embodiments'
// parameterized skills, mechanism rules, and per-task success predicates.
class World : public script::Environment {
  public:
    World(const SceneConfig& scene, const SimConfig& config = SimConfig{},
          std::string motion_order = "straight");
    static World for_task(const TaskSpec& task, const SimConfig& config = SimConfig{});

    // script::Environment
    script::SkillResult call_skill(const std::string& name,
                                   const std::vector<script::Value>& args) override;
    nlohmann::json snapshot_json() const override;

    // Skills (exposed for direct driving in tests and bindings).
    script::SkillResult get_position(const std::string& name) const;
    script::SkillResult get_size(const std::string& name) const;
    script::SkillResult move_to_position(const Vec3& target);
    script::SkillResult open_gripper();
    script::SkillResult close_gripper();
    script::SkillResult walk_to_position(const Vec3& target);
    script::SkillResult climb_to_position(const Vec3& target);
    script::SkillResult push_to_position(const std::string& name, const Vec3& target,
                                         double target_yaw);

    // Region-aware navigation query used by walk and push.
    PathPlan plan_walk_path(const Vec2& start, const Vec2& goal,
                            const std::set<std::string>& extra_obstacle_excludes = {}) const;

    // Inspection.
    const SceneConfig& scene() const { return scene_; }
    const SimConfig& config() const { return config_; }
    const ObjState& object_state(const std::string& name) const;
    const RobotState& robot() const { return robot_; }
    const MechanismFlags& flags() const { return flags_; }
    bool gripper_closed() const { return gripper_closed_; }
    const std::set<std::string>& held() const { return held_; }
    std::set<std::string> group_of(const std::string& name) const;
    Aabb object_aabb(const std::string& name) const;   // own oriented box
    Aabb group_aabb(const std::string& name) const;    // merged rigid extent
    std::string support_of(const std::string& name) const;
    int step_count() const { return step_; }
    std::vector<Surface> surfaces() const;

    void set_planner_seed(std::uint64_t seed) { config_.planner.seed = seed; }

  private:
    const ObjectSpec* spec(const std::string& name) const { return scene_.find_object(name); }
    ObjState& state(const std::string& name) { return states_.at(name); }
    const ObjState& state(const std::string& name) const { return states_.at(name); }

    bool is_held(const std::string& name) const { return held_.count(name) > 0; }
    std::set<std::string> supportees_of(const std::string& name) const;
    void translate_rigid(const std::string& name, const Vec3& delta, std::set<std::string>& moved);
    void rotate_group_about(const std::set<std::string>& members, const Vec3& pivot, double dyaw);
    void snap_to_support(const std::string& name);
    void resolve_support(const std::string& name);
    Surface surface_at(double x, double y) const;
    std::optional<Surface> surface_by_id(const std::string& id) const;
    std::vector<Surface> walkable_region() const;  // surfaces reachable from robot support
    double surface_gap(const Surface& a, const Surface& b) const;
    bool crossing_allowed(const Surface& a, const Surface& b, double* gap_out = nullptr) const;
    void apply_mechanisms();
    void merge_groups(const std::string& a, const std::string& b);
    Aabb gripper_aabb(const Vec3& at) const;
    void couple_swept(const Vec3& from, const Vec3& to);
    std::uint64_t next_plan_seed() const;

    SceneConfig scene_;
    SimConfig config_;
    std::string motion_order_;

    std::map<std::string, ObjState> states_;
    std::map<std::string, std::string> supports_;  // object -> surface id
    std::set<std::string> held_;
    std::map<std::string, Vec3> held_offsets_;     // object -> offset from end effector
    std::vector<std::set<std::string>> merged_;
    RobotState robot_;
    bool gripper_closed_ = false;
    MechanismFlags flags_;
    int step_ = 0;

    std::optional<Aabb> lever_far_half_;  // fixed at load from the support's initial pose
};

// Per-task success predicates over the current world state.
bool is_success(const std::string& task_id, const World& world);

}  // namespace toolplan::sim
