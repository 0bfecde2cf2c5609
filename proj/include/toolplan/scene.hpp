#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "toolplan/geometry.hpp"

namespace toolplan {

enum class Embodiment { arm, quadruped };

std::string to_string(Embodiment e);
Embodiment embodiment_from_string(const std::string& s);

struct ObjectSpec {
    std::string name;
    Vec3 position;            // center, meters
    Vec3 size;                // width (x), length (y), height (z), meters
    double yaw = 0.0;         // radians, [-pi, pi)
    double mass = 0.0;        // kg
    std::string material;
    Vec3 graspable_offset;    // relative to center, rotates with yaw
    bool is_support_surface = false;
    std::set<std::string> tags;

    Aabb world_aabb() const { return box_world_aabb(position, size, yaw); }
    Vec3 graspable_point() const { return position + rotate_yaw(graspable_offset, yaw); }
    bool has_tag(const std::string& t) const { return tags.count(t) > 0; }
};

struct RobotSpec {
    Embodiment embodiment = Embodiment::arm;
    std::vector<std::string> skills;
    Vec3 workspace_center;            // arm
    double workspace_radius = 0.0;    // arm, meters
    double gap_limit = 0.0;           // quadruped, meters
    double climb_step_limit = 0.0;    // quadruped, meters
    double push_mass_limit = 0.0;     // quadruped, kg
    Vec3 base_position;
    double base_yaw = 0.0;

    bool has_skill(const std::string& s) const;
};

struct Constraint {
    enum class Kind { environment, robot };
    std::string id;
    Kind kind = Kind::environment;
    std::string text;
    std::string predicate;  // id of a checkable rule, see known_predicates()
};

struct MechanismRule {
    enum class Kind { lever, magnetic_attach, bridge };
    std::string id;
    Kind kind = Kind::lever;
    // Role -> object name. lever: fulcrum, lever, load, support.
    // magnetic_attach: member_a, member_b. bridge: span, edge_a, edge_b.
    std::map<std::string, std::string> participants;
};

struct FloorExtent {
    double min_x = -2.5, min_y = -2.5;
    double max_x = 2.5, max_y = 2.5;
    bool contains(double x, double y) const { return x >= min_x && x <= max_x && y >= min_y && y <= max_y; }
};

struct SceneConfig {
    std::string name;
    std::string floor_name = "floor";
    FloorExtent floor_extent;
    std::vector<ObjectSpec> objects;
    RobotSpec robot;
    std::vector<Constraint> constraints;
    std::vector<MechanismRule> mechanisms;

    const ObjectSpec* find_object(const std::string& name) const;
};

struct KeyConceptGold {
    std::string name;
    double value = 0.0;
    std::string unit;
    std::string constraint;
};

struct GoldAnnotation {
    KeyConceptGold key_concept;
    std::vector<std::string> oracle_tool_set;
    bool oracle_uses_tool = true;
    double parameter_tolerance = 0.02;
};

struct TaskSpec {
    std::string id;            // one of the six benchmark ids
    std::string instruction;   // natural-language task
    SceneConfig scene;
    std::string success_check;
    GoldAnnotation gold;
};

const std::vector<std::string>& benchmark_task_ids();
const std::vector<std::string>& legal_skills(Embodiment e);
const std::set<std::string>& known_predicates();

// --- Language rendering -------------------------------------------------

// Deterministic environment description: one placement sentence per object
// (with numeric position/size/properties) plus a robot placement sentence.
std::string render_environment_description(const SceneConfig& scene);

// One sentence per constraint, environment constraints first, stable by id.
std::string render_constraint_description(const std::vector<Constraint>& constraints);

// Labeled concatenation of task, environment, and constraint sections.
std::string compose_query(const TaskSpec& task);

// Name of the surface an object initially rests on (another object's top or
// the floor), used both by rendering and by the simulator's initial supports.
std::string initial_support_name(const SceneConfig& scene, const ObjectSpec& obj);

// --- Validation ----------------------------------------------------------

struct ValidationIssue {
    std::string where;
    std::string message;
};

std::vector<ValidationIssue> validate_scene(const SceneConfig& scene);
std::vector<ValidationIssue> validate_task(const TaskSpec& task);

// --- JSON schema (schema_version 1; loaders reject unknown fields) -------

struct SceneError : std::runtime_error {
    explicit SceneError(const std::string& msg) : std::runtime_error(msg) {}
};

nlohmann::json scene_to_json(const SceneConfig& scene);
SceneConfig scene_from_json(const nlohmann::json& j);
nlohmann::json task_to_json(const TaskSpec& task);
TaskSpec task_from_json(const nlohmann::json& j);
TaskSpec load_task_file(const std::string& path);
SceneConfig load_scene_file(const std::string& path);

}  // namespace toolplan
