#include "toolplan/scene.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json_util.hpp"

namespace toolplan {

using nlohmann::json;
using jsonutil::expect_fields;
using jsonutil::vec3_from;
using jsonutil::vec3_to;

std::string to_string(Embodiment e) {
    return e == Embodiment::arm ? "arm" : "quadruped";
}

Embodiment embodiment_from_string(const std::string& s) {
    if (s == "arm") return Embodiment::arm;
    if (s == "quadruped") return Embodiment::quadruped;
    throw SceneError("unknown embodiment '" + s + "'");
}

bool RobotSpec::has_skill(const std::string& s) const {
    return std::find(skills.begin(), skills.end(), s) != skills.end();
}

const ObjectSpec* SceneConfig::find_object(const std::string& name) const {
    for (const auto& o : objects) {
        if (o.name == name) return &o;
    }
    return nullptr;
}

const std::vector<std::string>& benchmark_task_ids() {
    static const std::vector<std::string> ids = {
        "milk-reaching",  "can-grasping",  "button-pressing",
        "sofa-traversing", "sofa-climbing", "cube-lifting"};
    return ids;
}

const std::vector<std::string>& legal_skills(Embodiment e) {
    static const std::vector<std::string> arm = {
        "get_position", "get_size", "open_gripper", "close_gripper", "move_to_position"};
    static const std::vector<std::string> quadruped = {
        "get_position", "get_size", "walk_to_position", "climb_to_position", "push_to_position"};
    return e == Embodiment::arm ? arm : quadruped;
}

const std::set<std::string>& known_predicates() {
    static const std::set<std::string> preds = {
        "out_of_workspace_target", "gap_exceeds_walk_limit", "height_exceeds_climb_limit",
        "mass_exceeds_push_limit", "object_not_liftable", "informational"};
    return preds;
}

// --- rendering -------------------------------------------------------------

std::string initial_support_name(const SceneConfig& scene, const ObjectSpec& obj) {
    const Aabb box = obj.world_aabb();
    std::string best = scene.floor_name;
    double best_top = 0.0;
    for (const auto& other : scene.objects) {
        if (other.name == obj.name) continue;
        const Aabb ob = other.world_aabb();
        if (!ob.contains_xy(obj.position.x, obj.position.y)) continue;
        if (ob.hi.z <= box.lo.z + 0.02 && ob.hi.z > best_top) {
            best_top = ob.hi.z;
            best = other.name;
        }
    }
    return best;
}

std::string render_environment_description(const SceneConfig& scene) {
    std::ostringstream out;
    out << "The " << scene.floor_name << " is a flat surface spanning x from "
        << fmt2(scene.floor_extent.min_x) << " to " << fmt2(scene.floor_extent.max_x)
        << " and y from " << fmt2(scene.floor_extent.min_y) << " to "
        << fmt2(scene.floor_extent.max_y) << " (meters).\n";
    for (const auto& obj : scene.objects) {
        out << "There is a " << obj.name << " on the " << initial_support_name(scene, obj)
            << ". Its center is at " << fmt2(obj.position)
            << " and its size (width, length, height) is " << fmt2(obj.size)
            << " (meters). Its yaw is " << fmt2(obj.yaw) << " rad. It weighs "
            << fmt2(obj.mass) << " kg.";
        if (!obj.material.empty()) out << " It is made of " << obj.material << ".";
        if (!(obj.graspable_offset == Vec3{})) {
            out << " Its graspable point is at " << fmt2(obj.graspable_point()) << ".";
        }
        if (!obj.tags.empty()) {
            out << " Properties:";
            bool first = true;
            for (const auto& t : obj.tags) {
                out << (first ? " " : ", ") << t;
                first = false;
            }
            out << ".";
        }
        out << "\n";
    }
    const RobotSpec& r = scene.robot;
    if (r.embodiment == Embodiment::arm) {
        out << "The robot is a robotic arm with a gripper. Its base is mounted at "
            << fmt2(r.base_position) << " and its end effector rests at "
            << fmt2(r.workspace_center) << ".";
    } else {
        ObjectSpec probe;
        probe.name = "__robot__";
        probe.position = r.base_position;
        probe.size = {0.1, 0.1, 0.1};
        out << "The robot is a quadrupedal robot standing at " << fmt2(r.base_position)
            << " on the " << initial_support_name(scene, probe) << ".";
    }
    out << "\n";
    return out.str();
}

std::string render_constraint_description(const std::vector<Constraint>& constraints) {
    std::vector<const Constraint*> ordered;
    ordered.reserve(constraints.size());
    for (const auto& c : constraints) ordered.push_back(&c);
    std::stable_sort(ordered.begin(), ordered.end(), [](const Constraint* a, const Constraint* b) {
        if (a->kind != b->kind) return a->kind == Constraint::Kind::environment;
        return a->id < b->id;
    });
    std::ostringstream out;
    for (const Constraint* c : ordered) out << "- " << c->text << "\n";
    return out.str();
}

std::string compose_query(const TaskSpec& task) {
    std::ostringstream out;
    out << "Task:\n" << task.instruction << "\n\n";
    out << "Environment:\n" << render_environment_description(task.scene);
    if (!task.scene.constraints.empty()) {
        out << "\nConstraints:\n" << render_constraint_description(task.scene.constraints);
    }
    return out.str();
}

// --- validation ------------------------------------------------------------

std::vector<ValidationIssue> validate_scene(const SceneConfig& scene) {
    std::vector<ValidationIssue> issues;
    auto add = [&](const std::string& where, const std::string& msg) {
        issues.push_back({where, msg});
    };

    std::set<std::string> names;
    for (const auto& obj : scene.objects) {
        const std::string where = "object '" + obj.name + "'";
        if (obj.name.empty()) add(where, "empty object name");
        if (!names.insert(obj.name).second) add(where, "duplicate object name '" + obj.name + "'");
        if (!(obj.size.x > 0 && obj.size.y > 0 && obj.size.z > 0)) {
            add(where, "size components must be > 0");
        }
        if (obj.mass < 0) add(where, "mass must be >= 0");
        if (!(obj.yaw >= -M_PI && obj.yaw < M_PI)) add(where, "yaw must lie in [-pi, pi)");
        if (!obj.position.finite() || !obj.size.finite() || !obj.graspable_offset.finite() ||
            !std::isfinite(obj.yaw) || !std::isfinite(obj.mass)) {
            add(where, "non-finite numeric field");
        }
    }

    // Initial interpenetration beyond 1 mm between any object pair.
    for (size_t i = 0; i < scene.objects.size(); ++i) {
        for (size_t j = i + 1; j < scene.objects.size(); ++j) {
            const Aabb a = scene.objects[i].world_aabb();
            const Aabb b = scene.objects[j].world_aabb();
            if (a.intersects(b, 0.001)) {
                add("scene", "objects '" + scene.objects[i].name + "' and '" +
                                 scene.objects[j].name + "' interpenetrate beyond 1 mm");
            }
        }
    }

    const RobotSpec& r = scene.robot;
    const auto& legal = legal_skills(r.embodiment);
    for (const auto& s : r.skills) {
        if (std::find(legal.begin(), legal.end(), s) == legal.end()) {
            add("robot", "skill '" + s + "' is not in the " + to_string(r.embodiment) + " skill set");
        }
    }
    if (r.skills.empty()) add("robot", "empty skill list");
    if (r.embodiment == Embodiment::arm) {
        if (!(r.workspace_radius > 0)) add("robot", "workspace_radius must be > 0");
    } else {
        if (!(r.gap_limit > 0)) add("robot", "gap_limit must be > 0");
        if (!(r.climb_step_limit > 0)) add("robot", "climb_step_limit must be > 0");
        if (!(r.push_mass_limit > 0)) add("robot", "push_mass_limit must be > 0");
    }
    if (!scene.floor_extent.contains(r.base_position.x, r.base_position.y)) {
        add("robot", "base position outside floor extent");
    }

    for (const auto& c : scene.constraints) {
        if (c.text.empty()) add("constraint '" + c.id + "'", "empty text");
        std::string pred = c.predicate.substr(0, c.predicate.find(':'));
        if (!known_predicates().count(pred)) {
            add("constraint '" + c.id + "'", "unknown predicate '" + c.predicate + "'");
        }
    }
    for (const auto& m : scene.mechanisms) {
        for (const auto& [role, name] : m.participants) {
            if (!scene.find_object(name)) {
                add("mechanism '" + m.id + "'", "participant '" + name + "' (" + role +
                                                    ") does not exist in the scene");
            }
        }
    }
    return issues;
}

std::vector<ValidationIssue> validate_task(const TaskSpec& task) {
    std::vector<ValidationIssue> issues = validate_scene(task.scene);
    const auto& ids = benchmark_task_ids();
    if (std::find(ids.begin(), ids.end(), task.id) == ids.end()) {
        issues.push_back({"task", "unknown task id '" + task.id + "'"});
    }
    if (task.instruction.empty()) issues.push_back({"task", "empty instruction"});
    static const std::map<std::string, std::string> checks = {
        {"milk-reaching", "milk_attached"},       {"can-grasping", "can_attached"},
        {"button-pressing", "button_pressed"},   {"sofa-traversing", "robot_on_sofa_b"},
        {"sofa-climbing", "robot_on_sofa"},       {"cube-lifting", "cube_lifted"}};
    auto it = checks.find(task.id);
    if (it != checks.end() && task.success_check != it->second) {
        issues.push_back({"task", "success_check '" + task.success_check +
                                      "' is not defined for task '" + task.id + "'"});
    }
    return issues;
}

// --- JSON ------------------------------------------------------------------

static json object_to_json(const ObjectSpec& o) {
    json j;
    j["name"] = o.name;
    j["position"] = vec3_to(o.position);
    j["size"] = vec3_to(o.size);
    j["yaw"] = o.yaw;
    j["mass"] = o.mass;
    j["material"] = o.material;
    if (!(o.graspable_offset == Vec3{})) j["graspable_offset"] = vec3_to(o.graspable_offset);
    if (o.is_support_surface) j["is_support_surface"] = true;
    if (!o.tags.empty()) j["tags"] = o.tags;
    return j;
}

static ObjectSpec object_from_json(const json& j) {
    expect_fields(j, "object", {"name", "position", "size"},
                  {"yaw", "mass", "material", "graspable_offset", "is_support_surface", "tags"});
    ObjectSpec o;
    o.name = j.at("name").get<std::string>();
    o.position = vec3_from(j.at("position"), "object.position");
    o.size = vec3_from(j.at("size"), "object.size");
    o.yaw = j.value("yaw", 0.0);
    o.mass = j.value("mass", 0.0);
    o.material = j.value("material", "");
    if (j.contains("graspable_offset")) {
        o.graspable_offset = vec3_from(j.at("graspable_offset"), "object.graspable_offset");
    }
    o.is_support_surface = j.value("is_support_surface", false);
    if (j.contains("tags")) {
        for (const auto& t : j.at("tags")) o.tags.insert(t.get<std::string>());
    }
    return o;
}

static json robot_to_json(const RobotSpec& r) {
    json j;
    j["embodiment"] = to_string(r.embodiment);
    j["skills"] = r.skills;
    j["base_pose"] = {{"position", vec3_to(r.base_position)}, {"yaw", r.base_yaw}};
    if (r.embodiment == Embodiment::arm) {
        j["workspace_center"] = vec3_to(r.workspace_center);
        j["workspace_radius"] = r.workspace_radius;
    } else {
        j["gap_limit"] = r.gap_limit;
        j["climb_step_limit"] = r.climb_step_limit;
        j["push_mass_limit"] = r.push_mass_limit;
    }
    return j;
}

static RobotSpec robot_from_json(const json& j) {
    expect_fields(j, "robot", {"embodiment", "skills", "base_pose"},
                  {"workspace_center", "workspace_radius", "gap_limit", "climb_step_limit",
                   "push_mass_limit"});
    RobotSpec r;
    r.embodiment = embodiment_from_string(j.at("embodiment").get<std::string>());
    for (const auto& s : j.at("skills")) r.skills.push_back(s.get<std::string>());
    expect_fields(j.at("base_pose"), "robot.base_pose", {"position"}, {"yaw"});
    r.base_position = vec3_from(j.at("base_pose").at("position"), "robot.base_pose.position");
    r.base_yaw = j.at("base_pose").value("yaw", 0.0);
    if (j.contains("workspace_center")) {
        r.workspace_center = vec3_from(j.at("workspace_center"), "robot.workspace_center");
    }
    r.workspace_radius = j.value("workspace_radius", 0.0);
    r.gap_limit = j.value("gap_limit", 0.0);
    r.climb_step_limit = j.value("climb_step_limit", 0.0);
    r.push_mass_limit = j.value("push_mass_limit", 0.0);
    return r;
}

json scene_to_json(const SceneConfig& scene) {
    json j;
    j["schema_version"] = 1;
    j["name"] = scene.name;
    j["floor_name"] = scene.floor_name;
    j["floor_extent"] = {{"min", {scene.floor_extent.min_x, scene.floor_extent.min_y}},
                         {"max", {scene.floor_extent.max_x, scene.floor_extent.max_y}}};
    j["objects"] = json::array();
    for (const auto& o : scene.objects) j["objects"].push_back(object_to_json(o));
    j["robot"] = robot_to_json(scene.robot);
    j["constraints"] = json::array();
    for (const auto& c : scene.constraints) {
        j["constraints"].push_back({{"id", c.id},
                                    {"kind", c.kind == Constraint::Kind::environment ? "environment" : "robot"},
                                    {"text", c.text},
                                    {"predicate", c.predicate}});
    }
    j["mechanisms"] = json::array();
    for (const auto& m : scene.mechanisms) {
        std::string kind = m.kind == MechanismRule::Kind::lever ? "lever"
                           : m.kind == MechanismRule::Kind::magnetic_attach ? "magnetic_attach"
                                                                            : "bridge";
        j["mechanisms"].push_back({{"id", m.id}, {"kind", kind}, {"participants", m.participants}});
    }
    return j;
}

SceneConfig scene_from_json(const json& j) {
    try {
        expect_fields(j, "scene", {"schema_version", "name", "floor_extent", "objects", "robot"},
                      {"floor_name", "constraints", "mechanisms"});
        if (j.at("schema_version").get<int>() != 1) {
            throw std::runtime_error("scene: unsupported schema_version");
        }
        SceneConfig scene;
        scene.name = j.at("name").get<std::string>();
        scene.floor_name = j.value("floor_name", "floor");
        const json& fe = j.at("floor_extent");
        expect_fields(fe, "scene.floor_extent", {"min", "max"});
        scene.floor_extent.min_x = fe.at("min")[0].get<double>();
        scene.floor_extent.min_y = fe.at("min")[1].get<double>();
        scene.floor_extent.max_x = fe.at("max")[0].get<double>();
        scene.floor_extent.max_y = fe.at("max")[1].get<double>();
        for (const auto& oj : j.at("objects")) scene.objects.push_back(object_from_json(oj));
        scene.robot = robot_from_json(j.at("robot"));
        if (j.contains("constraints")) {
            for (const auto& cj : j.at("constraints")) {
                expect_fields(cj, "constraint", {"id", "kind", "text", "predicate"});
                Constraint c;
                c.id = cj.at("id").get<std::string>();
                std::string kind = cj.at("kind").get<std::string>();
                if (kind == "environment") {
                    c.kind = Constraint::Kind::environment;
                } else if (kind == "robot") {
                    c.kind = Constraint::Kind::robot;
                } else {
                    throw std::runtime_error("constraint: unknown kind '" + kind + "'");
                }
                c.text = cj.at("text").get<std::string>();
                c.predicate = cj.at("predicate").get<std::string>();
                scene.constraints.push_back(c);
            }
        }
        if (j.contains("mechanisms")) {
            for (const auto& mj : j.at("mechanisms")) {
                expect_fields(mj, "mechanism", {"id", "kind", "participants"});
                MechanismRule m;
                m.id = mj.at("id").get<std::string>();
                std::string kind = mj.at("kind").get<std::string>();
                if (kind == "lever") {
                    m.kind = MechanismRule::Kind::lever;
                } else if (kind == "magnetic_attach") {
                    m.kind = MechanismRule::Kind::magnetic_attach;
                } else if (kind == "bridge") {
                    m.kind = MechanismRule::Kind::bridge;
                } else {
                    throw std::runtime_error("mechanism: unknown kind '" + kind + "'");
                }
                for (auto it = mj.at("participants").begin(); it != mj.at("participants").end(); ++it) {
                    m.participants[it.key()] = it.value().get<std::string>();
                }
                scene.mechanisms.push_back(m);
            }
        }
        return scene;
    } catch (const json::exception& e) {
        throw SceneError(std::string("malformed scene JSON: ") + e.what());
    } catch (const std::runtime_error& e) {
        throw SceneError(e.what());
    }
}

json task_to_json(const TaskSpec& task) {
    json j;
    j["schema_version"] = 1;
    j["id"] = task.id;
    j["instruction"] = task.instruction;
    j["success_check"] = task.success_check;
    j["scene"] = scene_to_json(task.scene);
    j["gold"] = {{"key_concept",
                  {{"name", task.gold.key_concept.name},
                   {"value", task.gold.key_concept.value},
                   {"unit", task.gold.key_concept.unit},
                   {"constraint", task.gold.key_concept.constraint}}},
                 {"oracle_tool_set", task.gold.oracle_tool_set},
                 {"oracle_uses_tool", task.gold.oracle_uses_tool},
                 {"parameter_tolerance", task.gold.parameter_tolerance}};
    return j;
}

TaskSpec task_from_json(const json& j) {
    try {
        expect_fields(j, "task",
                      {"schema_version", "id", "instruction", "success_check", "scene", "gold"});
        if (j.at("schema_version").get<int>() != 1) {
            throw std::runtime_error("task: unsupported schema_version");
        }
        TaskSpec t;
        t.id = j.at("id").get<std::string>();
        t.instruction = j.at("instruction").get<std::string>();
        t.success_check = j.at("success_check").get<std::string>();
        t.scene = scene_from_json(j.at("scene"));
        const json& g = j.at("gold");
        expect_fields(g, "task.gold",
                      {"key_concept", "oracle_tool_set", "oracle_uses_tool", "parameter_tolerance"});
        const json& kc = g.at("key_concept");
        expect_fields(kc, "task.gold.key_concept", {"name", "value", "unit", "constraint"});
        t.gold.key_concept.name = kc.at("name").get<std::string>();
        t.gold.key_concept.value = kc.at("value").get<double>();
        t.gold.key_concept.unit = kc.at("unit").get<std::string>();
        t.gold.key_concept.constraint = kc.at("constraint").get<std::string>();
        for (const auto& n : g.at("oracle_tool_set")) t.gold.oracle_tool_set.push_back(n.get<std::string>());
        t.gold.oracle_uses_tool = g.at("oracle_uses_tool").get<bool>();
        t.gold.parameter_tolerance = g.at("parameter_tolerance").get<double>();
        return t;
    } catch (const json::exception& e) {
        throw SceneError(std::string("malformed task JSON: ") + e.what());
    }
}

static json parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SceneError("cannot open '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw SceneError("cannot parse '" + path + "': " + e.what());
    }
    return j;
}

TaskSpec load_task_file(const std::string& path) { return task_from_json(parse_file(path)); }

SceneConfig load_scene_file(const std::string& path) {
    json j = parse_file(path);
    if (j.contains("scene")) return task_from_json(j).scene;
    return scene_from_json(j);
}

}  // namespace toolplan
