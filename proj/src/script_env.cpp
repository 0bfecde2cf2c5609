#include "toolplan/script/env.hpp"

namespace toolplan::script {

std::string to_string(SkillErrorKind k) {
    switch (k) {
        case SkillErrorKind::out_of_workspace: return "out_of_workspace";
        case SkillErrorKind::gap_too_wide: return "gap_too_wide";
        case SkillErrorKind::step_too_high: return "step_too_high";
        case SkillErrorKind::over_mass_limit: return "over_mass_limit";
        case SkillErrorKind::path_not_found: return "path_not_found";
        case SkillErrorKind::nothing_to_grasp: return "nothing_to_grasp";
        case SkillErrorKind::invalid_target: return "invalid_target";
        case SkillErrorKind::unknown_object: return "unknown_object";
    }
    return "?";
}

const std::vector<SkillSignature>& skill_registry() {
    static const std::vector<SkillSignature> registry = {
        {"get_position", {ParamKind::object_name}, false},
        {"get_size", {ParamKind::object_name}, false},
        {"open_gripper", {}, true},
        {"close_gripper", {}, true},
        {"move_to_position", {ParamKind::position}, true},
        {"walk_to_position", {ParamKind::position}, true},
        {"climb_to_position", {ParamKind::position}, true},
        {"push_to_position", {ParamKind::object_name, ParamKind::position, ParamKind::angle}, true},
    };
    return registry;
}

const SkillSignature* find_skill(const std::string& name) {
    for (const auto& sig : skill_registry()) {
        if (sig.name == name) return &sig;
    }
    return nullptr;
}

}  // namespace toolplan::script
