#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "toolplan/script/value.hpp"

namespace toolplan::script {

enum class SkillErrorKind {
    out_of_workspace,
    gap_too_wide,
    step_too_high,
    over_mass_limit,
    path_not_found,
    nothing_to_grasp,
    invalid_target,
    unknown_object,
};

std::string to_string(SkillErrorKind k);

struct SkillError {
    SkillErrorKind kind;
    std::string detail;
    std::vector<std::pair<std::string, double>> values;  // offending values, kind-specific
};

struct SkillResult {
    std::optional<Value> value;
    std::optional<SkillError> error;
    std::vector<std::string> notes;  // e.g. push phases, in order

    static SkillResult ok(Value v) { return {std::move(v), std::nullopt, {}}; }
    static SkillResult fail(SkillError e) { return {std::nullopt, std::move(e), {}}; }
    bool is_error() const { return error.has_value(); }
};

enum class ParamKind { object_name, position, angle };

struct SkillSignature {
    std::string name;
    std::vector<ParamKind> params;
    bool mutating = false;
};

const std::vector<SkillSignature>& skill_registry();
const SkillSignature* find_skill(const std::string& name);

// World interface the interpreter dispatches skill calls to. Query skills
// are pure; mutating skills advance the world.
class Environment {
  public:
    virtual ~Environment() = default;
    virtual SkillResult call_skill(const std::string& name, const std::vector<Value>& args) = 0;
    virtual nlohmann::json snapshot_json() const = 0;
};

}  // namespace toolplan::script
