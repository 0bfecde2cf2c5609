#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "toolplan/script/ast.hpp"
#include "toolplan/script/env.hpp"

namespace toolplan::script {

struct InterpretLimits {
    int max_statements = 200;
};

struct TraceError {
    enum class Category { skill, eval };
    Category category;
    std::string kind;    // SkillErrorKind name, or type_error | division_by_zero |
                         // budget_exceeded | unbound_variable
    std::string detail;
    std::vector<std::pair<std::string, double>> values;
};

// One entry per executed statement. `name` is the statement's skill when the
// statement is a single call (possibly bound), otherwise "eval".
struct TraceEntry {
    int index = 0;  // 0-based statement index
    std::string name;
    std::vector<Value> args;
    std::optional<Value> result;
    std::optional<TraceError> error;
    std::vector<std::string> notes;
    std::string snapshot;   // post-state hash
    nlohmann::json state;   // post-state snapshot
};

struct ExecutionTrace {
    nlohmann::json initial_state;
    std::vector<TraceEntry> entries;

    bool halted() const;
    const TraceError* first_error() const;
    nlohmann::json to_json() const;
};

ExecutionTrace trace_from_json(const nlohmann::json& j);

// Executes statements in order against env; halts on the first error or when
// limits.max_statements is exceeded. Pure expressions are unit-checked.
ExecutionTrace interpret(const Program& program, Environment& env,
                         const InterpretLimits& limits = {});

}  // namespace toolplan::script
