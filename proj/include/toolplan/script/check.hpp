#pragma once

#include <string>
#include <vector>

#include "toolplan/scene.hpp"
#include "toolplan/script/ast.hpp"

namespace toolplan::script {

struct CheckFinding {
    std::string kind;  // unknown_skill | arity_mismatch | use_before_bind | literal_zero_divisor
    std::string message;
    int line = 0;
    int col = 0;
};

// Verifies every skill call names a skill in robot.skills with the right
// arity and every variable is referenced after binding. Empty report iff clean.
std::vector<CheckFinding> static_check(const Program& program, const RobotSpec& robot);

}  // namespace toolplan::script
