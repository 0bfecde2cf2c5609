#pragma once

#include <string>

#include "toolplan/script/ast.hpp"

namespace toolplan::script {

// Canonical formatting; parse(pretty_print(p)) is structurally equal to p.
std::string pretty_print(const Program& program);
std::string pretty_print(const Expr& expr);

}  // namespace toolplan::script
