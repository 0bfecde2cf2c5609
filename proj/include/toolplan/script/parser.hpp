#pragma once

#include <string>
#include <vector>

#include "toolplan/script/ast.hpp"
#include "toolplan/script/lexer.hpp"

namespace toolplan::script {

// Recursive-descent parser for the plan-script grammar (docs/grammar.md).
// Precedence: * / over + -, left associative. Throws ParseError with an
// expected-token message and location.
Program parse(const std::vector<Token>& tokens);
Program parse(const std::string& source);

}  // namespace toolplan::script
