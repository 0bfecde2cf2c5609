#pragma once

#include <string>
#include <vector>

#include "toolplan/script/ast.hpp"

namespace toolplan::script {

enum class TokKind {
    ident, number, string,
    lparen, rparen, lbracket, rbracket,
    comma, dot, plus, minus, star, slash, equals,
    newline, end
};

struct Token {
    TokKind kind;
    std::string text;
    double num = 0.0;
    Unit unit = Unit::none;
    int line = 1;
    int col = 1;
};

// Tokens carry line/column spans; '#' comments run to end of line.
// Throws ParseError on illegal characters or malformed numbers.
std::vector<Token> tokenize(const std::string& source);

}  // namespace toolplan::script
