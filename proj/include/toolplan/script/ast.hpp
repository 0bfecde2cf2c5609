#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace toolplan::script {

enum class Unit { none, meters, kilograms, radians };

std::string unit_suffix(Unit u);  // "", "m", "kg", "rad"

// Located error thrown by the tokenizer and parser.
struct ParseError : std::runtime_error {
    int line;
    int col;
    ParseError(std::string msg, int l, int c)
        : std::runtime_error(std::move(msg)), line(l), col(c) {}
};

struct Expr {
    enum class Kind {
        number,     // num, unit
        string,     // text (object name)
        variable,   // text
        vector,     // args[0..2]
        component,  // args[0], comp 0|1|2
        binary,     // op in + - * /, args[0], args[1]
        negate,     // args[0]
        call        // text = skill name, args
    };

    Kind kind = Kind::number;
    double num = 0.0;
    Unit unit = Unit::none;
    std::string text;
    char op = 0;
    int comp = 0;
    std::vector<Expr> args;
    int line = 0;
    int col = 0;

    bool operator==(const Expr& o) const;  // structural, ignores source locations
};

// A statement is either a binding (name = expr) or a bare skill call.
struct Statement {
    std::string bind_name;  // empty for bare calls
    Expr expr;
    int line = 0;

    bool is_binding() const { return !bind_name.empty(); }
    bool operator==(const Statement& o) const { return bind_name == o.bind_name && expr == o.expr; }
};

// Straight-line program: no loops, no conditionals, no user-defined functions.
struct Program {
    std::vector<Statement> statements;
    bool operator==(const Program& o) const { return statements == o.statements; }
};

}  // namespace toolplan::script
