#include "toolplan/script/printer.hpp"

#include <charconv>
#include <sstream>

namespace toolplan::script {

namespace {

// Shortest round-trip decimal form, so parse(pretty_print(p)) == p bit-exactly.
std::string format_number(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    std::string s(buf, res.ptr);
    // to_chars may emit exponent forms the lexer accepts (e.g. 1e-05); keep as is.
    return s;
}

int precedence(const Expr& e) {
    if (e.kind != Expr::Kind::binary) return 3;
    return (e.op == '*' || e.op == '/') ? 2 : 1;
}

void print_expr(const Expr& e, std::ostream& out) {
    switch (e.kind) {
        case Expr::Kind::number: {
            if (e.num < 0) {
                // Negative literals re-fold on parse; print without parens.
                out << format_number(e.num) << unit_suffix(e.unit);
            } else {
                out << format_number(e.num) << unit_suffix(e.unit);
            }
            break;
        }
        case Expr::Kind::string:
            out << '\'' << e.text << '\'';
            break;
        case Expr::Kind::variable:
            out << e.text;
            break;
        case Expr::Kind::vector: {
            out << '[';
            for (size_t i = 0; i < e.args.size(); ++i) {
                if (i) out << ", ";
                print_expr(e.args[i], out);
            }
            out << ']';
            break;
        }
        case Expr::Kind::component: {
            const Expr& base = e.args[0];
            bool parens = base.kind == Expr::Kind::binary || base.kind == Expr::Kind::negate ||
                          (base.kind == Expr::Kind::number && base.num < 0);
            if (parens) out << '(';
            print_expr(base, out);
            if (parens) out << ')';
            out << '.' << "xyz"[e.comp];
            break;
        }
        case Expr::Kind::negate: {
            out << '-';
            const Expr& inner = e.args[0];
            bool parens = inner.kind == Expr::Kind::binary;
            if (parens) out << '(';
            print_expr(inner, out);
            if (parens) out << ')';
            break;
        }
        case Expr::Kind::binary: {
            const int prec = precedence(e);
            const Expr& lhs = e.args[0];
            const Expr& rhs = e.args[1];
            // Left-associative grammar: parenthesize the right child whenever its
            // precedence does not exceed ours, so the printed shape reparses
            // to the identical AST.
            bool lparens = precedence(lhs) < prec ||
                           (lhs.kind == Expr::Kind::number && lhs.num < 0);
            bool rparens = precedence(rhs) <= prec ||
                           (rhs.kind == Expr::Kind::number && rhs.num < 0);
            if (lparens) out << '(';
            print_expr(lhs, out);
            if (lparens) out << ')';
            out << ' ' << e.op << ' ';
            if (rparens) out << '(';
            print_expr(rhs, out);
            if (rparens) out << ')';
            break;
        }
        case Expr::Kind::call: {
            out << e.text << '(';
            for (size_t i = 0; i < e.args.size(); ++i) {
                if (i) out << ", ";
                print_expr(e.args[i], out);
            }
            out << ')';
            break;
        }
    }
}

}  // namespace

std::string pretty_print(const Expr& expr) {
    std::ostringstream out;
    print_expr(expr, out);
    return out.str();
}

std::string pretty_print(const Program& program) {
    std::ostringstream out;
    for (const auto& st : program.statements) {
        if (st.is_binding()) out << st.bind_name << " = ";
        print_expr(st.expr, out);
        out << '\n';
    }
    return out.str();
}

}  // namespace toolplan::script
