#include "toolplan/script/check.hpp"

#include <set>

#include "toolplan/script/env.hpp"

namespace toolplan::script {

namespace {

void check_expr(const Expr& e, const RobotSpec& robot, const std::set<std::string>& bound,
                std::vector<CheckFinding>& findings) {
    switch (e.kind) {
        case Expr::Kind::variable:
            if (!bound.count(e.text)) {
                findings.push_back({"use_before_bind",
                                    "variable '" + e.text + "' referenced before binding", e.line,
                                    e.col});
            }
            break;
        case Expr::Kind::call: {
            const SkillSignature* sig = find_skill(e.text);
            if (!sig || !robot.has_skill(e.text)) {
                findings.push_back({"unknown_skill",
                                    "skill '" + e.text + "' is not in the robot's skill set", e.line,
                                    e.col});
            } else if (sig->params.size() != e.args.size()) {
                findings.push_back({"arity_mismatch",
                                    "skill '" + e.text + "' expects " +
                                        std::to_string(sig->params.size()) + " argument(s), got " +
                                        std::to_string(e.args.size()),
                                    e.line, e.col});
            }
            for (const auto& a : e.args) check_expr(a, robot, bound, findings);
            break;
        }
        case Expr::Kind::binary:
            if (e.op == '/' && e.args[1].kind == Expr::Kind::number && e.args[1].num == 0.0) {
                findings.push_back({"literal_zero_divisor", "division by literal zero",
                                    e.args[1].line, e.args[1].col});
            }
            [[fallthrough]];
        case Expr::Kind::vector:
        case Expr::Kind::component:
        case Expr::Kind::negate:
            for (const auto& a : e.args) check_expr(a, robot, bound, findings);
            break;
        default:
            break;
    }
}

}  // namespace

std::vector<CheckFinding> static_check(const Program& program, const RobotSpec& robot) {
    std::vector<CheckFinding> findings;
    std::set<std::string> bound;
    for (const auto& st : program.statements) {
        check_expr(st.expr, robot, bound, findings);
        if (st.is_binding()) bound.insert(st.bind_name);
    }
    return findings;
}

}  // namespace toolplan::script
