#include <doctest.h>

#include <cstdint>

#include "toolplan/scene.hpp"
#include "toolplan/script/check.hpp"
#include "toolplan/script/interp.hpp"
#include "toolplan/script/lexer.hpp"
#include "toolplan/script/parser.hpp"
#include "toolplan/script/printer.hpp"
#include "toolplan/sim/planner.hpp"

using namespace toolplan;
using namespace toolplan::script;

namespace {

RobotSpec arm_robot() {
    RobotSpec r;
    r.embodiment = Embodiment::arm;
    r.skills = legal_skills(Embodiment::arm);
    return r;
}

// Test-only environment: get_position/get_size return canned vectors and
// mutating skills count invocations but change nothing.
class EchoEnv : public Environment {
  public:
    int mutations = 0;
    SkillResult call_skill(const std::string& name, const std::vector<Value>& args) override {
        if (name == "get_position") {
            if (args[0].text == "ghost") {
                return SkillResult::fail({SkillErrorKind::unknown_object, "no 'ghost'", {}});
            }
            return SkillResult::ok(Value::vector({0.1, 0.2, 0.3}));
        }
        if (name == "get_size") return SkillResult::ok(Value::vector({0.3, 0.2, 0.1}));
        ++mutations;
        return SkillResult::ok(Value::unit_value());
    }
    nlohmann::json snapshot_json() const override { return {{"mutations", mutations}}; }
};

}  // namespace

TEST_CASE("tokenize basic statement") {
    auto toks = tokenize("x = get_position('milk')");
    REQUIRE(toks.size() == 7);  // ident = ident ( string ) end
    CHECK(toks[0].kind == TokKind::ident);
    CHECK(toks[1].kind == TokKind::equals);
    CHECK(toks[2].kind == TokKind::ident);
    CHECK(toks[3].kind == TokKind::lparen);
    CHECK(toks[4].kind == TokKind::string);
    CHECK(toks[4].text == "milk");
    CHECK(toks[5].kind == TokKind::rparen);
    CHECK(toks[6].kind == TokKind::end);
}

TEST_CASE("tokenize empty input and comments") {
    auto toks = tokenize("");
    REQUIRE(toks.size() == 1);
    CHECK(toks[0].kind == TokKind::end);
    auto with_comment = tokenize("# only a comment\n");
    REQUIRE(with_comment.size() == 1);
}

TEST_CASE("illegal character reports location") {
    try {
        tokenize("x = 3 @ 4");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line == 1);
        CHECK(e.col == 7);
        CHECK(std::string(e.what()).find("@") != std::string::npos);
    }
}

TEST_CASE("unit suffixes and bad suffix") {
    auto toks = tokenize("0.3m 2kg 1.5rad");
    CHECK(toks[0].unit == Unit::meters);
    CHECK(toks[1].unit == Unit::kilograms);
    CHECK(toks[2].unit == Unit::radians);
    CHECK_THROWS_AS(tokenize("3mx"), ParseError);
}

TEST_CASE("parse bare call with vector literal") {
    Program p = parse("move_to_position([0.1, 0.2, 0.3])");
    REQUIRE(p.statements.size() == 1);
    const Expr& e = p.statements[0].expr;
    CHECK(p.statements[0].bind_name.empty());
    CHECK(e.kind == Expr::Kind::call);
    CHECK(e.text == "move_to_position");
    REQUIRE(e.args.size() == 1);
    CHECK(e.args[0].kind == Expr::Kind::vector);
}

TEST_CASE("parse binding plus arithmetic argument, hand-checked AST") {
    Program p = parse("p = get_position('can')\nmove_to_position(p + [0, -0.05, 0])");
    REQUIRE(p.statements.size() == 2);
    CHECK(p.statements[0].bind_name == "p");
    CHECK(p.statements[0].expr.kind == Expr::Kind::call);

    const Expr& call = p.statements[1].expr;
    REQUIRE(call.args.size() == 1);
    const Expr& plus = call.args[0];
    CHECK(plus.kind == Expr::Kind::binary);
    CHECK(plus.op == '+');
    CHECK(plus.args[0].kind == Expr::Kind::variable);
    CHECK(plus.args[0].text == "p");
    const Expr& vec = plus.args[1];
    REQUIRE(vec.kind == Expr::Kind::vector);
    CHECK(vec.args[1].kind == Expr::Kind::number);
    CHECK(vec.args[1].num == doctest::Approx(-0.05));
}

TEST_CASE("syntax errors carry expected-token messages and locations") {
    try {
        parse("x = = 3");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line == 1);
        CHECK(e.col == 5);
        CHECK(std::string(e.what()).find("expected") != std::string::npos);
    }
    CHECK_THROWS_AS(parse("move_to_position([1, 2])"), ParseError);
    CHECK_THROWS_AS(parse("3 + 4"), ParseError);  // statements are bindings or calls
    CHECK_THROWS_AS(parse("foo bar"), ParseError);
    CHECK_THROWS_AS(parse("p.q = 3"), ParseError);
}

TEST_CASE("operator precedence and associativity") {
    Program p = parse("x = 1 + 2 * 3 - 4 / 2");
    const Expr& root = p.statements[0].expr;  // (1 + (2*3)) - (4/2)
    CHECK(root.op == '-');
    CHECK(root.args[0].op == '+');
    CHECK(root.args[0].args[1].op == '*');
    CHECK(root.args[1].op == '/');
}

TEST_CASE("static check flags cross-embodiment skills, arity, and use-before-bind") {
    RobotSpec arm = arm_robot();
    Program climb = parse("climb_to_position([0.1, 0.2, 0.3])");
    auto findings = static_check(climb, arm);
    REQUIRE(findings.size() == 1);
    CHECK(findings[0].kind == "unknown_skill");

    Program unbound = parse("move_to_position(p)");
    auto fb = static_check(unbound, arm);
    REQUIRE(fb.size() == 1);
    CHECK(fb[0].kind == "use_before_bind");

    Program shadowing = parse("p = get_position('a')\np = p + [0, 0, 0.1]\nmove_to_position(p)");
    CHECK(static_check(shadowing, arm).empty());

    Program arity = parse("move_to_position([0,0,0], [1,1,1])");
    auto fa = static_check(arity, arm);
    REQUIRE(fa.size() == 1);
    CHECK(fa[0].kind == "arity_mismatch");

    Program divz = parse("x = 1 / 0");
    auto fd = static_check(divz, arm);
    REQUIRE(fd.size() == 1);
    CHECK(fd[0].kind == "literal_zero_divisor");
}

TEST_CASE("pretty print round-trips fixtures") {
    const char* sources[] = {
        "",
        "move_to_position([0.1, 0.2, 0.3])",
        "p = get_position('can')\nmove_to_position(p + [0, -0.05, 0])\nclose_gripper()",
        "x = (1 + 2) * 3\ny = x / 4 - -2\nz = [x, y, 0.5m]\nmove_to_position(z)",
        "a = get_position('b')\nq = a.x + a.y * 2\nmove_to_position([q, 0, 0])",
    };
    for (const char* src : sources) {
        Program p = parse(src);
        std::string printed = pretty_print(p);
        Program again = parse(printed);
        CHECK(again == p);
        CHECK(pretty_print(again) == printed);  // printing is a fixed point
    }
    CHECK(pretty_print(parse("")).empty());
}

TEST_CASE("nested arithmetic prints with minimal shape-preserving parentheses") {
    Program p = parse("x = 1 - (2 - 3)");
    std::string printed = pretty_print(p);
    CHECK(printed == "x = 1 - (2 - 3)\n");
    CHECK(parse(printed) == p);
    CHECK(pretty_print(parse("x = (1 - 2) - 3")) == "x = 1 - 2 - 3\n");
}

namespace {

// Random AST generator for the round-trip property.
struct AstGen {
    sim::Rng rng;
    explicit AstGen(std::uint64_t seed) : rng(seed) {}

    int pick(int n) { return static_cast<int>(rng.next() % static_cast<std::uint64_t>(n)); }

    std::string ident() {
        static const char* names[] = {"p", "q", "target", "offset", "x1", "way_point"};
        return names[pick(6)];
    }

    double number() {
        double v = std::floor(rng.uniform(-1000.0, 1000.0) * 100.0) / 100.0;
        return v == 0.0 ? 0.0 : v;  // avoid -0
    }

    Expr expr(int depth) {
        Expr e;
        int kind = depth <= 0 ? pick(3) : pick(7);
        switch (kind) {
            case 0:
                e.kind = Expr::Kind::number;
                e.num = number();
                e.unit = static_cast<Unit>(pick(4));
                if (e.num < 0) e.unit = Unit::none;  // negative literals print unsuffixed digits first
                break;
            case 1:
                e.kind = Expr::Kind::variable;
                e.text = ident();
                break;
            case 2:
                e.kind = Expr::Kind::string;
                e.text = "obj_" + std::to_string(pick(10));
                break;
            case 3: {
                e.kind = Expr::Kind::binary;
                const char ops[] = {'+', '-', '*', '/'};
                e.op = ops[pick(4)];
                e.args.push_back(expr(depth - 1));
                e.args.push_back(expr(depth - 1));
                break;
            }
            case 4:
                e.kind = Expr::Kind::vector;
                e.args.push_back(expr(depth - 1));
                e.args.push_back(expr(depth - 1));
                e.args.push_back(expr(depth - 1));
                break;
            case 5: {
                e.kind = Expr::Kind::component;
                e.comp = pick(3);
                Expr base;
                base.kind = Expr::Kind::variable;
                base.text = ident();
                e.args.push_back(base);
                break;
            }
            default: {
                e.kind = Expr::Kind::call;
                e.text = pick(2) ? "get_position" : "get_size";
                Expr arg;
                arg.kind = Expr::Kind::string;
                arg.text = "thing";
                e.args.push_back(arg);
                break;
            }
        }
        return e;
    }

    Program program() {
        Program p;
        int n = 1 + pick(6);
        for (int i = 0; i < n; ++i) {
            Statement st;
            if (pick(2)) {
                st.bind_name = ident();
                st.expr = expr(3);
            } else {
                st.expr.kind = Expr::Kind::call;
                st.expr.text = "move_to_position";
                st.expr.args.push_back(expr(2));
            }
            p.statements.push_back(std::move(st));
        }
        return p;
    }
};

}  // namespace

TEST_CASE("round-trip property holds on 1000 random ASTs") {
    int failures = 0;
    for (std::uint64_t seed = 0; seed < 1000; ++seed) {
        AstGen gen(seed * 2654435761ull + 17);
        Program p = gen.program();
        std::string printed = pretty_print(p);
        try {
            Program again = parse(printed);
            if (!(again == p)) {
                ++failures;
                if (failures < 3) MESSAGE("mismatch for seed ", seed, ":\n", printed);
            }
        } catch (const ParseError& e) {
            ++failures;
            if (failures < 3) MESSAGE("reparse failed for seed ", seed, ": ", e.what(), "\n", printed);
        }
    }
    CHECK(failures == 0);
}

TEST_CASE("fuzzed byte strings never crash; they produce located errors") {
    sim::Rng rng(20260810);
    const std::string alphabet = "abcxyz_0123456789 .,+-*/=()[]'#\n\t\"@%&";
    int located = 0;
    int parsed = 0;
    for (int i = 0; i < 10000; ++i) {
        int len = static_cast<int>(rng.next() % 60);
        std::string input;
        for (int k = 0; k < len; ++k) {
            input.push_back(alphabet[rng.next() % alphabet.size()]);
        }
        try {
            Program p = parse(input);
            ++parsed;
        } catch (const ParseError& e) {
            CHECK(e.line >= 1);
            CHECK(e.col >= 1);
            ++located;
        }
    }
    CHECK(located + parsed == 10000);
    CHECK(located > 0);
}

TEST_CASE("deep nesting is rejected, not a crash") {
    std::string deep(5000, '(');
    deep = "x = " + deep + "1" + std::string(5000, ')');
    CHECK_THROWS_AS(parse(deep), ParseError);
}

TEST_CASE("interpreter runs queries purely and binds values") {
    EchoEnv env;
    Program p = parse("p = get_position('can')\ns = get_size('can')\nq = p + [0, 0, 0.1]");
    ExecutionTrace trace = interpret(p, env);
    REQUIRE(trace.entries.size() == 3);
    CHECK(!trace.halted());
    CHECK(env.mutations == 0);
    // queries are pure: snapshots identical
    CHECK(trace.entries[0].snapshot == trace.entries[1].snapshot);
    CHECK(trace.entries[0].name == "get_position");
    CHECK(trace.entries[2].name == "eval");
    CHECK(trace.entries[2].result->kind == Value::Kind::vector);
    CHECK(trace.entries[2].result->vec.z == doctest::Approx(0.4));
}

TEST_CASE("interpreter halts on first skill error with trace prefix intact") {
    EchoEnv env;
    Program p = parse("a = get_position('can')\nb = get_position('ghost')\nc = get_position('can')");
    ExecutionTrace trace = interpret(p, env);
    REQUIRE(trace.entries.size() == 2);
    REQUIRE(trace.entries[1].error.has_value());
    CHECK(trace.entries[1].error->kind == "unknown_object");
    CHECK(trace.halted());
}

TEST_CASE("unit algebra: mixing meters and kilograms is a runtime type error") {
    EchoEnv env;
    ExecutionTrace ok = interpret(parse("x = 1m + 2"), env);
    CHECK(!ok.halted());
    ExecutionTrace bad = interpret(parse("x = 1m + 2kg"), env);
    REQUIRE(bad.halted());
    CHECK(bad.first_error()->kind == "type_error");
    ExecutionTrace mul = interpret(parse("x = 2m * 3m"), env);
    REQUIRE(mul.halted());
    ExecutionTrace div = interpret(parse("x = 4m / 2m\nmove_to_position([x, x, x])"), env);
    CHECK(!div.halted());  // m/m is unitless
}

TEST_CASE("division by zero halts with a located trace entry") {
    EchoEnv env;
    ExecutionTrace t = interpret(parse("x = 1 / (2 - 2)"), env);
    REQUIRE(t.halted());
    CHECK(t.first_error()->kind == "division_by_zero");
}

TEST_CASE("statement budget halts execution") {
    EchoEnv env;
    std::string src;
    for (int i = 0; i < 210; ++i) src += "x = 1 + 1\n";
    InterpretLimits limits;
    ExecutionTrace t = interpret(parse(src), env, limits);
    CHECK(t.entries.size() == 201);  // 200 executed + 1 budget error
    CHECK(t.first_error()->kind == "budget_exceeded");
    CHECK(t.entries.size() <= 210 + 1);
}

TEST_CASE("trace serialization round-trips entry skeletons") {
    EchoEnv env;
    Program p = parse("p = get_position('can')\nmove_to_position(p)");
    ExecutionTrace t = interpret(p, env);
    nlohmann::json j = t.to_json();
    ExecutionTrace back = trace_from_json(j);
    REQUIRE(back.entries.size() == t.entries.size());
    CHECK(back.entries[1].name == "move_to_position");
    CHECK(back.entries[1].snapshot == t.entries[1].snapshot);
}
