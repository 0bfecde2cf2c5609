#include "toolplan/script/parser.hpp"

namespace toolplan::script {

bool Expr::operator==(const Expr& o) const {
    if (kind != o.kind) return false;
    switch (kind) {
        case Kind::number:
            return num == o.num && unit == o.unit;
        case Kind::string:
        case Kind::variable:
            return text == o.text;
        case Kind::vector:
        case Kind::negate:
            return args == o.args;
        case Kind::component:
            return comp == o.comp && args == o.args;
        case Kind::binary:
            return op == o.op && args == o.args;
        case Kind::call:
            return text == o.text && args == o.args;
    }
    return false;
}

namespace {

constexpr int kMaxDepth = 200;

class Parser {
  public:
    explicit Parser(const std::vector<Token>& tokens) : toks_(tokens) {}

    Program parse_program() {
        Program program;
        skip_newlines();
        while (!at(TokKind::end)) {
            program.statements.push_back(parse_statement());
            if (at(TokKind::end)) break;
            expect(TokKind::newline, "newline between statements");
            skip_newlines();
        }
        return program;
    }

  private:
    const std::vector<Token>& toks_;
    size_t pos_ = 0;
    int depth_ = 0;

    const Token& peek(size_t ahead = 0) const {
        size_t i = pos_ + ahead;
        return i < toks_.size() ? toks_[i] : toks_.back();
    }
    const Token& advance() {
        const Token& t = toks_[pos_];
        if (pos_ + 1 < toks_.size()) ++pos_;
        return t;
    }
    bool at(TokKind k) const { return peek().kind == k; }

    [[noreturn]] void fail(const std::string& expected) const {
        const Token& t = peek();
        std::string got = t.kind == TokKind::end       ? "end of input"
                          : t.kind == TokKind::newline ? "end of line"
                                                       : "'" + t.text + "'";
        throw ParseError("expected " + expected + ", got " + got, t.line, t.col);
    }

    const Token& expect(TokKind k, const std::string& what) {
        if (!at(k)) fail(what);
        return advance();
    }

    void skip_newlines() {
        while (at(TokKind::newline)) advance();
    }

    Statement parse_statement() {
        const Token& first = peek();
        if (first.kind != TokKind::ident) fail("a statement (binding or skill call)");
        Statement st;
        st.line = first.line;
        if (peek(1).kind == TokKind::equals) {
            st.bind_name = advance().text;
            advance();  // '='
            st.expr = parse_expr();
            return st;
        }
        if (peek(1).kind == TokKind::lparen) {
            st.expr = parse_expr();
            if (st.expr.kind != Expr::Kind::call) {
                throw ParseError("only a skill call may stand alone as a statement", st.expr.line,
                                 st.expr.col);
            }
            return st;
        }
        fail("'=' or '(' after identifier");
    }

    struct DepthGuard {
        explicit DepthGuard(Parser& p) : parser(p) {
            if (++parser.depth_ > kMaxDepth) {
                const Token& t = parser.peek();
                throw ParseError("expression too deeply nested", t.line, t.col);
            }
        }
        ~DepthGuard() { --parser.depth_; }
        Parser& parser;
    };

    Expr parse_expr() {
        DepthGuard guard(*this);
        Expr lhs = parse_term();
        while (at(TokKind::plus) || at(TokKind::minus)) {
            const Token& op = advance();
            Expr rhs = parse_term();
            Expr node;
            node.kind = Expr::Kind::binary;
            node.op = op.kind == TokKind::plus ? '+' : '-';
            node.line = op.line;
            node.col = op.col;
            node.args.push_back(std::move(lhs));
            node.args.push_back(std::move(rhs));
            lhs = std::move(node);
        }
        return lhs;
    }

    Expr parse_term() {
        DepthGuard guard(*this);
        Expr lhs = parse_factor();
        while (at(TokKind::star) || at(TokKind::slash)) {
            const Token& op = advance();
            Expr rhs = parse_factor();
            Expr node;
            node.kind = Expr::Kind::binary;
            node.op = op.kind == TokKind::star ? '*' : '/';
            node.line = op.line;
            node.col = op.col;
            node.args.push_back(std::move(lhs));
            node.args.push_back(std::move(rhs));
            lhs = std::move(node);
        }
        return lhs;
    }

    Expr parse_factor() {
        DepthGuard guard(*this);
        const Token& t = peek();
        Expr node;
        node.line = t.line;
        node.col = t.col;
        switch (t.kind) {
            case TokKind::number: {
                advance();
                node.kind = Expr::Kind::number;
                node.num = t.num;
                node.unit = t.unit;
                break;
            }
            case TokKind::minus: {
                advance();
                Expr inner = parse_factor();
                if (inner.kind == Expr::Kind::number) {
                    inner.num = -inner.num;
                    return inner;  // fold negative literals
                }
                node.kind = Expr::Kind::negate;
                node.args.push_back(std::move(inner));
                break;
            }
            case TokKind::string: {
                advance();
                node.kind = Expr::Kind::string;
                node.text = t.text;
                break;
            }
            case TokKind::lbracket: {
                advance();
                node.kind = Expr::Kind::vector;
                node.args.push_back(parse_expr());
                expect(TokKind::comma, "',' in vector literal");
                node.args.push_back(parse_expr());
                expect(TokKind::comma, "',' in vector literal");
                node.args.push_back(parse_expr());
                expect(TokKind::rbracket, "']' closing vector literal");
                break;
            }
            case TokKind::lparen: {
                advance();
                node = parse_expr();
                expect(TokKind::rparen, "')'");
                break;
            }
            case TokKind::ident: {
                advance();
                if (at(TokKind::lparen)) {
                    advance();
                    node.kind = Expr::Kind::call;
                    node.text = t.text;
                    if (!at(TokKind::rparen)) {
                        node.args.push_back(parse_expr());
                        while (at(TokKind::comma)) {
                            advance();
                            node.args.push_back(parse_expr());
                        }
                    }
                    expect(TokKind::rparen, "')' closing argument list");
                } else {
                    node.kind = Expr::Kind::variable;
                    node.text = t.text;
                }
                break;
            }
            default:
                fail("an expression");
        }
        return parse_postfix(std::move(node));
    }

    Expr parse_postfix(Expr base) {
        while (at(TokKind::dot)) {
            const Token& dot = advance();
            const Token& name = expect(TokKind::ident, "component name x, y or z after '.'");
            int comp;
            if (name.text == "x") {
                comp = 0;
            } else if (name.text == "y") {
                comp = 1;
            } else if (name.text == "z") {
                comp = 2;
            } else {
                throw ParseError("unknown component '." + name.text + "' (expected .x, .y or .z)",
                                 name.line, name.col);
            }
            Expr node;
            node.kind = Expr::Kind::component;
            node.comp = comp;
            node.line = dot.line;
            node.col = dot.col;
            node.args.push_back(std::move(base));
            base = std::move(node);
        }
        return base;
    }
};

}  // namespace

Program parse(const std::vector<Token>& tokens) {
    Parser parser(tokens);
    return parser.parse_program();
}

Program parse(const std::string& source) { return parse(tokenize(source)); }

}  // namespace toolplan::script
