#include "toolplan/script/lexer.hpp"

#include <cctype>
#include <charconv>
#include <cmath>

namespace toolplan::script {

std::string unit_suffix(Unit u) {
    switch (u) {
        case Unit::none: return "";
        case Unit::meters: return "m";
        case Unit::kilograms: return "kg";
        case Unit::radians: return "rad";
    }
    return "";
}

namespace {

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }
bool is_digit(char c) { return std::isdigit(static_cast<unsigned char>(c)); }

}  // namespace

std::vector<Token> tokenize(const std::string& source) {
    std::vector<Token> tokens;
    int line = 1;
    int col = 1;
    size_t i = 0;
    const size_t n = source.size();

    auto push = [&](TokKind kind, std::string text, int l, int c) {
        Token t;
        t.kind = kind;
        t.text = std::move(text);
        t.line = l;
        t.col = c;
        tokens.push_back(std::move(t));
    };

    while (i < n) {
        char c = source[i];
        int tl = line, tc = col;
        if (c == '\n') {
            // Collapse runs of blank lines into one separator.
            if (!tokens.empty() && tokens.back().kind != TokKind::newline) {
                push(TokKind::newline, "\n", tl, tc);
            }
            ++i;
            ++line;
            col = 1;
            continue;
        }
        if (c == ' ' || c == '\t' || c == '\r') {
            ++i;
            ++col;
            continue;
        }
        if (c == '#') {
            while (i < n && source[i] != '\n') { ++i; ++col; }
            continue;
        }
        if (is_digit(c)) {
            size_t start = i;
            while (i < n && is_digit(source[i])) ++i;
            if (i < n && source[i] == '.' && i + 1 < n && is_digit(source[i + 1])) {
                ++i;
                while (i < n && is_digit(source[i])) ++i;
            }
            if (i < n && (source[i] == 'e' || source[i] == 'E')) {
                size_t mark = i;
                ++i;
                if (i < n && (source[i] == '+' || source[i] == '-')) ++i;
                if (i < n && is_digit(source[i])) {
                    while (i < n && is_digit(source[i])) ++i;
                } else {
                    i = mark;  // not an exponent, leave for suffix handling
                }
            }
            std::string digits = source.substr(start, i - start);
            double value = 0.0;
            auto res = std::from_chars(digits.data(), digits.data() + digits.size(), value);
            if (res.ec != std::errc() || !std::isfinite(value)) {
                throw ParseError("number literal '" + digits + "' out of range", tl, tc);
            }
            Unit unit = Unit::none;
            if (i < n && is_ident_start(source[i])) {
                size_t sstart = i;
                while (i < n && is_ident_char(source[i])) ++i;
                std::string suffix = source.substr(sstart, i - sstart);
                if (suffix == "m") {
                    unit = Unit::meters;
                } else if (suffix == "kg") {
                    unit = Unit::kilograms;
                } else if (suffix == "rad") {
                    unit = Unit::radians;
                } else {
                    throw ParseError("invalid unit suffix '" + suffix + "' (expected m, kg or rad)",
                                     tl, tc + static_cast<int>(digits.size()));
                }
            }
            Token t;
            t.kind = TokKind::number;
            t.text = digits;
            t.num = value;
            t.unit = unit;
            t.line = tl;
            t.col = tc;
            tokens.push_back(std::move(t));
            col += static_cast<int>(i - start);
            continue;
        }
        if (is_ident_start(c)) {
            size_t start = i;
            while (i < n && is_ident_char(source[i])) ++i;
            push(TokKind::ident, source.substr(start, i - start), tl, tc);
            col += static_cast<int>(i - start);
            continue;
        }
        if (c == '\'') {
            size_t start = ++i;
            ++col;
            while (i < n && source[i] != '\'' && source[i] != '\n') { ++i; ++col; }
            if (i >= n || source[i] != '\'') {
                throw ParseError("unterminated string literal", tl, tc);
            }
            push(TokKind::string, source.substr(start, i - start), tl, tc);
            ++i;
            ++col;
            continue;
        }
        TokKind kind;
        switch (c) {
            case '(': kind = TokKind::lparen; break;
            case ')': kind = TokKind::rparen; break;
            case '[': kind = TokKind::lbracket; break;
            case ']': kind = TokKind::rbracket; break;
            case ',': kind = TokKind::comma; break;
            case '.': kind = TokKind::dot; break;
            case '+': kind = TokKind::plus; break;
            case '-': kind = TokKind::minus; break;
            case '*': kind = TokKind::star; break;
            case '/': kind = TokKind::slash; break;
            case '=': kind = TokKind::equals; break;
            default:
                throw ParseError(std::string("illegal character '") + c + "'", tl, tc);
        }
        push(kind, std::string(1, c), tl, tc);
        ++i;
        ++col;
    }
    if (!tokens.empty() && tokens.back().kind == TokKind::newline) tokens.pop_back();
    Token end;
    end.kind = TokKind::end;
    end.line = line;
    end.col = col;
    tokens.push_back(end);
    return tokens;
}

}  // namespace toolplan::script
