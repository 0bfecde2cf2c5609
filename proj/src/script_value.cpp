#include "toolplan/script/value.hpp"

#include <cmath>

namespace toolplan::script {

bool Value::operator==(const Value& o) const {
    if (kind != o.kind) return false;
    switch (kind) {
        case Kind::scalar: return num == o.num && unit == o.unit;
        case Kind::vector: return vec == o.vec;
        case Kind::unit: return true;
        case Kind::name: return text == o.text;
    }
    return false;
}

std::string Value::describe() const {
    switch (kind) {
        case Kind::scalar: {
            std::string s = std::to_string(num);
            std::string u = unit_suffix(unit);
            return u.empty() ? s : s + " " + u;
        }
        case Kind::vector:
            return fmt2(vec);
        case Kind::unit:
            return "()";
        case Kind::name:
            return "'" + text + "'";
    }
    return "";
}

nlohmann::json Value::to_json() const {
    switch (kind) {
        case Kind::scalar:
            return {{"kind", "scalar"}, {"value", num}, {"unit", unit_suffix(unit)}};
        case Kind::vector:
            return {{"kind", "vector"}, {"value", {vec.x, vec.y, vec.z}}};
        case Kind::unit:
            return {{"kind", "unit"}};
        case Kind::name:
            return {{"kind", "name"}, {"value", text}};
    }
    return {};
}

namespace {

std::string unit_name(Unit u) {
    switch (u) {
        case Unit::none: return "unitless";
        case Unit::meters: return "m";
        case Unit::kilograms: return "kg";
        case Unit::radians: return "rad";
    }
    return "?";
}

// Units for + and -: equal units pass through, unitless promotes.
bool combine_additive(Unit a, Unit b, Unit& out, std::string& error) {
    if (a == b) { out = a; return true; }
    if (a == Unit::none) { out = b; return true; }
    if (b == Unit::none) { out = a; return true; }
    error = "cannot mix " + unit_name(a) + " with " + unit_name(b);
    return false;
}

}  // namespace

std::optional<Value> apply_binary(char op, const Value& lhs, const Value& rhs, std::string& error) {
    using K = Value::Kind;
    if (lhs.kind == K::name || rhs.kind == K::name || lhs.kind == K::unit || rhs.kind == K::unit) {
        error = "arithmetic requires numeric operands";
        return std::nullopt;
    }
    if (op == '+' || op == '-') {
        if (lhs.kind == K::vector && rhs.kind == K::vector) {
            return Value::vector(op == '+' ? lhs.vec + rhs.vec : lhs.vec - rhs.vec);
        }
        if (lhs.kind == K::scalar && rhs.kind == K::scalar) {
            Unit u;
            if (!combine_additive(lhs.unit, rhs.unit, u, error)) return std::nullopt;
            return Value::scalar(op == '+' ? lhs.num + rhs.num : lhs.num - rhs.num, u);
        }
        error = "cannot add a vector and a scalar";
        return std::nullopt;
    }
    if (op == '*') {
        if (lhs.kind == K::vector && rhs.kind == K::scalar) {
            if (rhs.unit != Unit::none) { error = "vector scaling requires a unitless factor"; return std::nullopt; }
            return Value::vector(lhs.vec * rhs.num);
        }
        if (lhs.kind == K::scalar && rhs.kind == K::vector) {
            if (lhs.unit != Unit::none) { error = "vector scaling requires a unitless factor"; return std::nullopt; }
            return Value::vector(rhs.vec * lhs.num);
        }
        if (lhs.kind == K::scalar && rhs.kind == K::scalar) {
            if (lhs.unit != Unit::none && rhs.unit != Unit::none) {
                error = "cannot multiply " + unit_name(lhs.unit) + " by " + unit_name(rhs.unit);
                return std::nullopt;
            }
            Unit u = lhs.unit != Unit::none ? lhs.unit : rhs.unit;
            return Value::scalar(lhs.num * rhs.num, u);
        }
        error = "cannot multiply two vectors";
        return std::nullopt;
    }
    if (op == '/') {
        if (rhs.kind != K::scalar) { error = "divisor must be a scalar"; return std::nullopt; }
        if (rhs.num == 0.0) { error = "division by zero"; return std::nullopt; }
        if (lhs.kind == K::vector) {
            if (rhs.unit != Unit::none) { error = "vector scaling requires a unitless divisor"; return std::nullopt; }
            return Value::vector(lhs.vec / rhs.num);
        }
        if (rhs.unit == Unit::none) return Value::scalar(lhs.num / rhs.num, lhs.unit);
        if (rhs.unit == lhs.unit) return Value::scalar(lhs.num / rhs.num, Unit::none);
        error = "cannot divide " + unit_name(lhs.unit) + " by " + unit_name(rhs.unit);
        return std::nullopt;
    }
    error = "unknown operator";
    return std::nullopt;
}

std::optional<Value> apply_negate(const Value& v, std::string& error) {
    if (v.kind == Value::Kind::scalar) return Value::scalar(-v.num, v.unit);
    if (v.kind == Value::Kind::vector) return Value::vector(v.vec * -1.0);
    error = "cannot negate a non-numeric value";
    return std::nullopt;
}

std::optional<Value> apply_component(const Value& v, int comp, std::string& error) {
    if (v.kind != Value::Kind::vector) {
        error = "component access requires a vector";
        return std::nullopt;
    }
    double c = comp == 0 ? v.vec.x : comp == 1 ? v.vec.y : v.vec.z;
    return Value::scalar(c, Unit::meters);
}

}  // namespace toolplan::script
