#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "toolplan/geometry.hpp"
#include "toolplan/script/ast.hpp"

namespace toolplan::script {

// Runtime value: scalar with unit, 3-vector (position, meters), the unit
// (void) result of a mutating skill, or an object-name string.
struct Value {
    enum class Kind { scalar, vector, unit, name };

    Kind kind = Kind::unit;
    double num = 0.0;
    Unit unit = Unit::none;
    Vec3 vec;
    std::string text;

    static Value scalar(double v, Unit u = Unit::none) {
        Value out;
        out.kind = Kind::scalar;
        out.num = v;
        out.unit = u;
        return out;
    }
    static Value vector(const Vec3& v) {
        Value out;
        out.kind = Kind::vector;
        out.vec = v;
        return out;
    }
    static Value unit_value() { return Value{}; }
    static Value name(std::string n) {
        Value out;
        out.kind = Kind::name;
        out.text = std::move(n);
        return out;
    }

    bool operator==(const Value& o) const;
    std::string describe() const;
    nlohmann::json to_json() const;
};

// Unit-checked arithmetic. On failure returns nullopt and sets `error`.
std::optional<Value> apply_binary(char op, const Value& lhs, const Value& rhs, std::string& error);
std::optional<Value> apply_negate(const Value& v, std::string& error);
std::optional<Value> apply_component(const Value& v, int comp, std::string& error);

}  // namespace toolplan::script
