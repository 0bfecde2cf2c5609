#pragma once

#include <initializer_list>
#include <set>
#include <string>

#include <json.hpp>

#include "toolplan/geometry.hpp"

namespace toolplan::jsonutil {

using nlohmann::json;

// Strict object readers: unknown fields are rejected so schema drift is loud.
inline void expect_fields(const json& j, const std::string& where,
                          std::initializer_list<const char*> required,
                          std::initializer_list<const char*> optional = {}) {
    if (!j.is_object()) throw std::runtime_error(where + ": expected a JSON object");
    std::set<std::string> allowed;
    for (const char* f : required) allowed.insert(f);
    for (const char* f : optional) allowed.insert(f);
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!allowed.count(it.key())) {
            throw std::runtime_error(where + ": unknown field '" + it.key() + "'");
        }
    }
    for (const char* f : required) {
        if (!j.contains(f)) throw std::runtime_error(where + ": missing field '" + std::string(f) + "'");
    }
}

inline Vec3 vec3_from(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 3) throw std::runtime_error(where + ": expected [x, y, z]");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

inline json vec3_to(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

}  // namespace toolplan::jsonutil
