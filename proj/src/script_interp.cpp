#include "toolplan/script/interp.hpp"

#include <map>

#include "toolplan/geometry.hpp"

namespace toolplan::script {

using nlohmann::json;

bool ExecutionTrace::halted() const { return first_error() != nullptr; }

const TraceError* ExecutionTrace::first_error() const {
    for (const auto& e : entries) {
        if (e.error) return &*e.error;
    }
    return nullptr;
}

json ExecutionTrace::to_json() const {
    json j;
    j["schema_version"] = 1;
    j["initial_state"] = initial_state;
    j["entries"] = json::array();
    for (const auto& e : entries) {
        json ej;
        ej["index"] = e.index;
        ej["name"] = e.name;
        ej["args"] = json::array();
        for (const auto& a : e.args) ej["args"].push_back(a.to_json());
        if (e.result) ej["result"] = e.result->to_json();
        if (e.error) {
            json vals = json::object();
            for (const auto& [k, v] : e.error->values) vals[k] = v;
            ej["error"] = {{"category",
                            e.error->category == TraceError::Category::skill ? "skill" : "eval"},
                           {"kind", e.error->kind},
                           {"detail", e.error->detail},
                           {"values", vals}};
        }
        if (!e.notes.empty()) ej["notes"] = e.notes;
        ej["snapshot"] = e.snapshot;
        ej["state"] = e.state;
        j["entries"].push_back(std::move(ej));
    }
    return j;
}

ExecutionTrace trace_from_json(const json& j) {
    ExecutionTrace trace;
    trace.initial_state = j.at("initial_state");
    for (const auto& ej : j.at("entries")) {
        TraceEntry e;
        e.index = ej.at("index").get<int>();
        e.name = ej.at("name").get<std::string>();
        if (ej.contains("error")) {
            TraceError err;
            err.category = ej["error"].at("category").get<std::string>() == "skill"
                               ? TraceError::Category::skill
                               : TraceError::Category::eval;
            err.kind = ej["error"].at("kind").get<std::string>();
            err.detail = ej["error"].at("detail").get<std::string>();
            for (auto it = ej["error"].at("values").begin(); it != ej["error"].at("values").end(); ++it) {
                err.values.emplace_back(it.key(), it.value().get<double>());
            }
            e.error = std::move(err);
        }
        if (ej.contains("notes")) {
            for (const auto& n : ej.at("notes")) e.notes.push_back(n.get<std::string>());
        }
        e.snapshot = ej.at("snapshot").get<std::string>();
        e.state = ej.at("state");
        trace.entries.push_back(std::move(e));
    }
    return trace;
}

namespace {

struct EvalAbort {
    TraceError error;
};

struct SkillAbort {
    SkillError error;
    std::string skill;
    std::vector<Value> args;
    std::vector<std::string> notes;
};

class Evaluator {
  public:
    Evaluator(Environment& env, std::map<std::string, Value>& locals)
        : env_(env), locals_(locals) {}

    // Set when the statement consists of exactly one top-level call.
    std::string top_skill;
    std::vector<Value> top_args;
    std::optional<Value> top_result;
    std::vector<std::string> notes;

    Value eval(const Expr& e, bool top_level = false) {
        switch (e.kind) {
            case Expr::Kind::number:
                return Value::scalar(e.num, e.unit);
            case Expr::Kind::string:
                return Value::name(e.text);
            case Expr::Kind::variable: {
                auto it = locals_.find(e.text);
                if (it == locals_.end()) {
                    throw EvalAbort{{TraceError::Category::eval, "unbound_variable",
                                     "variable '" + e.text + "' is not bound", {}}};
                }
                return it->second;
            }
            case Expr::Kind::vector: {
                Vec3 v;
                double* comps[3] = {&v.x, &v.y, &v.z};
                for (int i = 0; i < 3; ++i) {
                    Value c = eval(e.args[i]);
                    if (c.kind != Value::Kind::scalar ||
                        (c.unit != Unit::none && c.unit != Unit::meters)) {
                        throw EvalAbort{{TraceError::Category::eval, "type_error",
                                         "vector components must be unitless or meters", {}}};
                    }
                    *comps[i] = c.num;
                }
                return Value::vector(v);
            }
            case Expr::Kind::component: {
                Value base = eval(e.args[0]);
                std::string err;
                auto out = apply_component(base, e.comp, err);
                if (!out) throw EvalAbort{{TraceError::Category::eval, "type_error", err, {}}};
                return *out;
            }
            case Expr::Kind::negate: {
                Value inner = eval(e.args[0]);
                std::string err;
                auto out = apply_negate(inner, err);
                if (!out) throw EvalAbort{{TraceError::Category::eval, "type_error", err, {}}};
                return *out;
            }
            case Expr::Kind::binary: {
                Value lhs = eval(e.args[0]);
                Value rhs = eval(e.args[1]);
                std::string err;
                auto out = apply_binary(e.op, lhs, rhs, err);
                if (!out) {
                    std::string kind = err == "division by zero" ? "division_by_zero" : "type_error";
                    throw EvalAbort{{TraceError::Category::eval, kind, err, {}}};
                }
                return *out;
            }
            case Expr::Kind::call: {
                const SkillSignature* sig = find_skill(e.text);
                std::vector<Value> args;
                args.reserve(e.args.size());
                for (const auto& a : e.args) args.push_back(eval(a));
                if (sig) {
                    if (sig->params.size() != args.size()) {
                        throw EvalAbort{{TraceError::Category::eval, "type_error",
                                         "skill '" + e.text + "' arity mismatch", {}}};
                    }
                    for (size_t i = 0; i < args.size(); ++i) {
                        check_param(e.text, sig->params[i], args[i]);
                    }
                }
                SkillResult res = env_.call_skill(e.text, args);
                for (const auto& n : res.notes) notes.push_back(n);
                if (res.error) throw SkillAbort{*res.error, e.text, args, res.notes};
                Value out = res.value.value_or(Value::unit_value());
                if (top_level) {
                    top_skill = e.text;
                    top_args = args;
                    top_result = out;
                }
                return out;
            }
        }
        throw EvalAbort{{TraceError::Category::eval, "type_error", "unreachable expression kind", {}}};
    }

  private:
    void check_param(const std::string& skill, ParamKind kind, const Value& v) {
        switch (kind) {
            case ParamKind::object_name:
                if (v.kind != Value::Kind::name) {
                    throw EvalAbort{{TraceError::Category::eval, "type_error",
                                     "skill '" + skill + "' expects an object name", {}}};
                }
                break;
            case ParamKind::position:
                if (v.kind != Value::Kind::vector) {
                    throw EvalAbort{{TraceError::Category::eval, "type_error",
                                     "skill '" + skill + "' expects a position vector", {}}};
                }
                break;
            case ParamKind::angle:
                if (v.kind != Value::Kind::scalar ||
                    (v.unit != Unit::none && v.unit != Unit::radians)) {
                    throw EvalAbort{{TraceError::Category::eval, "type_error",
                                     "skill '" + skill + "' expects an angle in radians", {}}};
                }
                break;
        }
    }

    Environment& env_;
    std::map<std::string, Value>& locals_;
};

}  // namespace

ExecutionTrace interpret(const Program& program, Environment& env, const InterpretLimits& limits) {
    ExecutionTrace trace;
    trace.initial_state = env.snapshot_json();
    std::map<std::string, Value> locals;

    for (size_t i = 0; i < program.statements.size(); ++i) {
        const Statement& st = program.statements[i];
        TraceEntry entry;
        entry.index = static_cast<int>(i);
        entry.name = "eval";

        if (static_cast<int>(i) >= limits.max_statements) {
            entry.error = TraceError{TraceError::Category::eval, "budget_exceeded",
                                     "statement budget of " + std::to_string(limits.max_statements) +
                                         " exceeded",
                                     {}};
            entry.state = env.snapshot_json();
            entry.snapshot = fnv1a64_hex(entry.state.dump());
            trace.entries.push_back(std::move(entry));
            return trace;
        }

        Evaluator ev(env, locals);
        bool halt = false;
        try {
            Value result = ev.eval(st.expr, /*top_level=*/true);
            if (!ev.top_skill.empty()) {
                entry.name = ev.top_skill;
                entry.args = ev.top_args;
            }
            entry.result = result;
            if (st.is_binding()) locals[st.bind_name] = result;
        } catch (const SkillAbort& abort) {
            entry.name = abort.skill;
            entry.args = abort.args;
            entry.error = TraceError{TraceError::Category::skill, to_string(abort.error.kind),
                                     abort.error.detail, abort.error.values};
            halt = true;
        } catch (const EvalAbort& abort) {
            entry.error = abort.error;
            halt = true;
        }
        entry.notes = ev.notes;
        entry.state = env.snapshot_json();
        entry.snapshot = fnv1a64_hex(entry.state.dump());
        trace.entries.push_back(std::move(entry));
        if (halt) break;
    }
    return trace;
}

}  // namespace toolplan::script
