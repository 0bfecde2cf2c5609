#include "toolplan/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "toolplan/script/check.hpp"
#include "toolplan/script/parser.hpp"

namespace toolplan::pipeline {

namespace {

std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r\n");
    return s.substr(a, b - a + 1);
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return s;
}

// Header lines may carry markdown markers: "## Description:", "**Plan:**".
std::string normalize_header(const std::string& line) {
    std::string out;
    for (char c : line) {
        if (c == '#' || c == '*' || c == '>' || c == '_' || c == '`') continue;
        out.push_back(c);
    }
    out = trim(out);
    while (!out.empty() && out.back() == ':') out.pop_back();
    return lower(trim(out));
}

std::string strip_label(std::string label) {
    label = trim(label);
    while (!label.empty() && label.back() == ':') label.pop_back();
    return lower(label);
}

std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::string cur;
    for (char c : text) {
        if (c == '\n') {
            lines.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    lines.push_back(cur);
    return lines;
}

std::string replace_all(std::string text, const std::string& needle, const std::string& value) {
    size_t pos = 0;
    while ((pos = text.find(needle, pos)) != std::string::npos) {
        text.replace(pos, needle.size(), value);
        pos += value.size();
    }
    return text;
}

bool parse_number(const std::string& text, double& out) {
    std::string t = trim(text);
    if (t.empty()) return false;
    char* end = nullptr;
    out = std::strtod(t.c_str(), &end);
    return end == t.c_str() + t.size() && std::isfinite(out);
}

// "0.30 m" / "12 kg" / "1.57" -> value + unit
bool parse_value_with_unit(const std::string& text, double& value, std::string& unit) {
    std::string t = trim(text);
    size_t split = t.size();
    while (split > 0 && (std::isalpha(static_cast<unsigned char>(t[split - 1])))) --split;
    unit = lower(trim(t.substr(split)));
    if (unit == "meters" || unit == "meter") unit = "m";
    if (unit == "kilograms" || unit == "kilogram") unit = "kg";
    if (unit == "radians" || unit == "radian") unit = "rad";
    if (!unit.empty() && unit != "m" && unit != "kg" && unit != "rad") return false;
    return parse_number(t.substr(0, split), value);
}

const std::string kReminder =
    "Your previous reply did not follow the required two-section format. "
    "Reply again using exactly the labeled sections described in the instructions.";

}  // namespace

const script::Value* StepParameters::find(const std::string& name) const {
    for (const auto& [n, v] : values) {
        if (n == name) return &v;
    }
    return nullptr;
}

bool AblationConfig::legal() const {
    if (use_calculator && !use_planner) return false;
    if (use_analyzer && !use_planner) return false;  // coder-only has no analyzer
    return true;
}

std::string AblationConfig::method_name() const {
    if (use_analyzer && use_calculator && use_planner) return "full";
    if (!use_analyzer && use_calculator && use_planner) return "no-analyzer";
    if (use_analyzer && !use_calculator && use_planner) return "no-calculator";
    if (!use_analyzer && !use_calculator && use_planner) return "planner-coder";
    return "coder-only";
}

AblationConfig AblationConfig::from_method(const std::string& name) {
    if (name == "full") return {true, true, true};
    if (name == "no-analyzer") return {false, true, true};
    if (name == "no-calculator") return {true, false, true};
    if (name == "planner-coder") return {false, false, true};
    if (name == "coder-only") return {false, false, false};
    throw std::invalid_argument("unknown method '" + name + "'");
}

const std::vector<std::string>& AblationConfig::method_names() {
    static const std::vector<std::string> names = {"full", "no-analyzer", "no-calculator",
                                                   "planner-coder", "coder-only"};
    return names;
}

std::pair<std::string, std::string> parse_two_section(const std::string& text,
                                                      const std::string& first_label,
                                                      const std::string& second_label) {
    const std::string first = strip_label(first_label);
    const std::string second = strip_label(second_label);
    std::vector<std::string> lines = split_lines(text);
    int first_at = -1;
    int second_at = -1;
    for (size_t i = 0; i < lines.size(); ++i) {
        std::string h = normalize_header(lines[i]);
        if (first_at < 0 && h == first) {
            first_at = static_cast<int>(i);
        } else if (first_at >= 0 && second_at < 0 && h == second) {
            second_at = static_cast<int>(i);
            break;
        }
    }
    if (first_at < 0) {
        throw PipelineError("parse_two_section", "missing_section",
                            "missing section '" + first_label + "'");
    }
    if (second_at < 0) {
        throw PipelineError("parse_two_section", "missing_section",
                            "missing section '" + second_label + "'");
    }
    std::string a;
    for (int i = first_at + 1; i < second_at; ++i) a += lines[i] + "\n";
    std::string b;
    for (size_t i = second_at + 1; i < lines.size(); ++i) b += lines[i] + "\n";
    return {trim(a), trim(b)};
}

std::string augment_description(const std::string& query, const AnalyzerOutput& out) {
    if (out.description_section.empty()) return query;
    return query + "\n" + out.description_section + "\n";
}

std::vector<KeyConcept> parse_concept_lines(const std::string& description_section) {
    std::vector<KeyConcept> concepts;
    for (const auto& raw : split_lines(description_section)) {
        std::string line = trim(raw);
        while (!line.empty() && (line[0] == '-' || line[0] == '*')) line = trim(line.substr(1));
        if (line.empty()) continue;
        // Structured line: key concept: <name> | value: <number unit> | related constraint: <text>
        std::vector<std::string> parts;
        std::string cur;
        for (char c : line) {
            if (c == '|') {
                parts.push_back(cur);
                cur.clear();
            } else {
                cur.push_back(c);
            }
        }
        parts.push_back(cur);
        if (parts.size() != 3) continue;
        KeyConcept kc;
        bool ok = true;
        for (const auto& part : parts) {
            size_t colon = part.find(':');
            if (colon == std::string::npos) { ok = false; break; }
            std::string label = lower(trim(part.substr(0, colon)));
            std::string value = trim(part.substr(colon + 1));
            if (label == "key concept" || label == "concept" || label == "name") {
                kc.name = value;
            } else if (label == "value") {
                if (!parse_value_with_unit(value, kc.value, kc.unit)) ok = false;
            } else if (label == "related constraint" || label == "constraint") {
                kc.related_constraint = value;
            } else {
                ok = false;
            }
            if (!ok) break;
        }
        if (ok && !kc.name.empty() && !kc.related_constraint.empty()) concepts.push_back(kc);
    }
    return concepts;
}

PromptSet PromptSet::load_dir(const std::string& dir) {
    auto read = [&](const std::string& name) {
        std::ifstream in(dir + "/" + name);
        if (!in) throw std::runtime_error("missing prompt file '" + dir + "/" + name + "'");
        std::ostringstream ss;
        ss << in.rdbuf();
        return ss.str();
    };
    PromptSet p;
    p.analyzer = read("analyzer.txt");
    p.planner = read("planner.txt");
    p.calculator = read("calculator.txt");
    p.coder = read("coder.txt");
    p.skills_arm = read("skills_arm.txt");
    p.skills_quadruped = read("skills_quadruped.txt");
    p.grammar = read("script_grammar.txt");
    return p;
}

Pipeline::Pipeline(PromptSet prompts, RobotSpec robot, std::string model_id)
    : prompts_(std::move(prompts)), robot_(std::move(robot)), model_id_(std::move(model_id)) {}

std::string Pipeline::call(llm::Backend& backend, const std::string& stage,
                           const std::vector<llm::ChatMessage>& messages) const {
    llm::CompletionRequest request;
    request.model_id = model_id_;
    request.temperature = 0.0;
    request.messages = messages;
    try {
        return backend.complete(request, stage);
    } catch (const llm::BackendError& e) {
        throw PipelineError(stage, "backend", e.what());
    }
}

AnalyzerOutput Pipeline::run_analyzer(const std::string& query, llm::Backend& backend) const {
    std::string prompt = replace_all(prompts_.analyzer, "{{query}}", query);
    std::vector<llm::ChatMessage> messages = {{llm::Role::user, prompt}};
    std::string response = call(backend, "analyzer", messages);
    for (int attempt = 0;; ++attempt) {
        try {
            auto [analysis, description] = parse_two_section(response, "Analysis:", "Description:");
            AnalyzerOutput out;
            out.analysis = analysis;
            out.description_section = description;
            out.concepts = parse_concept_lines(description);
            out.raw_response = response;
            return out;
        } catch (const PipelineError& e) {
            if (attempt >= 1) {
                throw PipelineError("analyzer", "unparseable",
                                    std::string("response unparseable after reprompt: ") + e.what());
            }
            messages.push_back({llm::Role::assistant, response});
            messages.push_back({llm::Role::user, kReminder});
            response = call(backend, "analyzer", messages);
        }
    }
}

PlanSkeleton Pipeline::run_planner(const std::string& query, llm::Backend& backend) const {
    std::string prompt = replace_all(prompts_.planner, "{{query}}", query);
    prompt = replace_all(prompt, "{{skills}}", prompts_.skills_for(robot_.embodiment));
    std::vector<llm::ChatMessage> messages = {{llm::Role::user, prompt}};
    std::string response = call(backend, "planner", messages);

    for (int attempt = 0;; ++attempt) {
        try {
            auto [description, plan_text] = parse_two_section(response, "Description:", "Plan:");
            PlanSkeleton skeleton;
            skeleton.description = description;
            skeleton.raw_response = response;
            for (const auto& raw : split_lines(plan_text)) {
                std::string line = trim(raw);
                if (line.empty()) continue;
                size_t i = 0;
                while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
                if (i == 0) continue;
                int index = std::stoi(line.substr(0, i));
                if (i < line.size() && (line[i] == '.' || line[i] == ')' || line[i] == ':')) ++i;
                std::string rest = trim(line.substr(i));
                size_t j = 0;
                while (j < rest.size() &&
                       (std::isalnum(static_cast<unsigned char>(rest[j])) || rest[j] == '_')) {
                    ++j;
                }
                if (j == 0) continue;
                PlanStep step;
                step.index = index;
                step.skill = rest.substr(0, j);
                std::string args = trim(rest.substr(j));
                while (!args.empty() && (args[0] == ':' || args[0] == '-')) args = trim(args.substr(1));
                step.arguments = args;
                skeleton.steps.push_back(std::move(step));
            }
            if (skeleton.steps.empty()) {
                throw PipelineError("planner", "empty_plan", "plan section contains no steps");
            }
            for (size_t k = 0; k < skeleton.steps.size(); ++k) {
                if (skeleton.steps[k].index != static_cast<int>(k) + 1) {
                    throw PipelineError("planner", "unparseable",
                                        "plan step indices are not contiguous at step " +
                                            std::to_string(skeleton.steps[k].index));
                }
            }
            for (const auto& step : skeleton.steps) {
                if (!robot_.has_skill(step.skill)) {
                    throw PipelineError("planner", "unknown_skill",
                                        "plan step " + std::to_string(step.index) +
                                            " uses unknown skill '" + step.skill + "'");
                }
            }
            return skeleton;
        } catch (const PipelineError& e) {
            bool retryable = e.kind == "missing_section" || e.kind == "unparseable";
            if (!retryable || attempt >= 1) {
                if (retryable && attempt >= 1) {
                    throw PipelineError("planner", "unparseable",
                                         std::string("response unparseable after reprompt: ") +
                                             e.what());
                }
                throw PipelineError("planner", e.kind, e.what());
            }
            messages.push_back({llm::Role::assistant, response});
            messages.push_back({llm::Role::user, kReminder});
            response = call(backend, "planner", messages);
        }
    }
}

namespace {

// Top-level comma split: vectors keep their internal commas.
std::vector<std::string> split_assignments(const std::string& text) {
    std::vector<std::string> parts;
    std::string cur;
    int depth = 0;
    for (char c : text) {
        if (c == '[') ++depth;
        if (c == ']') --depth;
        if (c == ',' && depth == 0) {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    parts.push_back(cur);
    return parts;
}

script::Unit unit_from_suffix(const std::string& u) {
    if (u == "m") return script::Unit::meters;
    if (u == "kg") return script::Unit::kilograms;
    if (u == "rad") return script::Unit::radians;
    return script::Unit::none;
}

}  // namespace

ParameterizedPlan Pipeline::run_calculator(const std::string& query, const PlanSkeleton& skeleton,
                                           llm::Backend& backend) const {
    std::ostringstream plan_text;
    for (const auto& step : skeleton.steps) {
        plan_text << step.index << ". " << step.skill << ": " << step.arguments << "\n";
    }
    std::string prompt = replace_all(prompts_.calculator, "{{query}}", query);
    prompt = replace_all(prompt, "{{plan}}", plan_text.str());
    std::vector<llm::ChatMessage> messages = {{llm::Role::user, prompt}};
    std::string response = call(backend, "calculator", messages);

    std::string answer;
    for (int attempt = 0;; ++attempt) {
        try {
            auto [description, answer_text] = parse_two_section(response, "Description:", "Answer:");
            (void)description;
            answer = answer_text;
            break;
        } catch (const PipelineError& e) {
            if (attempt >= 1) {
                throw PipelineError("calculator", "unparseable",
                                    std::string("response unparseable after reprompt: ") + e.what());
            }
            messages.push_back({llm::Role::assistant, response});
            messages.push_back({llm::Role::user, kReminder});
            response = call(backend, "calculator", messages);
        }
    }

    ParameterizedPlan plan;
    for (const auto& step : skeleton.steps) plan.steps.push_back({step, {}});

    for (const auto& raw : split_lines(answer)) {
        std::string line = trim(raw);
        while (!line.empty() && (line[0] == '-' || line[0] == '*')) line = trim(line.substr(1));
        if (line.empty()) continue;
        std::string low = lower(line);
        if (low.rfind("step", 0) != 0) continue;
        size_t i = 4;
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        size_t num_start = i;
        while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
        if (num_start == i) continue;
        int index = std::stoi(line.substr(num_start, i - num_start));
        if (index < 1 || index > static_cast<int>(plan.steps.size())) {
            throw PipelineError("calculator", "step_index_mismatch",
                                "answer refers to step " + std::to_string(index) + " but the plan has " +
                                    std::to_string(plan.steps.size()) + " steps");
        }
        while (i < line.size() && (line[i] == ':' || std::isspace(static_cast<unsigned char>(line[i])))) ++i;
        std::string rest = line.substr(i);
        StepParameters& params = plan.steps[static_cast<size_t>(index) - 1].second;
        for (const auto& assignment : split_assignments(rest)) {
            std::string a = trim(assignment);
            if (a.empty()) continue;
            size_t eq = a.find('=');
            if (eq == std::string::npos) {
                throw PipelineError("calculator", "non_numeric_parameter",
                                    "cannot parse parameter assignment '" + a + "' in step " +
                                        std::to_string(index));
            }
            std::string pname = trim(a.substr(0, eq));
            std::string pvalue = trim(a.substr(eq + 1));
            script::Value value;
            if (!pvalue.empty() && pvalue[0] == '[') {
                if (pvalue.back() != ']') {
                    throw PipelineError("calculator", "non_numeric_parameter",
                                        "unterminated vector for '" + pname + "' in step " +
                                            std::to_string(index));
                }
                std::string inner = pvalue.substr(1, pvalue.size() - 2);
                std::vector<std::string> comps = split_assignments(inner);
                double xyz[3];
                if (comps.size() != 3) {
                    throw PipelineError("calculator", "non_numeric_parameter",
                                        "vector for '" + pname + "' must have 3 components");
                }
                for (int k = 0; k < 3; ++k) {
                    if (!parse_number(comps[k], xyz[k])) {
                        throw PipelineError("calculator", "non_numeric_parameter",
                                            "non-numeric component '" + trim(comps[k]) + "' in step " +
                                                std::to_string(index));
                    }
                }
                value = script::Value::vector({xyz[0], xyz[1], xyz[2]});
            } else {
                double num;
                std::string unit;
                if (!parse_value_with_unit(pvalue, num, unit)) {
                    throw PipelineError("calculator", "non_numeric_parameter",
                                        "non-numeric parameter '" + pname + " = " + pvalue +
                                            "' in step " + std::to_string(index));
                }
                value = script::Value::scalar(num, unit_from_suffix(unit));
            }
            bool replaced = false;
            for (auto& [n, v] : params.values) {
                if (n == pname) {
                    v = value;
                    replaced = true;
                    break;
                }
            }
            if (!replaced) params.values.emplace_back(pname, value);
        }
    }

    static const std::set<std::string> motion_skills = {"move_to_position", "walk_to_position",
                                                        "climb_to_position", "push_to_position"};
    for (const auto& [step, params] : plan.steps) {
        if (!motion_skills.count(step.skill)) continue;
        const script::Value* target = params.find("target_position");
        if (!target || target->kind != script::Value::Kind::vector) {
            throw PipelineError("calculator", "missing_target",
                                "step " + std::to_string(step.index) + " (" + step.skill +
                                    ") has no target_position parameter");
        }
    }
    return plan;
}

std::string render_plan_for_coder(const ParameterizedPlan& plan) {
    std::ostringstream out;
    for (const auto& [step, params] : plan.steps) {
        out << step.index << ". " << step.skill;
        if (!step.arguments.empty()) out << ": " << step.arguments;
        if (!params.values.empty()) {
            out << " ;";
            bool first = true;
            for (const auto& [name, value] : params.values) {
                out << (first ? " " : ", ") << name << " = ";
                if (value.kind == script::Value::Kind::vector) {
                    out << fmt2(value.vec);
                } else {
                    out << value.num << unit_suffix(value.unit);
                }
                first = false;
            }
        }
        out << "\n";
    }
    return out.str();
}

std::pair<std::string, script::Program> Pipeline::run_coder(const std::string& plan_context,
                                                            llm::Backend& backend) const {
    std::string prompt = replace_all(prompts_.coder, "{{plan}}", plan_context);
    prompt = replace_all(prompt, "{{skills}}", prompts_.skills_for(robot_.embodiment));
    prompt = replace_all(prompt, "{{grammar}}", prompts_.grammar);
    std::vector<llm::ChatMessage> messages = {{llm::Role::user, prompt}};
    std::string response = call(backend, "coder", messages);

    for (int attempt = 0;; ++attempt) {
        std::string source = response;
        // Strip an optional fenced code block.
        size_t fence = source.find("```");
        if (fence != std::string::npos) {
            size_t body = source.find('\n', fence);
            size_t close = body == std::string::npos ? std::string::npos
                                                     : source.find("```", body);
            if (body != std::string::npos && close != std::string::npos) {
                source = source.substr(body + 1, close - body - 1);
            }
        }
        source = trim(source) + "\n";
        std::string diagnostic;
        try {
            script::Program program = script::parse(source);
            auto findings = script::static_check(program, robot_);
            if (!findings.empty()) {
                diagnostic = findings.front().kind + ": " + findings.front().message;
            } else {
                return {source, program};
            }
        } catch (const script::ParseError& e) {
            diagnostic = "line " + std::to_string(e.line) + ", column " + std::to_string(e.col) +
                         ": " + e.what();
        }
        if (attempt >= 1) {
            throw PipelineError("coder", "parse_failure",
                                "script rejected after reprompt: " + diagnostic);
        }
        messages.push_back({llm::Role::assistant, response});
        messages.push_back({llm::Role::user,
                            "Your script was rejected: " + diagnostic +
                                ". Reply with only a corrected script."});
        response = call(backend, "coder", messages);
    }
}

std::pair<std::string, script::Program> Pipeline::run_coder(const ParameterizedPlan& plan,
                                                            llm::Backend& backend) const {
    return run_coder(render_plan_for_coder(plan), backend);
}

PipelineResult Pipeline::run(const TaskSpec& task, llm::Backend& backend,
                             const AblationConfig& ablation) const {
    if (!ablation.legal()) {
        throw PipelineError("pipeline", "backend", "illegal ablation configuration");
    }
    PipelineResult result;
    const std::string query = compose_query(task);
    std::string augmented = query;
    if (ablation.use_analyzer) {
        result.analyzer = run_analyzer(query, backend);
        augmented = augment_description(query, *result.analyzer);
    }
    std::string coder_context = augmented;
    if (ablation.use_planner) {
        result.skeleton = run_planner(augmented, backend);
        coder_context = result.skeleton->raw_response;
        if (ablation.use_calculator) {
            result.plan = run_calculator(augmented, *result.skeleton, backend);
            coder_context = "Task:\n" + task.instruction + "\n\nPlan with parameters:\n" +
                            render_plan_for_coder(*result.plan);
        }
    }
    auto [source, program] = run_coder(coder_context, backend);
    result.script_source = source;
    result.program = std::move(program);
    return result;
}

}  // namespace toolplan::pipeline
