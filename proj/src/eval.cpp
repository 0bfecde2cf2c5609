#include "toolplan/eval.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>
#include <thread>

#include "toolplan/script/check.hpp"
#include "toolplan/sim/world.hpp"

namespace toolplan::eval {

using nlohmann::json;

std::string Ratio::format() const {
    if (den == 0) return "n/a";
    double v = static_cast<double>(num) / den;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

Ratio ratio_sum(const std::vector<Ratio>& parts) {
    long long num = 0;
    long long den = 1;
    int count = 0;
    for (const auto& p : parts) {
        if (!p.applicable()) continue;
        long long g = std::gcd(den, p.den);
        long long scale = p.den / g;
        num = num * scale + p.num * (den / g);
        den *= scale;
        ++count;
    }
    if (count == 0) return {0, 0};
    return {num, den * count};
}

json TrialRecord::to_json() const {
    json j;
    j["schema_version"] = 1;
    j["task_id"] = task_id;
    j["task_stem"] = task_stem;
    j["method"] = method;
    j["seed"] = seed;
    j["success"] = success;
    j["failure_class"] = failure_class;
    j["stage_error"] = stage_error;
    j["wall_ms"] = wall_ms;
    j["backend_calls"] = backend_calls;
    j["script_source"] = script_source;
    j["stages"] = stages_json;
    json cj = json::array();
    for (const auto& c : concepts) {
        cj.push_back({{"name", c.name},
                      {"value", c.value},
                      {"unit", c.unit},
                      {"related_constraint", c.related_constraint}});
    }
    j["concepts"] = cj;
    return j;
}

TrialRecord TrialRecord::from_json(const json& j) {
    TrialRecord r;
    r.task_id = j.at("task_id").get<std::string>();
    r.task_stem = j.at("task_stem").get<std::string>();
    r.method = j.at("method").get<std::string>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.success = j.at("success").get<bool>();
    r.failure_class = j.at("failure_class").get<std::string>();
    r.stage_error = j.value("stage_error", "");
    r.wall_ms = j.value("wall_ms", 0.0);
    r.backend_calls = j.value("backend_calls", 0);
    r.script_source = j.value("script_source", "");
    if (j.contains("stages")) r.stages_json = j.at("stages");
    if (j.contains("concepts")) {
        for (const auto& cj : j.at("concepts")) {
            r.concepts.push_back({cj.at("name").get<std::string>(), cj.at("value").get<double>(),
                                  cj.at("unit").get<std::string>(),
                                  cj.at("related_constraint").get<std::string>()});
        }
    }
    return r;
}

// --- trace summary ---------------------------------------------------------

namespace {

Vec3 vec_from_json(const json& a) {
    return {a[0].get<double>(), a[1].get<double>(), a[2].get<double>()};
}

std::set<std::string> held_set(const json& state) {
    std::set<std::string> out;
    if (!state.contains("objects")) return out;
    for (auto it = state["objects"].begin(); it != state["objects"].end(); ++it) {
        if (it.value().value("held", false)) out.insert(it.key());
    }
    return out;
}

const std::set<std::string> kMutatingSkills = {"move_to_position", "walk_to_position",
                                               "climb_to_position", "push_to_position",
                                               "open_gripper", "close_gripper"};
const std::set<std::string> kConstraintErrors = {"gap_too_wide", "step_too_high",
                                                 "over_mass_limit", "out_of_workspace"};

}  // namespace

TraceSummary summarize_trace(const json& trace_json) {
    TraceSummary s;
    if (!trace_json.is_object() || !trace_json.contains("entries")) return s;

    const json& initial = trace_json.at("initial_state");
    std::map<std::string, Vec3> initial_pos;
    std::map<std::string, double> initial_yaw;
    if (initial.contains("objects")) {
        for (auto it = initial["objects"].begin(); it != initial["objects"].end(); ++it) {
            initial_pos[it.key()] = vec_from_json(it.value().at("position"));
            initial_yaw[it.key()] = it.value().at("yaw").get<double>();
            s.final_positions[it.key()] = initial_pos[it.key()];
        }
    }
    if (initial.contains("robot")) {
        s.support_surfaces.insert(initial["robot"].value("support", ""));
    }

    std::set<std::string> held_before = held_set(initial);
    const json* last_state = &initial;

    for (const auto& entry : trace_json.at("entries")) {
        const std::string name = entry.value("name", "eval");
        if (kMutatingSkills.count(name)) {
            s.skill_order.push_back(name);
        }
        if (name == "push_to_position" && entry.contains("args") && !entry["args"].empty()) {
            std::string obj = entry["args"][0].value("value", "");
            s.push_order.push_back(obj);
            s.manipulated.insert(obj);
        }
        if (entry.contains("error")) {
            std::string kind = entry["error"].value("kind", "");
            s.error_kinds.push_back(kind);
            if (kConstraintErrors.count(kind)) s.constraint_errors.insert(kind);
        }
        if (!entry.contains("state")) continue;
        const json& state = entry.at("state");
        last_state = &state;

        std::set<std::string> held_now = held_set(state);
        std::vector<std::string> grabbed;
        for (const auto& h : held_now) {
            if (!held_before.count(h)) grabbed.push_back(h);
        }
        for (const auto& g : grabbed) {
            s.attach_order.push_back(g);
            s.manipulated.insert(g);
        }
        held_before = held_now;

        if (state.contains("objects")) {
            for (auto it = state["objects"].begin(); it != state["objects"].end(); ++it) {
                Vec3 p = vec_from_json(it.value().at("position"));
                double yaw = it.value().at("yaw").get<double>();
                s.final_positions[it.key()] = p;
                auto init = initial_pos.find(it.key());
                if (init != initial_pos.end()) {
                    if (distance(p, init->second) > 0.001 ||
                        yaw_difference(yaw, initial_yaw[it.key()]) > 1e-6) {
                        s.manipulated.insert(it.key());
                    }
                }
            }
        }
        if (state.contains("robot")) s.support_surfaces.insert(state["robot"].value("support", ""));
    }

    const json& final_state = *last_state;
    if (final_state.contains("flags")) {
        const json& flags = final_state["flags"];
        s.cube_lifted = flags.value("cube_lifted", false);
        s.button_pressed = flags.value("button_pressed", false);
        s.bridge_spanned = flags.contains("gap_spanned") && !flags["gap_spanned"].empty();
    }
    if (final_state.contains("merged")) s.merged_any = !final_state["merged"].empty();
    return s;
}

const std::string& task_target_object(const std::string& task_id) {
    static const std::map<std::string, std::string> targets = {
        {"milk-reaching", "milk"},     {"can-grasping", "can"},
        {"button-pressing", "button"}, {"sofa-traversing", ""},
        {"sofa-climbing", ""},         {"cube-lifting", "cube"}};
    static const std::string empty;
    auto it = targets.find(task_id);
    return it == targets.end() ? empty : it->second;
}

std::set<std::string> manipulated_objects(const TraceSummary& summary, const std::string& task_id) {
    std::set<std::string> out = summary.manipulated;
    out.erase(task_target_object(task_id));
    return out;
}

// --- key concept scoring -----------------------------------------------------

namespace {

std::vector<std::string> tokens_of(const std::string& text) {
    std::vector<std::string> out;
    std::string cur;
    for (char raw : text) {
        char c = static_cast<char>(std::tolower(static_cast<unsigned char>(raw)));
        if (std::isalnum(static_cast<unsigned char>(c))) {
            cur.push_back(c);
        } else if (!cur.empty()) {
            out.push_back(cur);
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

const std::set<std::string> kStopwords = {"the", "is",  "of", "a",  "an", "to",
                                          "its", "it",  "s",  "out", "in", "on"};

std::set<std::string> content_tokens(const std::string& text) {
    std::set<std::string> out;
    for (const auto& t : tokens_of(text)) {
        if (!kStopwords.count(t)) out.insert(t);
    }
    return out;
}

}  // namespace

bool concept_matches_gold(const std::vector<pipeline::KeyConcept>& concepts,
                          const GoldAnnotation& gold) {
    const auto gold_name = tokens_of(gold.key_concept.name);
    const auto gold_constraint = content_tokens(gold.key_concept.constraint);
    for (const auto& c : concepts) {
        // Case-insensitive token match: every gold name token appears.
        std::set<std::string> name_tokens;
        for (const auto& t : tokens_of(c.name)) name_tokens.insert(t);
        bool name_ok = !gold_name.empty();
        for (const auto& t : gold_name) {
            if (!name_tokens.count(t)) { name_ok = false; break; }
        }
        if (!name_ok) continue;
        if (c.unit != gold.key_concept.unit) continue;
        if (std::abs(c.value - gold.key_concept.value) > gold.parameter_tolerance) continue;
        std::set<std::string> out_tokens = content_tokens(c.related_constraint);
        size_t hits = 0;
        for (const auto& t : gold_constraint) {
            if (out_tokens.count(t)) ++hits;
        }
        size_t needed = std::max<size_t>(1, gold_constraint.size() / 2);
        if (hits >= needed) return true;
    }
    return false;
}

KeyConceptScore score_key_concepts(const std::vector<std::vector<pipeline::KeyConcept>>& outputs,
                                   const GoldAnnotation& gold) {
    KeyConceptScore score;
    score.total = static_cast<int>(outputs.size());
    for (const auto& concepts : outputs) {
        if (concept_matches_gold(concepts, gold)) ++score.correct;
    }
    return score;
}

// --- error classification ----------------------------------------------------

namespace {

struct OracleEvent {
    enum class Kind { attach, push, skill };
    Kind kind;
    std::set<std::string> names;  // any-of
};

std::vector<std::pair<OracleEvent::Kind, std::string>> event_stream(const TraceSummary& s,
                                                                    const json& trace_json) {
    // Rebuild a unified ordered stream from the trace entries.
    std::vector<std::pair<OracleEvent::Kind, std::string>> events;
    if (!trace_json.is_object() || !trace_json.contains("entries")) return events;
    std::set<std::string> held_before = held_set(trace_json.at("initial_state"));
    for (const auto& entry : trace_json.at("entries")) {
        const std::string name = entry.value("name", "eval");
        if (kMutatingSkills.count(name)) events.push_back({OracleEvent::Kind::skill, name});
        if (name == "push_to_position" && entry.contains("args") && !entry["args"].empty()) {
            events.push_back({OracleEvent::Kind::push, entry["args"][0].value("value", "")});
        }
        if (entry.contains("state")) {
            std::set<std::string> held_now = held_set(entry.at("state"));
            for (const auto& h : held_now) {
                if (!held_before.count(h)) events.push_back({OracleEvent::Kind::attach, h});
            }
            held_before = held_now;
        }
    }
    (void)s;
    return events;
}

const std::vector<OracleEvent>& ordering_template(const std::string& task_id) {
    using K = OracleEvent::Kind;
    static const std::map<std::string, std::vector<OracleEvent>> templates = {
        {"milk-reaching", {{K::attach, {"hammer"}}}},
        {"can-grasping", {{K::attach, {"stick"}}, {K::attach, {"scroll"}}}},
        {"button-pressing", {{K::attach, {"block_a", "block_b"}}, {K::attach, {"block_a", "block_b"}}}},
        {"sofa-traversing", {{K::push, {"surfboard"}}}},
        {"sofa-climbing", {{K::push, {"small_box"}}, {K::skill, {"climb_to_position"}}}},
        {"cube-lifting", {{K::push, {"chair"}}}},
    };
    static const std::vector<OracleEvent> empty;
    auto it = templates.find(task_id);
    return it == templates.end() ? empty : it->second;
}

bool order_matches(const std::string& task_id, const TraceSummary& s, const json& trace_json) {
    const auto& tmpl = ordering_template(task_id);
    auto events = event_stream(s, trace_json);
    size_t need = 0;
    for (const auto& [kind, name] : events) {
        if (need >= tmpl.size()) break;
        if (tmpl[need].kind == kind && tmpl[need].names.count(name)) ++need;
    }
    return need >= tmpl.size();
}

Aabb scene_aabb_at(const TaskSpec& task, const std::string& name, const Vec3& pos) {
    const ObjectSpec* sp = task.scene.find_object(name);
    return box_world_aabb(pos, sp ? sp->size : Vec3{0.01, 0.01, 0.01}, 0.0);
}

// True when an executed target missed its geometric goal beyond tolerance.
bool numeric_deviation(const TaskSpec& task, const TraceSummary& s) {
    const double tol = task.gold.parameter_tolerance;
    const RobotSpec& robot = task.scene.robot;
    auto pushed = [&](const std::string& n) {
        return std::find(s.push_order.begin(), s.push_order.end(), n) != s.push_order.end();
    };
    auto attached = [&](const std::string& n) {
        return std::find(s.attach_order.begin(), s.attach_order.end(), n) != s.attach_order.end();
    };
    auto final_pos = [&](const std::string& n) {
        auto it = s.final_positions.find(n);
        return it == s.final_positions.end() ? Vec3{} : it->second;
    };

    if (task.id == "milk-reaching") {
        if (!attached("hammer")) return false;
        double d = distance(final_pos("milk"), robot.workspace_center);
        return d > robot.workspace_radius + tol;
    }
    if (task.id == "can-grasping") {
        if (!attached("scroll")) return false;
        double d = distance(final_pos("can"), robot.workspace_center);
        return d > robot.workspace_radius + tol;
    }
    if (task.id == "button-pressing") {
        return s.merged_any && !s.button_pressed;
    }
    if (task.id == "sofa-traversing") {
        return pushed("surfboard") && !s.bridge_spanned;
    }
    if (task.id == "sofa-climbing") {
        if (!pushed("small_box")) return false;
        Aabb small = scene_aabb_at(task, "small_box", final_pos("small_box"));
        Aabb large = scene_aabb_at(task, "large_box", final_pos("large_box"));
        double gap_x = std::max(large.lo.x - small.hi.x, small.lo.x - large.hi.x);
        double overlap_y = small.overlap_y(large);
        bool adjacent = gap_x <= 0.05 && overlap_y >= 0.1;
        return !adjacent;
    }
    if (task.id == "cube-lifting") {
        if (!pushed("chair")) return false;
        const ObjectSpec* lever = task.scene.find_object("surfboard");
        const ObjectSpec* chair = task.scene.find_object("chair");
        if (!lever || !chair) return false;
        Aabb box = lever->world_aabb();
        Aabb far = box;
        double mid = (box.lo.x + box.hi.x) * 0.5;
        if (chair->position.x <= mid) far.hi.x = mid; else far.lo.x = mid;
        Aabb chair_final = scene_aabb_at(task, "chair", final_pos("chair"));
        return chair_final.overlap_x(far) > 0 && chair_final.overlap_y(far) > 0;
    }
    return false;
}

}  // namespace

std::string classify_error(const TrialRecord& record, const TaskSpec& task) {
    if (record.success) {
        throw std::logic_error("classify_error called on a successful record");
    }
    TraceSummary summary = summarize_trace(record.trace_json);
    std::set<std::string> manipulated = manipulated_objects(summary, task.id);

    if (task.gold.oracle_uses_tool) {
        bool touched_tool = false;
        for (const auto& tool : task.gold.oracle_tool_set) {
            if (manipulated.count(tool)) { touched_tool = true; break; }
        }
        if (!touched_tool) return "tool_use";
    }
    if (order_matches(task.id, summary, record.trace_json) && numeric_deviation(task, summary)) {
        return "numerical";
    }
    return "logical";
}

// --- trial / benchmark -------------------------------------------------------

TrialRecord run_trial(const TaskSpec& task, const std::string& task_stem,
                      const pipeline::AblationConfig& method, llm::Backend& backend,
                      std::uint64_t seed, const TrialOptions& options) {
    auto t0 = std::chrono::steady_clock::now();
    TrialRecord record;
    record.task_id = task.id;
    record.task_stem = task_stem;
    record.method = method.method_name();
    record.seed = seed;
    record.trace_json = json::object();
    record.stages_json = json::object();

    pipeline::Pipeline pipe(options.prompts, task.scene.robot, options.model_id);
    pipeline::PipelineResult result;
    bool stage_failed = false;
    try {
        result = pipe.run(task, backend, method);
    } catch (const pipeline::PipelineError& e) {
        record.success = false;
        record.failure_class = "stage_failure";
        record.stage_error = e.stage + "/" + e.kind + ": " + e.what();
        stage_failed = true;
    }
    record.backend_calls = backend.transcript().call_count();

    if (!stage_failed) {
        record.script_source = result.script_source;
        if (result.analyzer) {
            record.concepts = result.analyzer->concepts;
            record.stages_json["analyzer"] = {{"analysis", result.analyzer->analysis},
                                              {"description", result.analyzer->description_section}};
        }
        if (result.skeleton) {
            json steps = json::array();
            for (const auto& s : result.skeleton->steps) {
                steps.push_back({{"index", s.index}, {"skill", s.skill}, {"arguments", s.arguments}});
            }
            record.stages_json["planner"] = {{"description", result.skeleton->description},
                                             {"steps", steps}};
        }
        if (result.plan) {
            record.stages_json["calculator"] = pipeline::render_plan_for_coder(*result.plan);
        }

        auto findings = script::static_check(result.program, task.scene.robot);
        if (findings.empty()) {
            sim::World world = sim::World::for_task(task, options.sim);
            world.set_planner_seed(seed);
            script::ExecutionTrace trace =
                script::interpret(result.program, world, options.sim.limits);
            record.trace_json = trace.to_json();
            record.success = sim::is_success(task.id, world);
        } else {
            record.success = false;
        }
        record.failure_class = record.success ? "none" : classify_error(record, task);
    }

    record.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                         .count();
    return record;
}

Ratio ReportTable::average(const std::string& method) const {
    std::vector<Ratio> parts;
    auto row = cells.find(method);
    if (row == cells.end()) return {0, 0};
    for (const auto& t : tasks) {
        auto cell = row->second.find(t);
        if (cell != row->second.end()) parts.push_back(cell->second);
    }
    return ratio_sum(parts);
}

BenchmarkResult run_benchmark(const std::vector<std::pair<std::string, TaskSpec>>& tasks,
                              const std::vector<std::string>& methods, int n,
                              const BackendFactory& backends, std::uint64_t base_seed,
                              const TrialOptions& options, int parallelism) {
    struct Job {
        size_t task_index;
        std::string method;
        int rep;
    };
    std::vector<Job> jobs;
    for (const auto& method : methods) {
        for (size_t t = 0; t < tasks.size(); ++t) {
            for (int rep = 0; rep < n; ++rep) jobs.push_back({t, method, rep});
        }
    }

    std::vector<TrialRecord> records(jobs.size());
    std::atomic<size_t> next{0};
    auto worker = [&] {
        for (;;) {
            size_t i = next.fetch_add(1);
            if (i >= jobs.size()) break;
            const Job& job = jobs[i];
            const auto& [stem, task] = tasks[job.task_index];
            auto backend = backends(stem, job.method);
            records[i] = run_trial(task, stem, pipeline::AblationConfig::from_method(job.method),
                                   *backend, base_seed + job.rep, options);
        }
    };
    int threads = std::max(1, parallelism);
    if (threads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    BenchmarkResult result;
    result.records = std::move(records);
    result.table.methods = methods;
    for (const auto& [stem, task] : tasks) result.table.tasks.push_back(stem);
    for (const auto& method : methods) {
        for (const auto& [stem, task] : tasks) {
            result.table.cells[method][stem] = {0, 0};
        }
    }
    for (const auto& r : result.records) {
        Ratio& cell = result.table.cells[r.method][r.task_stem];
        cell.den += 1;
        if (r.success) cell.num += 1;
    }
    return result;
}

std::vector<DiscriminativeRow> run_discriminative(
    const std::vector<std::pair<std::string, std::pair<std::string, TaskSpec>>>& variants,
    const std::string& method, int n, const BackendFactory& backends, std::uint64_t base_seed,
    const TrialOptions& options) {
    std::vector<DiscriminativeRow> rows;
    for (const auto& [variant, stem_task] : variants) {
        const auto& [stem, task] = stem_task;
        DiscriminativeRow row;
        row.variant = variant;
        row.oracle_uses_tool = task.gold.oracle_uses_tool;
        row.tool_use_rate = {0, 0};
        for (int rep = 0; rep < n; ++rep) {
            auto backend = backends(stem, method);
            TrialRecord record = run_trial(task, stem, pipeline::AblationConfig::from_method(method),
                                           *backend, base_seed + rep, options);
            TraceSummary summary = summarize_trace(record.trace_json);
            row.tool_use_rate.den += 1;
            if (!manipulated_objects(summary, task.id).empty()) row.tool_use_rate.num += 1;
        }
        rows.push_back(row);
    }
    return rows;
}

}  // namespace toolplan::eval
