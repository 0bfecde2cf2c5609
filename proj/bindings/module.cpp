#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "toolplan/eval.hpp"
#include "toolplan/llm.hpp"
#include "toolplan/pipeline.hpp"
#include "toolplan/scene.hpp"
#include "toolplan/script/check.hpp"
#include "toolplan/script/parser.hpp"
#include "toolplan/script/printer.hpp"
#include "toolplan/sim/world.hpp"

namespace py = pybind11;
using namespace toolplan;

namespace {

sim::SimConfig config_or_default(const std::string& config_path) {
    if (config_path.empty()) return sim::SimConfig{};
    return sim::SimConfig::load_file(config_path);
}

std::string execute_script(const std::string& task_path, const std::string& source,
                           std::uint64_t seed, const std::string& config_path) {
    TaskSpec task = load_task_file(task_path);
    script::Program program = script::parse(source);
    sim::SimConfig config = config_or_default(config_path);
    sim::World world = sim::World::for_task(task, config);
    world.set_planner_seed(seed);
    script::ExecutionTrace trace = script::interpret(program, world, config.limits);
    nlohmann::json out;
    out["trace"] = trace.to_json();
    out["success"] = sim::is_success(task.id, world);
    return out.dump();
}

std::string run_trial_json(const std::string& task_path, const std::string& method,
                           const std::string& fixture_dir, const std::string& prompts_dir,
                           std::uint64_t seed, const std::string& config_path) {
    TaskSpec task = load_task_file(task_path);
    std::string stem = std::filesystem::path(task_path).stem().string();
    eval::TrialOptions options;
    options.sim = config_or_default(config_path);
    options.prompts = pipeline::PromptSet::load_dir(prompts_dir);
    llm::ReplayBackend backend =
        llm::ReplayBackend::from_file(fixture_dir + "/" + stem + "/" + method + ".json");
    eval::TrialRecord record = eval::run_trial(
        task, stem, pipeline::AblationConfig::from_method(method), backend, seed, options);
    return record.to_json().dump();
}

std::string plan_path_json(double sx, double sy, double gx, double gy,
                           const std::vector<std::array<double, 4>>& obstacles,
                           const std::array<double, 4>& bounds, std::uint64_t seed) {
    std::vector<sim::Obstacle2> obs;
    for (const auto& o : obstacles) obs.push_back({o[0], o[1], o[2], o[3]});
    sim::Bounds2 b{bounds[0], bounds[1], bounds[2], bounds[3]};
    sim::PlannerParams params;
    params.seed = seed;
    sim::PathPlan plan = sim::plan_path({sx, sy}, {gx, gy}, obs, b, params);
    nlohmann::json j;
    j["found"] = plan.found;
    j["cost"] = plan.cost;
    j["iterations"] = plan.iterations;
    nlohmann::json wps = nlohmann::json::array();
    for (const auto& w : plan.waypoints) wps.push_back({w.x, w.y});
    j["waypoints"] = wps;
    return j.dump();
}

}  // namespace

PYBIND11_MODULE(_toolplan, m) {
    m.doc() = "LLM tool-use planning benchmark: scenes, plan-script DSL, simulator, harness";

    m.def("validate_scene_file", [](const std::string& path) {
        std::vector<std::string> out;
        for (const auto& issue : validate_scene(load_scene_file(path))) {
            out.push_back(issue.where + ": " + issue.message);
        }
        return out;
    }, py::arg("path"), "Validate a scene or task file; returns a list of violations.");

    m.def("compose_query", [](const std::string& task_path) {
        return compose_query(load_task_file(task_path));
    }, py::arg("task_path"), "Render the natural-language query for a task file.");

    m.def("render_environment", [](const std::string& task_path) {
        return render_environment_description(load_task_file(task_path).scene);
    }, py::arg("task_path"));

    m.def("parse_script", [](const std::string& source) {
        script::Program p = script::parse(source);
        return py::make_tuple(static_cast<int>(p.statements.size()), script::pretty_print(p));
    }, py::arg("source"), "Parse plan-script source; returns (statement_count, pretty_printed).");

    m.def("static_check_script", [](const std::string& source, const std::string& task_path) {
        TaskSpec task = load_task_file(task_path);
        script::Program p = script::parse(source);
        std::vector<std::string> out;
        for (const auto& f : script::static_check(p, task.scene.robot)) {
            out.push_back(f.kind + ": " + f.message);
        }
        return out;
    }, py::arg("source"), py::arg("task_path"));

    m.def("execute_script", &execute_script, py::arg("task_path"), py::arg("source"),
          py::arg("seed") = 1, py::arg("config_path") = "",
          "Execute a script against a task's scene; returns a JSON string with trace and success.");

    m.def("run_trial", &run_trial_json, py::arg("task_path"), py::arg("method"),
          py::arg("fixture_dir"), py::arg("prompts_dir"), py::arg("seed") = 1,
          py::arg("config_path") = "",
          "Run one pipeline trial against a replay fixture; returns the record as a JSON string.");

    m.def("plan_path", &plan_path_json, py::arg("start_x"), py::arg("start_y"), py::arg("goal_x"),
          py::arg("goal_y"), py::arg("obstacles"), py::arg("bounds"), py::arg("seed") = 1,
          "Informed RRT* on axis-aligned obstacles; returns a JSON string.");

    m.def("benchmark_task_ids", [] { return benchmark_task_ids(); });
    m.def("method_names", [] { return pipeline::AblationConfig::method_names(); });
}
