#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>

#include <CLI11.hpp>
#include <json.hpp>

#include "toolplan/eval.hpp"
#include "toolplan/llm.hpp"
#include "toolplan/pipeline.hpp"
#include "toolplan/scene.hpp"
#include "toolplan/script/parser.hpp"
#include "toolplan/sim/world.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace toolplan;

namespace {

constexpr int kExitSuccess = 0;
constexpr int kExitTaskFailure = 1;
constexpr int kExitUsage = 2;

struct CommonOptions {
    std::string backend = "replay";  // live | replay | stub
    std::string fixture;
    std::string tasks_dir = "tasks";
    std::string prompts_dir = "prompts";
    std::string config_path;
    std::string out_dir;
    std::string endpoint = "https://api.openai.com/v1";
    std::string model = "gpt-4";
    std::string credential_env = "TOOLPLAN_API_KEY";
    std::uint64_t seed = 1;
    int n = 10;
    int parallelism = 1;
};

void add_common(CLI::App* cmd, CommonOptions& opt) {
    cmd->add_option("--backend", opt.backend, "Backend: live, replay or stub")
        ->check(CLI::IsMember({"live", "replay", "stub"}));
    cmd->add_option("--fixture", opt.fixture, "Replay/stub fixture directory");
    cmd->add_option("--tasks-dir", opt.tasks_dir, "Directory with task JSON files");
    cmd->add_option("--prompts", opt.prompts_dir, "Directory with prompt templates");
    cmd->add_option("--config", opt.config_path, "Simulator config JSON");
    cmd->add_option("--out", opt.out_dir, "Output directory for run artifacts");
    cmd->add_option("--endpoint", opt.endpoint, "Live backend endpoint URL");
    cmd->add_option("--model", opt.model, "Live backend model id");
    cmd->add_option("--credential-env", opt.credential_env,
                    "Environment variable holding the live credential");
    cmd->add_option("--seed", opt.seed, "Base random seed");
    cmd->add_option("--n", opt.n, "Trials per task and method");
    cmd->add_option("--parallelism", opt.parallelism, "Concurrent trials for bench");
}

sim::SimConfig load_sim_config(const CommonOptions& opt) {
    if (opt.config_path.empty()) return sim::SimConfig{};
    return sim::SimConfig::load_file(opt.config_path);
}

std::string task_stem(const std::string& path) {
    return fs::path(path).stem().string();
}

std::string resolve_task_path(const CommonOptions& opt, const std::string& task) {
    if (fs::exists(task)) return task;
    std::string candidate = opt.tasks_dir + "/" + task + ".json";
    if (fs::exists(candidate)) return candidate;
    throw SceneError("cannot find task '" + task + "' (looked for " + candidate + ")");
}

eval::BackendFactory make_backend_factory(const CommonOptions& opt) {
    if (opt.backend == "replay" || opt.backend == "stub") {
        if (opt.fixture.empty()) {
            throw std::runtime_error("--fixture is required for the " + opt.backend + " backend");
        }
        if (!fs::exists(opt.fixture)) {
            throw std::runtime_error("fixture directory '" + opt.fixture + "' does not exist");
        }
        std::string root = opt.fixture;
        return [root](const std::string& stem, const std::string& method) {
            std::string path = root + "/" + stem + "/" + method + ".json";
            return std::make_unique<llm::ReplayBackend>(llm::ReplayBackend::from_file(path));
        };
    }
    llm::LiveConfig config;
    config.endpoint = opt.endpoint;
    config.model = opt.model;
    config.credential_env = opt.credential_env;
    return [config](const std::string&, const std::string&) {
        return std::make_unique<llm::LiveBackend>(config);
    };
}

eval::TrialOptions make_trial_options(const CommonOptions& opt) {
    eval::TrialOptions options;
    options.sim = load_sim_config(opt);
    options.prompts = pipeline::PromptSet::load_dir(opt.prompts_dir);
    options.model_id = opt.model;
    return options;
}

void write_trial_artifacts(const std::string& dir, const eval::TrialRecord& record,
                           const llm::Transcript& transcript) {
    fs::create_directories(dir);
    llm::save_transcript(transcript, dir + "/transcript.json");
    std::ofstream script(dir + "/script.plan");
    script << record.script_source;
    std::ofstream trace(dir + "/trace.json");
    trace << record.trace_json.dump(2) << "\n";
    std::ofstream rec(dir + "/record.json");
    rec << record.to_json().dump(2) << "\n";
}

std::map<std::string, GoldAnnotation> gold_map(
    const std::vector<std::pair<std::string, TaskSpec>>& tasks) {
    std::map<std::string, GoldAnnotation> gold;
    for (const auto& [stem, task] : tasks) gold[stem] = task.gold;
    return gold;
}

int cmd_run(const CommonOptions& opt, const std::string& task_arg, const std::string& method) {
    std::string path = resolve_task_path(opt, task_arg);
    TaskSpec task = load_task_file(path);
    auto issues = validate_task(task);
    if (!issues.empty()) {
        for (const auto& i : issues) std::cerr << i.where << ": " << i.message << "\n";
        return kExitUsage;
    }
    auto factory = make_backend_factory(opt);
    auto options = make_trial_options(opt);
    std::string stem = task_stem(path);
    auto backend = factory(stem, method);
    eval::TrialRecord record = eval::run_trial(
        task, stem, pipeline::AblationConfig::from_method(method), *backend, opt.seed, options);

    if (!opt.out_dir.empty()) {
        std::string dir = opt.out_dir + "/" + stem + "/" + method + "/seed" +
                          std::to_string(opt.seed);
        write_trial_artifacts(dir, record, backend->transcript());
    }
    std::cout << "task " << stem << " method " << method << " seed " << opt.seed << ": "
              << (record.success ? "SUCCESS" : "FAILURE (" + record.failure_class + ")") << "\n";
    if (!record.stage_error.empty()) std::cout << "stage error: " << record.stage_error << "\n";
    return record.success ? kExitSuccess : kExitTaskFailure;
}

int cmd_bench(const CommonOptions& opt, std::vector<std::string> task_args,
              std::vector<std::string> methods) {
    if (task_args.empty()) task_args = benchmark_task_ids();
    if (methods.empty()) methods = pipeline::AblationConfig::method_names();

    std::vector<std::pair<std::string, TaskSpec>> tasks;
    for (const auto& t : task_args) {
        std::string path = resolve_task_path(opt, t);
        tasks.emplace_back(task_stem(path), load_task_file(path));
    }
    auto factory = make_backend_factory(opt);
    auto options = make_trial_options(opt);

    eval::BenchmarkResult result = eval::run_benchmark(tasks, methods, opt.n, factory, opt.seed,
                                                       options, opt.parallelism);

    std::string out_dir = opt.out_dir;
    if (out_dir.empty()) {
        auto now = std::chrono::system_clock::now().time_since_epoch();
        out_dir = "runs/" + std::to_string(
                                std::chrono::duration_cast<std::chrono::seconds>(now).count());
    }
    for (const auto& record : result.records) {
        std::string dir = out_dir + "/" + record.task_stem + "/" + record.method + "/seed" +
                          std::to_string(record.seed);
        fs::create_directories(dir);
        std::ofstream script(dir + "/script.plan");
        script << record.script_source;
        std::ofstream trace(dir + "/trace.json");
        trace << record.trace_json.dump(2) << "\n";
        std::ofstream rec(dir + "/record.json");
        rec << record.to_json().dump(2) << "\n";
    }
    eval::emit_report(result.records, gold_map(tasks), out_dir);
    std::cout << eval::report_markdown(result.records, gold_map(tasks));
    std::cout << "report written to " << out_dir << "/report.{csv,md}\n";
    return kExitSuccess;
}

int cmd_validate(const std::string& path) {
    json j;
    {
        std::ifstream in(path);
        if (!in) {
            std::cerr << "cannot open '" << path << "'\n";
            return kExitUsage;
        }
        try {
            in >> j;
        } catch (const json::exception& e) {
            std::cerr << "cannot parse '" << path << "': " << e.what() << "\n";
            return kExitUsage;
        }
    }
    std::vector<ValidationIssue> issues;
    try {
        if (j.contains("scene")) {
            issues = validate_task(task_from_json(j));
        } else {
            issues = validate_scene(scene_from_json(j));
        }
    } catch (const SceneError& e) {
        std::cerr << e.what() << "\n";
        return kExitUsage;
    }
    if (issues.empty()) {
        std::cout << "valid\n";
        return kExitSuccess;
    }
    for (const auto& i : issues) std::cout << i.where << ": " << i.message << "\n";
    return kExitTaskFailure;
}

int cmd_replay(const CommonOptions& opt, const std::string& run_dir,
               const std::string& task_override) {
    std::string record_path = run_dir + "/record.json";
    std::string script_path = run_dir + "/script.plan";
    std::string trace_path = run_dir + "/trace.json";
    if (!fs::exists(record_path) || !fs::exists(script_path) || !fs::exists(trace_path)) {
        std::cerr << "run directory '" << run_dir
                  << "' must contain record.json, script.plan and trace.json\n";
        return kExitUsage;
    }
    json record_json;
    json stored_trace;
    std::string source;
    try {
        std::ifstream rec(record_path);
        rec >> record_json;
        std::ifstream tr(trace_path);
        tr >> stored_trace;
        std::ifstream sc(script_path);
        std::ostringstream ss;
        ss << sc.rdbuf();
        source = ss.str();
    } catch (const json::exception& e) {
        std::cerr << "malformed stored run: " << e.what() << "\n";
        return kExitUsage;
    }

    std::string task_ref = task_override.empty()
                               ? record_json.at("task_stem").get<std::string>()
                               : task_override;
    TaskSpec task = load_task_file(resolve_task_path(opt, task_ref));
    std::uint64_t seed = record_json.value("seed", 1ull);

    script::Program program;
    try {
        program = script::parse(source);
    } catch (const script::ParseError& e) {
        std::cerr << "stored script no longer parses: " << e.what() << "\n";
        return kExitUsage;
    }
    sim::SimConfig config = load_sim_config(opt);
    sim::World world = sim::World::for_task(task, config);
    world.set_planner_seed(seed);
    script::ExecutionTrace fresh = script::interpret(program, world, config.limits);
    json fresh_json = fresh.to_json();

    const json& stored_entries = stored_trace.at("entries");
    const json& fresh_entries = fresh_json.at("entries");
    if (stored_trace.at("initial_state") != fresh_json.at("initial_state")) {
        std::cout << "divergence: initial state differs (scene changed?)\n";
        return kExitTaskFailure;
    }
    size_t n = std::min(stored_entries.size(), fresh_entries.size());
    for (size_t i = 0; i < n; ++i) {
        if (stored_entries[i].at("snapshot") != fresh_entries[i].at("snapshot")) {
            std::cout << "divergence at statement " << stored_entries[i].at("index")
                      << ": state snapshot differs\n";
            return kExitTaskFailure;
        }
    }
    if (stored_entries.size() != fresh_entries.size()) {
        std::cout << "divergence: stored trace has " << stored_entries.size()
                  << " entries, replay produced " << fresh_entries.size() << "\n";
        return kExitTaskFailure;
    }
    std::cout << "replay matches stored trace (" << fresh_entries.size() << " entries)\n";
    return kExitSuccess;
}

int cmd_report(const std::string& records_dir, const CommonOptions& opt) {
    std::vector<eval::TrialRecord> records;
    std::map<std::string, GoldAnnotation> gold;
    if (!fs::exists(records_dir)) {
        std::cerr << "records directory '" << records_dir << "' does not exist\n";
        return kExitUsage;
    }
    for (const auto& entry : fs::recursive_directory_iterator(records_dir)) {
        if (entry.path().filename() != "record.json") continue;
        try {
            std::ifstream in(entry.path());
            json j;
            in >> j;
            records.push_back(eval::TrialRecord::from_json(j));
        } catch (const json::exception& e) {
            std::cerr << "skipping malformed record " << entry.path() << ": " << e.what() << "\n";
        }
    }
    if (records.empty()) {
        std::cerr << "no record.json files under '" << records_dir << "'\n";
        return kExitUsage;
    }
    std::sort(records.begin(), records.end(), [](const auto& a, const auto& b) {
        return std::tie(a.method, a.task_stem, a.seed) < std::tie(b.method, b.task_stem, b.seed);
    });
    for (const auto& r : records) {
        try {
            std::string path = resolve_task_path(opt, r.task_stem);
            gold[r.task_stem] = load_task_file(path).gold;
        } catch (const SceneError&) {
            // Task file unavailable; key-concept table will omit this task.
        }
    }
    std::string out_dir = opt.out_dir.empty() ? records_dir : opt.out_dir;
    eval::emit_report(records, gold, out_dir);
    std::cout << "report written to " << out_dir << "/report.{csv,md}\n";
    return kExitSuccess;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"LLM tool-use planning benchmark"};
    app.require_subcommand(1);

    CommonOptions opt;
    std::string task_arg;
    std::string method = "full";
    std::vector<std::string> bench_tasks;
    std::vector<std::string> bench_methods;
    std::string validate_path;
    std::string replay_dir;
    std::string replay_task;
    std::string records_dir;

    CLI::App* run = app.add_subcommand("run", "Run a single trial");
    run->add_option("--task", task_arg, "Task id or task file path")->required();
    run->add_option("--method", method, "Pipeline method")
        ->check(CLI::IsMember(pipeline::AblationConfig::method_names()));
    add_common(run, opt);

    CLI::App* bench = app.add_subcommand("bench", "Run the benchmark grid");
    bench->add_option("--tasks", bench_tasks, "Task ids (default: all six)");
    bench->add_option("--methods", bench_methods, "Methods (default: all five)");
    add_common(bench, opt);

    CLI::App* validate = app.add_subcommand("validate", "Validate a scene or task file");
    validate->add_option("path", validate_path, "Scene or task JSON")->required();

    CLI::App* replay = app.add_subcommand("replay", "Re-execute a stored run and compare");
    replay->add_option("run_dir", replay_dir, "Directory with record.json/script.plan/trace.json")
        ->required();
    replay->add_option("--task", replay_task, "Override task id or file");
    add_common(replay, opt);

    CLI::App* report = app.add_subcommand("report", "Regenerate tables from stored records");
    report->add_option("records_dir", records_dir, "Directory with per-trial records")->required();
    add_common(report, opt);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kExitSuccess : kExitUsage;
    }

    try {
        if (run->parsed()) return cmd_run(opt, task_arg, method);
        if (bench->parsed()) return cmd_bench(opt, bench_tasks, bench_methods);
        if (validate->parsed()) return cmd_validate(validate_path);
        if (replay->parsed()) return cmd_replay(opt, replay_dir, replay_task);
        if (report->parsed()) return cmd_report(records_dir, opt);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    }
    return kExitUsage;
}
