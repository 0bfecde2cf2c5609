#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "toolplan/llm.hpp"
#include "toolplan/pipeline.hpp"
#include "toolplan/scene.hpp"
#include "toolplan/script/interp.hpp"
#include "toolplan/sim/config.hpp"

namespace toolplan::eval {

// Exact success-rate arithmetic: rates are kept as integer ratios and only
// formatted at the edge.
struct Ratio {
    long long num = 0;
    long long den = 0;  // 0 = not applicable

    bool applicable() const { return den != 0; }
    double value() const { return den == 0 ? 0.0 : static_cast<double>(num) / den; }
    std::string format() const;  // two decimals, "n/a" when den == 0
    bool operator==(const Ratio& o) const { return num * o.den == o.num * den && (den == 0) == (o.den == 0); }
};

Ratio ratio_sum(const std::vector<Ratio>& parts);  // exact mean of task columns

struct TrialRecord {
    std::string task_id;
    std::string task_stem;  // task file stem; distinguishes scene variants
    std::string method;
    std::uint64_t seed = 0;
    bool success = false;
    std::string failure_class;  // none | tool_use | logical | numerical | stage_failure
    std::string stage_error;    // populated for stage_failure
    double wall_ms = 0.0;
    int backend_calls = 0;
    std::string script_source;
    nlohmann::json trace_json;  // empty object when no script was produced
    nlohmann::json stages_json; // parsed stage artifacts for inspection
    std::vector<pipeline::KeyConcept> concepts;

    bool has_script() const { return !script_source.empty(); }
    nlohmann::json to_json() const;
    static TrialRecord from_json(const nlohmann::json& j);
};

// Facts extracted from a trace that the classifier and the tool-use metric
// consume: which objects moved or were grasped, invocation order, errors.
struct TraceSummary {
    std::set<std::string> manipulated;          // pose changed, grasped, or pushed
    std::vector<std::string> attach_order;      // objects grasped, in order
    std::vector<std::string> push_order;        // objects pushed, in order
    std::vector<std::string> skill_order;       // mutating skill invocations
    std::vector<std::string> error_kinds;
    std::set<std::string> constraint_errors;    // gap_too_wide etc.
    std::map<std::string, Vec3> final_positions;
    std::set<std::string> support_surfaces;     // robot supports seen
    bool bridge_spanned = false;
    bool merged_any = false;
    bool cube_lifted = false;
    bool button_pressed = false;
};

TraceSummary summarize_trace(const nlohmann::json& trace_json);

// Mutating-skill manipulation set, excluding the task's target object.
std::set<std::string> manipulated_objects(const TraceSummary& summary, const std::string& task_id);
const std::string& task_target_object(const std::string& task_id);  // may be empty

struct KeyConceptScore {
    int correct = 0;
    int total = 0;
    Ratio accuracy() const { return {correct, total}; }
};

// An output counts as correct iff the concept name token-matches gold, the
// value is within parameter_tolerance (unit-normalized), and the constraint
// text refers to the gold constraint.
KeyConceptScore score_key_concepts(const std::vector<std::vector<pipeline::KeyConcept>>& outputs,
                                   const GoldAnnotation& gold);
bool concept_matches_gold(const std::vector<pipeline::KeyConcept>& concepts,
                          const GoldAnnotation& gold);

// Error taxonomy with precedence tool_use > logical > numerical. Throws
// std::logic_error when called on a successful record.
std::string classify_error(const TrialRecord& record, const TaskSpec& task);

using BackendFactory =
    std::function<std::unique_ptr<llm::Backend>(const std::string& task_stem,
                                                const std::string& method)>;

struct TrialOptions {
    sim::SimConfig sim;
    pipeline::PromptSet prompts;
    std::string model_id = "gpt-4";
};

TrialRecord run_trial(const TaskSpec& task, const std::string& task_stem,
                      const pipeline::AblationConfig& method, llm::Backend& backend,
                      std::uint64_t seed, const TrialOptions& options);

struct ReportTable {
    std::vector<std::string> methods;  // rows
    std::vector<std::string> tasks;    // columns
    std::map<std::string, std::map<std::string, Ratio>> cells;  // method -> task -> rate

    Ratio average(const std::string& method) const;
};

struct BenchmarkResult {
    ReportTable table;
    std::vector<TrialRecord> records;
};

// n trials per (task, method); trials are independent and may run in
// parallel; record order is deterministic regardless of parallelism.
BenchmarkResult run_benchmark(const std::vector<std::pair<std::string, TaskSpec>>& tasks,
                              const std::vector<std::string>& methods, int n,
                              const BackendFactory& backends, std::uint64_t base_seed,
                              const TrialOptions& options, int parallelism = 1);

struct DiscriminativeRow {
    std::string variant;
    Ratio tool_use_rate;
    bool oracle_uses_tool = false;
};

// variants: name -> (task stem, task). Tool-use rate is the fraction of
// trials whose trace manipulates any non-target object.
std::vector<DiscriminativeRow> run_discriminative(
    const std::vector<std::pair<std::string, std::pair<std::string, TaskSpec>>>& variants,
    const std::string& method, int n, const BackendFactory& backends, std::uint64_t base_seed,
    const TrialOptions& options);

// Success table, key-concept table, and error-breakdown histogram in CSV and
// Markdown. `gold` maps task stem -> annotation for the key-concept table.
void emit_report(const std::vector<TrialRecord>& records,
                 const std::map<std::string, GoldAnnotation>& gold, const std::string& out_dir,
                 const std::vector<std::string>& formats = {"csv", "md"});

std::string report_markdown(const std::vector<TrialRecord>& records,
                            const std::map<std::string, GoldAnnotation>& gold);
std::string report_csv(const std::vector<TrialRecord>& records,
                       const std::map<std::string, GoldAnnotation>& gold);

}  // namespace toolplan::eval
