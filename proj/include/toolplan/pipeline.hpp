#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "toolplan/llm.hpp"
#include "toolplan/scene.hpp"
#include "toolplan/script/ast.hpp"
#include "toolplan/script/value.hpp"

namespace toolplan::pipeline {

struct KeyConcept {
    std::string name;
    double value = 0.0;
    std::string unit;  // "m", "kg", "rad" or ""
    std::string related_constraint;
};

struct AnalyzerOutput {
    std::string analysis;
    std::vector<KeyConcept> concepts;
    std::string description_section;  // verbatim
    std::string raw_response;
};

struct PlanStep {
    int index = 0;  // 1-based
    std::string skill;
    std::string arguments;  // free-text sketch
};

struct PlanSkeleton {
    std::string description;
    std::vector<PlanStep> steps;
    std::string raw_response;
};

struct StepParameters {
    std::vector<std::pair<std::string, script::Value>> values;
    const script::Value* find(const std::string& name) const;
};

struct ParameterizedPlan {
    std::vector<std::pair<PlanStep, StepParameters>> steps;
};

// The four ablation wirings from the baseline definitions plus the full
// method. use_calculator implies use_planner.
struct AblationConfig {
    bool use_analyzer = true;
    bool use_calculator = true;
    bool use_planner = true;

    bool legal() const;
    std::string method_name() const;
    static AblationConfig from_method(const std::string& name);
    static const std::vector<std::string>& method_names();
};

struct PipelineError : std::runtime_error {
    std::string stage;
    std::string kind;  // missing_section | unparseable | unknown_skill | empty_plan |
                       // step_index_mismatch | non_numeric_parameter | missing_target |
                       // parse_failure | backend
    PipelineError(std::string stage_, std::string kind_, const std::string& msg)
        : std::runtime_error("[" + stage_ + "] " + msg), stage(std::move(stage_)),
          kind(std::move(kind_)) {}
};

// Splits a response on two labeled headers; both parts returned verbatim
// (outer whitespace trimmed), tolerant of markdown heading markers.
std::pair<std::string, std::string> parse_two_section(const std::string& text,
                                                      const std::string& first_label,
                                                      const std::string& second_label);

// L* = L followed by the Analyzer's description section (append-only).
std::string augment_description(const std::string& query, const AnalyzerOutput& out);

std::vector<KeyConcept> parse_concept_lines(const std::string& description_section);

struct PromptSet {
    std::string analyzer;
    std::string planner;
    std::string calculator;
    std::string coder;
    std::string skills_arm;
    std::string skills_quadruped;
    std::string grammar;

    static PromptSet load_dir(const std::string& dir);
    const std::string& skills_for(Embodiment e) const {
        return e == Embodiment::arm ? skills_arm : skills_quadruped;
    }
};

struct PipelineResult {
    std::optional<AnalyzerOutput> analyzer;
    std::optional<PlanSkeleton> skeleton;
    std::optional<ParameterizedPlan> plan;
    std::string script_source;
    script::Program program;
};

std::string render_plan_for_coder(const ParameterizedPlan& plan);

class Pipeline {
  public:
    Pipeline(PromptSet prompts, RobotSpec robot, std::string model_id = "gpt-4");

    AnalyzerOutput run_analyzer(const std::string& query, llm::Backend& backend) const;
    PlanSkeleton run_planner(const std::string& query, llm::Backend& backend) const;
    ParameterizedPlan run_calculator(const std::string& query, const PlanSkeleton& skeleton,
                                     llm::Backend& backend) const;
    std::pair<std::string, script::Program> run_coder(const std::string& plan_context,
                                                      llm::Backend& backend) const;
    std::pair<std::string, script::Program> run_coder(const ParameterizedPlan& plan,
                                                      llm::Backend& backend) const;

    PipelineResult run(const TaskSpec& task, llm::Backend& backend,
                       const AblationConfig& ablation) const;

  private:
    std::string call(llm::Backend& backend, const std::string& stage,
                     const std::vector<llm::ChatMessage>& messages) const;

    PromptSet prompts_;
    RobotSpec robot_;
    std::string model_id_;
};

}  // namespace toolplan::pipeline
