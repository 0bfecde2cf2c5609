#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "toolplan/eval.hpp"

namespace toolplan::eval {

namespace {

const std::vector<std::string> kFailureClasses = {"tool_use", "logical", "numerical",
                                                  "stage_failure"};

// Canonical row/column orders; anything unknown goes after, sorted.
std::vector<std::string> ordered_methods(const std::vector<TrialRecord>& records) {
    std::vector<std::string> out;
    for (const auto& m : pipeline::AblationConfig::method_names()) {
        for (const auto& r : records) {
            if (r.method == m) {
                out.push_back(m);
                break;
            }
        }
    }
    std::vector<std::string> extra;
    for (const auto& r : records) {
        if (std::find(out.begin(), out.end(), r.method) == out.end() &&
            std::find(extra.begin(), extra.end(), r.method) == extra.end()) {
            extra.push_back(r.method);
        }
    }
    std::sort(extra.begin(), extra.end());
    out.insert(out.end(), extra.begin(), extra.end());
    return out;
}

std::vector<std::string> ordered_tasks(const std::vector<TrialRecord>& records) {
    std::vector<std::string> out;
    for (const auto& id : benchmark_task_ids()) {
        for (const auto& r : records) {
            if (r.task_stem == id) {
                out.push_back(id);
                break;
            }
        }
    }
    std::vector<std::string> extra;
    for (const auto& r : records) {
        if (std::find(out.begin(), out.end(), r.task_stem) == out.end() &&
            std::find(extra.begin(), extra.end(), r.task_stem) == extra.end()) {
            extra.push_back(r.task_stem);
        }
    }
    std::sort(extra.begin(), extra.end());
    out.insert(out.end(), extra.begin(), extra.end());
    return out;
}

ReportTable success_table(const std::vector<TrialRecord>& records) {
    ReportTable table;
    table.methods = ordered_methods(records);
    table.tasks = ordered_tasks(records);
    for (const auto& r : records) {
        Ratio& cell = table.cells[r.method][r.task_stem];
        cell.den += 1;
        if (r.success) cell.num += 1;
    }
    return table;
}

std::map<std::string, KeyConceptScore> concept_scores(
    const std::vector<TrialRecord>& records, const std::map<std::string, GoldAnnotation>& gold) {
    std::map<std::string, KeyConceptScore> scores;
    for (const auto& r : records) {
        if (r.method != "full") continue;
        auto g = gold.find(r.task_stem);
        if (g == gold.end()) continue;
        KeyConceptScore& s = scores[r.task_stem];
        s.total += 1;
        if (concept_matches_gold(r.concepts, g->second)) s.correct += 1;
    }
    return scores;
}

using Breakdown = std::map<std::string, std::map<std::string, int>>;  // method -> class -> count

Breakdown error_breakdown(const std::vector<TrialRecord>& records, const std::string& task_stem) {
    Breakdown b;
    for (const auto& r : records) {
        if (!task_stem.empty() && r.task_stem != task_stem) continue;
        if (r.failure_class == "none") continue;
        b[r.method][r.failure_class] += 1;
    }
    return b;
}

}  // namespace

std::string report_markdown(const std::vector<TrialRecord>& records,
                            const std::map<std::string, GoldAnnotation>& gold) {
    ReportTable table = success_table(records);
    std::ostringstream out;
    out << "# Benchmark report\n\n";
    out << "## Success rates\n\n";
    out << "| Method |";
    for (const auto& t : table.tasks) out << " " << t << " |";
    out << " Average |\n";
    out << "| --- |";
    for (size_t i = 0; i < table.tasks.size(); ++i) out << " --- |";
    out << " --- |\n";
    for (const auto& m : table.methods) {
        out << "| " << m << " |";
        for (const auto& t : table.tasks) {
            out << " " << table.cells[m][t].format() << " |";
        }
        out << " " << table.average(m).format() << " |\n";
    }

    auto scores = concept_scores(records, gold);
    if (!scores.empty()) {
        out << "\n## Key concept accuracy (full method)\n\n";
        out << "| Task | Accuracy |\n| --- | --- |\n";
        for (const auto& t : ordered_tasks(records)) {
            auto it = scores.find(t);
            if (it == scores.end()) continue;
            out << "| " << t << " | " << it->second.accuracy().format() << " |\n";
        }
    }

    out << "\n## Error breakdown (counts, all tasks)\n\n";
    out << "| Method |";
    for (const auto& c : kFailureClasses) out << " " << c << " |";
    out << "\n| --- |";
    for (size_t i = 0; i < kFailureClasses.size(); ++i) out << " --- |";
    out << "\n";
    Breakdown all = error_breakdown(records, "");
    for (const auto& m : table.methods) {
        out << "| " << m << " |";
        for (const auto& c : kFailureClasses) out << " " << all[m][c] << " |";
        out << "\n";
    }

    for (const auto& t : table.tasks) {
        Breakdown per = error_breakdown(records, t);
        if (per.empty()) continue;
        out << "\n### Error breakdown: " << t << "\n\n";
        out << "| Method |";
        for (const auto& c : kFailureClasses) out << " " << c << " |";
        out << "\n| --- |";
        for (size_t i = 0; i < kFailureClasses.size(); ++i) out << " --- |";
        out << "\n";
        for (const auto& m : table.methods) {
            if (per.find(m) == per.end()) continue;
            out << "| " << m << " |";
            for (const auto& c : kFailureClasses) out << " " << per[m][c] << " |";
            out << "\n";
        }
    }
    return out.str();
}

std::string report_csv(const std::vector<TrialRecord>& records,
                       const std::map<std::string, GoldAnnotation>& gold) {
    ReportTable table = success_table(records);
    std::ostringstream out;
    out << "table,method";
    for (const auto& t : table.tasks) out << "," << t;
    out << ",average\n";
    for (const auto& m : table.methods) {
        out << "success," << m;
        for (const auto& t : table.tasks) out << "," << table.cells[m][t].format();
        out << "," << table.average(m).format() << "\n";
    }

    auto scores = concept_scores(records, gold);
    for (const auto& t : ordered_tasks(records)) {
        auto it = scores.find(t);
        if (it == scores.end()) continue;
        out << "key_concept," << t << "," << it->second.accuracy().format() << "\n";
    }

    Breakdown all = error_breakdown(records, "");
    for (const auto& m : table.methods) {
        out << "errors_all," << m;
        for (const auto& c : kFailureClasses) out << "," << c << "=" << all[m][c];
        out << "\n";
    }
    for (const auto& t : table.tasks) {
        Breakdown per = error_breakdown(records, t);
        for (const auto& m : table.methods) {
            if (per.find(m) == per.end()) continue;
            out << "errors," << t << "," << m;
            for (const auto& c : kFailureClasses) out << "," << c << "=" << per[m][c];
            out << "\n";
        }
    }
    return out.str();
}

void emit_report(const std::vector<TrialRecord>& records,
                 const std::map<std::string, GoldAnnotation>& gold, const std::string& out_dir,
                 const std::vector<std::string>& formats) {
    if (records.empty()) throw std::runtime_error("emit_report: no records");
    std::filesystem::create_directories(out_dir);
    for (const auto& format : formats) {
        if (format == "md") {
            std::ofstream out(out_dir + "/report.md");
            out << report_markdown(records, gold);
        } else if (format == "csv") {
            std::ofstream out(out_dir + "/report.csv");
            out << report_csv(records, gold);
        } else {
            throw std::runtime_error("unsupported report format '" + format + "'");
        }
    }
}

}  // namespace toolplan::eval
