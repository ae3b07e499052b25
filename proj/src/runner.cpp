#include <fstream>
#include <map>

#include <json.hpp>

#include "idecoder/context.hpp"
#include "idecoder/errors.hpp"
#include "idecoder/eval.hpp"
#include "idecoder/refine.hpp"

namespace idecoder::eval {

MetricsReport run_eval(const std::vector<EvalTask>& dataset, prompt::Strategy strategy,
                       const llm::BackendConfig& backend, const RunOptions& options) {
    MetricsReport report;
    report.strategy = std::string(prompt::to_string(strategy));

    std::map<std::string, index::RepoIndex> indexes;
    auto index_for = [&](const std::string& root) -> const index::RepoIndex& {
        auto it = indexes.find(root);
        if (it == indexes.end())
            it = indexes.emplace(root, index::build_repo_index(root, options.ignore)).first;
        return it->second;
    };

    std::ofstream trace_out;
    if (options.trace_path) {
        trace_out.open(*options.trace_path, std::ios::binary | std::ios::trunc);
        if (!trace_out) throw IoError(*options.trace_path, "cannot open trace output");
    }

    double em_sum = 0.0, cb_sum = 0.0, sm_sum = 0.0;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const EvalTask& task = dataset[i];
        TaskRow row;
        row.task_index = static_cast<int>(i);
        row.module = task.module;
        row.function = task.function;

        nlohmann::ordered_json trace;
        trace["task_index"] = row.task_index;
        trace["repo"] = task.repo;
        trace["module"] = task.module;
        trace["function"] = task.function;
        trace["strategy"] = report.strategy;

        std::string final_completion;
        try {
            const index::RepoIndex& idx = index_for(task.repo);
            auto point = context::make_completion_point(idx, task.module, task.function);
            auto ctx = context::identify_context(point, idx, options.context);
            auto plan = prompt::build_prompt(ctx, strategy, options.budget, idx, options.rag);
            trace["prompt"] = plan.realized;
            nlohmann::ordered_json completions = nlohmann::ordered_json::array();
            nlohmann::ordered_json diagnostics = nlohmann::ordered_json::array();
            if (strategy == prompt::Strategy::IdeCoder) {
                auto refined =
                    refine::refine_loop(point, plan, backend, idx, options.max_refine_iters);
                for (const auto& iter : refined.iterations) {
                    completions.push_back(iter.completion);
                    nlohmann::ordered_json rendered = nlohmann::ordered_json::array();
                    for (const auto& d : iter.diagnostics) rendered.push_back(d.render());
                    diagnostics.push_back(std::move(rendered));
                }
                final_completion = refined.final_completion;
            } else {
                final_completion = llm::complete(plan.realized, backend);
                completions.push_back(final_completion);
            }
            trace["completions"] = std::move(completions);
            trace["diagnostics"] = std::move(diagnostics);
            row.em = exact_match(final_completion, task.gold_body);
            row.codebleu_score = codebleu(final_completion, task.gold_body, options.codebleu);
            row.syntax_match_score = syntax_match(final_completion, task.gold_body);
        } catch (const std::exception& e) {
            row.error = e.what();
            ++report.errors;
        }
        trace["final"] = final_completion;
        trace["em"] = row.em;
        trace["codebleu"] = row.codebleu_score;
        trace["syntax_match"] = row.syntax_match_score;
        trace["error"] = row.error;
        if (trace_out.is_open()) trace_out << trace.dump() << "\n";

        em_sum += row.em;
        cb_sum += row.codebleu_score;
        sm_sum += row.syntax_match_score;
        report.rows.push_back(std::move(row));
    }

    report.task_count = static_cast<int>(dataset.size());
    if (report.task_count > 0) {
        report.em_percent = 100.0 * em_sum / report.task_count;
        report.codebleu_percent = 100.0 * cb_sum / report.task_count;
        report.syntax_match_percent = 100.0 * sm_sum / report.task_count;
    }
    return report;
}

std::string report_json(const MetricsReport& report) {
    nlohmann::ordered_json doc;
    doc["strategy"] = report.strategy;
    doc["n"] = report.task_count;
    doc["em"] = report.em_percent;
    doc["codebleu"] = report.codebleu_percent;
    doc["syntax_match"] = report.syntax_match_percent;
    doc["errors"] = report.errors;
    return doc.dump(2);
}

}  // namespace idecoder::eval
