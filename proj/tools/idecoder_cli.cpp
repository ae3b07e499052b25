#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "idecoder/config.hpp"
#include "idecoder/context.hpp"
#include "idecoder/errors.hpp"
#include "idecoder/eval.hpp"
#include "idecoder/index.hpp"
#include "idecoder/prompt.hpp"
#include "idecoder/refine.hpp"

namespace {

using namespace idecoder;

struct GlobalOptions {
    std::string config_path;
    bool verbose = false;
};

config::Config load(const GlobalOptions& global) { return config::load_config(global.config_path); }

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        if (!text.empty() && text.back() != '\n') std::cout << "\n";
        return;
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(path, "cannot open for writing");
    out << text;
}

int cmd_index(const GlobalOptions& global, const std::string& root, const std::string& json_out) {
    config::Config cfg = load(global);
    index::RepoIndex idx;
    try {
        idx = index::build_repo_index(root, cfg.ignore);
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    for (const auto& err : idx.errors)
        std::cerr << "warning: " << err.path << ": " << err.message << "\n";
    if (global.verbose)
        std::cerr << idx.modules.size() << " modules, " << idx.symbols.size() << " symbols\n";
    write_text(json_out, index::symbol_table_json(idx));
    return 0;
}

int cmd_complete(const GlobalOptions& global, const std::string& root, const std::string& module,
                 const std::string& function, const std::string& strategy_name,
                 const std::string& trace_path) {
    config::Config cfg = load(global);
    prompt::Strategy strategy = prompt::strategy_from_name(strategy_name);
    index::RepoIndex idx = index::build_repo_index(root, cfg.ignore);

    context::CompletionPoint point;
    context::CrossFileContext ctx;
    try {
        point = context::make_completion_point(idx, module, function);
        context::ContextOptions copts{cfg.relevance, cfg.class_member_cap};
        ctx = context::identify_context(point, idx, copts);
    } catch (const PointError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    auto plan = prompt::build_prompt(ctx, strategy, cfg.budget, idx, cfg.rag);

    try {
        refine::RefineTrace trace;
        std::string final_completion;
        if (strategy == prompt::Strategy::IdeCoder) {
            trace = refine::refine_loop(point, plan, cfg.backend, idx, cfg.max_refine_iters);
            final_completion = trace.final_completion;
        } else {
            final_completion = llm::complete(plan.realized, cfg.backend);
            trace.iterations.push_back({final_completion, {}, plan.realized});
            trace.final_completion = final_completion;
            trace.converged = true;
        }
        if (!trace_path.empty()) {
            nlohmann::ordered_json doc;
            doc["module"] = module;
            doc["function"] = function;
            doc["strategy"] = std::string(prompt::to_string(strategy));
            doc["converged"] = trace.converged;
            doc["iterations"] = nlohmann::ordered_json::array();
            for (const auto& iter : trace.iterations) {
                nlohmann::ordered_json it;
                it["prompt"] = iter.prompt_used;
                it["completion"] = iter.completion;
                it["diagnostics"] = nlohmann::ordered_json::array();
                for (const auto& d : iter.diagnostics) it["diagnostics"].push_back(d.render());
                doc["iterations"].push_back(std::move(it));
            }
            doc["import_edits"] = nlohmann::ordered_json::array();
            for (const auto& e : trace.import_edits)
                doc["import_edits"].push_back(
                    {{"after_line", e.insert_after_line}, {"text", e.text}});
            write_text(trace_path, doc.dump(2));
        }
        std::cout << final_completion;
        if (final_completion.empty() || final_completion.back() != '\n') std::cout << "\n";
        return 0;
    } catch (const TransportError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const ProtocolError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const AuthError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}

int cmd_explain_context(const GlobalOptions& global, const std::string& root,
                        const std::string& module, const std::string& function) {
    config::Config cfg = load(global);
    index::RepoIndex idx = index::build_repo_index(root, cfg.ignore);
    try {
        auto point = context::make_completion_point(idx, module, function);
        context::ContextOptions copts{cfg.relevance, cfg.class_member_cap};
        auto ctx = context::identify_context(point, idx, copts);
        std::cout << context::context_json(ctx) << "\n";
        return 0;
    } catch (const PointError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

int cmd_lint(const GlobalOptions& global, const std::string& root, const std::string& module,
             const std::string& function, const std::string& completion_file) {
    config::Config cfg = load(global);
    index::RepoIndex idx = index::build_repo_index(root, cfg.ignore);

    std::string completion;
    if (completion_file.empty() || completion_file == "-") {
        std::ostringstream buf;
        buf << std::cin.rdbuf();
        completion = buf.str();
    } else {
        std::ifstream in(completion_file, std::ios::binary);
        if (!in) {
            std::cerr << "error: cannot open " << completion_file << "\n";
            return 1;
        }
        std::ostringstream buf;
        buf << in.rdbuf();
        completion = buf.str();
    }

    try {
        auto point = context::make_completion_point(idx, module, function);
        auto diags = refine::lint_completion(completion, point, idx);
        nlohmann::ordered_json doc = nlohmann::ordered_json::array();
        for (const auto& d : diags) {
            nlohmann::ordered_json j;
            j["kind"] = std::string(refine::to_string(d.kind));
            j["line"] = d.line;
            j["col"] = d.col;
            j["message"] = d.message;
            if (d.suggested_fix) j["suggested_fix"] = *d.suggested_fix;
            doc.push_back(std::move(j));
        }
        std::cout << doc.dump(2) << "\n";
        std::cerr << diags.size() << " diagnostic(s)\n";
        return 0;
    } catch (const PointError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

int cmd_eval(const GlobalOptions& global, const std::string& dataset_path,
             const std::string& strategy_name, const std::string& report_path,
             const std::string& trace_path) {
    config::Config cfg = load(global);
    prompt::Strategy strategy = prompt::strategy_from_name(strategy_name);

    eval::DatasetLoad load;
    try {
        load = eval::load_dataset(dataset_path);
    } catch (const FormatError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    for (const std::string& warning : load.warnings) std::cerr << "warning: " << warning << "\n";
    if (load.tasks.empty()) {
        std::cerr << "error: no tasks\n";
        return 1;
    }

    eval::RunOptions options;
    options.budget = cfg.budget;
    options.rag = cfg.rag;
    options.context = {cfg.relevance, cfg.class_member_cap};
    options.max_refine_iters = cfg.max_refine_iters;
    options.codebleu = cfg.codebleu;
    options.ignore = cfg.ignore;
    if (!trace_path.empty()) options.trace_path = trace_path;

    auto report = eval::run_eval(load.tasks, strategy, cfg.backend, options);
    if (report.errors > 0)
        std::cerr << report.errors << " task(s) failed and scored zero\n";
    write_text(report_path, eval::report_json(report));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Repository-level code completion with IDE-style static context"};
    app.require_subcommand(1);

    GlobalOptions global;
    app.add_option("--config", global.config_path,
                   "JSON config file (strict schema, unknown keys rejected)");
    app.add_flag("--verbose", global.verbose, "Verbose diagnostics on stderr");
    app.footer("API keys for http backends are read from the environment variable named by\n"
               "backend.api_key_env in the config (default IDECODER_API_KEY).");

    std::string root, module, function, dataset;
    std::string json_out, strategy = "idecoder", trace_path, report_path, completion_file;

    auto* c_index = app.add_subcommand("index", "Index a repository and dump its symbol table");
    c_index->add_option("root", root, "Repository root")->required();
    c_index->add_option("--json", json_out, "Write JSON here instead of stdout");

    auto* c_complete = app.add_subcommand("complete", "Complete one function body");
    c_complete->add_option("root", root, "Repository root")->required();
    c_complete->add_option("module", module, "Dotted module path")->required();
    c_complete->add_option("function", function, "Function name (Class.method for methods)")
        ->required();
    c_complete->add_option("--strategy", strategy, "in_file | all_import | rag | idecoder");
    c_complete->add_option("--trace", trace_path, "Write the refine trace JSON here");

    auto* c_explain = app.add_subcommand("explain-context", "Dump the cross-file context bundle");
    c_explain->add_option("root", root, "Repository root")->required();
    c_explain->add_option("module", module, "Dotted module path")->required();
    c_explain->add_option("function", function, "Function name")->required();

    auto* c_lint = app.add_subcommand("lint", "Lint a completion against the repository");
    c_lint->add_option("root", root, "Repository root")->required();
    c_lint->add_option("module", module, "Dotted module path")->required();
    c_lint->add_option("function", function, "Function name")->required();
    c_lint->add_option("--completion-file", completion_file, "Completion text (default: stdin)");

    auto* c_eval = app.add_subcommand("eval", "Run an evaluation over a JSONL dataset");
    c_eval->add_option("dataset", dataset, "JSONL dataset path")->required();
    c_eval->add_option("--strategy", strategy, "in_file | all_import | rag | idecoder");
    c_eval->add_option("--report", report_path, "Write the report JSON here");
    c_eval->add_option("--trace", trace_path, "Write per-task JSONL traces here");

    CLI11_PARSE(app, argc, argv);

    try {
        if (c_index->parsed()) return cmd_index(global, root, json_out);
        if (c_complete->parsed())
            return cmd_complete(global, root, module, function, strategy, trace_path);
        if (c_explain->parsed()) return cmd_explain_context(global, root, module, function);
        if (c_lint->parsed()) return cmd_lint(global, root, module, function, completion_file);
        if (c_eval->parsed())
            return cmd_eval(global, dataset, strategy, report_path, trace_path);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
